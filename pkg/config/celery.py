"""
Celery configuration for the containment backend.
Handles background work like Monte Carlo trial chunks and parameter sweeps.
"""
import os
from celery import Celery

# Set default Django settings module
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings.local')

app = Celery('containment_backend')

# Load configuration from Django settings (CELERY_* variables)
app.config_from_object('django.conf:settings', namespace='CELERY')

# Auto-discover tasks in all installed apps
app.autodiscover_tasks()
