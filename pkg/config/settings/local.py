"""
Local development settings.
"""
from .base import *

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = True

ALLOWED_HOSTS = ['localhost', '127.0.0.1', '[::1]']

# Database - SQLite for local development (PostgreSQL in production)
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

# Run Celery tasks inline unless a worker is explicitly wanted
CELERY_TASK_ALWAYS_EAGER = os.getenv('CELERY_EAGER', 'true').lower() == 'true'
CELERY_TASK_EAGER_PROPAGATES = True
