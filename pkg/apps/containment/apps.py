from django.apps import AppConfig


class ContainmentConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.containment'
    verbose_name = 'Containment analysis'
