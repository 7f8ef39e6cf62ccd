from django.contrib import admin

from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    """Admin interface for ExperimentRun model"""

    list_display = ['id', 'kind', 'label', 'status', 'progress', 'processing_time_seconds', 'created_at']
    list_filter = ['kind', 'status', 'created_at']
    search_fields = ['id', 'label', 'celery_task_id', 'error_code']
    ordering = ['-created_at']

    fieldsets = (
        ('Run', {
            'fields': ('kind', 'label', 'parameters')
        }),
        ('Status', {
            'fields': ('status', 'progress', 'celery_task_id', 'processing_time_seconds')
        }),
        ('Result', {
            'fields': ('result',)
        }),
        ('Errors', {
            'fields': ('error_code', 'error_message', 'error_traceback'),
            'classes': ('collapse',)
        }),
        ('Timestamps', {
            'fields': ('created_at', 'started_at', 'completed_at')
        }),
    )

    readonly_fields = ['created_at', 'started_at', 'completed_at', 'processing_time_seconds']
