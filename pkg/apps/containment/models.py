import uuid

from django.db import models
from django.utils import timezone


class ExperimentRun(models.Model):
    """
    A recorded computation: DP evaluations, k_c searches, bounds, capacity
    queries, simulations, sweeps and oracle checks.
    Tracks status the same way for inline and Celery-dispatched runs.
    """
    KIND_CHOICES = [
        ('wbar', 'Winning probability'),
        ('kc', 'Containment parameter'),
        ('kcurve', 'k(t) curve'),
        ('bound', 'Bound'),
        ('capacity', 'Capacity region'),
        ('simulate', 'Simulation'),
        ('epidemic', 'Epidemic baseline'),
        ('sweep', 'Parameter sweep'),
        ('oracle_check', 'Oracle check'),
    ]

    STATUS_CHOICES = [
        ('queued', 'Queued'),
        ('running', 'Running'),
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    kind = models.CharField('kind', max_length=20, choices=KIND_CHOICES)
    label = models.CharField('label', max_length=100, blank=True)

    parameters = models.JSONField(
        'parameters',
        default=dict,
        help_text='Inputs of the run: params, rate spec, sizes, seeds'
    )
    result = models.JSONField('result', default=dict, blank=True)

    # Celery task tracking
    celery_task_id = models.CharField('celery task ID', max_length=255, null=True, blank=True)

    # Status and progress
    status = models.CharField('status', max_length=20, choices=STATUS_CHOICES, default='queued')
    progress = models.IntegerField('progress (%)', default=0)
    processing_time_seconds = models.FloatField('processing time (seconds)', null=True, blank=True)

    # Error tracking
    error_code = models.CharField('error code', max_length=50, blank=True)
    error_message = models.TextField('error message', blank=True)
    error_traceback = models.TextField('error traceback', blank=True)

    # Timestamps
    created_at = models.DateTimeField('created at', auto_now_add=True)
    started_at = models.DateTimeField('started at', null=True, blank=True)
    completed_at = models.DateTimeField('completed at', null=True, blank=True)

    class Meta:
        db_table = 'experiment_runs'
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['kind', 'status'], name='experiment_kind_status_idx'),
            models.Index(fields=['celery_task_id'], name='experiment_task_idx'),
            models.Index(fields=['created_at'], name='experiment_created_idx'),
        ]

    def __str__(self):
        return f"Run {self.id} - {self.kind} ({self.status})"

    @property
    def is_complete(self):
        """Check if run is in terminal state"""
        return self.status in ['completed', 'failed']

    def mark_running(self, task_id=None):
        self.status = 'running'
        self.started_at = timezone.now()
        fields = ['status', 'started_at']
        if task_id:
            self.celery_task_id = task_id
            fields.append('celery_task_id')
        self.save(update_fields=fields)

    def set_progress(self, done, total):
        self.progress = int(done / total * 100) if total else 100
        self.save(update_fields=['progress'])

    def mark_completed(self, result):
        self.status = 'completed'
        self.result = result
        self.progress = 100
        self.completed_at = timezone.now()
        if self.started_at:
            self.processing_time_seconds = (self.completed_at - self.started_at).total_seconds()
        self.save()

    def mark_failed(self, exc, traceback_text=''):
        self.status = 'failed'
        self.error_code = getattr(exc, 'code', exc.__class__.__name__)
        self.error_message = str(exc)
        self.error_traceback = traceback_text
        self.completed_at = timezone.now()
        if self.started_at:
            self.processing_time_seconds = (self.completed_at - self.started_at).total_seconds()
        self.save()
