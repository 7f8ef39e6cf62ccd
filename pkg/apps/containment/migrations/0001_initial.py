# Generated by Django 5.0.1 on 2026-10-19 09:12

import uuid

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('kind', models.CharField(choices=[('wbar', 'Winning probability'), ('kc', 'Containment parameter'), ('kcurve', 'k(t) curve'), ('bound', 'Bound'), ('capacity', 'Capacity region'), ('simulate', 'Simulation'), ('epidemic', 'Epidemic baseline'), ('sweep', 'Parameter sweep'), ('oracle_check', 'Oracle check')], max_length=20, verbose_name='kind')),
                ('label', models.CharField(blank=True, max_length=100, verbose_name='label')),
                ('parameters', models.JSONField(default=dict, help_text='Inputs of the run: params, rate spec, sizes, seeds', verbose_name='parameters')),
                ('result', models.JSONField(blank=True, default=dict, verbose_name='result')),
                ('celery_task_id', models.CharField(blank=True, max_length=255, null=True, verbose_name='celery task ID')),
                ('status', models.CharField(choices=[('queued', 'Queued'), ('running', 'Running'), ('completed', 'Completed'), ('failed', 'Failed')], default='queued', max_length=20, verbose_name='status')),
                ('progress', models.IntegerField(default=0, verbose_name='progress (%)')),
                ('processing_time_seconds', models.FloatField(blank=True, null=True, verbose_name='processing time (seconds)')),
                ('error_code', models.CharField(blank=True, max_length=50, verbose_name='error code')),
                ('error_message', models.TextField(blank=True, verbose_name='error message')),
                ('error_traceback', models.TextField(blank=True, verbose_name='error traceback')),
                ('created_at', models.DateTimeField(auto_now_add=True, verbose_name='created at')),
                ('started_at', models.DateTimeField(blank=True, null=True, verbose_name='started at')),
                ('completed_at', models.DateTimeField(blank=True, null=True, verbose_name='completed at')),
            ],
            options={
                'db_table': 'experiment_runs',
                'ordering': ['-created_at'],
                'indexes': [
                    models.Index(fields=['kind', 'status'], name='experiment_kind_status_idx'),
                    models.Index(fields=['celery_task_id'], name='experiment_task_idx'),
                    models.Index(fields=['created_at'], name='experiment_created_idx'),
                ],
            },
        ),
    ]
