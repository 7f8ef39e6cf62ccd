"""
Unit tests for ExperimentRun
"""
import pytest

from apps.containment.exceptions import InvalidParams

pytestmark = pytest.mark.django_db


class TestExperimentRun:
    """Test ExperimentRun model"""

    def test_defaults(self, create_run):
        run = create_run()

        assert run.status == 'queued'
        assert run.progress == 0
        assert run.result == {}
        assert not run.is_complete
        assert str(run) == f"Run {run.id} - wbar (queued)"

    def test_mark_running(self, create_run):
        run = create_run()

        run.mark_running(task_id='task-123')

        run.refresh_from_db()
        assert run.status == 'running'
        assert run.started_at is not None
        assert run.celery_task_id == 'task-123'

    def test_set_progress(self, create_run):
        run = create_run()

        run.set_progress(3, 8)

        run.refresh_from_db()
        assert run.progress == 37

    def test_set_progress_without_total(self, create_run):
        run = create_run()
        run.set_progress(0, 0)
        assert run.progress == 100

    def test_mark_completed(self, create_run):
        run = create_run()
        run.mark_running()

        run.mark_completed({'wbar': 0.25})

        run.refresh_from_db()
        assert run.status == 'completed'
        assert run.result == {'wbar': 0.25}
        assert run.progress == 100
        assert run.processing_time_seconds is not None
        assert run.is_complete

    def test_mark_failed_keeps_error_code(self, create_run):
        run = create_run()
        run.mark_running()

        run.mark_failed(InvalidParams("gamma must lie in [0,1]"), 'Traceback ...')

        run.refresh_from_db()
        assert run.status == 'failed'
        assert run.error_code == 'invalid-params'
        assert run.error_message == "gamma must lie in [0,1]"
        assert run.error_traceback == 'Traceback ...'

    def test_mark_failed_plain_exception(self, create_run):
        run = create_run()

        run.mark_failed(RuntimeError("boom"))

        assert run.error_code == 'RuntimeError'
        assert run.processing_time_seconds is None

