"""
Celery tasks for containment computations.
Monte Carlo chunks, parameter sweeps and oracle checks run on workers and
report into ExperimentRun records.
"""
import logging
import traceback

from celery import shared_task

from .models import ExperimentRun
from .serializers import CONFIG_SERIALIZERS, validated
from .services import OracleCheckService, SweepService
from .simulators import SIMULATORS, run_seeds

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def run_trial_chunk(self, sim_name, payload, seeds):
    """
    Run one chunk of simulator trials.

    Args:
        self: Celery task instance (bind=True)
        sim_name (str): 'malware', 'mtd' or 'chain'
        payload (dict): Config as produced by config_to_payload
        seeds (list): Trial seeds of this chunk

    Returns:
        list: GameOutcome dicts in seed order
    """
    config = validated(CONFIG_SERIALIZERS[sim_name], payload)
    logger.info(f"Running {len(seeds)} {sim_name} trials from seed {seeds[0] if seeds else '-'}")
    return [outcome.to_dict() for outcome in run_seeds(SIMULATORS[sim_name], config, seeds)]


@shared_task(bind=True)
def run_sweep(self, run_id, gammas, exponents, k_max, tbud, p=1.0, h=0.0):
    """
    Execute a w-bar sweep for an ExperimentRun and store it as long-format rows.

    Returns:
        dict: Summary with row count
    """
    logger.info(f"Starting sweep for run {run_id}")
    run = ExperimentRun.objects.get(id=run_id)
    run.mark_running(task_id=self.request.id)
    service = SweepService(gammas, exponents, k_max, tbud, p=p, h=h, run=run)
    frame = service.execute()
    run.result = {**run.result, 'rows': frame.to_dict(orient='records')}
    run.save(update_fields=['result'])
    logger.info(f"Sweep for run {run_id} produced {len(frame)} rows")
    return {'success': True, 'run_id': str(run_id), 'rows': len(frame)}


@shared_task(bind=True)
def run_oracle_check(self, run_id, draws=25, seed=0):
    """
    Execute the oracle cross-validation for an ExperimentRun.

    A failed relation marks the run failed with code oracle-mismatch.
    """
    logger.info(f"Starting oracle check for run {run_id}")
    run = ExperimentRun.objects.get(id=run_id)
    run.mark_running(task_id=self.request.id)
    service = OracleCheckService(draws=draws, seed=seed, run=run)
    try:
        report = service.run_checks()
    except Exception as exc:
        if run.status != 'failed':
            run.mark_failed(exc, traceback.format_exc())
        logger.error(f"Oracle check for run {run_id} failed: {exc}")
        return {'success': False, 'run_id': str(run_id), 'error': str(exc)}
    return {'success': True, 'run_id': str(run_id), 'report': report}
