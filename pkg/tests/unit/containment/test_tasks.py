"""
Unit tests for containment Celery tasks
"""
from unittest.mock import patch

import pytest

from apps.containment.serializers import config_to_payload
from apps.containment.simulators import ChainConfig, MalwareConfig, run_seeds, simulate_chain, simulate_malware
from apps.containment.tasks import run_oracle_check, run_sweep, run_trial_chunk

pytestmark = pytest.mark.django_db


class TestRunTrialChunk:
    """Test run_trial_chunk"""

    def test_matches_direct_run(self, mixed_params, powerlaw_rate):
        # Arrange
        config = ChainConfig(k=3, tbud=20, params=mixed_params, rate=powerlaw_rate)
        seeds = [4, 5, 6]

        # Act
        result = run_trial_chunk.apply(args=('chain', config_to_payload(config), seeds)).get()

        # Assert
        assert result == [o.to_dict() for o in run_seeds(simulate_chain, config, seeds)]

    def test_malware_payload(self):
        config = MalwareConfig(n=200, k_vuln=20, h_count=5, k_target=4, gamma=0.1)

        result = run_trial_chunk.apply(args=('malware', config_to_payload(config), [0])).get()

        assert result == [simulate_malware(config, 0).to_dict()]


class TestRunSweep:
    """Test run_sweep"""

    def test_rows_stored_on_run(self, create_run):
        run = create_run(kind='sweep')

        result = run_sweep.apply(args=(str(run.id), [0.5], [1.0], 2, 4)).get()

        run.refresh_from_db()
        assert result['success'] is True
        assert result['rows'] == 2
        assert run.status == 'completed'
        assert [row['k'] for row in run.result['rows']] == [1, 2]


class TestRunOracleCheck:
    """Test run_oracle_check"""

    def test_success(self, create_run):
        run = create_run(kind='oracle_check')

        with patch('apps.containment.tasks.OracleCheckService.run_checks', return_value={'forward_above_wbar': 0.0}):
            result = run_oracle_check.apply(args=(str(run.id),), kwargs={'draws': 1}).get()

        assert result['success'] is True
        assert result['report'] == {'forward_above_wbar': 0.0}

    def test_failure_marks_run(self, create_run):
        run = create_run(kind='oracle_check')

        with patch('apps.containment.tasks.OracleCheckService.run_checks', side_effect=RuntimeError('boom')):
            result = run_oracle_check.apply(args=(str(run.id),)).get()

        run.refresh_from_db()
        assert result['success'] is False
        assert run.status == 'failed'
        assert run.error_code == 'RuntimeError'
