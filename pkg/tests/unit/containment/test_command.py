"""
Tests for the containment management command
"""
import json
from io import StringIO

import pandas as pd
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from apps.containment import capacity
from apps.containment.models import ExperimentRun

pytestmark = [pytest.mark.cli, pytest.mark.django_db]

HALF = ['--params', 'p=1,h=0,gamma=0.5']


def run(*args):
    out = StringIO()
    call_command('containment', *args, stdout=out)
    return out.getvalue()


class TestWbarCommand:
    """Test the wbar subcommand"""

    def test_scalar_csv(self):
        output = run('wbar', '--k', '2', '--tbud', '2', '--rate', 'alpha:a=1', *HALF)
        assert float(output.strip()) == pytest.approx(0.75)

    def test_curve_json(self):
        output = run('wbar', '--k-max', '2', '--tbud', '2', '--rate', 'alpha:a=1', '--format', 'json', *HALF)

        rows = json.loads(output)

        assert [row['k'] for row in rows] == [1, 2]
        assert rows[1]['wbar'] == pytest.approx(0.75)

    def test_out_file(self, tmp_path):
        target = tmp_path / 'wbar.csv'

        output = run('wbar', '--k', '2', '--tbud', '2', '--rate', 'alpha:a=1', '--out', str(target), *HALF)

        assert output == ''
        assert float(target.read_text()) == pytest.approx(0.75)

    def test_config_file(self, tmp_path):
        """Options missing on the command line come from --config"""
        config = tmp_path / 'run.json'
        config.write_text(json.dumps({'params': 'p=1,h=0,gamma=0.5', 'rate': 'alpha:a=1', 'format': 'json'}))

        output = run('wbar', '--k', '2', '--tbud', '2', '--config', str(config))

        assert json.loads(output) == {'value': pytest.approx(0.75)}

    def test_record(self):
        run('wbar', '--k', '2', '--tbud', '2', '--rate', 'alpha:a=1', '--record', *HALF)

        recorded = ExperimentRun.objects.get()
        assert recorded.kind == 'wbar'
        assert recorded.status == 'completed'
        assert recorded.result == {'value': 0.75}
        assert recorded.parameters['rate'] == 'alpha:a=1'


class TestCommandErrors:
    """Test error reporting and exit status"""

    def test_bad_rate_spec(self):
        with pytest.raises(CommandError) as excinfo:
            run('wbar', '--k', '1', '--tbud', '2', '--rate', 'zigzag:x=1')

        assert excinfo.value.returncode == 3
        assert str(excinfo.value).startswith('invalid-rate-spec')

    def test_missing_rate(self):
        with pytest.raises(CommandError) as excinfo:
            run('kc', '--tbud', '10')

        assert str(excinfo.value).startswith('config-invalid')

    def test_bad_params(self):
        with pytest.raises(CommandError) as excinfo:
            run('wbar', '--k', '1', '--tbud', '2', '--rate', 'alpha:a=1', '--params', 'p=0.8,h=0.5')

        assert excinfo.value.returncode == 3
        assert str(excinfo.value).startswith('invalid-params')


class TestAnalysisCommands:
    """Test kc, bound and capacity subcommands"""

    def test_kc(self):
        output = run('kc', '--tbud', '100', '--rate', 'alpha:a=1', '--format', 'json', *HALF)

        data = json.loads(output)

        assert data['tbud'] == 100
        assert data['k'] >= 1
        assert data['k'] - 1 <= data['k_frac'] <= data['k']

    def test_stagnating_bound(self):
        output = run('bound', 'stagnating', '--k', '5', '--tbud', '50', '--tau', '0.3', *HALF)

        frame = pd.read_csv(StringIO(output))

        assert frame['bound'].iloc[0] == pytest.approx(0.8588, abs=1e-4)

    def test_sandwich_bound(self):
        output = run('bound', 'sandwich', '--k', '2', '--tbud', '8', '--v', '2',
                     '--rate', 'powerlaw:d=1,a=2', '--format', 'json', *HALF)

        data = json.loads(output)

        assert data['lower'] <= data['upper']

    def test_capacity_convert(self):
        output = run('capacity', 'convert', '--seconds', '3600', '--k', '10', '--delta', '1',
                     '--cost-per-move', '0.05', '--format', 'json')

        data = json.loads(output)

        assert data['tbud'] == 36000
        assert data['cost'] == pytest.approx(1800.0)

    def test_capacity_s(self):
        output = run('capacity', 's', '--k', '10', '--t', '2', '--d', '0.5',
                     '--params', 'p=0.5,gamma=0.5', '--format', 'json')

        expected = capacity.s_of(capacity.region_powerlaw(0.5, 0.5, 0.5), 10, 2)
        assert json.loads(output)['s'] == pytest.approx(expected)

    def test_capacity_region_json(self):
        output = run('capacity', 'region', '--d', '0.5', '--params', 'p=0.5,gamma=0.5',
                     '--variant', 'derived', '--format', 'json')

        region = capacity.region_from_json(output)

        assert region == capacity.region_powerlaw(0.5, 0.5, 0.5, variant='derived')

    def test_capacity_compose(self):
        output = run('capacity', 'compose', '--a', '4', '--s', '3', '--t', '1', '--d', '0.5',
                     '--params', 'p=0.5,gamma=0.5', '--format', 'json')

        assert json.loads(output)['prob_bound'] == pytest.approx(0.11926, abs=1e-5)


class TestSimulationCommands:
    """Test simulate, epidemic and runs subcommands"""

    def test_simulate_chain(self):
        output = run('simulate', 'chain', '--k', '2', '--tbud', '10', '--trials', '6',
                     '--workers', '1', '--backend', 'local', '--rate', 'powerlaw:d=1,a=2',
                     '--seed', '5', '--format', 'json', *HALF)

        data = json.loads(output)

        assert data['trials'] == 6
        assert data['base_seed'] == 5
        assert data['attacker_wins'] + data['defender_wins'] + data['timeouts'] == 6

    def test_simulate_malware_per_trial(self):
        output = run('simulate', 'malware', '--n', '200', '--k-vuln', '20', '--k-target', '3',
                     '--strategy', 'hitlist', '--trials', '3', '--workers', '1', '--backend', 'local',
                     '--rate', 'stagnating:tau=1', '--per-trial')

        frame = pd.read_csv(StringIO(output))

        assert list(frame.columns) == ['trial', 'winner', 'steps', 'final_i', 'final_l']
        assert (frame['winner'] == 'attacker').all()

    def test_epidemic_preset(self):
        output = run('epidemic', '--preset', 'codered1v2', '--hours', '2', '--step', '1')

        frame = pd.read_csv(StringIO(output))

        assert list(frame['hour']) == [0.0, 1.0, 2.0]
        assert frame['infected'].iloc[0] == 1.0

    def test_runs_listing(self, create_run):
        create_run(kind='kc')
        create_run(kind='sweep')

        output = run('runs', '--kind', 'kc', '--format', 'json')

        rows = json.loads(output)
        assert [row['kind'] for row in rows] == ['kc']
