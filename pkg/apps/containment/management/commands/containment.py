"""
Django management command exposing the containment engine.
Usage: python manage.py containment <subcommand> [options]

Results go to stdout (or --out); logs go to stderr. Every containment error
exits with status 3, usage errors with status 2.
"""
import argparse
import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.management.base import BaseCommand, CommandError

from apps.containment import bounds, capacity
from apps.containment.chain import parse_params
from apps.containment.dp import wbar, wbar_curve
from apps.containment.epidemic import epidemic_curve
from apps.containment.exceptions import ConfigInvalid, ContainmentError, OracleMismatch
from apps.containment.models import ExperimentRun
from apps.containment.presets import PRESETS, get_preset
from apps.containment.rates import Delayed, Stagnating, parse_rate, rate_to_spec
from apps.containment.serializers import (
    ChainConfigSerializer, ExperimentRunSerializer, MalwareConfigSerializer,
    MTDConfigSerializer, RegionSerializer, RunConfigSerializer, config_to_payload, validated,
)
from apps.containment.services import (
    KCurveService, MonteCarloService, OracleCheckService, SweepService, record_run,
)
from apps.containment.solver import (
    MONTH_SCANS_PER_NODE, curve_frame, extrapolate_k, extrapolate_k_realtime, k_c,
)

logger = logging.getLogger(__name__)

RUN_KINDS = {
    'wbar': 'wbar',
    'kc': 'kc',
    'kcurve': 'kcurve',
    'bound': 'bound',
    'capacity': 'capacity',
    'simulate': 'simulate',
    'epidemic': 'epidemic',
    'sweep': 'sweep',
    'oracle': 'oracle_check',
}
GLOBAL_DEFAULTS = {'format': 'csv', 'seed': 0, 'variant': 'stated', 'record': False}


def _float_list(text):
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _t_values(text):
    """'8..14' (inclusive integer range), '8,9.5,10' or a single value."""
    if '..' in text:
        lo, _, hi = text.partition('..')
        try:
            return list(range(int(lo), int(hi) + 1))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range '{text}'")
    return _float_list(text)


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, pd.DataFrame):
        return json.loads(value.to_json(orient='records'))
    return str(value)


def _jsonable(result):
    if isinstance(result, pd.DataFrame):
        return {'rows': json.loads(result.to_json(orient='records', double_precision=15))}
    if isinstance(result, dict):
        return json.loads(json.dumps(result, default=_json_default))
    return {'value': float(result)}


class Command(BaseCommand):
    help = 'Containment engine: winning probabilities, k_c, bounds, capacity regions and simulations'

    def create_parser(self, prog_name, subcommand, **kwargs):
        # short flags like --t or --n must not resolve to --traceback or --no-color
        kwargs.setdefault('allow_abbrev', False)
        return super().create_parser(prog_name, subcommand, **kwargs)

    def _common(self):
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument('--params', help='Game parameters, e.g. p=1,h=0,gamma=0.5')
        common.add_argument('--rate', help='Learning rate spec, e.g. powerlaw:d=1,a=2')
        common.add_argument('--out', help='Write the result to this file instead of stdout')
        common.add_argument('--format', choices=['csv', 'json'], help='Output format (default csv)')
        common.add_argument('--preset', choices=sorted(PRESETS), help='Scenario preset')
        common.add_argument('--seed', type=int, help='Base seed for randomized commands (default 0)')
        common.add_argument('--config', help='JSON file with any of the global options')
        common.add_argument('--record', action='store_true', default=None,
                            help='Store the run as an ExperimentRun')
        common.add_argument('--variant', choices=capacity.VARIANTS,
                            help='Capacity region constants (default stated)')
        return common

    def _region_args(self, parser):
        parser.add_argument('--region', help='Region JSON text or path to a JSON file')
        parser.add_argument('--form', choices=['powerlaw', 'delayed'], default='powerlaw')
        parser.add_argument('--d', type=float, default=1.0)
        parser.add_argument('--lstar', type=int)

    def add_arguments(self, parser):
        common = self._common()
        sub = parser.add_subparsers(dest='subcommand', required=True)

        p = sub.add_parser('wbar', parents=[common], help='Winning probability upper bound w-bar', allow_abbrev=False)
        p.add_argument('--k', type=int)
        p.add_argument('--k-max', type=int, dest='k_max')
        p.add_argument('--tbud', type=int, required=True)

        p = sub.add_parser('kc', parents=[common], help='Containment parameter k_c', allow_abbrev=False)
        p.add_argument('--tbud', type=int, required=True)
        p.add_argument('--target', type=float, default=0.5)
        p.add_argument('--ceiling', type=int)

        p = sub.add_parser('kcurve', parents=[common], help='Fractional k(t) curve', allow_abbrev=False)
        p.add_argument('--t', type=_t_values, default=list(range(8, 15)))
        p.add_argument('--target', type=float, default=0.5)
        p.add_argument('--extrapolate-to', type=float, dest='extrapolate_to')
        p.add_argument('--extrapolate-to-month', action='store_true', dest='extrapolate_to_month')
        p.add_argument('--moves-per-node', type=float, default=MONTH_SCANS_PER_NODE, dest='moves_per_node')

        p = sub.add_parser('bound', help='Bounds on the winning probability', allow_abbrev=False)
        kinds = p.add_subparsers(dest='bound_kind', required=True)
        b = kinds.add_parser('stagnating', parents=[common], allow_abbrev=False)
        b.add_argument('--k', type=int, required=True)
        b.add_argument('--tbud', type=int, required=True)
        b.add_argument('--tau', type=float)
        b = kinds.add_parser('sandwich', parents=[common], allow_abbrev=False)
        b.add_argument('--k', type=int, required=True)
        b.add_argument('--tbud', type=int, required=True)
        b.add_argument('--v', type=int)
        b.add_argument('--epsilon', type=float)
        b = kinds.add_parser('analytic', parents=[common], allow_abbrev=False)
        b.add_argument('--k', type=int, required=True)
        b.add_argument('--tbud', type=int, required=True)
        b.add_argument('--d', type=float, default=1.0)
        b.add_argument('--theta', type=float)
        b.add_argument('--form', choices=['auto', 'general', 'optimized', 'powerlaw', 'loose'], default='auto')
        b = kinds.add_parser('delayed', parents=[common], allow_abbrev=False)
        b.add_argument('--kstar', type=int, required=True)
        b.add_argument('--lstar', type=int)
        b.add_argument('--k', type=int)
        b.add_argument('--tbud', type=int)
        b.add_argument('--simplified', action='store_true')

        p = sub.add_parser('capacity', help='Capacity regions', allow_abbrev=False)
        kinds = p.add_subparsers(dest='capacity_kind', required=True)
        c = kinds.add_parser('region', parents=[common], allow_abbrev=False)
        self._region_args(c)
        c = kinds.add_parser('s', parents=[common], allow_abbrev=False)
        self._region_args(c)
        c.add_argument('--k', type=float, required=True)
        c.add_argument('--t', type=float, required=True)
        c = kinds.add_parser('k', parents=[common], allow_abbrev=False)
        self._region_args(c)
        c.add_argument('--s', type=float, required=True)
        c.add_argument('--t', type=float, required=True)
        c = kinds.add_parser('compose', parents=[common], allow_abbrev=False)
        self._region_args(c)
        c.add_argument('--regions', action='append', help='Region JSON or file; repeat per game')
        c.add_argument('--a', type=int, default=1, help='Copies of the region when --regions is absent')
        c.add_argument('--s', type=float, required=True)
        c.add_argument('--t', type=float, required=True)
        c = kinds.add_parser('convert', parents=[common], allow_abbrev=False)
        c.add_argument('--seconds', type=float, required=True)
        c.add_argument('--k', type=int, required=True)
        c.add_argument('--delta', type=float, required=True)
        c.add_argument('--cost-per-move', type=float, dest='cost_per_move')

        p = sub.add_parser('simulate', help='Monte Carlo simulation', allow_abbrev=False)
        kinds = p.add_subparsers(dest='simulator', required=True)
        for name in ('malware', 'mtd', 'chain'):
            s = kinds.add_parser(name, parents=[common], allow_abbrev=False)
            s.add_argument('--trials', type=int, default=100)
            s.add_argument('--workers', type=int)
            s.add_argument('--backend', choices=['local', 'celery'])
            s.add_argument('--per-trial', action='store_true', dest='per_trial')
            s.add_argument('--sim-config', dest='sim_config', help='Simulator config JSON file')
            if name == 'chain':
                s.add_argument('--k', type=int, required=True)
                s.add_argument('--tbud', type=int, required=True)
                continue
            s.add_argument('--n', type=int)
            s.add_argument('--k-vuln', type=int, dest='k_vuln')
            s.add_argument('--h-count', type=int, dest='h_count')
            s.add_argument('--k-target', type=int, dest='k_target')
            s.add_argument('--strategy', choices=['uniform-random', 'hitlist'])
            s.add_argument('--max-steps', type=int, dest='max_steps')
            if name == 'malware':
                s.add_argument('--theta', type=float, dest='dropout_theta')
                s.add_argument('--max-hours', type=float, dest='max_hours')
                s.add_argument('--scan-rate', type=float, dest='scan_rate_per_hour')
                s.add_argument('--initial-infected', type=int, dest='initial_infected')
                s.add_argument('--stride', type=int, dest='level_trace_stride')
            else:
                s.add_argument('--lstar', type=int)
                s.add_argument('--h', type=float)

        p = sub.add_parser('epidemic', parents=[common], allow_abbrev=False,
                           help='Deterministic epidemic baseline')
        p.add_argument('--n', type=int)
        p.add_argument('--k-vuln', type=int, dest='k_vuln')
        p.add_argument('--scan-rate', type=float, dest='scan_rate')
        p.add_argument('--i0', type=float, default=1.0)
        p.add_argument('--hours', type=float, default=30.0)
        p.add_argument('--step', type=float, default=1.0)

        p = sub.add_parser('sweep', parents=[common], allow_abbrev=False,
                           help='w-bar sweep over gamma and alpha exponents')
        p.add_argument('--gammas', type=_float_list, default=[0.1, 0.3, 0.5, 0.7, 0.9])
        p.add_argument('--exponents', type=_float_list, default=[0.5, 0.9, 1.0, 1.5, 2.0])
        p.add_argument('--k-max', type=int, default=50, dest='k_max')
        p.add_argument('--tbud', type=int, default=10000)
        p.add_argument('--kc', action='store_true', help='Emit k_c per grid point instead')
        p.add_argument('--target', type=float, default=0.5)
        p.add_argument('--workers', type=int)

        p = sub.add_parser('oracle', help='Cross-validation of the engines', allow_abbrev=False)
        kinds = p.add_subparsers(dest='oracle_kind', required=True)
        o = kinds.add_parser('check', parents=[common], allow_abbrev=False)
        o.add_argument('--draws', type=int, default=25)

        p = sub.add_parser('runs', parents=[common], help='List recorded runs', allow_abbrev=False)
        p.add_argument('--limit', type=int, default=20)
        p.add_argument('--kind', choices=[choice for choice, _ in ExperimentRun.KIND_CHOICES])

    # ------------------------------------------------------------------
    # Option helpers
    # ------------------------------------------------------------------

    def _merge_config(self, options):
        if options.get('config'):
            try:
                data = json.loads(Path(options['config']).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigInvalid(f"cannot read config file: {exc}") from exc
            for key, value in validated(RunConfigSerializer, data).items():
                if options.get(key) is None:
                    options[key] = value
        for key, value in GLOBAL_DEFAULTS.items():
            if options.get(key) is None:
                options[key] = value
        return options

    def _preset(self, options):
        return get_preset(options['preset']) if options.get('preset') else None

    def _params(self, options):
        preset = self._preset(options)
        return parse_params(options.get('params') or '', base=preset.params() if preset else None)

    def _rate(self, options):
        if options.get('rate'):
            return parse_rate(options['rate'])
        preset = self._preset(options)
        if preset is not None:
            return preset.rate
        raise ConfigInvalid("--rate is required (or choose a --preset)")

    def _load_region(self, text):
        path = Path(text)
        raw = path.read_text() if path.suffix == '.json' and path.exists() else text
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"region is not valid JSON: {exc}") from exc
        return validated(RegionSerializer, data)

    def _region(self, options):
        if options.get('region'):
            return self._load_region(options['region'])
        params = self._params(options)
        base = capacity.region_powerlaw(params.gamma, params.p, options['d'], variant=options['variant'])
        if options['form'] == 'powerlaw':
            return base
        if not options.get('lstar'):
            raise ConfigInvalid("--lstar is required for the delayed region")
        return capacity.region_delayed(base, options['lstar'], params, variant=options['variant'])

    # ------------------------------------------------------------------
    # Subcommands
    # ------------------------------------------------------------------

    def _wbar(self, options):
        params, rate = self._params(options), self._rate(options)
        if options.get('k_max'):
            curve = wbar_curve(options['k_max'], options['tbud'], params, rate)
            return pd.DataFrame(curve, columns=['k', 'wbar'])
        if not options.get('k'):
            raise ConfigInvalid("--k or --k-max is required")
        return wbar(options['k'], options['tbud'], params, rate)

    def _kc(self, options):
        result = k_c(options['tbud'], self._params(options), self._rate(options),
                     target=options['target'], ceiling=options.get('ceiling'))
        return {'tbud': options['tbud'], 'target': options['target'], **result.to_dict()}

    def _kcurve(self, options):
        params, rate = self._params(options), self._rate(options)
        curve = KCurveService(options['t'], params, rate, options['target']).execute()
        frame = curve_frame(curve)
        extra = None
        if options.get('extrapolate_to_month'):
            k = extrapolate_k_realtime(curve, moves_per_node=options['moves_per_node'])
            extra = (math.log2(options['moves_per_node'] * k), k)
        elif options.get('extrapolate_to') is not None:
            extra = (options['extrapolate_to'], extrapolate_k(curve, options['extrapolate_to']))
        if extra is not None:
            t, k = extra
            row = pd.DataFrame({'t': [t], 'k_frac': [k], 'diff': [k - curve[-1].k_frac]})
            frame = pd.concat([frame, row], ignore_index=True)
        return frame

    def _bound(self, options):
        kind = options['bound_kind']
        params = self._params(options)
        k, tbud = options.get('k'), options.get('tbud')
        if kind == 'stagnating':
            tau = options.get('tau')
            if tau is None:
                rate = self._rate(options)
                if not isinstance(rate, Stagnating):
                    raise ConfigInvalid("--tau or a stagnating --rate is required")
                tau = rate.tau
            return {
                'bound': bounds.stagnating_lb(k, tbud, tau, params.p),
                'raw': bounds.stagnating_lb(k, tbud, tau, params.p, clamp=False),
            }
        if kind == 'sandwich':
            v = options.get('v')
            if v is None:
                if options.get('epsilon') is None:
                    raise ConfigInvalid("--v or --epsilon is required")
                v = bounds.v_for_epsilon(k, tbud, options['epsilon'], params.gamma)
            return bounds.sandwich(k, tbud, params, self._rate(options), v).to_dict()
        if kind == 'analytic':
            return self._analytic(options, params, k, tbud)
        return self._delayed(options, params)

    def _analytic(self, options, params, k, tbud):
        form, d = options['form'], options['d']
        if form == 'auto':
            return bounds.analytic_ub(k, tbud, params, self._rate(options), d).to_dict()
        if form == 'powerlaw':
            value = bounds.analytic_ub_powerlaw(k, tbud, params, d)
            raw = bounds.analytic_ub_powerlaw(k, tbud, params, d, clamp=False)
            return {'form': form, 'value': value, 'raw': raw}
        rate = self._rate(options)
        if form == 'general':
            theta = options.get('theta')
            if theta is None:
                theta = (1.0 - params.gamma) / params.gamma
            func = lambda clamp: bounds.analytic_ub_general(k, tbud, params, rate, d, theta, clamp=clamp)  # noqa: E731
        elif form == 'optimized':
            c = bounds.c_constant(rate, d, tbud)
            func = lambda clamp: bounds.analytic_ub_optimized(k, tbud, params, rate, d, clamp=clamp, c=c)  # noqa: E731
        else:
            c = bounds.c_constant(rate, d, tbud)
            func = lambda clamp: bounds.analytic_ub_loose(k, tbud, params, rate, d, clamp=clamp, c=c)  # noqa: E731
        return {'form': form, 'value': func(True), 'raw': func(False)}

    def _delayed(self, options, params):
        kstar = options['kstar']
        rate = self._rate(options) if (options.get('rate') or options.get('preset')) else None
        lstar = options.get('lstar')
        if lstar is None:
            if not isinstance(rate, Delayed):
                raise ConfigInvalid("--lstar or a delayed --rate is required")
            lstar = rate.lstar
        result = {
            'kstar': kstar,
            'lstar': lstar,
            'u_lb': bounds.delayed_u_lb(kstar, lstar, params, simplified=options['simplified']),
        }
        if options.get('k') is not None:
            if options.get('tbud') is None or rate is None:
                raise ConfigInvalid("the w bound needs --tbud and --rate")
            if isinstance(rate, Delayed):
                result['w_ub'] = bounds.delayed_w_ub_for(options['k'], kstar, options['tbud'], params, rate)
            else:
                result['w_ub'] = bounds.delayed_w_ub(options['k'], kstar, lstar, options['tbud'], params, rate)
        return result

    def _capacity(self, options):
        kind = options['capacity_kind']
        if kind == 'convert':
            tbud = capacity.tbud_from_realtime(options['seconds'], options['k'], options['delta'])
            result = {'tbud': tbud, 't': math.log2(tbud)}
            if options.get('cost_per_move') is not None:
                result['cost'] = capacity.cost_of_budget(tbud, options['cost_per_move'])
            return result
        if kind == 'compose':
            if options.get('regions'):
                regions = [self._load_region(text) for text in options['regions']]
            else:
                regions = [self._region(options)] * options['a']
            k_total, prob_bound = capacity.compose(regions, options['s'], options['t'])
            return {'a': len(regions), 's': options['s'], 't': options['t'],
                    'k_total': k_total, 'prob_bound': prob_bound}
        region = self._region(options)
        if kind == 's':
            return {'k': options['k'], 't': options['t'], 's': capacity.s_of(region, options['k'], options['t'])}
        if kind == 'k':
            return {'s': options['s'], 't': options['t'], 'k': capacity.k_of(region, options['s'], options['t'])}
        return region

    def _simulate(self, options):
        name = options['simulator']
        preset = self._preset(options)
        payload = {}
        if name == 'chain':
            params = self._params(options)
            payload = {'k': options['k'], 'tbud': options['tbud'],
                       'params': params.to_dict(), 'rate': rate_to_spec(self._rate(options))}
            serializer = ChainConfigSerializer
        else:
            serializer = MalwareConfigSerializer if name == 'malware' else MTDConfigSerializer
            if preset is not None:
                config = preset.malware_config() if name == 'malware' else preset.mtd_config()
                payload = config_to_payload(config)
            if options.get('sim_config'):
                try:
                    payload.update(json.loads(Path(options['sim_config']).read_text()))
                except (OSError, json.JSONDecodeError) as exc:
                    raise ConfigInvalid(f"cannot read simulator config: {exc}") from exc
            for key in serializer().fields:
                if options.get(key) is not None:
                    payload[key] = options[key]
            if options.get('params'):
                payload['gamma'] = self._params(options).gamma
        config = validated(serializer, payload)
        stats = MonteCarloService(name, config, options['trials'], base_seed=options['seed'],
                                  backend=options.get('backend'), workers=options.get('workers')).execute()
        if options.get('per_trial'):
            return stats.per_trial_frame()
        return stats.to_dict()

    def _epidemic(self, options):
        preset = self._preset(options)
        values = {
            'n': options.get('n') or (preset.n if preset else None),
            'k_vuln': options.get('k_vuln') or (preset.k_vuln if preset else None),
            'scan_rate': options.get('scan_rate') or (preset.scan_rate_per_hour if preset else None),
        }
        missing = [key for key, value in values.items() if value is None]
        if missing:
            raise ConfigInvalid(f"missing {', '.join(missing)} (or choose a --preset)")
        return epidemic_curve(values['n'], values['k_vuln'], values['scan_rate'],
                              options['i0'], options['hours'], options['step'])

    def _sweep(self, options):
        params = self._params(options)
        service = SweepService(options['gammas'], options['exponents'], options['k_max'],
                               options['tbud'], p=params.p, h=params.h, workers=options.get('workers'))
        if options.get('kc'):
            return service.kc_frame(target=options['target'])
        return service.execute()

    def _oracle(self, options):
        service = OracleCheckService(draws=options['draws'], seed=options['seed'])
        report = service.execute()
        failed = service.failures(report)
        frame = pd.DataFrame({
            'relation': list(report),
            'max_deviation': [report[name] for name in report],
            'ok': [name not in failed for name in report],
        })
        if failed:
            self._write(frame, options)
            raise OracleMismatch(f"cross-validation failed: {sorted(failed)}", failed=failed)
        return frame

    def _runs(self, options):
        runs = ExperimentRun.objects.all()
        if options.get('kind'):
            runs = runs.filter(kind=options['kind'])
        data = ExperimentRunSerializer(runs[:options['limit']], many=True).data
        columns = ['id', 'kind', 'status', 'progress', 'processing_time_seconds', 'created_at']
        return pd.DataFrame([{key: row[key] for key in columns} for row in data], columns=columns)

    # ------------------------------------------------------------------
    # Output
    # ------------------------------------------------------------------

    def _render(self, result, fmt):
        if isinstance(result, (capacity.CapacityRegion, capacity.PiecewiseRegion)):
            if fmt == 'json':
                return capacity.region_to_json(result)
            if isinstance(result, capacity.PiecewiseRegion):
                frames = [
                    pd.DataFrame({'regime': name, 'threshold': result.threshold, **part.to_dict()})
                    for name, part in (('high', result.high), ('low', result.low))
                ]
                return pd.concat(frames, ignore_index=True).to_csv(index=False)
            return pd.DataFrame(result.to_dict()).to_csv(index=False)
        if isinstance(result, pd.DataFrame):
            if fmt == 'json':
                return result.to_json(orient='records', double_precision=15)
            return result.to_csv(index=False)
        if isinstance(result, dict):
            if fmt == 'json':
                return json.dumps(result, default=_json_default, sort_keys=True)
            scalars = {k: v for k, v in result.items() if not isinstance(v, (dict, list, tuple, pd.DataFrame))}
            return pd.DataFrame([scalars]).to_csv(index=False)
        if fmt == 'json':
            return json.dumps({'value': float(result)})
        return repr(float(result))

    def _write(self, result, options):
        text = self._render(result, options['format']).rstrip('\n')
        if options.get('out'):
            Path(options['out']).write_text(text + '\n')
            logger.info(f"Wrote result to {options['out']}")
        else:
            self.stdout.write(text)

    def handle(self, *args, **options):
        subcommand = options['subcommand']
        handler = getattr(self, f"_{subcommand}")
        try:
            options = self._merge_config(options)
            result = handler(options)
            self._write(result, options)
            if options['record'] and subcommand in RUN_KINDS:
                parameters = {key: options.get(key) for key in ('params', 'rate', 'preset', 'seed', 'variant')}
                parameters['subcommand'] = subcommand
                if isinstance(result, (capacity.CapacityRegion, capacity.PiecewiseRegion)):
                    data = result.to_dict()
                else:
                    data = _jsonable(result)
                record_run(RUN_KINDS[subcommand], parameters, data, label=subcommand)
        except ContainmentError as exc:
            logger.error(f"{subcommand} failed: {exc.code}: {exc}")
            raise CommandError(f"{exc.code}: {exc}", returncode=3) from exc
