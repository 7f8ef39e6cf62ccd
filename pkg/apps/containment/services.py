"""
Containment services - long-running computations with run tracking.

Each service can be attached to an ExperimentRun; it marks the run running,
stores the result on success and the error (code, message, traceback) on
failure, then re-raises.
"""
import itertools
import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pandas as pd

from .bounds import delayed_w_ub_for, sandwich, stagnating_lb
from .chain import GameParams
from .conf import get_setting
from .dp import wbar_curve, wbar_table
from .exceptions import ConfigInvalid, OracleMismatch
from .models import ExperimentRun
from .oracle import closed_form_w, forward_w, no_selfloop_enumeration, stagnating_exact_w
from .rates import Delayed, DirectAlpha, PowerLaw, RationalCaseStudy, Stagnating, rate_to_spec
from .serializers import config_to_payload
from .simulators import SIMULATORS, GameOutcome, aggregate, monte_carlo
from .solver import curve_frame, k_c, k_curve

logger = logging.getLogger(__name__)


def record_run(kind, parameters, result, label=''):
    """Store a finished inline computation as a completed ExperimentRun."""
    run = ExperimentRun.objects.create(kind=kind, label=label, parameters=parameters)
    run.mark_running()
    run.mark_completed(result)
    logger.info(f"Recorded {kind} run {run.id}")
    return run


class TrackedService:
    """Base for services that optionally report to an ExperimentRun"""

    kind = None

    def __init__(self, run=None):
        self.run = run

    def parameters(self):
        return {}

    def compute(self):
        raise NotImplementedError

    def summarize(self, result):
        """JSON-able form of the result stored on the run"""
        return result

    def execute(self):
        start = time.perf_counter()
        if self.run is not None:
            self.run.mark_running()
        try:
            result = self.compute()
        except Exception as exc:
            logger.error(f"{self.__class__.__name__} failed: {exc}")
            if self.run is not None:
                self.run.mark_failed(exc, traceback.format_exc())
            raise
        logger.info(f"{self.__class__.__name__} finished in {time.perf_counter() - start:.2f}s")
        if self.run is not None:
            self.run.mark_completed(self.summarize(result))
        return result


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _wbar_point(args):
    gamma, a, k_max, tbud, p, h = args
    curve = wbar_curve(k_max, tbud, GameParams(p=p, h=h, gamma=gamma), DirectAlpha(a=a))
    return [(gamma, a, k, w) for k, w in curve]


def _kc_point(args):
    gamma, a, tbud, p, h, target = args
    result = k_c(tbud, GameParams(p=p, h=h, gamma=gamma), DirectAlpha(a=a), target=target)
    return gamma, a, result.k, result.k_frac


class SweepService(TrackedService):
    """
    Cartesian sweep over gamma and DirectAlpha exponents a.

    execute() gives w-bar(k) for k = 1..k_max in long format `gamma,a,k,wbar`;
    kc_frame() gives the containment parameter per grid point as
    `gamma,a,kc,kc_frac`.
    """

    kind = 'sweep'

    def __init__(self, gammas, exponents, k_max, tbud, p=1.0, h=0.0, workers=None, run=None):
        super().__init__(run=run)
        if not gammas or not exponents:
            raise ConfigInvalid("sweep needs at least one gamma and one exponent")
        self.gammas = [float(g) for g in gammas]
        self.exponents = [float(a) for a in exponents]
        self.k_max = int(k_max)
        self.tbud = int(tbud)
        self.p = float(p)
        self.h = float(h)
        self.workers = get_setting('MC_THREADS') if workers is None else workers

    def parameters(self):
        return {
            'gammas': self.gammas,
            'exponents': self.exponents,
            'k_max': self.k_max,
            'tbud': self.tbud,
            'p': self.p,
            'h': self.h,
        }

    def _grid(self):
        return sorted(itertools.product(self.gammas, self.exponents))

    def _map(self, func, jobs):
        if self.workers <= 1 or len(jobs) == 1:
            return [func(job) for job in jobs]
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(func, jobs))

    def compute(self):
        jobs = [(g, a, self.k_max, self.tbud, self.p, self.h) for g, a in self._grid()]
        logger.info(f"Sweeping w-bar over {len(jobs)} grid points up to k={self.k_max}")
        rows = [row for block in self._map(_wbar_point, jobs) for row in block]
        frame = pd.DataFrame(rows, columns=['gamma', 'a', 'k', 'wbar'])
        return frame.sort_values(['gamma', 'a', 'k']).reset_index(drop=True)

    def summarize(self, result):
        return {'rows': len(result), 'max_wbar': float(result['wbar'].max())}

    def kc_frame(self, target=0.5):
        jobs = [(g, a, self.tbud, self.p, self.h, target) for g, a in self._grid()]
        logger.info(f"Sweeping k_c over {len(jobs)} grid points at tbud={self.tbud}")
        frame = pd.DataFrame(self._map(_kc_point, jobs), columns=['gamma', 'a', 'kc', 'kc_frac'])
        return frame.sort_values(['gamma', 'a']).reset_index(drop=True)


class KCurveService(TrackedService):
    """k(t) curve as a tracked run"""

    kind = 'kcurve'

    def __init__(self, t_values, params, rate, target, run=None):
        super().__init__(run=run)
        self.t_values = list(t_values)
        self.params = params
        self.rate = rate
        self.target = target

    def parameters(self):
        return {
            't': self.t_values,
            'params': self.params.to_dict(),
            'rate': rate_to_spec(self.rate),
            'target': self.target,
        }

    def compute(self):
        return k_curve(self.t_values, self.params, self.rate, self.target)

    def summarize(self, result):
        return {'curve': curve_frame(result).fillna(0.0).to_dict(orient='list')}


# ---------------------------------------------------------------------------
# Oracle cross-validation
# ---------------------------------------------------------------------------

def random_instance(rng):
    """Random valid (GameParams, f-based rate) pair for cross-validation."""
    p = float(rng.uniform(0.05, 1.0))
    h = float(rng.uniform(0.0, 1.0 - p))
    gamma = float(rng.uniform(0.05, 0.95))
    choice = int(rng.integers(4))
    if choice == 0:
        rate = Stagnating(tau=float(rng.uniform(0.05, 1.0)))
    elif choice == 1:
        a = float(rng.uniform(0.5, 3.0))
        rate = PowerLaw(d=float(rng.uniform(0.1, 1.0)) * 2.0 ** a, a=a, offset=2.0)
    elif choice == 2:
        rate = RationalCaseStudy(scale=float(rng.uniform(0.5, 20.0)))
    else:
        rate = Delayed(lstar=int(rng.integers(1, 4)), inner=PowerLaw(d=1.0, a=2.0, offset=2.0))
    return GameParams(p=p, h=h, gamma=gamma), rate


class OracleCheckService(TrackedService):
    """
    Cross-check the DP engine, the exact oracles and the bounds on a grid of
    small instances and random parameter draws.

    Report keys are relation names mapped to the maximum deviation (equality
    relations) or the maximum violation (inequalities); run_checks() raises
    OracleMismatch when any entry exceeds its tolerance.
    """

    kind = 'oracle_check'
    EQUALITIES = (
        'forward_vs_closed_form',
        'enumeration_vs_wbar',
        'wbar_vs_table',
        'stagnating_vs_negative_binomial',
    )
    INEQUALITIES = (
        'forward_above_wbar',
        'stagnating_lb_above_exact',
        'sandwich_lower_above_exact',
        'exact_above_sandwich_upper',
        'forward_above_delayed_ub',
    )

    def __init__(self, ks=(1, 2, 3), tbuds=range(1, 9), draws=25, seed=0,
                 tol=1e-10, slack=1e-9, run=None):
        super().__init__(run=run)
        self.ks = [int(k) for k in ks]
        self.tbuds = [int(t) for t in tbuds]
        self.draws = int(draws)
        self.seed = int(seed)
        self.tol = tol
        self.slack = slack

    def parameters(self):
        return {'ks': self.ks, 'tbuds': self.tbuds, 'draws': self.draws, 'seed': self.seed}

    def _check_instance(self, params, rate, report):
        for k, tbud in itertools.product(self.ks, self.tbuds):
            exact = forward_w(k, tbud, params, rate)
            upper = wbar_table(k, tbud, params, rate).wbar
            report['forward_vs_closed_form'] = max(
                report['forward_vs_closed_form'], abs(exact - closed_form_w(k, tbud, params, rate)))
            report['enumeration_vs_wbar'] = max(
                report['enumeration_vs_wbar'], abs(no_selfloop_enumeration(k, tbud, params, rate) - upper))
            report['wbar_vs_table'] = max(
                report['wbar_vs_table'], abs(wbar_curve(k, tbud, params, rate)[-1][1] - upper))
            report['forward_above_wbar'] = max(report['forward_above_wbar'], exact - upper)

            for v in range(k, max(k, tbud) + 1):
                bracket = sandwich(k, tbud, params, rate, v=v)
                report['sandwich_lower_above_exact'] = max(
                    report['sandwich_lower_above_exact'], bracket.lower - exact)
                report['exact_above_sandwich_upper'] = max(
                    report['exact_above_sandwich_upper'], exact - bracket.upper)

            if isinstance(rate, Stagnating):
                exact_nb = stagnating_exact_w(k, tbud, rate.tau, params.p)
                report['stagnating_vs_negative_binomial'] = max(
                    report['stagnating_vs_negative_binomial'], abs(exact - exact_nb))
                report['stagnating_lb_above_exact'] = max(
                    report['stagnating_lb_above_exact'],
                    stagnating_lb(k, tbud, rate.tau, params.p) - exact)
        if isinstance(rate, Delayed):
            self._check_delayed(params, rate, report)

    def _check_delayed(self, params, rate, report):
        """Delayed bound for k past the delay and every admissible k*."""
        lstar = rate.lstar
        for k, tbud in itertools.product(range(lstar + 2, lstar + 4), self.tbuds):
            exact = forward_w(k, tbud, params, rate)
            for kstar in range(lstar + 1, k):
                bound = delayed_w_ub_for(k, kstar, tbud, params, rate)
                report['forward_above_delayed_ub'] = max(
                    report['forward_above_delayed_ub'], exact - bound)

    def compute(self):
        rng = np.random.Generator(np.random.PCG64(self.seed))
        report = {name: 0.0 for name in self.EQUALITIES + self.INEQUALITIES}
        for draw in range(self.draws):
            params, rate = random_instance(rng)
            self._check_instance(params, rate, report)
            if self.run is not None:
                self.run.set_progress(draw + 1, self.draws)
        # fixed stagnating and delayed instances so those relations always run
        self._check_instance(GameParams(p=0.7, h=0.1, gamma=0.3), Stagnating(tau=0.4), report)
        for lstar in (1, 2, 3):
            self._check_instance(
                GameParams(p=0.6, h=0.2, gamma=0.3),
                Delayed(lstar=lstar, inner=PowerLaw(d=1.0, a=2.0, offset=2.0)), report)
        logger.info(f"Oracle check over {self.draws} draws: {report}")
        return report

    def failures(self, report):
        failed = {name: report[name] for name in self.EQUALITIES if report[name] > self.tol}
        failed.update({name: report[name] for name in self.INEQUALITIES if report[name] > self.slack})
        return failed

    def run_checks(self):
        """Execute and raise OracleMismatch on any failed relation."""
        report = self.execute()
        failed = self.failures(report)
        if failed:
            raise OracleMismatch(f"cross-validation failed: {failed}", failed=failed)
        return report


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

class MonteCarloService(TrackedService):
    """
    Monte Carlo over seeds base_seed .. base_seed + trials - 1.

    With backend 'local' the chunks run on a process pool; with 'celery' they
    are dispatched as a group of run_trial_chunk tasks. Either way the
    outcomes are sorted by seed before aggregation.
    """

    kind = 'simulate'

    def __init__(self, sim_name, config, trials, base_seed=0, backend=None, workers=None, run=None):
        super().__init__(run=run)
        if sim_name not in SIMULATORS:
            raise ConfigInvalid(f"unknown simulator '{sim_name}', choose from {sorted(SIMULATORS)}")
        if trials < 1:
            raise ConfigInvalid(f"trials must be at least 1, got {trials}")
        self.sim_name = sim_name
        self.config = config
        self.trials = int(trials)
        self.base_seed = int(base_seed)
        self.backend = backend or get_setting('MC_BACKEND')
        self.workers = workers

    def parameters(self):
        return {'simulator': self.sim_name, 'trials': self.trials, 'base_seed': self.base_seed}

    def _celery(self):
        from celery import group

        from .tasks import run_trial_chunk

        size = get_setting('MC_CHUNK_SIZE')
        seeds = list(range(self.base_seed, self.base_seed + self.trials))
        chunks = [seeds[n:n + size] for n in range(0, len(seeds), size)]
        logger.info(f"Dispatching {len(chunks)} chunks of {self.sim_name} trials to celery")
        payload = config_to_payload(self.config)
        result = group(run_trial_chunk.s(self.sim_name, payload, chunk) for chunk in chunks)()
        outcomes = [GameOutcome.from_dict(data) for chunk in result.join() for data in chunk]
        outcomes.sort(key=lambda o: o.seed)
        return aggregate(outcomes, base_seed=self.base_seed)

    def compute(self):
        if self.backend == 'celery':
            return self._celery()
        if self.backend != 'local':
            raise ConfigInvalid(f"MC_BACKEND must be 'local' or 'celery', got '{self.backend}'")
        return monte_carlo(SIMULATORS[self.sim_name], self.config, self.trials,
                           base_seed=self.base_seed, workers=self.workers)

    def summarize(self, result):
        return result.to_dict()
