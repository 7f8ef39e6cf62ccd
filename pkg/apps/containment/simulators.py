"""
Seeded Monte Carlo simulators.

simulate_malware plays the malware propagation game, simulate_mtd the
moving-target-defense game and simulate_chain samples the (i, l) chain
directly. Every trial owns a numpy Generator seeded from its own seed, so an
outcome depends on (config, seed) only.

Host sets are never materialized: the probed host falls in the
vulnerable-uninfected, honeypot or other category with probabilities
(K - i)/(N - i), H/(N - i) and the rest. Probes that change nothing are
skipped in bulk with a geometric draw, which has the same law as probing
one at a time.
"""
import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from .chain import GameParams, transitions_at
from .conf import get_setting
from .exceptions import ConfigInvalid
from .rates import LearningRate, RationalCaseStudy

logger = logging.getLogger(__name__)

ATTACKER, DEFENDER, TIMEOUT = 'attacker', 'defender', 'timeout'
STRATEGIES = ('uniform-random', 'hitlist')
MAX_BLOCK = 4096


def make_generator(seed):
    """Independent PCG64 generator for one trial."""
    return np.random.Generator(np.random.PCG64(int(seed)))


# ---------------------------------------------------------------------------
# Configs and outcomes
# ---------------------------------------------------------------------------

def _check_population(n, k_vuln, h_count, k_target, strategy):
    if n < 1 or k_vuln < 0 or h_count < 0:
        raise ConfigInvalid("n must be positive, k_vuln and h_count nonnegative")
    if k_vuln + h_count > n:
        raise ConfigInvalid(f"K + H = {k_vuln + h_count} exceeds N = {n}")
    if not 1 <= k_target <= k_vuln:
        raise ConfigInvalid(f"k_target must lie in [1, K], got {k_target}")
    if strategy not in STRATEGIES:
        raise ConfigInvalid(f"strategy must be one of {STRATEGIES}, got '{strategy}'")


@dataclass(frozen=True)
class MalwareConfig:
    """
    Malware propagation game: N hosts, K vulnerable, H honeypots, attack
    objective k_target infected hosts, defender drop-out threshold 1 - theta.
    """

    n: int
    k_vuln: int
    h_count: int = 0
    k_target: int = 1
    strategy: str = 'uniform-random'
    gamma: float = 0.0
    rate: LearningRate = field(default_factory=lambda: RationalCaseStudy(scale=10000.0))
    dropout_theta: float = 0.01
    max_steps: Optional[int] = None
    initial_infected: int = 1
    scan_rate_per_hour: Optional[float] = None
    max_hours: Optional[float] = None
    level_trace_stride: int = 1

    def __post_init__(self):
        _check_population(self.n, self.k_vuln, self.h_count, self.k_target, self.strategy)
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigInvalid(f"gamma must be a probability, got {self.gamma}")
        if not 0.0 < self.dropout_theta <= 1.0:
            raise ConfigInvalid(f"dropout_theta must lie in (0, 1], got {self.dropout_theta}")
        if self.rate.is_direct:
            raise ConfigInvalid("the malware game needs an f-based learning rate")
        if self.max_steps is None:
            object.__setattr__(self, 'max_steps', int(get_setting('SIM_MAX_STEPS')))
        if self.max_steps < 1:
            raise ConfigInvalid("max_steps must be positive")
        if not 1 <= self.initial_infected <= self.k_vuln:
            raise ConfigInvalid("initial_infected must lie in [1, K]")
        if self.max_hours is not None and not self.scan_rate_per_hour:
            raise ConfigInvalid("max_hours needs scan_rate_per_hour")
        if self.scan_rate_per_hour is not None and self.scan_rate_per_hour <= 0:
            raise ConfigInvalid("scan_rate_per_hour must be positive")
        if self.level_trace_stride < 1:
            raise ConfigInvalid("level_trace_stride must be at least 1")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class MTDConfig:
    """
    Moving-target-defense game: the defender reallocates once it has
    observed L* adversarial moves. h defaults to H/N.
    """

    n: int
    k_vuln: int
    h_count: int = 0
    k_target: int = 1
    strategy: str = 'uniform-random'
    gamma: float = 0.0
    h: Optional[float] = None
    lstar: int = 1
    max_steps: Optional[int] = None

    def __post_init__(self):
        _check_population(self.n, self.k_vuln, self.h_count, self.k_target, self.strategy)
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigInvalid(f"gamma must be a probability, got {self.gamma}")
        if self.h is None:
            object.__setattr__(self, 'h', self.h_count / self.n)
        if not 0.0 <= self.h <= 1.0:
            raise ConfigInvalid(f"h must be a probability, got {self.h}")
        if self.lstar < 1:
            raise ConfigInvalid(f"lstar must be at least 1, got {self.lstar}")
        if self.max_steps is None:
            object.__setattr__(self, 'max_steps', int(get_setting('SIM_MAX_STEPS')))
        if self.max_steps < 1:
            raise ConfigInvalid("max_steps must be positive")

    @property
    def observe_probability(self):
        """Network sampling or host agent, independently: gamma + (1-gamma)h."""
        return self.gamma + (1.0 - self.gamma) * self.h

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ChainConfig:
    k: int
    tbud: int
    params: GameParams
    rate: LearningRate

    def __post_init__(self):
        if self.k < 1 or self.tbud < 0:
            raise ConfigInvalid("chain simulation needs k >= 1 and tbud >= 0")
        if self.rate.is_direct:
            raise ConfigInvalid("chain simulation needs an f-based learning rate")


@dataclass(frozen=True)
class GameOutcome:
    """
    Single-run result. Traces list (step, value) at every change, starting
    at step 0; progress_hours, when present, is the wall-clock hour of each
    progress_trace entry.
    """

    winner: str
    steps: int
    progress_trace: Tuple[Tuple[int, int], ...]
    level_trace: Tuple[Tuple[int, int], ...]
    final_i: int
    final_l: int
    seed: int = 0
    hours: Optional[float] = None
    progress_hours: Optional[Tuple[float, ...]] = None
    passage_progress: Optional[int] = None

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        """Rebuild from to_dict output after a JSON round trip."""
        values = dict(data)
        for name in ('progress_trace', 'level_trace'):
            values[name] = tuple(tuple(pair) for pair in values[name])
        if values.get('progress_hours') is not None:
            values['progress_hours'] = tuple(values['progress_hours'])
        return cls(**values)

    def to_row(self, trial):
        return {
            'trial': trial,
            'winner': self.winner,
            'steps': self.steps,
            'final_i': self.final_i,
            'final_l': self.final_l,
        }


# ---------------------------------------------------------------------------
# Malware propagation game
# ---------------------------------------------------------------------------

def _probe_odds(config, infected):
    """(p_i, h_i): chance a probe hits a fresh vulnerable host or a honeypot."""
    remaining = config.k_vuln - infected
    if config.strategy == 'hitlist':
        return (1.0 if remaining > 0 else 0.0), 0.0
    space = config.n - infected
    if space <= 0:
        return 0.0, 0.0
    return remaining / space, config.h_count / space


def simulate_malware(config, seed):
    """
    Play the malware propagation game until the attacker infects k_target
    hosts, drops out (f(l) >= 1 - theta after a learning event) or the
    probe/hour limit is reached.

    Per probe: the transmission is filtered with probability f(l) and sampled
    with probability gamma, independently. The defender learns when the probe
    is sampled or lands unfiltered on a honeypot; the attacker infects when it
    lands unfiltered on a vulnerable host.
    """
    rng = make_generator(seed)
    gamma = config.gamma
    threshold = 1.0 - config.dropout_theta
    clock = config.scan_rate_per_hour is not None
    stride = config.level_trace_stride

    i, l, steps, hours = config.initial_infected, 0, 0, 0.0
    progress, levels = [(0, i)], [(0, 0)]
    progress_hours = [0.0]
    winner = None
    block = 1

    while winner is None:
        if i >= config.k_target:
            winner = ATTACKER
            break
        p_i, h_i = _probe_odds(config, i)
        lv = np.arange(l, l + block, dtype=float)
        miss = np.clip(1.0 - np.asarray(config.rate.f(lv), dtype=float), 0.0, 1.0)
        p_inf = miss * p_i
        p11 = p_inf * gamma
        p10 = p_inf * (1.0 - gamma)
        p01 = gamma * (1.0 - p_inf) + (1.0 - gamma) * miss * h_i
        q = p11 + p10 + p01

        live = q > 0
        gaps = np.full(block, config.max_steps + 1, dtype=np.int64)
        if live.any():
            gaps[live] = rng.geometric(q[live])
        u = rng.random(block) * q
        infect = live & (u < p11 + p10)
        learn = live & ((u < p11) | (u >= p11 + p10))
        drop = learn & (np.asarray(config.rate.f(lv + 1.0), dtype=float) >= threshold)

        at = steps + np.cumsum(gaps)
        stop = infect | drop | ~live | (at > config.max_steps)
        if clock:
            at_hours = hours + np.cumsum(gaps / (config.scan_rate_per_hour * i))
            if config.max_hours is not None:
                stop |= at_hours > config.max_hours
        hits = np.flatnonzero(stop)
        j = int(hits[0]) if hits.size else block

        # events before j are pure learning events
        marks = np.arange(l + 1, l + j + 1)
        keep = marks % stride == 0
        levels.extend(zip(at[:j][keep].tolist(), marks[keep].tolist()))
        if j > 0:
            l += j
            steps = int(at[j - 1])
            if clock:
                hours = float(at_hours[j - 1])
        if j == block:
            block = min(2 * block, MAX_BLOCK)
            continue
        block = 1

        out_of_steps = not live[j] or at[j] > config.max_steps
        out_of_time = clock and config.max_hours is not None and at_hours[j] > config.max_hours
        if out_of_steps or out_of_time:
            if clock:
                per_hour = config.scan_rate_per_hour * i
                hours_at_cap = hours + (config.max_steps - steps) / per_hour
                if config.max_hours is not None and config.max_hours < hours_at_cap:
                    steps += int((config.max_hours - hours) * per_hour)
                    hours = config.max_hours
                else:
                    steps, hours = config.max_steps, hours_at_cap
            else:
                steps = config.max_steps
            winner = TIMEOUT
            break

        steps = int(at[j])
        if clock:
            hours = float(at_hours[j])
        if learn[j]:
            l += 1
            if l % stride == 0 or drop[j]:
                levels.append((steps, l))
        if infect[j]:
            i += 1
            progress.append((steps, i))
            progress_hours.append(hours)
        if i >= config.k_target:
            winner = ATTACKER
        elif drop[j]:
            winner = DEFENDER

    if levels[-1][1] != l:
        levels.append((steps, l))
    return GameOutcome(
        winner=winner,
        steps=steps,
        progress_trace=tuple(progress),
        level_trace=tuple(levels),
        final_i=i,
        final_l=l,
        seed=int(seed),
        hours=hours if clock else None,
        progress_hours=tuple(progress_hours) if clock else None,
    )


# ---------------------------------------------------------------------------
# Moving-target-defense game
# ---------------------------------------------------------------------------

def simulate_mtd(config, seed):
    """
    Play the MTD game: each step locates a target with probability p_i and is
    observed with probability gamma + (1-gamma)h. Reaching L* observations
    makes the defender reallocate (defender wins, progress cleared); reaching
    k_target located targets is an attacker win, also on the step that brings
    the L*-th observation.

    passage_progress records the progress at the step the L*-th observation
    happened, counting that step's own hit.
    """
    rng = make_generator(seed)
    observe = config.observe_probability
    i, l, steps = 0, 0, 0
    progress, levels = [(0, 0)], [(0, 0)]
    winner, passage = None, None

    while winner is None:
        p_i, _ = _probe_odds(config, i)
        q = 1.0 - (1.0 - p_i) * (1.0 - observe)
        if q <= 0.0:
            steps = config.max_steps
            winner = TIMEOUT
            break
        gap = int(rng.geometric(q))
        if steps + gap > config.max_steps:
            steps = config.max_steps
            winner = TIMEOUT
            break
        steps += gap
        u = rng.random() * q
        hit = u < p_i
        observed = (u < p_i * observe) or (u >= p_i)

        if observed:
            l += 1
            levels.append((steps, l))
        if hit:
            i += 1
            progress.append((steps, i))
        if i >= config.k_target:
            # a hit that completes the objective wins even if observed
            winner = ATTACKER
        elif observed and l >= config.lstar:
            passage = i
            i = 0
            progress.append((steps, 0))
            winner = DEFENDER

    return GameOutcome(
        winner=winner,
        steps=steps,
        progress_trace=tuple(progress),
        level_trace=tuple(levels),
        final_i=i,
        final_l=l,
        seed=int(seed),
        passage_progress=passage,
    )


# ---------------------------------------------------------------------------
# Direct chain sampling
# ---------------------------------------------------------------------------

def simulate_chain(config, seed):
    """
    Sample the (i, l) chain with m1..m4 for tbud moves; the attacker wins
    iff progress reaches k. Self-loops are skipped with a geometric draw.
    """
    rng = make_generator(seed)
    k, tbud = config.k, config.tbud
    m1, m2, m3, m4 = transitions_at(config.params, config.rate, np.arange(tbud + 1))
    i, l, steps = 0, 0, 0
    progress, levels = [(0, 0)], [(0, 0)]
    winner = None

    while winner is None:
        leave = 1.0 - m1[l]
        if leave <= 0.0:
            steps = tbud
            winner = TIMEOUT
            break
        steps += int(rng.geometric(leave))
        if steps > tbud:
            steps = tbud
            winner = TIMEOUT
            break
        u = rng.random() * leave
        if u < m2[l]:
            i += 1
        elif u < m2[l] + m3[l]:
            i += 1
            l += 1
        else:
            l += 1
        if progress[-1][1] != i:
            progress.append((steps, i))
        if levels[-1][1] != l:
            levels.append((steps, l))
        if i >= k:
            winner = ATTACKER

    # a chain run that exhausts its budget is a defender win
    if winner == TIMEOUT:
        winner = DEFENDER
    return GameOutcome(
        winner=winner,
        steps=steps,
        progress_trace=tuple(progress),
        level_trace=tuple(levels),
        final_i=i,
        final_l=l,
        seed=int(seed),
    )


def simulate_chain_batch(k, tbud, params, rate, trials, seed):
    """
    Vectorized chain sampler for large trial counts.

    All trials share one generator seeded with `seed`, so the result is
    reproducible but does not match per-trial seeding of simulate_chain.

    Returns:
        int: number of attacker wins
    """
    rng = make_generator(seed)
    m1, m2, m3, m4 = transitions_at(params, rate, np.arange(tbud + 1))
    progress = np.zeros(trials, dtype=np.int64)
    level = np.zeros(trials, dtype=np.int64)
    won = np.zeros(trials, dtype=bool)
    for _ in range(tbud):
        active = ~won
        u = rng.random(trials)
        lv = level
        c1 = m1[lv]
        c2 = c1 + m2[lv]
        c3 = c2 + m3[lv]
        horizontal = active & (u >= c1) & (u < c2)
        diagonal = active & (u >= c2) & (u < c3)
        vertical = active & (u >= c3)
        progress += horizontal | diagonal
        level += diagonal | vertical
        won |= progress >= k
    return int(won.sum())


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

@dataclass
class TrialStats:
    """Monte Carlo aggregate over independent seeded trials."""

    trials: int
    attacker_wins: int
    defender_wins: int
    timeouts: int
    attacker_win_rate: float
    standard_error: float
    mean_final_progress: float
    mean_final_level: float
    mean_progress_by_time: pd.DataFrame
    mean_level_by_time: pd.DataFrame
    time_axis: str
    base_seed: int
    rng_algorithm: str = 'PCG64'
    outcomes: list = field(default_factory=list, repr=False)

    @property
    def defender_win_rate(self):
        return self.defender_wins / self.trials

    @property
    def timeout_rate(self):
        return self.timeouts / self.trials

    def per_trial_frame(self):
        """Rows trial, winner, steps, final_i, final_l."""
        return pd.DataFrame(
            [outcome.to_row(n) for n, outcome in enumerate(self.outcomes)],
            columns=['trial', 'winner', 'steps', 'final_i', 'final_l'],
        )

    def to_dict(self):
        return {
            'trials': self.trials,
            'attacker_wins': self.attacker_wins,
            'defender_wins': self.defender_wins,
            'timeouts': self.timeouts,
            'attacker_win_rate': self.attacker_win_rate,
            'standard_error': self.standard_error,
            'defender_win_rate': self.defender_win_rate,
            'timeout_rate': self.timeout_rate,
            'mean_final_progress': self.mean_final_progress,
            'mean_final_level': self.mean_final_level,
            'time_axis': self.time_axis,
            'base_seed': self.base_seed,
            'rng_algorithm': self.rng_algorithm,
            'mean_progress_by_time': self.mean_progress_by_time.to_dict(orient='list'),
            'mean_level_by_time': self.mean_level_by_time.to_dict(orient='list'),
        }


def _step_values(times, values, grid):
    """Evaluate a right-continuous step trace on a grid."""
    idx = np.searchsorted(np.asarray(times, dtype=float), grid, side='right') - 1
    return np.asarray(values, dtype=float)[np.clip(idx, 0, None)]


def _mean_trace(outcomes, grid, attr, use_hours):
    total = np.zeros(len(grid))
    for outcome in outcomes:
        trace = getattr(outcome, attr)
        values = [v for _, v in trace]
        if use_hours and attr == 'progress_trace':
            times = outcome.progress_hours
        else:
            times = [s for s, _ in trace]
        total += _step_values(times, values, grid)
    return total / len(outcomes)


def aggregate(outcomes, base_seed=0, grid=None, rng_algorithm=None):
    """
    Combine outcomes (ordered by seed) into TrialStats.

    The mean-by-time series are evaluated on `grid` (hours when every outcome
    carries a clock, steps otherwise); the default grid has 51 points up to
    the longest run. Level traces are always indexed by step.
    """
    if not outcomes:
        raise ConfigInvalid("aggregate needs at least one outcome")
    n = len(outcomes)
    wins = sum(1 for o in outcomes if o.winner == ATTACKER)
    defender = sum(1 for o in outcomes if o.winner == DEFENDER)
    timeouts = n - wins - defender
    rate = wins / n
    use_hours = all(o.progress_hours is not None for o in outcomes)
    axis = 'hours' if use_hours else 'steps'
    if grid is None:
        end = max((o.hours if use_hours else o.steps) or 0 for o in outcomes)
        grid = np.linspace(0.0, float(end), 51)
    grid = np.asarray(grid, dtype=float)
    step_grid = np.linspace(0.0, float(max(o.steps for o in outcomes)), len(grid))

    return TrialStats(
        trials=n,
        attacker_wins=wins,
        defender_wins=defender,
        timeouts=timeouts,
        attacker_win_rate=rate,
        standard_error=math.sqrt(rate * (1.0 - rate) / n),
        mean_final_progress=float(np.mean([o.final_i for o in outcomes])),
        mean_final_level=float(np.mean([o.final_l for o in outcomes])),
        mean_progress_by_time=pd.DataFrame({
            axis: grid,
            'progress': _mean_trace(outcomes, grid, 'progress_trace', use_hours),
        }),
        mean_level_by_time=pd.DataFrame({
            'steps': step_grid,
            'level': _mean_trace(outcomes, step_grid, 'level_trace', False),
        }),
        time_axis=axis,
        base_seed=int(base_seed),
        rng_algorithm=rng_algorithm or get_setting('RNG_ALGORITHM'),
        outcomes=list(outcomes),
    )


def run_seeds(sim, config, seeds):
    """Run one trial per seed in order; module-level so worker processes can pickle it."""
    return [sim(config, seed) for seed in seeds]


def _chunks(seeds, size):
    return [seeds[n:n + size] for n in range(0, len(seeds), size)]


def monte_carlo(sim, config, trials, base_seed=0, workers=None, grid=None, chunk_size=None):
    """
    Run `trials` independent games with seeds base_seed + 0 .. trials - 1.

    Chunks of seeds fan out over a process pool of `workers` (MC_THREADS by
    default); chunk boundaries do not depend on the worker count and
    outcomes are reassembled in seed order, so the result is identical for
    any number of workers.

    Args:
        sim: simulate_malware, simulate_mtd or simulate_chain
        config: The matching config dataclass
        trials: Number of trials (>= 1)
        base_seed: First seed
        workers: Process count; 1 runs inline
        grid: Optional time grid for the mean traces

    Returns:
        TrialStats
    """
    if trials < 1:
        raise ConfigInvalid(f"trials must be at least 1, got {trials}")
    workers = get_setting('MC_THREADS') if workers is None else workers
    chunk_size = chunk_size or get_setting('MC_CHUNK_SIZE')
    seeds = list(range(int(base_seed), int(base_seed) + int(trials)))
    chunks = _chunks(seeds, chunk_size)

    if workers <= 1 or len(chunks) == 1:
        outcomes = run_seeds(sim, config, seeds)
    else:
        logger.info(f"Running {trials} trials in {len(chunks)} chunks on {workers} workers")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(run_seeds, [sim] * len(chunks), [config] * len(chunks), chunks)
            outcomes = [outcome for chunk in results for outcome in chunk]
    outcomes.sort(key=lambda o: o.seed)
    return aggregate(outcomes, base_seed=base_seed, grid=grid)


def first_passage_u(config, trials, base_seed=0, workers=None):
    """
    Empirical u(k*, L*): share of MTD games in which the defender collects
    L* observations before progress exceeds k* (run with k_target = k* + 1).

    Returns:
        tuple: (estimate, standard_error, stats)
    """
    stats = monte_carlo(simulate_mtd, config, trials, base_seed=base_seed, workers=workers)
    kstar = config.k_target - 1
    passed = sum(
        1 for outcome in stats.outcomes
        if outcome.passage_progress is not None and outcome.passage_progress <= kstar
    )
    u = passed / stats.trials
    return u, math.sqrt(u * (1.0 - u) / stats.trials), stats


SIMULATORS = {
    'malware': simulate_malware,
    'mtd': simulate_mtd,
    'chain': simulate_chain,
}
