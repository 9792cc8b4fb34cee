"""Agent-based engine for the repeated market entry game.

Rounds are two-phase: every entry decision in a round is drawn from the
pre-round propensities, then all updates are applied at once.  Recorded
observables are likewise computed from the pre-round state, so a record at
time t reflects the population that played the round at t.  This module
does no file I/O; series and density snapshots are handed to callers.
"""

from __future__ import annotations

import math
import os
import warnings
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import GameParams, LearningRule, ProbabilityModel
from .grid import DensityGrid, GridSpec
from .observables import ObservableSeries

__all__ = [
    "AllEqual",
    "Explicit",
    "Gaussian",
    "InitialCondition",
    "PopulationState",
    "RoundOutcome",
    "SimulationResult",
    "TwoSpike",
    "empirical_density",
    "empirical_moments",
    "ensemble_run",
    "init_population",
    "play_round",
    "simulate",
]


@dataclass
class PopulationState:
    """Propensities of all agents after round_index completed rounds."""

    propensities: np.ndarray
    round_index: int = 0

    def __post_init__(self) -> None:
        self.propensities = np.asarray(self.propensities, dtype=float)
        if self.propensities.ndim != 1 or self.propensities.size == 0:
            raise ValueError("propensities must be a nonempty 1-d array")

    def time(self, params: GameParams) -> float:
        return self.round_index * params.tau


@dataclass(frozen=True)
class RoundOutcome:
    """Realized decisions of one round, played at time t."""

    entered: np.ndarray
    m: int
    t: float


@dataclass(frozen=True)
class AllEqual:
    """Every agent starts at the same propensity."""

    value: float


@dataclass(frozen=True)
class Gaussian:
    """Independent normal draws; optionally snapped to the lattice {mean + k*h}.

    Snapping keeps the whole population on one step lattice, which both
    learning rules then preserve exactly.
    """

    mean: float
    sd: float
    snap_to_lattice: bool = False


@dataclass(frozen=True)
class Explicit:
    """Caller-provided propensities, one per agent."""

    values: tuple[float, ...]


@dataclass(frozen=True)
class TwoSpike:
    """A sorted start: round(mass_high*N) agents at q_high, the rest at q_low."""

    q_low: float
    q_high: float
    mass_high: float


InitialCondition = AllEqual | Gaussian | Explicit | TwoSpike


def init_population(
    params: GameParams,
    init: InitialCondition,
    seed: int | np.random.Generator,
) -> PopulationState:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = params.n_agents
    if isinstance(init, AllEqual):
        q = np.full(n, float(init.value))
    elif isinstance(init, Gaussian):
        if not init.sd >= 0:
            raise ValueError(f"sd must be nonnegative, got {init.sd}")
        q = init.mean + init.sd * rng.standard_normal(n)
        if init.snap_to_lattice:
            h = params.payoff_scale
            q = init.mean + np.round((q - init.mean) / h) * h
    elif isinstance(init, Explicit):
        q = np.asarray(init.values, dtype=float)
        if q.shape != (n,):
            raise ValueError(f"explicit init has {q.size} values for {n} agents")
        q = q.copy()
    elif isinstance(init, TwoSpike):
        if not 0.0 <= init.mass_high <= 1.0:
            raise ValueError(f"mass_high must lie in [0, 1], got {init.mass_high}")
        n_high = int(round(init.mass_high * n))
        q = np.concatenate(
            [np.full(n - n_high, float(init.q_low)), np.full(n_high, float(init.q_high))]
        )
    else:
        raise TypeError(f"unknown initial condition {init!r}")
    return PopulationState(q, 0)


def play_round(
    state: PopulationState,
    params: GameParams,
    model: ProbabilityModel,
    rng: np.random.Generator,
) -> tuple[PopulationState, RoundOutcome]:
    """One round: simultaneous entry draws, then simultaneous updates."""
    q = state.propensities
    p = np.atleast_1d(model.prob(q))
    entered = rng.random(q.shape[0]) < p
    m = int(np.count_nonzero(entered))
    gain = params.payoff_scale * (params.capacity - m)
    if params.rule is LearningRule.BASIC_REINFORCEMENT:
        q_next = q + gain * entered
    else:
        q_next = q + gain - params.payoff_scale * ~entered
    outcome = RoundOutcome(entered, m, state.time(params))
    return PopulationState(q_next, state.round_index + 1), outcome


def empirical_moments(
    state: PopulationState, model: ProbabilityModel
) -> tuple[float, float]:
    """Mean entry fraction a and sorting coefficient b of the population."""
    p = np.atleast_1d(model.prob(state.propensities))
    return float(p.mean()), float((p * (1.0 - p)).mean())


def empirical_density(state: PopulationState, spec: GridSpec) -> DensityGrid:
    """Histogram density of the propensities on a uniform grid, unit mass.

    Propensities outside the grid are counted in the end cells; a warning
    reports how many were moved.
    """
    q = state.propensities
    outside = int(np.count_nonzero((q < spec.q_min) | (q > spec.q_max)))
    if outside:
        warnings.warn(
            f"{outside} propensities outside [{spec.q_min:g}, {spec.q_max:g}] "
            "accumulated in the end cells",
            stacklevel=2,
        )
        q = np.clip(q, spec.q_min, spec.q_max)
    edges = spec.q_min + np.arange(spec.n_cells + 1) * spec.dq
    counts, _ = np.histogram(q, bins=edges)
    return DensityGrid(spec, counts / (q.size * spec.dq))


@dataclass
class SimulationResult:
    series: ObservableSeries
    snapshots: list[tuple[float, DensityGrid]] = field(default_factory=list)
    final: PopulationState | None = None


def simulate(
    params: GameParams,
    model: ProbabilityModel,
    init: InitialCondition,
    t_end: float,
    seed: int | np.random.Generator,
    record_stride: int = 1,
    snapshot_times: tuple[float, ...] = (),
    snapshot_grid: GridSpec | None = None,
) -> SimulationResult:
    """Run ceil(t_end * M) rounds, recording every record_stride rounds.

    Records always include round 0 and the final round.  The m_frac column
    holds the realized entrant fraction of the round played at each record
    time; the final record has no following round and gets NaN.  Snapshot
    requests are realized at the first record time at or after the request
    (or at the final record for requests beyond t_end).
    """
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if record_stride < 1:
        raise ValueError(f"record_stride must be >= 1, got {record_stride}")
    if snapshot_times and snapshot_grid is None:
        raise ValueError("snapshot_times given without a snapshot_grid")

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    state = init_population(params, init, rng)
    n_rounds = max(1, math.ceil(t_end * params.rounds_per_unit - 1e-9))
    pending = sorted(snapshot_times)

    rec_t: list[float] = []
    rec_a: list[float] = []
    rec_b: list[float] = []
    rec_m: list[float] = []
    snapshots: list[tuple[float, DensityGrid]] = []

    for n in range(n_rounds + 1):
        t = n * params.tau
        is_record = (n % record_stride == 0) or (n == n_rounds)
        if is_record:
            a, b = empirical_moments(state, model)
            rec_t.append(t)
            rec_a.append(a)
            rec_b.append(b)
            while pending and (pending[0] <= t + 1e-12 or n == n_rounds):
                pending.pop(0)
                snapshots.append((t, empirical_density(state, snapshot_grid)))
        if n < n_rounds:
            state, outcome = play_round(state, params, model, rng)
            if is_record:
                rec_m.append(outcome.m / params.n_agents)
        elif is_record:
            rec_m.append(math.nan)

    series = ObservableSeries(
        t=np.array(rec_t), a=np.array(rec_a), b=np.array(rec_b), m_frac=np.array(rec_m)
    )
    return SimulationResult(series=series, snapshots=snapshots, final=state)


def _replica_series(args) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    params, model, init, t_end, seed, record_stride = args
    series = simulate(params, model, init, t_end, seed, record_stride).series
    return series.t, series.a, series.b, series.m_frac


def max_workers_from_env(default: int = 1) -> int:
    """Worker cap from ENTRYDYN_THREADS; invalid or unset values give default."""
    raw = os.environ.get("ENTRYDYN_THREADS", "")
    try:
        value = int(raw)
    except ValueError:
        return default
    return max(1, value)


def ensemble_run(
    params: GameParams,
    model: ProbabilityModel,
    init: InitialCondition,
    t_end: float,
    n_replicas: int,
    base_seed: int,
    record_stride: int = 1,
    n_workers: int = 1,
    seeds: Sequence[int] | None = None,
) -> ObservableSeries:
    """Pointwise mean of n_replicas independent runs, replica i seeded base_seed + i.

    With two or more replicas the series carries the per-time standard
    errors of a and b (sample sd / sqrt(R)).  Results are identical for any
    worker count because replicas are keyed by seed, not by schedule.
    An explicit seeds list (length n_replicas) overrides the base_seed
    derivation; duplicate seeds are allowed and give duplicate replicas.
    """
    if n_replicas < 1:
        raise ValueError(f"n_replicas must be >= 1, got {n_replicas}")
    if seeds is None:
        seeds = [base_seed + i for i in range(n_replicas)]
    elif len(seeds) != n_replicas:
        raise ValueError(f"seeds has {len(seeds)} entries for {n_replicas} replicas")
    jobs = [
        (params, model, init, t_end, seed, record_stride) for seed in seeds
    ]
    if n_workers > 1 and n_replicas > 1:
        with ProcessPoolExecutor(max_workers=min(n_workers, n_replicas)) as pool:
            results = list(pool.map(_replica_series, jobs))
    else:
        results = [_replica_series(job) for job in jobs]

    t = results[0][0]
    a_all = np.stack([res[1] for res in results])
    b_all = np.stack([res[2] for res in results])
    m_all = np.stack([res[3] for res in results])
    if n_replicas == 1:
        return ObservableSeries(t=t, a=a_all[0], b=b_all[0], m_frac=m_all[0])
    scale = 1.0 / math.sqrt(n_replicas)
    return ObservableSeries(
        t=t,
        a=a_all.mean(axis=0),
        b=b_all.mean(axis=0),
        m_frac=m_all.mean(axis=0),
        stderr_a=a_all.std(axis=0, ddof=1) * scale,
        stderr_b=b_all.std(axis=0, ddof=1) * scale,
    )
