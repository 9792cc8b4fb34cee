"""Mean-field drift-diffusion solver for the propensity density.

In the large-population limit the propensity density f(t, q) obeys a
conservation law whose drift and diffusion are set by the instantaneous
observables a = int p f dq and b = int p(1-p) f dq.  With the shared
diffusion scalar

    D(t) = (r N h (kappa - a)^2 + r h b) / 2

the two learning rules give different coefficient fields:

    basic reinforcement   flux velocity v(q) = r (kappa - a) p(q) - D p'(q),
                          diffusion mu(q) = D p(q)
    fictitious play       v and mu independent of q: v = r (kappa - a),
                          mu = D

Discretization: cell-centered finite volume, first-order upwind advection,
centered diffusion, explicit Euler with an adaptive step, and no-flux walls,
so mass is conserved to round-off and cell averages stay nonnegative for
cfl_safety <= 0.5.  Only the logistic probability model is accepted: the
grid spans the whole line and the coefficients need p'(q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import GameParams, LearningRule, Logistic, ProbabilityModel
from .grid import DensityGrid, GridSpec
from .observables import ObservableSeries

__all__ = [
    "PdeResult",
    "SolverOptions",
    "coefficients",
    "diffusion_coefficient",
    "moments",
    "solve",
    "stable_dt",
    "step",
]

MASS_TOLERANCE = 1e-8
NEGATIVITY_TOLERANCE = -1e-12


def _require_logistic(model: ProbabilityModel) -> Logistic:
    if not isinstance(model, Logistic):
        raise ValueError(
            "the mean-field solver requires the logistic probability model; "
            f"got {type(model).__name__} (its domain does not cover the grid)"
        )
    return model


@dataclass(frozen=True)
class SolverOptions:
    """Run controls for solve().

    output_interval  spacing of records in time units (defaults to tau)
    cfl_safety       fraction of the stability bound used per step; kept
                     at or below 0.5 so cell averages stay nonnegative
    """

    t_end: float
    output_interval: float | None = None
    cfl_safety: float = 0.4
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.output_interval is not None and not self.output_interval > 0:
            raise ValueError(
                f"output_interval must be positive, got {self.output_interval}"
            )
        if not 0 < self.cfl_safety <= 0.5:
            raise ValueError(
                f"cfl_safety must lie in (0, 0.5], got {self.cfl_safety}"
            )


def moments(density: DensityGrid, model: ProbabilityModel) -> tuple[float, float]:
    """Entry fraction a and sorting coefficient b of a grid density."""
    _require_logistic(model)
    p = model.prob(density.centers())
    fdq = density.values * density.dq
    a = float(p @ fdq)
    b = float((p * (1.0 - p)) @ fdq)
    return a, b


def diffusion_coefficient(a: float, b: float, params: GameParams) -> float:
    """Shared diffusion scalar D(t) from the current observables."""
    gap = params.kappa - a
    n_h = params.n_agents * params.payoff_scale
    return 0.5 * params.r * (n_h * gap * gap + params.payoff_scale * b)


def coefficients(
    a: float,
    b: float,
    params: GameParams,
    model: ProbabilityModel,
    q: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Flux velocity v(q) and diffusion mu(q) at the given points."""
    logistic = _require_logistic(model)
    q = np.asarray(q, dtype=float)
    drive = params.r * (params.kappa - a)
    d_coef = diffusion_coefficient(a, b, params)
    if params.rule is LearningRule.BASIC_REINFORCEMENT:
        p = logistic.prob(q)
        dp = logistic.dprob(q)
        return drive * p - d_coef * dp, d_coef * p
    shape = q.shape
    return np.full(shape, drive), np.full(shape, d_coef)


def stable_dt(
    dq: float,
    v: np.ndarray,
    mu: np.ndarray,
    cfl_safety: float,
    cap: float,
) -> float:
    """Largest admissible explicit step, capped by the output interval."""
    bounds = [cap]
    v_max = float(np.max(np.abs(v))) if np.size(v) else 0.0
    mu_max = float(np.max(mu)) if np.size(mu) else 0.0
    if v_max > 0:
        bounds.append(cfl_safety * dq / v_max)
    if mu_max > 0:
        bounds.append(cfl_safety * dq * dq / (2.0 * mu_max))
    return min(bounds)


class _Stencil:
    """Quantities fixed by the grid and model, reused across steps."""

    def __init__(self, spec: GridSpec, params: GameParams, model: Logistic) -> None:
        self.spec = spec
        self.params = params
        centers = spec.centers()
        faces = spec.interior_faces()
        self.p_center = model.prob(centers)
        self.w_center = self.p_center * (1.0 - self.p_center)
        self.p_face = model.prob(faces)
        self.dp_face = model.dprob(faces)
        self.uniform = params.rule is LearningRule.FICTITIOUS_STOCHASTIC

    def moments(self, f: np.ndarray) -> tuple[float, float]:
        fdq = f * self.spec.dq
        return float(self.p_center @ fdq), float(self.w_center @ fdq)

    def face_coefficients(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        drive = self.params.r * (self.params.kappa - a)
        d_coef = diffusion_coefficient(a, b, self.params)
        if self.uniform:
            n_faces = self.p_face.shape[0]
            return np.full(n_faces, drive), np.full(n_faces, d_coef)
        return drive * self.p_face - d_coef * self.dp_face, d_coef * self.p_face

    def apply(self, f: np.ndarray, v: np.ndarray, mu: np.ndarray, dt: float) -> np.ndarray:
        dq = self.spec.dq
        upwind = np.where(v > 0, f[:-1], f[1:])
        flux = v * upwind - mu * np.diff(f) / dq
        out = f.copy()
        out[:-1] -= (dt / dq) * flux
        out[1:] += (dt / dq) * flux
        return out


def step(
    density: DensityGrid,
    params: GameParams,
    model: ProbabilityModel,
    dt: float,
) -> DensityGrid:
    """One explicit step from the density's own observables.

    Rejects steps beyond the stability bound instead of silently producing
    oscillations.
    """
    logistic = _require_logistic(model)
    stencil = _Stencil(density.spec, params, logistic)
    a, b = stencil.moments(density.values)
    v, mu = stencil.face_coefficients(a, b)
    limit = stable_dt(density.spec.dq, v, mu, 1.0, math.inf)
    if dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} exceeds the stability bound {limit:g}")
    return DensityGrid(density.spec, stencil.apply(density.values, v, mu, dt))


@dataclass
class PdeResult:
    series: ObservableSeries
    snapshots: list[tuple[float, DensityGrid]] = field(default_factory=list)
    final: DensityGrid | None = None
    max_mass_residual: float = 0.0


def _record_times(t_end: float, interval: float) -> list[float]:
    n_out = max(1, math.ceil(t_end / interval - 1e-9))
    times = [k * interval for k in range(1, n_out)]
    times.append(t_end)
    return times


def solve(
    f0: DensityGrid,
    params: GameParams,
    model: ProbabilityModel,
    options: SolverOptions,
) -> PdeResult:
    """Advance the density to t_end, recording observables on a uniform grid.

    Raises RuntimeError if mass conservation (1e-8) or positivity (-1e-12)
    is breached; both would mean the scheme itself is broken, not the input.
    """
    logistic = _require_logistic(model)
    mass0 = f0.mass()
    if abs(mass0 - 1.0) > MASS_TOLERANCE:
        raise ValueError(f"initial density has mass {mass0:.12g}, expected 1")

    interval = options.output_interval if options.output_interval is not None else params.tau
    stencil = _Stencil(f0.spec, params, logistic)
    f = f0.values.copy()
    t = 0.0
    max_residual = abs(mass0 - 1.0)
    dq = f0.spec.dq

    a, b = stencil.moments(f)
    rec_t, rec_a, rec_b = [0.0], [a], [b]
    pending = sorted(options.snapshot_times)
    snapshots: list[tuple[float, DensityGrid]] = []
    while pending and pending[0] <= 0.0:
        pending.pop(0)
        snapshots.append((0.0, DensityGrid(f0.spec, f.copy())))

    record_times = _record_times(options.t_end, interval)
    for t_next in record_times:
        while t < t_next - 1e-15:
            a, b = stencil.moments(f)
            v, mu = stencil.face_coefficients(a, b)
            dt = min(stable_dt(dq, v, mu, options.cfl_safety, interval), t_next - t)
            f = stencil.apply(f, v, mu, dt)
            t += dt
            low = float(f.min())
            if low < NEGATIVITY_TOLERANCE:
                raise RuntimeError(f"density went negative ({low:g}) at t={t:g}")
        t = t_next
        if not np.all(np.isfinite(f)):
            raise RuntimeError(f"density lost finiteness at t={t:g}")
        residual = abs(float(f.sum() * dq) - 1.0)
        max_residual = max(max_residual, residual)
        if residual > MASS_TOLERANCE:
            raise RuntimeError(f"mass residual {residual:g} at t={t:g}")
        a, b = stencil.moments(f)
        rec_t.append(t)
        rec_a.append(a)
        rec_b.append(b)
        while pending and (pending[0] <= t + 1e-12 or t_next == record_times[-1]):
            pending.pop(0)
            snapshots.append((t, DensityGrid(f0.spec, f.copy())))

    series = ObservableSeries(t=np.array(rec_t), a=np.array(rec_a), b=np.array(rec_b))
    return PdeResult(
        series=series,
        snapshots=snapshots,
        final=DensityGrid(f0.spec, f),
        max_mass_residual=max_residual,
    )
