"""The proximal iteration x^k = J_{lam_k F}(x^{k-1}) with run diagnostics.

A run produces a ``Trace`` recording iterates, step sizes, successive
distances, grid-certified equilibrium residuals, the two per-step residual
lower bounds

    (successive form)  -(1/lam_k) d(x^{k+1}, x^k) * sup_y d(x^{k+1}, y)
    (diameter form)    -diam(K)^2 / lam_k        (bounded K only)

and, when a reference solution is supplied, the distances d(x^k, x*) whose
monotone decay is the Fejer property.  Traces serialize to a fixed-column
CSV and a full-fidelity JSON document.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .bifunctions import residual_grid
from .errors import InvalidInputError, ResolventFailureError
from .resolvents import ResolventQuery, resolve
from .sampling import rng_from
from .spaces import Point, dist_arr, dist_one_many_arr, quasilin_arr

__all__ = [
    "Constant", "StepSequence", "Geometric", "StepSchedule",
    "SuccessiveDist", "ResidualBound", "MaxIters", "StopRule",
    "RunConfig", "Trace", "run_prox",
    "residual_lower_bound", "diameter_lower_bound",
    "fejer_check", "obtuse_angle_check", "asymptotic_regularity",
    "RegularityReport", "trace_to_csv", "trace_to_json_dict",
]


# -- step schedules -------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    lam: float

    def __post_init__(self):
        if self.lam <= 0.0:
            raise InvalidInputError("step size must be > 0")

    def step(self, k: int) -> float:
        return self.lam

    def lambda_min(self, n: int) -> float:
        return self.lam


@dataclass(frozen=True)
class StepSequence:
    values: tuple

    def __post_init__(self):
        if not self.values or any(v <= 0.0 for v in self.values):
            raise InvalidInputError("step sequence must be nonempty and positive")

    def step(self, k: int) -> float:
        if k > len(self.values):
            raise InvalidInputError(f"step sequence exhausted at iteration {k}")
        return self.values[k - 1]

    def lambda_min(self, n: int) -> float:
        return min(self.values[:n])


@dataclass(frozen=True)
class Geometric:
    lam0: float
    ratio: float

    def __post_init__(self):
        if self.lam0 <= 0.0:
            raise InvalidInputError("initial step must be > 0")
        if self.ratio < 1.0:
            raise InvalidInputError("geometric step ratio must be >= 1")

    def step(self, k: int) -> float:
        return self.lam0 * self.ratio ** (k - 1)

    def lambda_min(self, n: int) -> float:
        return self.lam0


StepSchedule = Union[Constant, StepSequence, Geometric]


# -- stop rules -------------------------------------------------------------------

@dataclass(frozen=True)
class SuccessiveDist:
    eps: float

    def __post_init__(self):
        if self.eps <= 0.0:
            raise InvalidInputError("stop threshold must be > 0")


@dataclass(frozen=True)
class ResidualBound:
    """Stop once the successive-form lower bound certifies inf F >= -eps."""
    eps: float

    def __post_init__(self):
        if self.eps <= 0.0:
            raise InvalidInputError("stop threshold must be > 0")


@dataclass(frozen=True)
class MaxIters:
    pass


StopRule = Union[SuccessiveDist, ResidualBound, MaxIters]


# -- run configuration and trace ---------------------------------------------------

@dataclass
class RunConfig:
    F: object
    K: object
    x0: Point
    schedule: StepSchedule
    max_iters: int
    stop: StopRule = MaxIters()
    reference_solution: Optional[Point] = None
    residual_grid_size: int = 64
    inner_tol: float = 1e-6
    inner_max_iters: int = 80000
    seed: int = 0
    bounding_radius: float = 8.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if not self.K.contains(self.x0.as_array()):
            raise InvalidInputError("x0 must lie in the feasible domain K")


@dataclass
class Trace:
    iterates: list              # x^0 .. x^n
    steps: list                 # lam_1 .. lam_n
    successive: list            # d(x^{k-1}, x^k)
    fejer: Optional[list]       # d(x^k, x*) for k = 0..n, if a reference is known
    residual_lower_bounds: list  # successive-form bound per step
    residual_bounds_diam: list   # diameter-form bound per step (None if K unbounded)
    equilibrium_residuals: list  # grid-certified min_y F(x^k, y) per step
    resolvent_gaps: list         # certified gap of each inner resolvent solve
    status: str                  # converged | max_iters | resolvent_failure
    lambda_min: float
    seed: int

    def n_steps(self) -> int:
        return len(self.steps)


def run_prox(cfg: RunConfig) -> Trace:
    """Run the proximal iteration until the stop rule fires or the budget ends."""
    space = cfg.F.space
    grid = residual_grid(cfg.K, cfg.F, cfg.residual_grid_size,
                         rng_from(cfg.seed, "residual-grid"),
                         focus=cfg.x0.as_array(), focus_radius=cfg.bounding_radius)
    diam = cfg.K.diameter()

    iterates = [cfg.x0]
    steps, successive, bounds71, bounds72 = [], [], [], []
    eq_residuals, gaps = [], []
    fejer = None
    if cfg.reference_solution is not None:
        fejer = [dist_arr(space, cfg.x0.as_array(),
                          cfg.reference_solution.as_array())]

    status = "max_iters"
    x = cfg.x0
    for k in range(1, cfg.max_iters + 1):
        lam = cfg.schedule.step(k)
        try:
            res = resolve(ResolventQuery(cfg.F, lam, x, cfg.K,
                                         inner_tol=cfg.inner_tol,
                                         inner_max_iters=cfg.inner_max_iters,
                                         seed=(cfg.seed * 1000003 + k) % (2 ** 63)))
        except ResolventFailureError:
            status = "resolvent_failure"
            break
        x_new = res.z
        xa, xna = x.as_array(), x_new.as_array()
        step_dist = dist_arr(space, xa, xna)

        iterates.append(x_new)
        steps.append(lam)
        successive.append(step_dist)
        gaps.append(res.certified_gap)

        sup = cfg.K.sup_dist(xna)
        if sup is None:
            sup = float(np.max(dist_one_many_arr(space, xna, grid)))
        bounds71.append(-(step_dist * sup) / lam)
        bounds72.append(None if diam is None else -(diam * diam) / lam)
        eq_residuals.append(float(np.min(cfg.F.value_one_many(xna, grid))))
        if fejer is not None:
            fejer.append(dist_arr(space, xna, cfg.reference_solution.as_array()))

        x = x_new
        if isinstance(cfg.stop, SuccessiveDist) and step_dist < cfg.stop.eps:
            status = "converged"
            break
        if isinstance(cfg.stop, ResidualBound) and bounds71[-1] >= -cfg.stop.eps:
            status = "converged"
            break

    return Trace(iterates=iterates, steps=steps, successive=successive,
                 fejer=fejer, residual_lower_bounds=bounds71,
                 residual_bounds_diam=bounds72,
                 equilibrium_residuals=eq_residuals, resolvent_gaps=gaps,
                 status=status,
                 lambda_min=cfg.schedule.lambda_min(max(1, len(steps))),
                 seed=cfg.seed)


# -- per-step bounds and diagnostics -------------------------------------------------

def residual_lower_bound(trace: Trace, k: int, K, grid=None) -> float:
    """Successive-form lower bound on inf_y F(x^{k+1}, y), for step index k.

    Uses the exact farthest-point distance for Ball/Box domains and the grid
    sup otherwise (the grid must then be the one residuals are certified on).
    """
    if not 0 <= k < trace.n_steps():
        raise InvalidInputError(f"step index {k} outside the trace")
    space = trace.iterates[0].space
    xna = trace.iterates[k + 1].as_array()
    sup = K.sup_dist(xna)
    if sup is None:
        if grid is None:
            raise InvalidInputError("unbounded K needs the residual grid for its sup")
        sup = float(np.max(dist_one_many_arr(space, xna, grid)))
    return -(trace.successive[k] * sup) / trace.steps[k]


def diameter_lower_bound(trace: Trace, k: int, K) -> float:
    """Diameter-form lower bound -diam(K)^2 / lam_k; requires bounded K."""
    if not 0 <= k < trace.n_steps():
        raise InvalidInputError(f"step index {k} outside the trace")
    diam = K.diameter()
    if diam is None:
        raise InvalidInputError("diameter bound needs a bounded domain")
    return -(diam * diam) / trace.steps[k]


def fejer_check(trace: Trace, xstar: Point) -> float:
    """max over k of d(x^{k+1}, x*) - d(x^k, x*); <= solver slack certifies
    the Fejer property of the run with respect to x*."""
    space = xstar.space
    xs = xstar.as_array()
    dists = [dist_arr(space, p.as_array(), xs) for p in trace.iterates]
    return max((dists[i + 1] - dists[i] for i in range(len(dists) - 1)),
               default=0.0)


def obtuse_angle_check(F, lam: float, xbar: Point, xstar: Point, K=None,
                       inner_tol=1e-6, seed=0) -> float:
    """Pairing <->(x~)(xbar), ->(x~)(x*)> at x~ = J_{lam F}(xbar); it is <= 0
    (up to solver slack) whenever F is monotone and x* is an equilibrium."""
    from .bifunctions import WholeSpace
    K = WholeSpace(F.space) if K is None else K
    res = resolve(ResolventQuery(F, lam, xbar, K, inner_tol=inner_tol, seed=seed))
    xt = res.z.as_array()
    return quasilin_arr(F.space, xt, xbar.as_array(), xt, xstar.as_array())


@dataclass(frozen=True)
class RegularityReport:
    ok: bool
    rate: float
    telescoping_violation: Optional[float]


def asymptotic_regularity(trace: Trace, eps: float = 1e-6) -> RegularityReport:
    """Diagnose d(x^{k+1}, x^k) -> 0: the last successive distance must fall
    below eps and a majority of steps must be non-increasing.  When Fejer
    data is present the squared telescoping inequality

        d(x^{k+1}, x^k)^2 <= d(x^k, x*)^2 - d(x^{k+1}, x*)^2 (+ slack)

    is evaluated per step and its worst violation reported."""
    s = trace.successive
    if len(s) < 10:
        raise InvalidInputError("regularity diagnosis needs at least 10 iterates")
    decreasing = sum(1 for i in range(len(s) - 1) if s[i + 1] <= s[i] + 1e-15)
    ok = s[-1] < eps and decreasing >= (len(s) - 1) / 2.0
    ratios = [s[i + 1] / s[i] for i in range(len(s) - 1) if s[i] > 1e-300]
    rate = float(np.median(ratios)) if ratios else 0.0

    telescoping = None
    if trace.fejer is not None:
        telescoping = max(
            s[k] * s[k] - (trace.fejer[k] ** 2 - trace.fejer[k + 1] ** 2)
            for k in range(len(s)))
        ok = ok and telescoping <= 1e-6
    return RegularityReport(ok=ok, rate=rate, telescoping_violation=telescoping)


# -- serialization -----------------------------------------------------------------

CSV_HEADER = "k,lambda,successive_dist,fejer_dist,bound_71,bound_72,eq_residual"


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def trace_to_csv(trace: Trace, config_hash: str = "") -> str:
    lines = [f"# cat0prox trace schema=1 config_hash={config_hash}", CSV_HEADER]
    for k in range(trace.n_steps()):
        fej = trace.fejer[k + 1] if trace.fejer is not None else None
        lines.append(",".join([
            str(k + 1), _fmt(trace.steps[k]), _fmt(trace.successive[k]),
            _fmt(fej), _fmt(trace.residual_lower_bounds[k]),
            _fmt(trace.residual_bounds_diam[k]),
            _fmt(trace.equilibrium_residuals[k]),
        ]))
    return "\n".join(lines) + "\n"


def trace_to_json_dict(trace: Trace, config_hash: str = "") -> dict:
    return {
        "schema": 1,
        "config_hash": config_hash,
        "status": trace.status,
        "seed": trace.seed,
        "lambda_min": trace.lambda_min,
        "iterates": [list(p.data) for p in trace.iterates],
        "steps": list(trace.steps),
        "successive": list(trace.successive),
        "fejer": None if trace.fejer is None else list(trace.fejer),
        "residual_lower_bounds": list(trace.residual_lower_bounds),
        "residual_bounds_diam": list(trace.residual_bounds_diam),
        "equilibrium_residuals": list(trace.equilibrium_residuals),
        "resolvent_gaps": list(trace.resolvent_gaps),
    }
