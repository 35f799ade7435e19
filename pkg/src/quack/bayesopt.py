"""Gradient-free hyperparameter tuning by Bayesian optimization.

The tuner maximizes a black-box objective over a box: a Sobol batch of
``n0`` points seeds the search, then ``N`` query points are chosen one at
a time by maximizing log expected improvement under a Matern-5/2 GP
surrogate.  The objective itself is never differentiated; only the
acquisition is, by central finite differences inside a bound-constrained
quasi-Newton (L-BFGS-B) inner loop.

Surrogate inputs are normalized to the unit cube and values standardized
to zero mean / unit variance; its own lengthscale and noise are picked by
maximizing the surrogate marginal log likelihood over a fixed 128-point
Sobol grid, which keeps the whole pipeline deterministic for a given
seed.

The tune loop is inherently sequential; each proposal depends on all
prior results.  Sobol-phase evaluations and restarts are independent and
reduce by ordered argmax, so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import erfcx, ndtr
from scipy.stats import qmc

from . import gpr, kernels
from .errors import ConfigError, InputError

MAX_SOBOL_DIM = 16

# Finite stand-in for log(0) when expected improvement is exactly zero.
LOG_EI_FLOOR = -1.0e300

# Switch from the erfcx tail to the asymptotic Mills-ratio series here.
_DEEP_TAIL = -30.0

_SURROGATE_GRID_SIZE = 128
_SURROGATE_LENGTHSCALE_BOUNDS = (0.05, 4.0)
_SURROGATE_NOISE_BOUNDS = (1e-6, 1e-1)

_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_FD_STEP = 1e-6


@dataclass(frozen=True)
class SearchSpace:
    """Ordered box of named real intervals."""

    dims: tuple[tuple[str, float, float], ...]

    def __post_init__(self) -> None:
        for name, lo, hi in self.dims:
            if not lo < hi:
                raise ConfigError(f"dimension {name!r} has empty interval [{lo}, {hi}]")

    @property
    def dim(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _, _ in self.dims)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for _, lo, _ in self.dims])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, _, hi in self.dims])

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        return self.lower + np.asarray(u) * (self.upper - self.lower)

    def to_unit(self, theta: np.ndarray) -> np.ndarray:
        u = (np.asarray(theta) - self.lower) / (self.upper - self.lower)
        return np.clip(u, 0.0, 1.0)

    def contains(self, theta) -> bool:
        theta = np.asarray(theta)
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))


@dataclass
class Trial:
    theta: np.ndarray
    value: float
    phase: str  # "sobol" or "query"


@dataclass
class TuneTrace:
    """Ordered record of evaluated points and the running best."""

    trials: list[Trial] = field(default_factory=list)
    incumbent_theta: np.ndarray | None = None
    incumbent_value: float = -math.inf

    def record(self, theta: np.ndarray, value: float, phase: str) -> None:
        self.trials.append(Trial(theta=np.asarray(theta, dtype=float), value=float(value), phase=phase))
        if value > self.incumbent_value:
            self.incumbent_value = float(value)
            self.incumbent_theta = np.asarray(theta, dtype=float).copy()

    def thetas(self) -> np.ndarray:
        return np.array([t.theta for t in self.trials])

    def values(self) -> np.ndarray:
        return np.array([t.value for t in self.trials])


def _sobol_unit(d: int, count: int, seed: int, scramble: bool) -> np.ndarray:
    """First ``count`` Sobol points after skipping the index-0 point.

    Draws the next power of two >= count + 1 so the generator keeps its
    balance properties, then discards the head point (all zeros when
    unscrambled) and the unused tail.
    """
    engine = qmc.Sobol(d=d, scramble=scramble, seed=seed)
    total = 1 << max(1, math.ceil(math.log2(count + 1)))
    return engine.random(total)[1 : count + 1]


def sobol_init(space: SearchSpace, n0: int, seed: int) -> np.ndarray:
    """Space-filling batch of n0 points inside the box.

    Unscrambled when seed == 0 (the raw sequence, whose first post-skip
    point is the cube midpoint); otherwise the seed selects the scramble.
    Returns an (n0, d) array, rows in sequence order.
    """
    if n0 < 1:
        raise InputError(f"n0 must be >= 1, got {n0}")
    if space.dim > MAX_SOBOL_DIM:
        raise ConfigError(
            f"search space has {space.dim} dimensions; direction numbers are "
            f"configured up to {MAX_SOBOL_DIM}"
        )
    unit = _sobol_unit(space.dim, n0, seed=seed, scramble=seed != 0)
    return space.from_unit(unit)


def _npdf(z: np.ndarray) -> np.ndarray:
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def expected_improvement(mean: float, sd: float, incumbent: float) -> float:
    """E[max(0, g - incumbent)] for g ~ N(mean, sd^2); >= 0.

    At sd = 0 this degenerates to max(0, mean - incumbent).
    """
    if sd < 0:
        raise InputError(f"sd must be >= 0, got {sd}")
    if sd == 0.0:
        return max(0.0, mean - incumbent)
    delta = (mean - incumbent) / sd
    return sd * (delta * float(ndtr(delta)) + float(_npdf(delta)))


def _log_h_tail(delta: np.ndarray) -> np.ndarray:
    """log(delta*Phi(delta) + phi(delta)) for delta <= -1, underflow-safe.

    Factors out phi(delta) and evaluates g = 1 - |delta| * Mills(delta)
    through erfcx; below the deep-tail switch the Mills ratio asymptotic
    series takes over, where the erfcx subtraction would lose precision.
    """
    delta = np.asarray(delta, dtype=float)
    a = np.abs(delta)
    g = np.empty_like(a)
    shallow = delta >= _DEEP_TAIL
    if np.any(shallow):
        mills = _SQRT_HALF_PI * erfcx(a[shallow] / math.sqrt(2.0))
        g[shallow] = 1.0 - a[shallow] * mills
    if np.any(~shallow):
        t = 1.0 / (delta[~shallow] * delta[~shallow])
        g[~shallow] = t * (1.0 - t * (3.0 - t * (15.0 - t * (105.0 - 945.0 * t))))
    return -0.5 * delta * delta - 0.5 * math.log(2.0 * math.pi) + np.log(g)


def _log_ei_array(means: np.ndarray, sds: np.ndarray, incumbent: float) -> np.ndarray:
    means = np.asarray(means, dtype=float)
    sds = np.asarray(sds, dtype=float)
    out = np.full(means.shape, LOG_EI_FLOOR)
    zero_sd = sds == 0.0
    if np.any(zero_sd):
        improvement = means[zero_sd] - incumbent
        pos = improvement > 0.0
        vals = np.full(improvement.shape, LOG_EI_FLOOR)
        vals[pos] = np.log(improvement[pos])
        out[zero_sd] = vals
    if np.any(~zero_sd):
        m, s = means[~zero_sd], sds[~zero_sd]
        delta = (m - incumbent) / s
        vals = np.empty_like(delta)
        direct = delta > -1.0
        if np.any(direct):
            d = delta[direct]
            vals[direct] = np.log(d * ndtr(d) + _npdf(d))
        if np.any(~direct):
            vals[~direct] = _log_h_tail(delta[~direct])
        out[~zero_sd] = np.log(s) + vals
    return out


def log_ei(mean: float, sd: float, incumbent: float) -> float:
    """Numerically stable log of :func:`expected_improvement`.

    Monotone in EI (same argmax).  Uses the direct logarithm where the
    standardized improvement exceeds -1 and a tail formulation below,
    staying finite far into the tail instead of underflowing.  Returns a
    finite large-negative sentinel where EI is exactly zero.
    """
    if sd < 0:
        raise InputError(f"sd must be >= 0, got {sd}")
    return float(_log_ei_array(np.array([mean]), np.array([sd]), incumbent)[0])


@dataclass
class Surrogate:
    """GP over the unit cube on standardized objective values.

    ``model`` is None for the degenerate all-equal-values fallback, where
    the posterior is the prior: zero mean, unit sd (standardized units).
    """

    space: SearchSpace
    value_mean: float
    value_sd: float
    model: gpr.FittedGpr | None
    lengthscale: float
    noise_var: float

    def posterior_unit(self, unit_points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Mean and sd (standardized units) at rows of an (m, d) unit array."""
        unit_points = np.atleast_2d(np.asarray(unit_points, dtype=float))
        if self.model is None:
            m = unit_points.shape[0]
            return np.zeros(m), np.ones(m)
        means, variances = gpr.predict_batch(self.model, unit_points.T)
        return means, np.sqrt(variances)

    def standardize_value(self, value: float) -> float:
        return (value - self.value_mean) / self.value_sd


def _surrogate_grid() -> tuple[np.ndarray, np.ndarray]:
    """Fixed (lengthscale, noise) candidates: 128 unscrambled Sobol points,
    log-uniform across both boxes."""
    unit = _sobol_unit(2, _SURROGATE_GRID_SIZE, seed=0, scramble=False)
    lo_l, hi_l = _SURROGATE_LENGTHSCALE_BOUNDS
    lo_n, hi_n = _SURROGATE_NOISE_BOUNDS
    lengthscales = np.exp(np.log(lo_l) + unit[:, 0] * (np.log(hi_l) - np.log(lo_l)))
    noises = np.exp(np.log(lo_n) + unit[:, 1] * (np.log(hi_n) - np.log(lo_n)))
    return lengthscales, noises


def _surrogate_hp(lengthscale: float, noise_var: float) -> gpr.GprHyperparams:
    kern = kernels.KernelModel(
        kind="matern",
        params={"nu": 2.5, "l_m": lengthscale},
        bounds={"l_m": _SURROGATE_LENGTHSCALE_BOUNDS},
    )
    return gpr.GprHyperparams(mean_const=0.0, noise_var=noise_var, kernel=kern)


def fit_surrogate(trials: list[Trial], space: SearchSpace) -> Surrogate:
    """Fit the Matern-5/2 surrogate to the trials seen so far.

    Requires at least two trials.  All-equal values (zero spread) fall
    back to a prior-only surrogate with unit lengthscale.
    """
    if len(trials) < 2:
        raise InputError(f"surrogate needs >= 2 trials, got {len(trials)}")
    thetas = np.array([t.theta for t in trials])
    values = np.array([t.value for t in trials])
    value_mean = float(values.mean())
    value_sd = float(values.std())
    if value_sd < 1e-12:
        return Surrogate(
            space=space, value_mean=value_mean, value_sd=1.0,
            model=None, lengthscale=1.0, noise_var=_SURROGATE_NOISE_BOUNDS[0],
        )
    unit = np.array([space.to_unit(t) for t in thetas])
    zvals = (values - value_mean) / value_sd
    lengthscales, noises = _surrogate_grid()
    scores = np.array(
        [
            gpr.mll(unit.T, zvals, _surrogate_hp(float(l), float(nv)))
            for l, nv in zip(lengthscales, noises)
        ]
    )
    best = int(np.argmax(scores))
    hp = _surrogate_hp(float(lengthscales[best]), float(noises[best]))
    model = gpr.fit(unit.T, zvals, hp)
    return Surrogate(
        space=space, value_mean=value_mean, value_sd=value_sd, model=model,
        lengthscale=float(lengthscales[best]), noise_var=float(noises[best]),
    )


def _acquisition_with_grad(surrogate: Surrogate, incumbent_std: float):
    """Negated log-EI and its central finite-difference gradient on [0,1]^d.

    One batched posterior call covers the point and all 2d stencil
    neighbours; stencil points are clipped to the cube and the divided
    difference uses the actual clipped spacing.
    """

    def fun(u: np.ndarray) -> tuple[float, np.ndarray]:
        d = u.shape[0]
        pts = np.tile(u, (2 * d + 1, 1))
        for i in range(d):
            pts[1 + 2 * i, i] = min(u[i] + _FD_STEP, 1.0)
            pts[2 + 2 * i, i] = max(u[i] - _FD_STEP, 0.0)
        means, sds = surrogate.posterior_unit(pts)
        vals = _log_ei_array(means, sds, incumbent_std)
        grad = np.zeros(d)
        for i in range(d):
            spacing = pts[1 + 2 * i, i] - pts[2 + 2 * i, i]
            grad[i] = (vals[1 + 2 * i] - vals[2 + 2 * i]) / spacing
        return -float(vals[0]), -grad

    return fun


def propose_next(
    surrogate: Surrogate,
    space: SearchSpace,
    incumbent: float,
    restarts: int = 16,
    seed: int = 0,
) -> np.ndarray:
    """Maximize log expected improvement over the box.

    Multi-start L-BFGS-B from a fresh scrambled Sobol batch; ties and the
    best endpoint resolve by first occurrence, so a fixed seed yields a
    fixed proposal.  If every start fails outright, the best start point
    by acquisition value is returned instead.
    """
    incumbent_std = surrogate.standardize_value(incumbent)
    starts = _sobol_unit(space.dim, restarts, seed=seed, scramble=True)
    objective = _acquisition_with_grad(surrogate, incumbent_std)
    bounds = [(0.0, 1.0)] * space.dim
    best_val = math.inf
    best_u = None
    for start in starts:
        try:
            result = minimize(
                objective, start, jac=True, method="L-BFGS-B",
                bounds=bounds, options={"maxiter": 100},
            )
        except (ValueError, FloatingPointError):
            continue
        if not np.all(np.isfinite(result.x)) or not np.isfinite(result.fun):
            continue
        if result.fun < best_val:
            best_val = float(result.fun)
            best_u = np.clip(result.x, 0.0, 1.0)
    if best_u is None:
        means, sds = surrogate.posterior_unit(starts)
        vals = _log_ei_array(means, sds, incumbent_std)
        best_u = starts[int(np.argmax(vals))]
    return space.from_unit(best_u)


class TraceWriter:
    """Streams one line per trial: phase, theta components, value, timestamp.

    Lines are flushed as written so a partial trace survives an aborted
    run.  The timestamp is the last field, letting consumers strip it
    when comparing runs.
    """

    def __init__(self, path, space: SearchSpace):
        self._fh = open(path, "w", encoding="utf-8")
        names = ",".join(f"theta_{n}" for n in space.names)
        self._fh.write(f"phase,{names},value,timestamp\n")
        self._fh.flush()

    def write(self, phase: str, theta: np.ndarray, value: float) -> None:
        comps = ",".join(f"{t:.17g}" for t in theta)
        self._fh.write(f"{phase},{comps},{value:.17g},{time.time():.6f}\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def _restart_seed(seed: int, step: int) -> int:
    return abs(seed) * 1_000_003 + step + 1


def tune(
    objective,
    space: SearchSpace,
    n0: int,
    n_query: int,
    seed: int,
    restarts: int = 16,
    trace_path=None,
) -> TuneTrace:
    """Run the full tuner: n0 Sobol evaluations, then n_query BO steps.

    The objective is called exactly n0 + n_query times.  An exception
    inside the objective aborts the run; trials already completed remain
    in the trace file (when ``trace_path`` is given), which is flushed
    line by line.

    Returns the trace with the incumbent (argmax) recorded.
    """
    if n_query < 0:
        raise InputError(f"n_query must be >= 0, got {n_query}")
    trace = TuneTrace()
    writer = TraceWriter(trace_path, space) if trace_path is not None else None
    try:
        for theta in sobol_init(space, n0, seed):
            value = float(objective(theta))
            trace.record(theta, value, "sobol")
            if writer:
                writer.write("sobol", theta, value)
        for step in range(n_query):
            surrogate = fit_surrogate(trace.trials, space)
            theta = propose_next(
                surrogate, space, trace.incumbent_value,
                restarts=restarts, seed=_restart_seed(seed, step),
            )
            value = float(objective(theta))
            trace.record(theta, value, "query")
            if writer:
                writer.write("query", theta, value)
    finally:
        if writer:
            writer.close()
    return trace
