"""Exact Gaussian process regression via Cholesky factorization.

Given training windows X (columns), targets y, a constant prior mean m,
observation noise variance and a kernel, the posterior at a query x is
Gaussian with

    mean = m + k^T (K + sn2 I)^-1 (y - m 1)
    var  = kappa(x, x) - k^T (K + sn2 I)^-1 k

computed from a single lower Cholesky factor.  The mean uses the centered
form (solve against y - m*1, add m back), which is the form consistent
with a constant-mean prior.

A jitter ladder 1e-10 / 1e-8 / 1e-6 / 1e-4 is added to the diagonal until
the factorization succeeds; fidelity Gram matrices are PSD but can be
numerically semi-definite (bandwidth -> 0 gives the rank-one all-ones
matrix).  Posterior variances are clamped at zero, counting clamps in a
module-level tally rather than raising: the subtraction above can go
negative by rounding.

fit() is single-threaded over the factorization; the fitted model is
immutable afterwards and safe to share, and predict() is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from . import kernels
from .errors import InputError, NumericalError, ParameterError

JITTER_LADDER = (1e-10, 1e-8, 1e-6, 1e-4)

_LOG_2PI = math.log(2.0 * math.pi)

_clamp_count = 0


def variance_clamp_count() -> int:
    """Number of posterior variances clamped to zero since the last reset."""
    return _clamp_count


def reset_variance_clamp_count() -> None:
    global _clamp_count
    _clamp_count = 0


@dataclass
class GprHyperparams:
    """Constant mean, noise variance and kernel of one GP model."""

    mean_const: float
    noise_var: float
    kernel: kernels.KernelModel

    def __post_init__(self) -> None:
        if not np.isfinite(self.mean_const):
            raise ParameterError(f"mean constant must be finite, got {self.mean_const}")
        if not np.isfinite(self.noise_var) or self.noise_var < 0:
            raise ParameterError(f"noise variance must be >= 0, got {self.noise_var}")


@dataclass
class Posterior:
    """Predictive mean and (nonnegative) variance at one query window."""

    mean: float
    var: float


@dataclass
class FittedGpr:
    """Training data plus the Cholesky factor and cached solve.

    ``chol`` is the lower factor of K + (noise_var + jitter) I;
    ``solve_cache`` is (K + (noise_var + jitter) I)^-1 (y - m 1).
    """

    X: np.ndarray
    y: np.ndarray
    hp: GprHyperparams
    chol: np.ndarray
    solve_cache: np.ndarray
    jitter: float
    qubit_ceiling: int


def fit(X, y, hp: GprHyperparams, qubit_ceiling: int = 24) -> FittedGpr:
    """Factor the regularized Gram matrix and cache the target solve.

    Parameters
    ----------
    X : array_like, shape (w, c)
        Training windows as columns.
    y : array_like, shape (c,)
        Targets, one per window.
    hp : GprHyperparams
        Mean constant, noise variance, kernel.

    Raises
    ------
    NumericalError
        If Cholesky fails at every rung of the jitter ladder.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise InputError(f"expected a (w, c) design matrix, got shape {X.shape}")
    if y.ndim != 1 or y.shape[0] != X.shape[1]:
        raise InputError(
            f"targets shape {y.shape} does not match {X.shape[1]} training windows"
        )
    if y.shape[0] < 1:
        raise InputError("at least one training pair is required")
    gram = kernels.gram(hp.kernel, X, qubit_ceiling)
    noisy = gram + hp.noise_var * np.eye(y.shape[0])
    chol = None
    jitter_used = JITTER_LADDER[-1]
    for jitter in JITTER_LADDER:
        try:
            chol = cholesky(noisy + jitter * np.eye(y.shape[0]), lower=True)
            jitter_used = jitter
            break
        except LinAlgError:
            continue
    if chol is None:
        eigs = np.linalg.eigvalsh((noisy + noisy.T) / 2.0)
        raise NumericalError(
            "Cholesky failed after max jitter "
            f"{JITTER_LADDER[-1]:g}: eigenvalue range [{eigs.min():.3e}, "
            f"{eigs.max():.3e}] for kind={hp.kernel.kind}"
        )
    resid = y - hp.mean_const
    solve_cache = cho_solve((chol, True), resid)
    return FittedGpr(
        X=X, y=y, hp=hp, chol=chol, solve_cache=solve_cache,
        jitter=jitter_used, qubit_ceiling=qubit_ceiling,
    )


def predict(model: FittedGpr, x_query) -> Posterior:
    """Posterior of the latent function at one query window."""
    x_query = np.asarray(x_query, dtype=float)
    if x_query.shape != (model.X.shape[0],):
        raise InputError(
            f"query shape {x_query.shape} does not match window length {model.X.shape[0]}"
        )
    means, variances = predict_batch(model, x_query[:, None])
    return Posterior(mean=float(means[0]), var=float(variances[0]))


def predict_batch(model: FittedGpr, X_query) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and variances at each column of X_query."""
    global _clamp_count
    X_query = np.asarray(X_query, dtype=float)
    if X_query.ndim != 2 or X_query.shape[0] != model.X.shape[0]:
        raise InputError(
            f"query matrix shape {X_query.shape} does not match window length "
            f"{model.X.shape[0]}"
        )
    kmat = kernels.cross(model.hp.kernel, model.X, X_query, model.qubit_ceiling)
    means = model.hp.mean_const + kmat.T @ model.solve_cache
    half = solve_triangular(model.chol, kmat, lower=True)
    variances = kernels.self_diag(model.hp.kernel, X_query, model.qubit_ceiling) - np.sum(
        half * half, axis=0
    )
    negative = variances < 0.0
    _clamp_count += int(np.count_nonzero(negative))
    variances[negative] = 0.0
    return means, variances


def mll(X, y, hp: GprHyperparams, qubit_ceiling: int = 24) -> float:
    """Marginal log likelihood log N(y; m 1, K + sn2 I).

    Evaluated from the Cholesky factor: the log-determinant is twice the
    sum of the log diagonal, the quadratic form reuses the cached solve.
    """
    model = fit(X, y, hp, qubit_ceiling)
    resid = model.y - hp.mean_const
    quad = float(resid @ model.solve_cache)
    logdet_half = float(np.sum(np.log(np.diag(model.chol))))
    c = model.y.shape[0]
    return -0.5 * quad - logdet_half - 0.5 * c * _LOG_2PI
