"""Baseline covariance kernels and dispatch over kernel kinds.

Four classical kernels (RBF, Matern, rational quadratic, periodic) share
one interface with the quantum fidelity kernel from :mod:`quack.qkernel`.
All five are correlation kernels: value 1 at x = x2, no output-scale
prefactor.  The periodic kernel divides by ``l_p`` (not ``l_p**2``),
implemented literally as specified; it is a valid kernel either way.

Hyperparameter boxes default to: lengthscales in [0.1, 30], rational
quadratic weight in [0.1, 10], period in [5, 35], bandwidth in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qkernel
from .errors import InputError, ParameterError

KERNEL_KINDS = ("iqp", "rbf", "matern", "rq", "periodic")

MATERN_NUS = (0.5, 1.5, 2.5)

DEFAULT_BOUNDS: dict[str, dict[str, tuple[float, float]]] = {
    "iqp": {"alpha": (0.0, 1.0)},
    "rbf": {"l_r": (0.1, 30.0)},
    "matern": {"nu": (0.5, 2.5), "l_m": (0.1, 30.0)},
    "rq": {"beta": (0.1, 10.0), "l_q": (0.1, 30.0)},
    "periodic": {"p": (5.0, 35.0), "l_p": (0.1, 30.0)},
}


@dataclass
class KernelModel:
    """A tagged kernel: kind, named parameters, per-parameter bounds.

    ``bounds`` defaults to the boxes above; pass overrides to widen or
    narrow individual parameters.  Construction validates that every
    parameter lies inside its bounds and that a Matern ``nu`` is one of
    {1/2, 3/2, 5/2}.
    """

    kind: str
    params: dict[str, float]
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KERNEL_KINDS:
            raise ParameterError(f"unknown kernel kind {self.kind!r}")
        merged = dict(DEFAULT_BOUNDS[self.kind])
        merged.update(self.bounds)
        self.bounds = merged
        expected = set(DEFAULT_BOUNDS[self.kind])
        if set(self.params) != expected:
            raise ParameterError(
                f"{self.kind} kernel expects parameters {sorted(expected)}, "
                f"got {sorted(self.params)}"
            )
        for name, value in self.params.items():
            lo, hi = self.bounds[name]
            if not lo <= value <= hi:
                raise ParameterError(
                    f"{self.kind} parameter {name}={value} outside [{lo}, {hi}]"
                )
        if self.kind == "matern" and self.params["nu"] not in MATERN_NUS:
            raise ParameterError(
                f"matern nu must be one of {MATERN_NUS}, got {self.params['nu']}"
            )


def _check_pair(x, x2) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape or x.ndim != 1:
        raise InputError(f"incompatible input shapes {x.shape} and {x2.shape}")
    return x, x2


def rbf(x, x2, l_r: float) -> float:
    """exp(-||x - x2||^2 / (2 l_r^2))."""
    if l_r <= 0:
        raise ParameterError(f"rbf lengthscale must be positive, got {l_r}")
    x, x2 = _check_pair(x, x2)
    d2 = float(np.sum((x - x2) ** 2))
    return math.exp(-d2 / (2.0 * l_r * l_r))


def matern(x, x2, nu: float, l_m: float) -> float:
    """Matern kernel at nu in {1/2, 3/2, 5/2} via its closed forms.

    d is the Euclidean distance scaled by the lengthscale.  The closed
    forms avoid Bessel evaluation and are exact at d = 0.
    """
    if l_m <= 0:
        raise ParameterError(f"matern lengthscale must be positive, got {l_m}")
    if nu not in MATERN_NUS:
        raise ParameterError(f"matern nu must be one of {MATERN_NUS}, got {nu}")
    x, x2 = _check_pair(x, x2)
    d = float(np.linalg.norm(x - x2)) / l_m
    return float(_matern_from_scaled(np.asarray(d), nu))


def _matern_from_scaled(d: np.ndarray, nu: float) -> np.ndarray:
    """Vectorized Matern closed forms on pre-scaled distances d = ||x-x2||/l."""
    if nu == 0.5:
        return np.exp(-d)
    if nu == 1.5:
        s = math.sqrt(3.0) * d
        return (1.0 + s) * np.exp(-s)
    s = math.sqrt(5.0) * d
    return (1.0 + s + 5.0 * d * d / 3.0) * np.exp(-s)


def rq(x, x2, beta: float, l_q: float) -> float:
    """(1 + ||x - x2||^2 / (2 beta l_q^2))^(-beta)."""
    if beta <= 0 or l_q <= 0:
        raise ParameterError(f"rq parameters must be positive, got beta={beta}, l_q={l_q}")
    x, x2 = _check_pair(x, x2)
    d2 = float(np.sum((x - x2) ** 2))
    return (1.0 + d2 / (2.0 * beta * l_q * l_q)) ** (-beta)


def periodic(x, x2, p: float, l_p: float) -> float:
    """exp(-2 sum_i sin^2(pi (x_i - x2_i) / p) / l_p)."""
    if p <= 0 or l_p <= 0:
        raise ParameterError(f"periodic parameters must be positive, got p={p}, l_p={l_p}")
    x, x2 = _check_pair(x, x2)
    s = float(np.sum(np.sin(math.pi * (x - x2) / p) ** 2))
    return math.exp(-2.0 * s / l_p)


def evaluate(model: KernelModel, x, x2, qubit_ceiling: int = qkernel.DEFAULT_QUBIT_CEILING) -> float:
    """Evaluate any kernel kind on a pair of windows."""
    p = model.params
    if model.kind == "iqp":
        x = np.asarray(x, dtype=float)
        return qkernel.kernel(
            x, x2, qkernel.IqpParams(alpha=p["alpha"], n=x.shape[0]), qubit_ceiling
        )
    if model.kind == "rbf":
        return rbf(x, x2, p["l_r"])
    if model.kind == "matern":
        return matern(x, x2, p["nu"], p["l_m"])
    if model.kind == "rq":
        return rq(x, x2, p["beta"], p["l_q"])
    return periodic(x, x2, p["p"], p["l_p"])


def _pairwise_sqdist(X: np.ndarray, X2: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between columns, via explicit differences."""
    diff = X[:, :, None] - X2[:, None, :]
    return np.sum(diff * diff, axis=0)


def _classical_matrix(model: KernelModel, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
    p = model.params
    if model.kind == "rbf":
        return np.exp(-_pairwise_sqdist(X, X2) / (2.0 * p["l_r"] ** 2))
    if model.kind == "matern":
        d = np.sqrt(_pairwise_sqdist(X, X2)) / p["l_m"]
        return _matern_from_scaled(d, p["nu"])
    if model.kind == "rq":
        beta = p["beta"]
        return (1.0 + _pairwise_sqdist(X, X2) / (2.0 * beta * p["l_q"] ** 2)) ** (-beta)
    diff = X[:, :, None] - X2[:, None, :]
    s = np.sum(np.sin(math.pi * diff / p["p"]) ** 2, axis=0)
    return np.exp(-2.0 * s / p["l_p"])


def gram(model: KernelModel, X, qubit_ceiling: int = qkernel.DEFAULT_QUBIT_CEILING) -> np.ndarray:
    """Symmetric Gram matrix of the columns of a (w, c) design matrix.

    The quantum kind reuses one embedding per column; classical kinds are
    evaluated vectorized.  Either way the result is exactly symmetric
    with unit diagonal.
    """
    X = np.asarray(X, dtype=float)
    if model.kind == "iqp":
        params = qkernel.IqpParams(alpha=model.params["alpha"], n=X.shape[0])
        return qkernel.gram_matrix(X, params, qubit_ceiling)
    out = _classical_matrix(model, X, X)
    iu, ju = np.triu_indices(out.shape[0], k=1)
    out[ju, iu] = out[iu, ju]
    np.fill_diagonal(out, 1.0)
    return out


def cross(model: KernelModel, X, X2, qubit_ceiling: int = qkernel.DEFAULT_QUBIT_CEILING) -> np.ndarray:
    """Kernel matrix between columns of X (c) and X2 (c2); shape (c, c2)."""
    X = np.asarray(X, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    if X.shape[0] != X2.shape[0]:
        raise InputError(f"window lengths differ: {X.shape[0]} vs {X2.shape[0]}")
    if model.kind == "iqp":
        params = qkernel.IqpParams(alpha=model.params["alpha"], n=X.shape[0])
        return qkernel.cross_gram(X, X2, params, qubit_ceiling)
    return _classical_matrix(model, X, X2)


def self_diag(model: KernelModel, X, qubit_ceiling: int = qkernel.DEFAULT_QUBIT_CEILING) -> np.ndarray:
    """kappa(x, x) for each column of X.

    Classical kernels are exactly 1 at zero distance; the fidelity kernel
    returns the squared-norm-squared of each embedding, 1 up to rounding.
    """
    X = np.asarray(X, dtype=float)
    if model.kind != "iqp":
        return np.ones(X.shape[1])
    params = qkernel.IqpParams(alpha=model.params["alpha"], n=X.shape[0])
    emb = np.column_stack(
        [qkernel.embed(X[:, j], params, qubit_ceiling) for j in range(X.shape[1])]
    )
    norms2 = np.sum(np.abs(emb) ** 2, axis=0)
    return norms2**2
