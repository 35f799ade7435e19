"""Fidelity kernel from a two-layer diagonal-phase (IQP-style) feature map.

A length-n real window ``x`` is encoded into an n-qubit state by

    |phi(x, alpha)> = U_z(x, alpha) H^n U_z(x, alpha) H^n |0...0>

where ``H^n`` is a Hadamard on every qubit and ``U_z`` is diagonal in the
computational basis with phase

    alpha * sum_j x_j z_j + alpha^2 * sum_{j'<j} x_j x_j' z_j z_j'

on the basis state whose Pauli-Z eigenvalues are ``z_j`` (+1 for bit 0,
-1 for bit 1).  The kernel value is the squared overlap (fidelity) of two
embedded states, which equals the all-zeros outcome probability of the
compute/uncompute circuit.

Bit convention: qubit ``j`` (1-indexed) owns bit position ``j - 1`` of the
amplitude index, little-endian, so amplitude index ``i`` has ``z_j = 1 -
2 * ((i >> (j - 1)) & 1)``.  Kernel values are convention-invariant; the
dense-oracle comparison is not, so both paths here share this convention.

Two evaluation paths are provided:

* the fast path (:func:`embed`) applies the diagonal phases directly and
  uses an unnormalized fast Walsh-Hadamard transform, deferring the
  combined ``2^-n`` normalization to a single exact scaling at the end;
* the dense oracle (:func:`embed_dense`) materializes the ``2^n x 2^n``
  Hadamard and diagonal matrices and multiplies them.  It is exponentially
  slower and exists as an independent reference for tests.

Everything here is a pure function of its inputs; returned arrays are
never aliased to caller data and are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ResourceError

# 2^24 complex amplitudes ~ 256 MB; larger windows are refused.
DEFAULT_QUBIT_CEILING = 24


@dataclass(frozen=True)
class IqpParams:
    """Feature-map parameters: bandwidth ``alpha`` in [0, 1], qubit count ``n``.

    The qubit count equals the window length of the encoded vectors.
    """

    alpha: float
    n: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.alpha) or not 0.0 <= self.alpha <= 1.0:
            raise InputError(f"bandwidth alpha must lie in [0, 1], got {self.alpha}")
        if self.n < 1:
            raise InputError(f"qubit count must be >= 1, got {self.n}")


def _as_window(x, n: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError(f"expected a 1-d window, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("window contains non-finite values")
    if n is not None and x.shape[0] != n:
        raise InputError(f"window length {x.shape[0]} does not match qubit count {n}")
    return x


def _zsigns(n: int) -> np.ndarray:
    """(2^n, n) matrix of Pauli-Z eigenvalues per basis state, little-endian."""
    idx = np.arange(2**n)
    bits = (idx[:, None] >> np.arange(n)[None, :]) & 1
    return 1.0 - 2.0 * bits


def diagonal_phases(x, alpha: float) -> np.ndarray:
    """Phase of the diagonal unitary on each of the 2^n basis states.

    Entry ``b`` is ``alpha * sum_j x_j z_j + alpha^2 * sum_{j'<j} x_j x_j'
    z_j z_j'`` with ``z_j`` the Pauli-Z eigenvalue of qubit ``j`` in basis
    state ``b``.  The pairwise sum is folded to ``(s^2 - sum_j x_j^2) / 2``
    with ``s = sum_j x_j z_j``, exact because ``z_j^2 = 1``.

    Parameters
    ----------
    x : array_like, shape (n,)
        Window to encode; must be finite.
    alpha : float
        Bandwidth coefficient in [0, 1].

    Returns
    -------
    numpy.ndarray, shape (2^n,)
        Real phases in amplitude-index order.
    """
    x = _as_window(x)
    params = IqpParams(alpha=float(alpha), n=x.shape[0])
    s = _zsigns(params.n) @ x
    return params.alpha * s + params.alpha**2 * (s * s - x @ x) / 2.0


def _fwht(v: np.ndarray) -> np.ndarray:
    """In-place unnormalized fast Walsh-Hadamard transform (length 2^n)."""
    size = v.shape[0]
    h = 1
    while h < size:
        v = v.reshape(-1, 2 * h)
        left = v[:, :h].copy()
        v[:, :h] += v[:, h:]
        v[:, h:] = left - v[:, h:]
        v = v.reshape(size)
        h *= 2
    return v


def embed(x, params: IqpParams, qubit_ceiling: int = DEFAULT_QUBIT_CEILING) -> np.ndarray:
    """Statevector of the embedded window, fast structured path.

    Applies phase multiplication and Walsh-Hadamard butterflies without
    intermediate normalization; the combined factor ``2^-n`` from both
    Hadamard layers is applied once at the end.  Being a pure power of
    two, that scaling is exact, so ``alpha = 0`` returns |0...0> exactly.

    Parameters
    ----------
    x : array_like, shape (n,)
        Window to encode.
    params : IqpParams
        Bandwidth and qubit count; ``params.n`` must equal ``len(x)``.
    qubit_ceiling : int
        Refuse windows longer than this (memory guard).

    Returns
    -------
    numpy.ndarray, complex, shape (2^n,)
        Unit-norm amplitudes, little-endian basis order.
    """
    if params.n > qubit_ceiling:
        raise ResourceError(
            f"{params.n} qubits exceeds the ceiling of {qubit_ceiling} "
            f"({2**params.n} amplitudes)"
        )
    x = _as_window(x, params.n)
    phase = np.exp(1j * diagonal_phases(x, params.alpha))
    # H^n |0..0> is uniform; unnormalized it is the all-ones vector.
    state = phase.copy()
    state = _fwht(state)
    state *= phase
    state *= 2.0 ** (-params.n)
    return state


def embed_dense(x, params: IqpParams) -> np.ndarray:
    """Statevector via dense 2^n x 2^n matrices; slow reference path.

    Builds the full Hadamard matrix as an n-fold Kronecker product, the
    diagonal phase matrix from a naive double loop over qubit pairs, and
    multiplies the four layers onto |0...0>.  Independent of every
    shortcut taken by :func:`embed`; intended for small n only.
    """
    x = _as_window(x, params.n)
    n = params.n
    size = 2**n
    h1 = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    hn = np.array([[1.0]])
    for _ in range(n):
        # qubit 1 innermost so that bit 0 varies fastest
        hn = np.kron(h1, hn)
    phases = np.zeros(size)
    for b in range(size):
        z = [1.0 - 2.0 * ((b >> j) & 1) for j in range(n)]
        linear = sum(x[j] * z[j] for j in range(n))
        pairwise = 0.0
        for j in range(n):
            for jp in range(j):
                pairwise += x[j] * x[jp] * z[j] * z[jp]
        phases[b] = params.alpha * linear + params.alpha**2 * pairwise
    diag = np.diag(np.exp(1j * phases))
    unitary = diag @ hn @ diag @ hn
    start = np.zeros(size, dtype=complex)
    start[0] = 1.0
    return unitary @ start


def kernel(x, x2, params: IqpParams, qubit_ceiling: int = DEFAULT_QUBIT_CEILING) -> float:
    """Fidelity kernel value |<phi(x)|phi(x2)>|^2 in [0, 1]."""
    x = _as_window(x)
    x2 = _as_window(x2)
    if x.shape[0] != x2.shape[0]:
        raise InputError(f"window lengths differ: {x.shape[0]} vs {x2.shape[0]}")
    a = embed(x, params, qubit_ceiling)
    b = embed(x2, params, qubit_ceiling)
    return float(np.abs(np.vdot(a, b)) ** 2)


def _embed_columns(X: np.ndarray, params: IqpParams, qubit_ceiling: int) -> np.ndarray:
    """Embed every column of a (w, c) design matrix; returns (2^n, c)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InputError(f"expected a (w, c) design matrix, got shape {X.shape}")
    if X.shape[0] != params.n:
        raise InputError(
            f"window length {X.shape[0]} does not match qubit count {params.n}"
        )
    return np.column_stack(
        [embed(X[:, j], params, qubit_ceiling) for j in range(X.shape[1])]
    )


def gram_matrix(
    X, params: IqpParams, qubit_ceiling: int = DEFAULT_QUBIT_CEILING
) -> np.ndarray:
    """Pairwise fidelity matrix of the columns of X.

    Each column is embedded exactly once; entries come from one pass over
    unordered pairs (upper triangle mirrored), so the result is exactly
    symmetric, and the diagonal is set to the exact self-fidelity 1.
    """
    emb = _embed_columns(X, params, qubit_ceiling)
    c = emb.shape[1]
    gram = np.abs(emb.conj().T @ emb) ** 2
    iu, ju = np.triu_indices(c, k=1)
    gram[ju, iu] = gram[iu, ju]
    np.fill_diagonal(gram, 1.0)
    return gram


def cross_gram(
    X, X2, params: IqpParams, qubit_ceiling: int = DEFAULT_QUBIT_CEILING
) -> np.ndarray:
    """Fidelities between columns of X (c) and columns of X2 (c2); shape (c, c2)."""
    emb1 = _embed_columns(X, params, qubit_ceiling)
    emb2 = _embed_columns(X2, params, qubit_ceiling)
    return np.abs(emb1.conj().T @ emb2) ** 2
