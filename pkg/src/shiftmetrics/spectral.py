"""Perron-Frobenius tools: projective pseudo-distance, Birkhoff coefficient,
certified power iteration and the fixed-point perturbation bound.

Matrices act on column vectors and are column stochastic, ``M v = v`` for
the stationary vector.  Dense ``ndarray`` and ``scipy.sparse`` inputs are
both accepted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DomainError, NotPrimitiveError

__all__ = [
    "SpectralResult",
    "dp_distance",
    "birkhoff_tau",
    "primitivity_index",
    "pf_stationary",
    "perturbation_bound",
    "check_column_stochastic",
]

log = logging.getLogger(__name__)

EXACT_TAU_MAX_DIM = 128
_DENSE_SOLVE_MAX_DIM = 512


@dataclass(frozen=True)
class SpectralResult:
    eigenvector: np.ndarray
    residual: float
    dp_error_bound: float
    tau: float | None = None
    primitivity: int | None = None
    iterations: int = 0

    @property
    def certified(self) -> bool:
        return math.isfinite(self.dp_error_bound)


def dp_distance(u, v) -> float:
    """Hilbert projective pseudo-distance ``max log(u/v) - min log(u/v)``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DomainError(f"shape mismatch {u.shape} vs {v.shape}")
    if np.any(~(u > 0)) or np.any(~(v > 0)):
        raise DomainError("d_p is defined on strictly positive vectors only")
    r = np.log(u) - np.log(v)
    return float(r.max() - r.min())


def _dense(M) -> np.ndarray:
    if sp.issparse(M):
        return M.toarray()
    return np.asarray(M, dtype=float)


def check_column_stochastic(M, tol: float = 1e-12) -> None:
    A = M if sp.issparse(M) else np.asarray(M, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise DomainError("matrix must be square")
    data = A.data if sp.issparse(A) else A
    if np.any(data < 0):
        raise DomainError("matrix has negative entries")
    sums = np.asarray(A.sum(axis=0)).ravel()
    if np.max(np.abs(sums - 1.0)) > tol:
        raise DomainError(f"columns do not sum to 1 (max deviation {np.max(np.abs(sums - 1.0)):.3e})")


def primitivity_index(M) -> int:
    """Smallest ``l`` with ``M**l > 0``; raises NotPrimitiveError otherwise.

    The search is capped by the Wielandt bound ``(n-1)**2 + 1`` and stops early
    as soon as the zero pattern of the powers starts repeating.
    """
    if sp.issparse(M):
        if np.any(M.data < 0):
            raise DomainError("matrix has negative entries")
        pattern = (M > 0).astype(np.int64).tocsr()
    else:
        A = np.asarray(M, dtype=float)
        if np.any(A < 0):
            raise DomainError("matrix has negative entries")
        pattern = sp.csr_matrix((A > 0).astype(np.int64))
    n = pattern.shape[0]
    if n != pattern.shape[1]:
        raise DomainError("matrix must be square")
    wielandt = (n - 1) ** 2 + 1
    power = pattern.copy()
    seen = set()
    for ell in range(1, wielandt + 1):
        if power.nnz == n * n:
            return ell
        key = (power.indptr.tobytes(), power.indices.tobytes())
        if key in seen:
            break
        seen.add(key)
        power = (power @ pattern).tocsr()
        power.data[:] = 1
        power.sort_indices()
    raise NotPrimitiveError(f"no positive power up to the Wielandt bound {wielandt}")


def _min_cross_ratio(P: np.ndarray) -> float:
    # min over i,j,k,l of P(i,j)P(k,l) / (P(i,l)P(k,j)) = min over column pairs
    # of min_i r_i / max_i r_i with r = P[:, j] / P[:, l]
    logs = np.log(P)
    best = 0.0
    n = P.shape[1]
    for j in range(n):
        r = logs[:, [j]] - logs
        spread = r.max(axis=0) - r.min(axis=0)
        best = max(best, float(spread.max()))
    return math.exp(-best)


def birkhoff_tau(M) -> tuple[float, int]:
    """Birkhoff contraction coefficient of the primitivity-index power of ``M``.

    Returns ``(tau, ell)`` where ``ell`` is the primitivity index.
    """
    A = _dense(M)
    if A.shape[0] != A.shape[1]:
        raise DomainError("matrix must be square")
    if np.any(A < 0):
        raise DomainError("matrix has negative entries")
    ell = primitivity_index(A)
    P = np.linalg.matrix_power(A, ell)
    m_star = _min_cross_ratio(P)
    root = math.sqrt(m_star)
    return (1.0 - root) / (1.0 + root), ell


def perturbation_bound(epsilon: float, tau: float) -> float:
    """Bound ``2 eps / (1 - tau)`` on the d_p gap between two Perron vectors.

    ``epsilon`` bounds the entrywise log-ratio of the two column stochastic
    matrices and ``tau`` is the smaller of their Birkhoff coefficients.
    """
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    if not 0 <= tau < 1:
        raise DomainError(f"tau must lie in [0, 1), got {tau}")
    return 2.0 * epsilon / (1.0 - tau)


def _initial_guess(M, n: int) -> np.ndarray:
    try:
        if n <= _DENSE_SOLVE_MAX_DIM:
            A = _dense(M) - np.eye(n)
            A[-1, :] = 1.0
            b = np.zeros(n)
            b[-1] = 1.0
            v = np.linalg.solve(A, b)
        else:
            A = (sp.csr_matrix(M) - sp.identity(n, format="csr")).tolil()
            A[n - 1, :] = np.ones(n)
            b = np.zeros(n)
            b[-1] = 1.0
            v = spla.spsolve(A.tocsc(), b)
    except (np.linalg.LinAlgError, RuntimeError, ValueError):
        v = None
    if v is None or not np.all(np.isfinite(v)) or np.any(v <= 0):
        return np.full(n, 1.0 / n)
    return v / v.sum()


def pf_stationary(
    M,
    tol: float = 1e-13,
    *,
    tau: float | None = None,
    primitivity: int | None = None,
    max_iter: int = 100_000,
) -> SpectralResult:
    """Stationary probability vector of a primitive column stochastic matrix.

    Power iteration in blocks of ``primitivity`` steps.  After a block moves
    the iterate by ``delta`` in d_p, the distance of the new iterate to the
    fixed point is at most ``delta * tau / (1 - tau)``; iteration stops when
    that bound is below ``tol``.

    ``tau`` and ``primitivity`` may be supplied by callers that know them
    (for instance a bound derived from a g-table).  Otherwise they are computed
    exactly for dimension up to 128; above that the result only carries its
    residual and ``dp_error_bound`` is infinite.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    check_column_stochastic(M, tol=1e-10)
    n = M.shape[0]
    if tau is None and n <= EXACT_TAU_MAX_DIM:
        tau, primitivity = birkhoff_tau(M)
    elif primitivity is None:
        primitivity = primitivity_index(M) if n <= EXACT_TAU_MAX_DIM else 1
    if tau is not None and not 0 <= tau < 1:
        raise DomainError(f"tau must lie in [0, 1), got {tau}")

    Mop = M.tocsr() if sp.issparse(M) else np.asarray(M, dtype=float)
    v = _initial_guess(Mop, n)
    delta = math.inf
    bound = math.inf
    it = 0
    while it < max_iter:
        w = v
        for _ in range(primitivity):
            w = Mop @ w
            w = w / w.sum()
        it += primitivity
        if np.any(w <= 0):
            raise ConvergenceError("iterate lost positivity", last_delta=delta)
        delta = dp_distance(w, v)
        v = w
        if tau is not None:
            bound = delta * tau / (1.0 - tau) if tau > 0 else 0.0
            if bound <= tol:
                break
        elif delta <= tol:
            break
    else:
        raise ConvergenceError(f"power iteration did not reach tol={tol} in {max_iter} steps", last_delta=delta)
    residual = float(np.abs(Mop @ v - v).sum())
    if tau is None:
        bound = math.inf
        log.debug("pf_stationary: no contraction coefficient, residual-only report (%g)", residual)
    return SpectralResult(v, residual, float(bound), tau, primitivity, it)
