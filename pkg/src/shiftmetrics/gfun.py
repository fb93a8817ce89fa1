"""g-functions with certified cylinder intervals, their regularity moduli,
and conversions to and from Markov measures.

A g-function gives the probability of the first symbol given the rest of
the sequence, ``g(a x_2 x_3 ...)``, and is normalized over the first symbol.
Interval evaluation returns ``[lo, hi]`` bounding ``g`` over a whole cylinder;
every routine that reports a regularity modulus builds on those bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp, polygamma

from .errors import DomainError
from .measures import CylinderOracle, MarkovMeasure, lift_order
from .spectral import EXACT_TAU_MAX_DIM, birkhoff_tau, pf_stationary
from .symbolic import Alphabet, Word, check_capacity

__all__ = [
    "GFunction",
    "LocallyConstantG",
    "LongRangeIsingG",
    "HulseG",
    "SPIN",
    "psi",
    "log_psi",
    "g_eval_interval",
    "variation",
    "svar",
    "g_normalization_check",
    "log_ratio_norm",
    "transfer_matrix",
    "markov_to_g",
    "g_to_markov",
    "canonical_approximation",
    "long_range_g",
    "hulse_g",
]

SPIN = Alphabet(["-1", "1"])

_NORM_TOL = 1e-12
# outward padding applied to analytic tails and transcendental evaluations
_REL_PAD = 1e-13


def psi(t):
    """``e^t / (e^t + e^-t)``, strictly increasing with ``psi(t) + psi(-t) = 1``."""
    return 0.5 * (1.0 + np.tanh(t))


def log_psi(t):
    return -np.logaddexp(0.0, -2.0 * np.asarray(t, dtype=float))


def _word_code(w: Word) -> int:
    code = 0
    for s in w.symbols:
        code = code * w.alphabet.size + s
    return code


class GFunction:
    """Interface: ``alphabet``, ``exact_range`` and ``log_interval_table(n)``.

    ``log_interval_table(n)`` returns two arrays over the words of length
    ``n`` (lexicographic order) bounding ``log g`` on each cylinder.
    """

    alphabet: Alphabet
    exact_range: int | None = None

    def log_interval_table(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def eval_interval(self, w: Word) -> tuple[float, float]:
        return g_eval_interval(self, w)


class LocallyConstantG(GFunction):
    """g-function depending on the first ``range`` symbols only.

    ``values[c]`` is ``g`` on the cylinder of the word with code ``c`` of
    length ``range``.
    """

    def __init__(self, alphabet: Alphabet, range: int, values, *, validate: bool = True, meta=None):
        if range < 1:
            raise DomainError("range must be at least 1")
        k = alphabet.size
        check_capacity(k**range, "g-table entries")
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.shape != (k**range,):
            raise DomainError(f"a range-{range} table over |A|={k} needs {k**range} values")
        if np.any(~(values > 0)) or np.any(~(values < 1)):
            raise DomainError("g-values must lie in (0, 1)")
        if validate:
            dev = np.max(np.abs(values.reshape(k, -1).sum(axis=0) - 1.0))
            if dev > _NORM_TOL:
                raise DomainError(f"g-table is not normalized over the first symbol (deviation {dev:.3e})")
        self.alphabet = alphabet
        self.range = int(range)
        self.exact_range = int(range)
        self.values = values.copy()
        self.values.flags.writeable = False
        self.log_values = np.log(self.values)
        self.log_values.flags.writeable = False
        self.meta = dict(meta or {})

    def lift(self, r: int) -> np.ndarray:
        """Table values over words of length ``r >= range``."""
        if r < self.range:
            raise DomainError("cannot lift a table to a shorter range")
        check_capacity(self.alphabet.size**r, "g-table entries")
        return np.repeat(self.values, self.alphabet.size ** (r - self.range))

    def log_interval_table(self, n: int):
        k = self.alphabet.size
        if n >= self.range:
            check_capacity(k**n, "words")
            vals = np.repeat(self.log_values, k ** (n - self.range))
            return vals, vals
        block = self.log_values.reshape(k**n, k ** (self.range - n))
        return block.min(axis=1), block.max(axis=1)

    def __repr__(self) -> str:
        return f"LocallyConstantG(|A|={self.alphabet.size}, range={self.range})"


class LongRangeIsingG(GFunction):
    """``psi(beta x_1 sum_{k=2}^{R} x_k / k^2)`` on spins ``{-1, +1}``.

    ``range=None`` is the infinite-range function; cylinders are then bounded
    by enclosing the unseen part of the series with its exact tail sum.
    """

    alphabet = SPIN

    def __init__(self, beta: float, range: int | None = None):
        if not beta >= 0:
            raise DomainError("beta must be nonnegative")
        if range is not None and range < 1:
            raise DomainError("range must be at least 1")
        self.beta = float(beta)
        self.range = range
        self.exact_range = range

    def tail(self, n: int) -> float:
        """``sum_{k=n+1}^{R} k^-2`` (``R`` may be infinite), padded upward."""
        if self.range is not None and n >= self.range:
            return 0.0
        if self.range is None:
            t = float(polygamma(1, n + 1))
        else:
            t = math.fsum(1.0 / (k * k) for k in range(n + 1, self.range + 1))
        return t * (1.0 + _REL_PAD)

    def _partial_sums(self, n: int):
        # spin of x_1 and sum_{k=2}^{min(n, R)} x_k / k^2 for all words of length n
        check_capacity(2**n, "words")
        spins = np.array([-1.0, 1.0])
        x1 = spins.copy()
        s = np.zeros(2)
        for k in range(2, n + 1):
            w = 1.0 / (k * k) if (self.range is None or k <= self.range) else 0.0
            x1 = np.repeat(x1, 2)
            s = (s[:, None] + w * spins[None, :]).reshape(-1)
        return x1, s

    def log_interval_table(self, n: int):
        if n < 1:
            raise DomainError("interval tables need words of length >= 1")
        x1, s = self._partial_sums(n)
        centre = self.beta * x1 * s
        spread = self.beta * self.tail(n)
        lo = log_psi(centre - spread)
        hi = log_psi(centre + spread)
        if spread > 0:
            lo = np.nextafter(lo - _REL_PAD * np.abs(lo), -np.inf)
            hi = np.nextafter(hi + _REL_PAD * np.abs(hi), np.inf)
        return lo, hi

    def as_table(self) -> LocallyConstantG:
        if self.range is None:
            raise DomainError("the infinite-range function is not locally constant")
        lo, _ = self.log_interval_table(self.range)
        vals = np.exp(lo)
        # renormalize away rounding; psi(t) + psi(-t) = 1 holds exactly in reals
        vals = (vals.reshape(2, -1) / vals.reshape(2, -1).sum(axis=0)).reshape(-1)
        return LocallyConstantG(SPIN, self.range, vals, meta={"family": "long_range", "beta": self.beta})

    def __repr__(self) -> str:
        return f"LongRangeIsingG(beta={self.beta!r}, range={self.range})"


def long_range_g(beta: float, ell: int | None):
    """Long-range spin g-function; a table for finite ``ell``, intervals for ``None``."""
    g = LongRangeIsingG(beta, ell)
    return g.as_table() if ell is not None else g


def g_eval_interval(g: GFunction, w: Word) -> tuple[float, float]:
    """``[lo, hi]`` containing every value of ``g`` on the cylinder ``[w]``."""
    if len(w) < 1:
        raise DomainError("g is evaluated on cylinders of length >= 1")
    if isinstance(g, LocallyConstantG):
        k = g.alphabet.size
        code = _word_code(w)
        if len(w) >= g.range:
            v = g.values[code // k ** (len(w) - g.range)]
            return float(v), float(v)
        span = k ** (g.range - len(w))
        block = g.values[code * span : (code + 1) * span]
        return float(block.min()), float(block.max())
    lo, hi = g.log_interval_table(len(w))
    code = _word_code(w)
    return float(np.exp(lo[code])), float(np.exp(hi[code]))


def variation(g: GFunction, ell: int) -> float:
    """Upper bound on ``var_ell(log g)``; exact for locally constant tables."""
    if ell < 1:
        raise DomainError("variation depth must be >= 1")
    if g.exact_range is not None and ell >= g.exact_range:
        return 0.0
    check_capacity(g.alphabet.size**ell, "words")
    lo, hi = g.log_interval_table(ell)
    return float(np.max(hi - lo))


def svar(g: GFunction, ell: int) -> float:
    """Upper bound on ``sum_{k=1}^{ell} var_k(log g)``."""
    if ell < 1:
        raise DomainError("svar depth must be >= 1")
    return math.fsum(variation(g, k) for k in range(1, ell + 1))


def g_normalization_check(g: GFunction, depth: int) -> float:
    """Max over words ``w`` of length ``depth`` of ``|sum_a mid g(aw) - 1|`` plus interval slack."""
    if depth < 1:
        raise DomainError("depth must be >= 1")
    k = g.alphabet.size
    lo, hi = g.log_interval_table(depth + 1)
    lo = np.exp(lo).reshape(k, -1)
    hi = np.exp(hi).reshape(k, -1)
    mid = 0.5 * (lo + hi)
    slack = 0.5 * (hi - lo)
    dev = np.abs(mid.sum(axis=0) - 1.0) + slack.sum(axis=0)
    return float(dev.max())


def log_ratio_norm(g1: LocallyConstantG, g2: LocallyConstantG) -> float:
    """``sup |log(g1/g2)|`` for two locally constant g-functions."""
    if g1.alphabet != g2.alphabet:
        raise DomainError("g-functions over different alphabets")
    r = max(g1.range, g2.range)
    return float(np.max(np.abs(np.log(g1.lift(r)) - np.log(g2.lift(r)))))


def transfer_matrix(g: LocallyConstantG):
    """Column stochastic matrix on ``ell``-blocks (``ell = range - 1``).

    ``M[a, b] = g(a_1 b)`` when ``a = a_1 b_1 .. b_{ell-1}``; its Perron vector
    is the law of ``ell``-blocks of the unique g-measure.
    """
    if g.range < 2:
        raise DomainError("a range-1 g-function has no block transfer matrix")
    k = g.alphabet.size
    ell = g.range - 1
    n = check_capacity(k**ell, "transfer matrix states")
    b = np.tile(np.arange(n), k)
    a1 = np.repeat(np.arange(k), n)
    rows = a1 * k ** (ell - 1) + b // k
    vals = g.values[a1 * n + b]
    return sp.csr_matrix((vals, (rows, b)), shape=(n, n))


def markov_to_g(m: MarkovMeasure) -> LocallyConstantG:
    """The range ``ell+1`` g-function ``mu[x_1..x_{ell+1}] / mu[x_2..x_{ell+1}]``."""
    if not m.stationary:
        raise DomainError("markov_to_g needs a stationary measure")
    k = m.alphabet.size
    lm = m.log_masses(m.order + 1)
    suffix = np.arange(lm.size) % m.n_states
    logg = (lm - m.block_log[suffix]).reshape(k, -1)
    logg = logg - logsumexp(logg, axis=0)
    return LocallyConstantG(m.alphabet, m.order + 1, np.exp(logg.reshape(-1)))


def g_to_markov(g: LocallyConstantG, tol: float = 1e-13) -> MarkovMeasure:
    """The unique stationary Markov measure compatible with a locally constant ``g``.

    A range-1 table gives an i.i.d. measure; range ``r >= 2`` gives an
    order ``r-1`` chain whose block law is the Perron vector of
    :func:`transfer_matrix`.
    """
    k = g.alphabet.size
    if g.range == 1:
        return MarkovMeasure.iid(g.alphabet, g.values)
    ell = g.range - 1
    M = transfer_matrix(g)
    n = M.shape[0]
    if n <= EXACT_TAU_MAX_DIM:
        tau, prim = birkhoff_tau(M)
    else:
        tau, prim = 1.0 - math.exp(-svar(g, ell)), ell
    res = pf_stationary(M, tol=tol, tau=tau, primitivity=prim)
    v = res.eigenvector
    # forward kernel p(b | a) = g(a b) v(a_2..a_ell b) / v(a)
    a = np.repeat(np.arange(n), k)
    b = np.tile(np.arange(k), n)
    nxt = (a % (n // k)) * k + b
    logp = (g.log_values[a * k + b] + np.log(v[nxt]) - np.log(v[a])).reshape(n, k)
    logp = logp - logsumexp(logp, axis=1, keepdims=True)
    return MarkovMeasure(
        g.alphabet,
        ell,
        np.log(v),
        logp,
        block_log_error=res.dp_error_bound,
    )


def canonical_approximation(src: CylinderOracle, ell: int) -> MarkovMeasure:
    """Order-``ell`` Markov measure sharing the length ``ell+1`` marginals of ``src``."""
    if ell < 1:
        raise DomainError("approximation order must be >= 1")
    if isinstance(src, MarkovMeasure) and src.order <= ell:
        # a chain of order <= ell is its own approximation; lifting avoids rounding drift
        return lift_order(src, ell)
    k = src.alphabet.size
    check_capacity(k ** (ell + 1), "words")
    block = np.asarray(src.log_masses(ell), dtype=float)
    joint = np.asarray(src.log_masses(ell + 1), dtype=float).reshape(-1, k)
    kernel = joint - block[:, None]
    kernel = kernel - logsumexp(kernel, axis=1, keepdims=True)
    block = block - logsumexp(block)
    return MarkovMeasure(src.alphabet, ell, block, kernel, block_log_error=getattr(src, "block_log_error", 0.0))


# ---------------------------------------------------------------------------
# Hulse-type family


@dataclass(frozen=True)
class HulseG:
    """Parameters of the Hulse-type locally constant g-functions.

    Sequences are indexed from 1: ``J[k-1]`` is ``J_k``, ``Lambda[k-1]`` is
    ``Lambda_k`` and ``h[level-1]`` the field at ``level``.  ``projection``
    maps each symbol to -1, 0 or 1 with equally many -1's and 1's.
    """

    alphabet: Alphabet
    projection: tuple[int, ...]
    beta: float
    J: tuple[float, ...]
    h: tuple[float, ...]
    h_prime: tuple[float, ...]
    Lambda: tuple[int, ...]
    level: int
    primed: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("projection", "J", "h", "h_prime", "Lambda"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        proj = self.projection
        if len(proj) != self.alphabet.size or not set(proj) <= {-1, 0, 1}:
            raise DomainError("projection must map every symbol to -1, 0 or 1")
        half = self.alphabet.size // 2
        if proj.count(1) != half or proj.count(-1) != half:
            raise DomainError("projection needs floor(|A|/2) symbols on each of -1 and +1")
        if self.level < 1:
            raise DomainError("level must be >= 1")
        for name in ("J", "Lambda"):
            if len(getattr(self, name)) < self.level:
                raise DomainError(f"{name} has fewer than level={self.level} entries")
        if len(self.h) < self.level or len(self.h_prime) < self.level:
            raise DomainError("h and h_prime need an entry for every level")
        lam = self.Lambda[: self.level]
        if any(x < 1 for x in lam) or any(b < a for a, b in zip(lam, lam[1:])):
            raise DomainError("Lambda must be a nondecreasing sequence of positive integers")
        if any(j <= 0 for j in self.J[: self.level]):
            raise DomainError("couplings J must be positive")

    def with_primed(self, primed: bool) -> "HulseG":
        return HulseG(self.alphabet, self.projection, self.beta, self.J, self.h, self.h_prime,
                      self.Lambda, self.level, primed)


def hulse_g(params: HulseG) -> LocallyConstantG:
    """Table of ``psi(beta pi(x_1) (sum_k J_k <pi(x)>_{Lambda_k} + h_level))``.

    ``<pi(x)>_Lambda`` averages ``pi(x_1), ..., pi(x_Lambda)``, so the table
    has range ``Lambda_level``.  Because the average includes ``pi(x_1)`` the
    raw values do not sum to 1 over the first symbol (nor do the ``psi(0)``
    weights of symbols with ``pi = 0``); each column is therefore divided by
    its sum over the first symbol.
    """
    ell = params.level
    k = params.alphabet.size
    R = params.Lambda[ell - 1]
    check_capacity(k**R, "g-table entries")
    proj = np.array(params.projection, dtype=float)
    digits = np.arange(k**R)
    spins = np.empty((k**R, R))
    for j in range(R - 1, -1, -1):
        spins[:, j] = proj[digits % k]
        digits //= k
    cums = np.cumsum(spins, axis=1)
    fieldh = params.h_prime[ell - 1] if params.primed else params.h[ell - 1]
    local = np.full(k**R, float(fieldh))
    for j in range(ell):
        lam = params.Lambda[j]
        local = local + params.J[j] * cums[:, lam - 1] / lam
    t = params.beta * spins[:, 0] * local
    vals = psi(t).reshape(k, -1)
    vals = (vals / vals.sum(axis=0)).reshape(-1)
    return LocallyConstantG(params.alphabet, R, vals, meta={"family": "hulse", "level": ell,
                                                            "primed": params.primed, "renormalized": True})
