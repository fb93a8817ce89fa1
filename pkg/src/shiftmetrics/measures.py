"""Measures on A^N with computable cylinder masses.

Every measure here implements the cylinder-oracle interface:

``alphabet``
    the :class:`~shiftmetrics.symbolic.Alphabet`
``log_mass(word)``
    natural log of the mass of the cylinder ``[word]``
``log_masses(n)``
    array of the log masses of all words of length ``n`` in lexicographic order

All masses are kept in the log domain; cylinder masses underflow long before
the word lengths used by the distance routines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError
from .symbolic import Alphabet, Word, check_capacity

__all__ = [
    "CylinderOracle",
    "MarkovMeasure",
    "SequenceRule",
    "SeparabilityMeasure",
    "InducedMeasure",
    "BINARY",
    "SEPARATION_ALPHA",
    "markov_cylinder_log_mass",
    "lift_order",
    "separability_log_mass",
    "induced_log_mass",
    "flip_sequence",
    "tau_coupling_disagreement",
    "tau_permutation",
    "tau_p",
]

BINARY = Alphabet(["0", "1"])

#: the alpha for which distinct members of the separability family are 1/2 apart
SEPARATION_ALPHA = math.exp(0.5) / (2.0 - math.exp(0.5))

_SUM_TOL = 1e-12
_STATIONARY_TOL = 1e-10


@runtime_checkable
class CylinderOracle(Protocol):
    alphabet: Alphabet

    def log_mass(self, word: Word) -> float: ...

    def log_masses(self, n: int) -> np.ndarray: ...


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


class MarkovMeasure:
    """Order-``ell`` Markov measure given by an ``ell``-block law and a kernel.

    ``block_log[c]`` is the log mass of the block with code ``c`` (length
    ``ell``); ``kernel_log[c, b]`` is the log probability that symbol ``b``
    follows block ``c``.  Every entry must be finite: the measure is fully
    supported.

    ``block_log_error`` is a certified bound on ``|log v - log v_exact|`` for
    block laws produced by an iterative solver (zero for user-given numbers).
    """

    def __init__(
        self,
        alphabet: Alphabet,
        order: int,
        block_log,
        kernel_log,
        *,
        stationary: bool | None = None,
        block_log_error: float = 0.0,
    ):
        if order < 1:
            raise DomainError("Markov order must be at least 1")
        k = alphabet.size
        n_states = check_capacity(k**order, "Markov block states")
        block_log = np.asarray(block_log, dtype=float).reshape(-1)
        kernel_log = np.asarray(kernel_log, dtype=float)
        if block_log.shape != (n_states,):
            raise DomainError(f"block law must have {n_states} entries, got {block_log.shape}")
        if kernel_log.shape != (n_states, k):
            raise DomainError(f"kernel must have shape {(n_states, k)}, got {kernel_log.shape}")
        if not (np.all(np.isfinite(block_log)) and np.all(np.isfinite(kernel_log))):
            raise DomainError("measure is not fully supported: zero or invalid probability")
        total = math.fsum(np.exp(block_log))
        if abs(total - 1.0) > _SUM_TOL:
            raise DomainError(f"block law sums to {total!r}, not 1")
        rows = np.exp(kernel_log).sum(axis=1)
        if np.max(np.abs(rows - 1.0)) > _SUM_TOL:
            raise DomainError("kernel rows do not sum to 1")
        self.alphabet = alphabet
        self.order = int(order)
        self.block_log = _readonly(block_log)
        self.kernel_log = _readonly(kernel_log)
        self.block_log_error = float(block_log_error)
        residual = self.stationarity_residual()
        is_stationary = residual <= _STATIONARY_TOL
        if stationary and not is_stationary:
            raise DomainError(f"block law is not invariant (residual {residual:.3e})")
        self.stationary = is_stationary if stationary is None else bool(stationary)

    # construction helpers -------------------------------------------------
    @classmethod
    def from_probs(cls, alphabet: Alphabet, block_dist, kernel, **kwargs) -> "MarkovMeasure":
        block_dist = np.asarray(block_dist, dtype=float).reshape(-1)
        kernel = np.asarray(kernel, dtype=float)
        if np.any(~(block_dist > 0)) or np.any(~(kernel > 0)):
            raise DomainError("all probabilities must be strictly positive (full support)")
        n_states = block_dist.size
        order = round(math.log(n_states, alphabet.size)) if n_states > 1 else 0
        if alphabet.size**order != n_states:
            raise DomainError(f"block law length {n_states} is not a power of |A|={alphabet.size}")
        if order == 0:
            raise DomainError("block law must cover blocks of length >= 1")
        return cls(alphabet, order, np.log(block_dist), np.log(kernel), **kwargs)

    @classmethod
    def iid(cls, alphabet: Alphabet, probs) -> "MarkovMeasure":
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (alphabet.size,):
            raise DomainError("one probability per symbol is required")
        return cls.from_probs(alphabet, probs, np.tile(probs, (alphabet.size, 1)))

    @classmethod
    def stationary_from_kernel(cls, alphabet: Alphabet, kernel, tol: float = 1e-13) -> "MarkovMeasure":
        """Stationary measure of a strictly positive kernel over ``ell``-blocks."""
        from .spectral import pf_stationary

        kernel = np.asarray(kernel, dtype=float)
        if np.any(~(kernel > 0)):
            raise DomainError("kernel must be strictly positive")
        n_states, k = kernel.shape
        order = round(math.log(n_states, k))
        if k != alphabet.size or k**order != n_states:
            raise DomainError("kernel shape does not match the alphabet")
        M = block_transfer_matrix(kernel)
        res = pf_stationary(M, tol=tol, primitivity=order, tau=_kernel_tau(M, kernel, order))
        # d_p bounds the sup-norm log error of normalized vectors
        return cls(alphabet, order, np.log(res.eigenvector), np.log(kernel), block_log_error=res.dp_error_bound)

    # basic views ----------------------------------------------------------
    @property
    def n_states(self) -> int:
        return self.block_log.size

    @property
    def block_dist(self) -> np.ndarray:
        return np.exp(self.block_log)

    @property
    def kernel(self) -> np.ndarray:
        return np.exp(self.kernel_log)

    def stationarity_residual(self) -> float:
        k = self.alphabet.size
        joint = self.block_dist[:, None] * self.kernel
        shifted = joint.reshape(k, -1).sum(axis=0)
        return float(np.max(np.abs(shifted - self.block_dist)))

    # cylinder masses ------------------------------------------------------
    def log_mass(self, word: Word) -> float:
        return markov_cylinder_log_mass(self, word)

    def log_masses(self, n: int) -> np.ndarray:
        k = self.alphabet.size
        ell = self.order
        if n < 0:
            raise DomainError("word length must be nonnegative")
        if n <= ell:
            if n == ell:
                return self.block_log.copy()
            return logsumexp(self.block_log.reshape(k**n, k ** (ell - n)), axis=1)
        check_capacity(k**n, "words")
        lm = self.block_log
        for _ in range(n - ell):
            tails = np.arange(lm.size, dtype=np.int64) % self.n_states
            lm = (lm[:, None] + self.kernel_log[tails]).reshape(-1)
        return lm

    def iter_log_masses(self, N: int):
        """Yield ``log_masses(n)`` for ``n = 1..N``, extending each level from the last."""
        k, ell = self.alphabet.size, self.order
        for n in range(1, min(N, ell) + 1):
            yield self.log_masses(n)
        if N > ell:
            check_capacity(k**N, "words")
        lm = self.block_log
        for _ in range(ell + 1, N + 1):
            tails = np.arange(lm.size, dtype=np.int64) % self.n_states
            lm = (lm[:, None] + self.kernel_log[tails]).reshape(-1)
            yield lm

    def __repr__(self) -> str:
        return f"MarkovMeasure(|A|={self.alphabet.size}, order={self.order}, stationary={self.stationary})"


def block_transfer_matrix(kernel: np.ndarray):
    """Column stochastic matrix of the induced chain on ``ell``-blocks.

    ``M[c', c] = p(b | c)`` when ``c' = c_2..c_ell b``.
    """
    import scipy.sparse as sp

    n_states, k = kernel.shape
    src = np.repeat(np.arange(n_states), k)
    sym = np.tile(np.arange(k), n_states)
    dst = (src % (n_states // k)) * k + sym
    return sp.csr_matrix((kernel.reshape(-1), (dst, src)), shape=(n_states, n_states))


def _kernel_tau(M, kernel, order):
    from .spectral import EXACT_TAU_MAX_DIM, birkhoff_tau

    if M.shape[0] <= EXACT_TAU_MAX_DIM:
        return birkhoff_tau(M)[0]
    # each entry of M^order is a product of order kernel entries, so every
    # cross-ratio is at least (min p / max p)^(2 order)
    spread = math.log(kernel.max() / kernel.min())
    root = math.exp(-order * spread)
    return (1.0 - root) / (1.0 + root)


def markov_cylinder_log_mass(m: MarkovMeasure, w: Word) -> float:
    """Log mass of ``[w]``: block term plus kernel terms, or a marginal if short."""
    n = len(w)
    if n < 1:
        raise DomainError("cylinder mass needs a word of length >= 1")
    k = m.alphabet.size
    ell = m.order
    if n <= ell:
        code = 0
        for s in w.symbols:
            code = code * k + s
        span = k ** (ell - n)
        return float(logsumexp(m.block_log[code * span : (code + 1) * span]))
    code = 0
    for s in w.symbols[:ell]:
        code = code * k + s
    terms = [m.block_log[code]]
    for s in w.symbols[ell:]:
        terms.append(m.kernel_log[code, s])
        code = (code * k + s) % m.n_states
    return math.fsum(terms)


def lift_order(m: MarkovMeasure, L: int) -> MarkovMeasure:
    """The same measure written as an order-``L`` chain."""
    if L < m.order:
        raise DomainError(f"cannot lift order {m.order} down to {L}")
    if L == m.order:
        return m
    block = m.log_masses(L)
    tails = np.arange(block.size, dtype=np.int64) % m.n_states
    return MarkovMeasure(
        m.alphabet,
        L,
        block,
        m.kernel_log[tails],
        stationary=m.stationary or None,
        block_log_error=m.block_log_error,
    )


# ---------------------------------------------------------------------------
# the non-separability family


@dataclass(frozen=True)
class SequenceRule:
    """Eventually periodic infinite sequence: ``prefix`` then ``period`` forever."""

    prefix: tuple[int, ...]
    period: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(s) for s in self.prefix))
        object.__setattr__(self, "period", tuple(int(s) for s in self.period))
        if not self.period:
            raise DomainError("a sequence rule needs a nonempty period")

    @classmethod
    def constant(cls, symbol: int) -> "SequenceRule":
        return cls((), (symbol,))

    def at(self, k: int) -> int:
        """Symbol at 1-based position ``k``."""
        if k < 1:
            raise DomainError("positions are 1-based")
        if k <= len(self.prefix):
            return self.prefix[k - 1]
        return self.period[(k - 1 - len(self.prefix)) % len(self.period)]

    def head(self, n: int) -> np.ndarray:
        return np.array([self.at(k) for k in range(1, n + 1)], dtype=np.int64)

    def first_difference(self, other: "SequenceRule") -> int | None:
        """1-based position of the first disagreement, or None if equal."""
        horizon = max(len(self.prefix), len(other.prefix)) + math.lcm(len(self.period), len(other.period))
        for k in range(1, horizon + 1):
            if self.at(k) != other.at(k):
                return k
        return None


def flip_sequence(x: SequenceRule, p: int) -> SequenceRule:
    """Complement ``x`` at the positions ``1, p+1, 2p+1, ...``."""
    if p < 1:
        raise DomainError("p must be a positive integer")
    start = len(x.prefix)
    span = math.lcm(len(x.period), p)

    def flipped(k):
        s = x.at(k)
        return 1 - s if (k - 1) % p == 0 else s

    return SequenceRule(
        tuple(flipped(k) for k in range(1, start + 1)),
        tuple(flipped(k) for k in range(start + 1, start + span + 1)),
    )


def tau_coupling_disagreement(p: int, n: int) -> Fraction:
    """Disagreement density ``#({1..n} & (pN+1)) / n`` of the tau_p coupling."""
    if p < 1 or n < 1:
        raise DomainError("p and n must be positive")
    return Fraction(-(-n // p), n)


class SeparabilityMeasure:
    """Binary measure concentrated, geometrically, along the sequence ``x``.

    Words that follow ``x`` for their whole length get mass
    ``(alpha/(1+alpha))**n``; a word that leaves ``x`` first at position ``q``
    gets ``alpha**(q-1) (1+alpha)**(-q) 2**(q-n)``.
    """

    alphabet = BINARY

    def __init__(self, x: SequenceRule, alpha: float = SEPARATION_ALPHA):
        if not alpha > 1:
            raise DomainError("alpha must exceed 1")
        if any(s not in (0, 1) for s in x.prefix + x.period):
            raise DomainError("the sequence x must be binary")
        self.x = x
        self.alpha = float(alpha)
        self._la = math.log(self.alpha)
        self._l1a = math.log1p(self.alpha)

    def _class_log_mass(self, n: int, k: int) -> float:
        # k = length of the longest common prefix of the word with x
        if k >= n:
            return n * (self._la - self._l1a)
        q = k + 1
        return (q - 1) * self._la - q * self._l1a + (q - n) * math.log(2.0)

    def log_mass(self, word: Word) -> float:
        return separability_log_mass(self, word)

    def log_masses(self, n: int) -> np.ndarray:
        check_capacity(2**n, "words")
        lm = np.zeros(1)
        on_x = 0
        log2 = math.log(2.0)
        for m in range(n):
            nxt = np.repeat(lm, 2) - log2
            follow = 2 * on_x + self.x.at(m + 1)
            leave = 2 * on_x + (1 - self.x.at(m + 1))
            nxt[follow] = self._class_log_mass(m + 1, m + 1)
            nxt[leave] = self._class_log_mass(m + 1, m)
            lm = nxt
            on_x = follow
        return lm

    def __repr__(self) -> str:
        return f"SeparabilityMeasure(alpha={self.alpha!r}, x={self.x})"


def separability_log_mass(s: SeparabilityMeasure, w: Word) -> float:
    n = len(w)
    if n < 1:
        raise DomainError("cylinder mass needs a word of length >= 1")
    if w.alphabet.size != 2:
        raise DomainError("the separability family lives on a binary alphabet")
    k = 0
    while k < n and w.symbols[k] == s.x.at(k + 1):
        k += 1
    return s._class_log_mass(n, k)


class InducedMeasure:
    """Lift of a binary measure to a larger alphabet through ``projection``.

    The mass of the binary image is spread uniformly over its preimage.
    """

    def __init__(self, base: SeparabilityMeasure, alphabet: Alphabet, projection: Sequence[int]):
        projection = tuple(int(v) for v in projection)
        if len(projection) != alphabet.size:
            raise DomainError("projection needs one value per symbol")
        if set(projection) != {0, 1}:
            raise DomainError("projection must be a surjection onto {0, 1}")
        self.base = base
        self.alphabet = alphabet
        self.projection = projection
        counts = np.array([projection.count(0), projection.count(1)], dtype=float)
        self._log_counts = np.log(counts)

    def log_mass(self, word: Word) -> float:
        return induced_log_mass(self, word)

    def project(self, word: Word) -> Word:
        return Word(BINARY, tuple(self.projection[s] for s in word.symbols))

    def log_masses(self, n: int) -> np.ndarray:
        k = self.alphabet.size
        check_capacity(k**n, "words")
        proj = np.array(self.projection, dtype=np.int64)
        pcode = np.zeros(1, dtype=np.int64)
        penalty = np.zeros(1)
        for _ in range(n):
            pcode = (2 * pcode[:, None] + proj[None, :]).reshape(-1)
            penalty = (penalty[:, None] + self._log_counts[proj][None, :]).reshape(-1)
        return self.base.log_masses(n)[pcode] - penalty

    def __repr__(self) -> str:
        return f"InducedMeasure({self.base!r}, projection={self.projection})"


def induced_log_mass(i: InducedMeasure, w: Word) -> float:
    if len(w) == 0:
        return 0.0
    penalty = math.fsum(i._log_counts[i.projection[s]] for s in w.symbols)
    return i.base.log_mass(i.project(w)) - penalty


def tau_permutation(i: InducedMeasure) -> tuple[int, ...]:
    """A permutation of A swapping the two projection classes.

    Exists only when both classes have the same size.
    """
    zeros = [a for a, v in enumerate(i.projection) if v == 0]
    ones = [a for a, v in enumerate(i.projection) if v == 1]
    if len(zeros) != len(ones):
        raise DomainError("tau needs #pi^-1(0) == #pi^-1(1)")
    perm = [0] * i.alphabet.size
    for a, b in zip(zeros, ones):
        perm[a], perm[b] = b, a
    return tuple(perm)


def tau_p(word: Word, p: int, perm: Sequence[int]) -> Word:
    """Apply ``perm`` at the positions ``1, p+1, 2p+1, ...`` of ``word``."""
    return Word(word.alphabet, tuple(perm[s] if k % p == 0 else s for k, s in enumerate(word.symbols)))
