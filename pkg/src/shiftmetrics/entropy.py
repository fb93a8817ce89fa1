"""Entropy rates, relative entropy rates and the variational identity for g-measures.

All quantities are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .enclosure import Enclosure
from .errors import DomainError
from .gfun import GFunction
from .measures import MarkovMeasure, lift_order
from .symbolic import check_capacity

__all__ = [
    "EntropyReport",
    "markov_entropy",
    "relative_entropy_rate",
    "relative_entropy_truncated",
    "integral_log_g",
    "variational_defect",
    "entropy_report",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class EntropyReport:
    entropy: float
    relative_entropy: float | None = None
    integral_log_g: Enclosure | None = None
    defect: Enclosure | None = None

    def as_dict(self) -> dict:
        return {
            "entropy": self.entropy,
            "relative_entropy": self.relative_entropy,
            "integral_log_g": None if self.integral_log_g is None else self.integral_log_g.as_dict(),
            "defect": None if self.defect is None else self.defect.as_dict(),
        }


def _require_stationary(*ms):
    for m in ms:
        if not m.stationary:
            raise DomainError("entropy rates are defined here for stationary measures")


def markov_entropy(m: MarkovMeasure) -> float:
    """``-sum_a mu[a] sum_b p(b|a) log p(b|a)``."""
    _require_stationary(m)
    terms = m.block_dist[:, None] * m.kernel * m.kernel_log
    h = -math.fsum(terms.ravel())
    return min(max(h, 0.0), math.log(m.alphabet.size))


def relative_entropy_rate(p: MarkovMeasure, q: MarkovMeasure) -> float:
    """``sum_a mu_p[a] sum_b p(b|a) log(p(b|a)/q(b|a))`` on the common order."""
    _require_stationary(p, q)
    if p.alphabet != q.alphabet:
        raise DomainError("measures live on different alphabets")
    L = max(p.order, q.order)
    check_capacity(p.alphabet.size ** (L + 1), "words")
    lp, lq = lift_order(p, L), lift_order(q, L)
    terms = lp.block_dist[:, None] * lp.kernel * (lp.kernel_log - lq.kernel_log)
    return max(math.fsum(terms.ravel()), 0.0)


def relative_entropy_truncated(p: MarkovMeasure, q: MarkovMeasure, n: int) -> float:
    """``(1/n) sum_{|w| = n} p[w] log(p[w]/q[w])``, the finite-``n`` form of the rate."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if p.alphabet != q.alphabet:
        raise DomainError("measures live on different alphabets")
    check_capacity(p.alphabet.size**n, "words")
    a = p.log_masses(n)
    b = q.log_masses(n)
    return math.fsum(np.exp(a) * (a - b)) / n


def integral_log_g(g: GFunction, m: MarkovMeasure, depth: int) -> Enclosure:
    """Enclosure of ``int log g dmu`` from interval bounds on length-``depth`` cylinders."""
    _require_stationary(m)
    if g.alphabet != m.alphabet:
        raise DomainError("g and the measure live on different alphabets")
    need = max(g.exact_range or 1, m.order)
    if depth < need:
        raise DomainError(f"depth must be at least {need}")
    check_capacity(m.alphabet.size**depth, "words")
    lm = m.log_masses(depth)
    w = np.exp(lm)
    lo_t, hi_t = g.log_interval_table(depth)
    lo = math.fsum(w * lo_t)
    hi = math.fsum(w * hi_t)
    # masses carry a relative error from the block law and from rounding
    rel = math.expm1(m.block_log_error + 4 * depth * _EPS)
    scale = math.fsum(w * np.maximum(np.abs(lo_t), np.abs(hi_t)))
    pad = rel * scale + 4 * _EPS * scale
    return Enclosure(lo - pad, hi + pad, "interval-sum", {"depth": depth})


def variational_defect(g: GFunction, m: MarkovMeasure, depth: int) -> Enclosure:
    """Enclosure of ``h(mu) + int log g dmu``; zero exactly when ``mu`` is a g-measure."""
    integ = integral_log_g(g, m, depth)
    h = markov_entropy(m)
    # h depends smoothly on the block law; its rounding and solver error are padded
    herr = (math.expm1(m.block_log_error) + 8 * _EPS) * (abs(h) + float(np.max(np.abs(m.kernel_log))))
    return Enclosure(h + integ.lo - herr, h + integ.hi + herr, "variational-defect", {"depth": depth})


def entropy_report(m: MarkovMeasure, ref: MarkovMeasure | None = None, g: GFunction | None = None,
                   depth: int | None = None) -> EntropyReport:
    h = markov_entropy(m)
    rel = relative_entropy_rate(m, ref) if ref is not None else None
    integ = defect = None
    if g is not None:
        d = depth if depth is not None else max(g.exact_range or 1, m.order)
        integ = integral_log_g(g, m, d)
        defect = variational_defect(g, m, d)
    return EntropyReport(h, rel, integ, defect)
