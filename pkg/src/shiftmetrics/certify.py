"""Uniqueness certificates for schemes of locally constant g-functions.

A scheme supplies tables ``g_l`` approximating a g-function ``g`` and
certified envelopes ``eps_l >= |log(g/g_l)|`` and ``svar_l >= svar_l(log g_l)``.
With ``c_l = eps_l exp(svar_l)`` the Markov measures of the ``g_l`` satisfy
``rho(mu_m, mu_l) <= 2 (c_l + c_m)``; when ``sup_{m >= l} c_m -> 0`` they form
a Cauchy sequence and ``g`` has a unique g-measure, their limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import polygamma

from .distances import projective_markov
from .enclosure import Enclosure
from .errors import DomainError, EnvelopeError
from .gfun import (
    GFunction,
    HulseG,
    LocallyConstantG,
    LongRangeIsingG,
    g_to_markov,
    hulse_g,
    log_ratio_norm,
    long_range_g,
    svar,
)
from .symbolic import capacity

__all__ = [
    "ApproximationScheme",
    "CertificateRow",
    "UniquenessCertificate",
    "certify_scheme",
    "long_range_scheme",
    "table_scheme",
    "hulse_distance_probe",
    "CONVERGES",
    "INCONCLUSIVE",
]

CONVERGES = "CONVERGES"
INCONCLUSIVE = "INCONCLUSIVE"

_ENVELOPE_SLACK = 1e-12


@dataclass(frozen=True)
class ApproximationScheme:
    """Approximating tables with certified error envelopes.

    ``tail_envelope(l)`` must bound ``sup_{m >= l} c_m``.  ``monotone_tail``
    attests analytically that this bound tends to 0; without it the
    certificate cannot conclude.  ``range_of(l)`` is the range of ``g_at(l)``.
    """

    name: str
    g_at: Callable[[int], LocallyConstantG]
    eps_envelope: Callable[[int], float]
    svar_envelope: Callable[[int], float]
    tail_envelope: Callable[[int], float]
    monotone_tail: bool
    range_of: Callable[[int], int]
    limit: GFunction | None = None
    formulas: dict = field(default_factory=dict)

    def c(self, ell: int) -> float:
        return self.eps_envelope(ell) * math.exp(self.svar_envelope(ell))


@dataclass(frozen=True)
class CertificateRow:
    ell: int
    eps: float
    svar: float
    c: float
    cauchy_bound: float


@dataclass(frozen=True)
class UniquenessCertificate:
    scheme: str
    rows: tuple[CertificateRow, ...]
    verdict: str
    formulas: dict
    diagnostics: dict = field(default_factory=dict)
    _tail: Callable[[int], float] | None = field(default=None, repr=False, compare=False)

    def limit_distance_bound(self, ell: int) -> float:
        """``sup_{m >= l} 2 (c_l + c_m)``, a bound on ``rho(mu, mu_l)``."""
        if self.verdict != CONVERGES or self._tail is None:
            return math.inf
        row = next((r for r in self.rows if r.ell == ell), None)
        if row is None:
            raise DomainError(f"no certificate row for ell={ell}")
        return row.cauchy_bound

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "verdict": self.verdict,
            "formulas": dict(self.formulas),
            "rows": [
                {"ell": r.ell, "eps_ell": r.eps, "svar_ell": r.svar, "c_ell": r.c, "cauchy_bound": r.cauchy_bound}
                for r in self.rows
            ],
            "diagnostics": dict(self.diagnostics),
        }


def _eps_lower(limit: GFunction, table: LocallyConstantG, depth: int) -> float:
    # a certified lower bound on sup |log g - log g_l|: some value of log g on
    # each cylinder lies in [lo, hi], so |value - x| >= |mid - x| - half-width
    lo, hi = limit.log_interval_table(depth)
    x = np.log(table.lift(depth))
    return float(np.max(np.abs(0.5 * (lo + hi) - x) - 0.5 * (hi - lo)))


def certify_scheme(s: ApproximationScheme, ell_max: int, tol: float = _ENVELOPE_SLACK, *,
                   check_depth: int = 6) -> UniquenessCertificate:
    """Rows ``(l, eps_l, svar_l, c_l, 2 (c_l + sup_{m>=l} c_m))`` for ``l <= ell_max``.

    Envelopes are cross-checked against directly computed values: ``svar`` of
    the table exactly, and a lower bound on ``|log(g/g_l)|`` when the scheme
    carries its limit.  A computed value above its envelope (beyond ``tol``)
    raises :class:`EnvelopeError`.
    """
    if ell_max < 1:
        raise DomainError("ell_max must be >= 1")
    rows = []
    problems = []
    for ell in range(1, ell_max + 1):
        eps = float(s.eps_envelope(ell))
        sv = float(s.svar_envelope(ell))
        table = s.g_at(ell)
        sv_direct = svar(table, ell)
        if sv_direct > sv * (1 + tol) + tol:
            problems.append({"ell": ell, "what": "svar", "computed": sv_direct, "envelope": sv})
        if s.limit is not None and s.limit is not table:
            depth = s.range_of(ell) + check_depth
            if s.limit.alphabet.size**depth <= capacity():
                e_low = _eps_lower(s.limit, table, depth)
                if e_low > eps * (1 + tol) + tol:
                    problems.append({"ell": ell, "what": "eps", "computed": e_low, "envelope": eps})
        c = eps * math.exp(sv)
        cauchy = 2.0 * (c + s.tail_envelope(ell)) if s.monotone_tail else math.inf
        rows.append(CertificateRow(ell, eps, sv, c, cauchy))
    if problems:
        raise EnvelopeError("computed values exceed the scheme's envelopes", diagnostics={"violations": problems})
    verdict = CONVERGES if s.monotone_tail else INCONCLUSIVE
    return UniquenessCertificate(
        s.name,
        tuple(rows),
        verdict,
        dict(s.formulas),
        {"ell_max": ell_max},
        s.tail_envelope if s.monotone_tail else None,
    )


def long_range_scheme(beta: float) -> ApproximationScheme:
    """Scheme ``g_l = psi(beta x_1 sum_{k=2}^{l} x_k k^-2)`` for the long-range spin model.

    ``g_l`` has range ``l``.  The envelopes are ``eps_l = 2 beta sum_{k>l} k^-2``
    and ``svar_l = 4 beta sum_{k=2}^{l} (k-1) k^-2``; both are below
    ``2 beta / l`` and ``4 beta log l``, so ``c_m <= 2 beta m^(4 beta - 1)``,
    which is nonincreasing and tends to 0 exactly when ``beta < 1/4``.
    """
    if not beta >= 0:
        raise DomainError("beta must be nonnegative")
    beta = float(beta)
    pad = 1.0 + 1e-13

    def eps(ell):
        return 2.0 * beta * float(polygamma(1, ell + 1)) * pad

    def sv(ell):
        return 4.0 * beta * math.fsum((k - 1) / (k * k) for k in range(2, ell + 1)) * pad

    def tail(ell):
        return 2.0 * beta * ell ** (4.0 * beta - 1.0)

    return ApproximationScheme(
        name=f"long_range(beta={beta!r})",
        g_at=lambda ell: long_range_g(beta, ell),
        eps_envelope=eps,
        svar_envelope=sv,
        tail_envelope=tail,
        monotone_tail=beta < 0.25,
        range_of=lambda ell: ell,
        limit=LongRangeIsingG(beta),
        formulas={
            "eps_ell": "2*beta*sum_{k>ell} k^-2",
            "svar_ell": "4*beta*sum_{k=2}^{ell} (k-1)*k^-2",
            "c_ell": "eps_ell*exp(svar_ell)",
            "sup_{m>=ell} c_m": "2*beta*ell^(4*beta-1)  (nonincreasing iff beta < 1/4)",
            "range": "g_ell has range ell",
        },
    )


def table_scheme(tables: list[LocallyConstantG], name: str = "tables") -> ApproximationScheme:
    """Finite list of tables whose last entry is the limit, repeated forever.

    Envelopes are exact: ``eps_l = |log(g_last/g_l)|`` and ``svar_l`` of the
    table itself.  The scheme is eventually constant, so the tail supremum is
    a finite maximum.
    """
    if not tables:
        raise DomainError("a table scheme needs at least one table")
    limit = tables[-1]

    def g_at(ell):
        return tables[min(ell, len(tables)) - 1]

    def eps(ell):
        return log_ratio_norm(g_at(ell), limit)

    def sv(ell):
        return svar(g_at(ell), ell)

    def c(ell):
        return eps(ell) * math.exp(sv(ell))

    def tail(ell):
        return max((c(m) for m in range(ell, len(tables) + 1)), default=0.0)

    return ApproximationScheme(
        name=name,
        g_at=g_at,
        eps_envelope=eps,
        svar_envelope=sv,
        tail_envelope=tail,
        monotone_tail=True,
        range_of=lambda ell: g_at(ell).range,
        limit=limit,
        formulas={
            "eps_ell": "max |log(g_last/g_ell)| (exact)",
            "svar_ell": "sum_{k<=ell} var_k log g_ell (exact)",
            "c_ell": "eps_ell*exp(svar_ell)",
            "sup_{m>=ell} c_m": "max over the listed tables",
        },
    )


def hulse_distance_probe(params: HulseG, tol: float = 1e-9) -> Enclosure:
    """Projective enclosure between the Markov measures of ``g_l`` and ``g'_l``."""
    mu = g_to_markov(hulse_g(params.with_primed(False)))
    mu_p = g_to_markov(hulse_g(params.with_primed(True)))
    enc = projective_markov(mu, mu_p, tol)
    meta = dict(enc.meta)
    meta.update({"level": params.level, "range": params.Lambda[params.level - 1]})
    return Enclosure(enc.lo, enc.hi, "hulse-probe", meta)
