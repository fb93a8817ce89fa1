"""Vague, projective and d-bar distances between measures on A^N.

Every distance is reported as an :class:`~shiftmetrics.enclosure.Enclosure`
holding the target quantity.  One-sided results use ``inf`` (or the trivial
bound 1 for d-bar) on the open side.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.sparse.csgraph import connected_components

from . import _cycles
from .enclosure import Enclosure
from .errors import DomainError
from .gfun import log_ratio_norm, markov_to_g, svar
from .measures import (
    CylinderOracle,
    InducedMeasure,
    MarkovMeasure,
    SeparabilityMeasure,
    lift_order,
)
from .symbolic import check_capacity

__all__ = [
    "MeanCycleCertificate",
    "vague_distance",
    "projective_truncated",
    "projective_markov",
    "projective_upper_technical",
    "dbar_upper_markov",
    "dbar_lower_blocks",
]

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


def _same_alphabet(a, b):
    if a.alphabet != b.alphabet:
        raise DomainError("measures live on different alphabets")
    return a.alphabet.size


def _abs_mass_diff(la: np.ndarray, lb: np.ndarray) -> np.ndarray:
    # |e^la - e^lb| without cancellation
    hi = np.maximum(la, lb)
    return np.exp(hi) * -np.expm1(-np.abs(la - lb))


# ---------------------------------------------------------------------------
# vague distance


def _same_measure(a, b) -> bool:
    if a is b:
        return True
    return (isinstance(a, MarkovMeasure) and isinstance(b, MarkovMeasure) and a.order == b.order
            and np.array_equal(a.block_log, b.block_log) and np.array_equal(a.kernel_log, b.kernel_log))


def _levels(m, N):
    if hasattr(m, "iter_log_masses"):
        return m.iter_log_masses(N)
    return (m.log_masses(n) for n in range(1, N + 1))


def vague_distance(a: CylinderOracle, b: CylinderOracle, N: int) -> Enclosure:
    """``sum_n 2^-n sum_{|w|=n} |a[w] - b[w]|`` truncated at depth ``N``.

    Each inner sum is at most 2, so the neglected tail is below ``2^(1-N)``.
    """
    if N < 1:
        raise DomainError("depth N must be >= 1")
    k = _same_alphabet(a, b)
    check_capacity(k**N, "words")
    if _same_measure(a, b):
        return Enclosure(0.0, math.ldexp(1.0, 1 - N), "vague", {"depth": N, "rounding_pad": 0.0})
    block_err = getattr(a, "block_log_error", 0.0) + getattr(b, "block_log_error", 0.0)
    terms, errs = [], []
    for n, (la, lb) in enumerate(zip(_levels(a, N), _levels(b, N)), start=1):
        la, lb = np.asarray(la), np.asarray(lb)
        d = _abs_mass_diff(la, lb)
        s = float(d.sum())
        # log masses carry absolute error ~ n eps |log mass|; the masses of
        # each measure sum to 1, so the level sum moves by at most twice that
        scale = float(np.max(np.abs(la))) + float(np.max(np.abs(lb)))
        err = 4 * (n + 2) * _EPS * scale + 2 * math.expm1(block_err) + (math.log2(d.size) + 8) * _EPS * s
        terms.append(math.ldexp(s, -n))
        errs.append(math.ldexp(err, -n))
    total = math.fsum(terms)
    pad = math.fsum(errs)
    return Enclosure(max(total - pad, 0.0), total + pad + math.ldexp(1.0, 1 - N), "vague",
                     {"depth": N, "rounding_pad": pad})


# ---------------------------------------------------------------------------
# truncated projective distance


def _separability_pair_sup(s1: SeparabilityMeasure, s2: SeparabilityMeasure, N: int) -> float:
    # Words are grouped by the lengths (kx, ky) of their common prefixes with x
    # and y.  Below the first disagreement c+1 of x and y both agree; beyond it
    # one of the two is stuck at c.
    diff = s1.x.first_difference(s2.x)
    c = None if diff is None else diff - 1
    best = 0.0
    for n in range(1, N + 1):
        if c is None or n <= c:
            pairs = [(kk, kk) for kk in range(n + 1)]
        else:
            pairs = [(kk, kk) for kk in range(c)]
            pairs += [(kk, c) for kk in range(c + 1, n + 1)]
            pairs += [(c, kk) for kk in range(c + 1, n + 1)]
        for kx, ky in pairs:
            r = abs(s1._class_log_mass(n, kx) - s2._class_log_mass(n, ky)) / n
            best = max(best, r)
    return best


def _markov_pair_truncated(m1: MarkovMeasure, m2: MarkovMeasure, N: int) -> float:
    k = m1.alphabet.size
    L = max(m1.order, m2.order)
    best = 0.0
    for n in range(1, min(N, L - 1) + 1):
        r = np.abs(m1.log_masses(n) - m2.log_masses(n))
        best = max(best, float(r.max()) / n)
    if N < L:
        return best
    l1, l2 = lift_order(m1, L), lift_order(m2, L)
    pred, sym = _cycles.de_bruijn_pred(k, L)
    w = l1.kernel_log - l2.kernel_log
    wp = w[pred, sym[:, None]]
    vmax = l1.block_log - l2.block_log
    vmin = vmax.copy()
    for n in range(L, N + 1):
        if n > L:
            vmax = _cycles.max_plus_step(vmax, pred, wp)
            vmin = -_cycles.max_plus_step(-vmin, pred, -wp)
        best = max(best, max(float(vmax.max()), -float(vmin.min())) / n)
    return best


def projective_truncated(a: CylinderOracle, b: CylinderOracle, N: int, method: str = "auto") -> Enclosure:
    """Lower bound ``max_{n <= N} max_{|w| = n} |log(a[w]/b[w])| / n`` on rho.

    ``method`` is ``"enumerate"``, ``"dp"`` (Markov pairs), ``"classes"``
    (pairs from the separability family or their induced lifts) or
    ``"auto"``, which picks the cheapest applicable one.
    """
    if N < 1:
        raise DomainError("depth N must be >= 1")
    k = _same_alphabet(a, b)
    if method == "auto":
        if isinstance(a, SeparabilityMeasure) and isinstance(b, SeparabilityMeasure):
            method = "classes"
        elif (
            isinstance(a, InducedMeasure)
            and isinstance(b, InducedMeasure)
            and a.projection == b.projection
        ):
            method = "classes"
        elif isinstance(a, MarkovMeasure) and isinstance(b, MarkovMeasure):
            method = "dp"
        else:
            method = "enumerate"
    if method == "classes":
        if isinstance(a, InducedMeasure):
            if not (isinstance(b, InducedMeasure) and a.projection == b.projection):
                raise DomainError("class reduction needs induced measures with one projection")
            # the uniform spreading factors cancel in every ratio
            val = _separability_pair_sup(a.base, b.base, N)
        elif isinstance(a, SeparabilityMeasure) and isinstance(b, SeparabilityMeasure):
            val = _separability_pair_sup(a, b, N)
        else:
            raise DomainError("class reduction applies to the separability family only")
    elif method == "dp":
        if not (isinstance(a, MarkovMeasure) and isinstance(b, MarkovMeasure)):
            raise DomainError("the DP path needs two Markov measures")
        check_capacity(k ** max(a.order, b.order), "Markov block states")
        val = _markov_pair_truncated(a, b, N)
    elif method == "enumerate":
        check_capacity(k**N, "words")
        val = 0.0
        for n in range(1, N + 1):
            r = np.abs(np.asarray(a.log_masses(n)) - np.asarray(b.log_masses(n)))
            val = max(val, float(r.max()) / n)
    else:
        raise DomainError(f"unknown method {method!r}")
    return Enclosure(val, math.inf, f"truncated-{method}", {"depth": N})


# ---------------------------------------------------------------------------
# exact projective distance between Markov measures


@dataclass(frozen=True)
class MeanCycleCertificate:
    """Max-mean-cycle data for one orientation of the log-ratio weights.

    ``cycle`` lists ``L``-block codes, ``bias_max`` is the final transient
    excess ``K`` (the per-length tail is ``lambda_star + eta + K/n``), ``eta``
    the slack that made the potentials converge and ``sign`` is +1 or -1.
    """

    lambda_star: float
    cycle: tuple[int, ...]
    cycle_mean: float
    bias_max: float
    eta: float
    sign: int


def _potentials(pred, wred, init, scale):
    # try successively larger slacks until the relaxation settles
    for eta in (0.0, 1e-13 * scale, 1e-11 * scale, 1e-9 * scale):
        h = _cycles.longest_potential(pred, wred - eta, init)
        if h is not None:
            return h, eta
    raise DomainError("potential relaxation did not settle; weights are ill-conditioned")


def _orientation(w, f, k, L, sign):
    n = w.shape[0]
    w = sign * w
    f = sign * f
    scale = 1.0 + float(np.max(np.abs(w)))
    pred, sym = _cycles.de_bruijn_pred(k, L)
    wp = w[pred, sym[:, None]]
    succ = (np.arange(n)[:, None] * k + np.arange(k)[None, :]) % n
    lam = _cycles.karp_max_mean(pred, wp)
    # forward bias: longest reduced path starting at each block
    H, eta = _potentials(succ, w - lam, np.zeros(n), scale)
    G, eta2 = _potentials(pred, wp - lam - eta, np.zeros(n), scale)
    eta = eta + eta2
    tight_tol = eta * n + 1e-12 * scale
    cyc = _cycles.critical_cycle(pred, wp - lam, 0.0, G, tight_tol)
    if cyc is not None:
        cyc = _cycles.canonical_rotation(cyc)
        mean = _cycles.cycle_mean(cyc, pred, wp)
    else:
        mean = -math.inf
    return {
        "pred": pred,
        "wp": wp,
        "H": H,
        "lam": lam,
        "eta": eta,
        "cycle": tuple(cyc or ()),
        "cycle_mean": mean,
        "V": f.copy(),
        "best": -math.inf,
        "sign": sign,
    }


def projective_markov(
    m1: MarkovMeasure,
    m2: MarkovMeasure,
    tol: float = 1e-9,
    *,
    max_steps: int = 20_000,
) -> Enclosure:
    """Certified enclosure of the projective distance between two Markov measures.

    Both chains are lifted to the common order ``L``.  A word of length
    ``n >= L`` contributes ``f(first block) + sum of edge weights`` along its
    walk on the de Bruijn graph over ``A^L``, with ``f`` the log-ratio of the
    block laws and ``w(c, b)`` that of the kernels.  For each sign of the
    weights:

    * Karp's algorithm gives the max cycle mean ``lambda``; repeating a best
      cycle shows ``rho >= lambda``;
    * a forward potential ``H`` for the reduced weights ``w - lambda`` bounds
      any continuation, so after ``J`` steps of the max-plus recursion
      ``V_J`` every longer word has ratio at most
      ``lambda + K_J / (L + J + 1)`` with
      ``K_J = max(V_J - J lambda + H) - L lambda``, nonincreasing in ``J``.

    The recursion runs until the two sides are within ``tol`` or
    ``max_steps`` is reached, in which case the certified enclosure found so
    far is returned with ``converged`` false.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    k = _same_alphabet(m1, m2)
    L = max(m1.order, m2.order)
    n_states = check_capacity(k**L, "Markov block states")
    l1, l2 = lift_order(m1, L), lift_order(m2, L)
    w = l1.kernel_log - l2.kernel_log
    f = l1.block_log - l2.block_log

    # words shorter than L: computed ratios carry rounding of order n eps |log mass|
    short_lo = short_hi = 0.0
    block_err = l1.block_log_error + l2.block_log_error
    for n in range(1, L):
        a, b = m1.log_masses(n), m2.log_masses(n)
        r = np.abs(a - b)
        err = 4 * (n + 1) * _EPS * float(np.max(np.abs(a) + np.abs(b))) + 2 * block_err
        short_lo = max(short_lo, (float(r.max()) - err) / n)
        short_hi = max(short_hi, (float(r.max()) + err) / n)

    magnitude = float(np.max(np.abs(w))) + float(np.max(np.abs(f)))
    if magnitude == 0.0:
        # equal lifted block laws and kernels determine equal measures
        return Enclosure(0.0, 0.0, "karp+dp", {"N": L, "lambda_star": 0.0, "converged": True})
    pad = 64 * _EPS * (L + 1) * magnitude + 2 * block_err

    sides = [_orientation(w, f, k, L, s) for s in (1, -1)]
    J = 0
    converged = False
    while True:
        lo = 0.0
        hi = short_hi
        for s in sides:
            s["best"] = max(s["best"], float(s["V"].max()) / (L + J))
            lam_up = s["lam"] + s["eta"]
            K = float(np.max(s["V"] - J * lam_up + s["H"])) - L * lam_up
            tail = lam_up + K / (L + J + 1) if K > 0 else lam_up
            s["K"] = K
            lo = max(lo, s["best"], s["cycle_mean"])
            hi = max(hi, s["best"], tail)
        # computed ratios of actual words are exact up to pad
        lo = max(short_lo, lo - pad, 0.0)
        if hi + pad - lo <= tol:
            converged = True
            break
        if J >= max_steps:
            log.warning("projective_markov: gap %.3e above tol after %d steps", hi - lo, J)
            break
        for s in sides:
            s["V"] = _cycles.max_plus_step(s["V"], s["pred"], s["wp"])
        J += 1

    top = max(sides, key=lambda s: s["lam"])
    certs = [
        MeanCycleCertificate(s["lam"], s["cycle"], s["cycle_mean"], s["K"], s["eta"], s["sign"])
        for s in sides
    ]
    return Enclosure(
        lo,
        hi + pad,
        "karp+dp",
        {
            "N": L + J,
            "lambda_star": top["lam"],
            "sign": top["sign"],
            "cycle": list(top["cycle"]),
            "bias_max": top["K"],
            "converged": converged,
            "certificates": certs,
            "states": n_states,
        },
    )


def projective_upper_technical(m1: MarkovMeasure, m2: MarkovMeasure) -> Enclosure:
    """``2 |log(g_1/g_2)|_sup exp(min svar_L)`` for stationary chains of common order ``L``.

    Returned as ``[0, bound]``.
    """
    if not (m1.stationary and m2.stationary):
        raise DomainError("the technical bound needs stationary measures")
    _same_alphabet(m1, m2)
    L = max(m1.order, m2.order)
    g1 = markov_to_g(lift_order(m1, L))
    g2 = markov_to_g(lift_order(m2, L))
    eps = log_ratio_norm(g1, g2)
    s = min(svar(g1, L), svar(g2, L))
    bound = 2.0 * eps * math.exp(s)
    return Enclosure(0.0, bound * (1 + 8 * _EPS), "technical", {"epsilon": eps, "svar": s, "order": L})


# ---------------------------------------------------------------------------
# d-bar bounds


def dbar_lower_blocks(a: CylinderOracle, b: CylinderOracle, m: int) -> Enclosure:
    """``TV(a_m, b_m) / m`` from the ``m``-block marginals, as ``[value, 1]``.

    Any coupling of stationary processes makes the expected number of
    disagreements in an ``m``-block at least the chance the blocks differ.
    """
    if m < 1:
        raise DomainError("block length m must be >= 1")
    k = _same_alphabet(a, b)
    check_capacity(k**m, "words")
    d = _abs_mass_diff(np.asarray(a.log_masses(m)), np.asarray(b.log_masses(m)))
    val = 0.5 * math.fsum(d) / m
    return Enclosure(min(val, 1.0), 1.0, "dbar-lower", {"block": m})


def _nw_corner(r, c, row_perm, col_perm):
    # north-west corner plans for a batch of marginal pairs (states x k)
    S, k = r.shape
    plan = np.zeros((S, k, k))
    rr = r[:, row_perm].copy()
    cc = c[:, col_perm].copy()
    i = np.zeros(S, dtype=np.int64)
    j = np.zeros(S, dtype=np.int64)
    idx = np.arange(S)
    for _ in range(2 * k - 1):
        active = (i < k) & (j < k)
        if not active.any():
            break
        ia, ja, sa = i[active], j[active], idx[active]
        q = np.minimum(rr[sa, ia], cc[sa, ja])
        plan[sa, np.asarray(row_perm)[ia], np.asarray(col_perm)[ja]] += q
        rr[sa, ia] -= q
        cc[sa, ja] -= q
        row_done = rr[sa, ia] <= cc[sa, ja]
        i[sa[row_done]] += 1
        j[sa[~row_done]] += 1
    return plan


def _transport_batch(r, c, cost):
    """Cheapest coupling of ``r[s]`` and ``c[s]`` under ``cost[s]`` for every state."""
    S, k = r.shape
    if k <= 3:
        best = None
        best_val = np.full(S, np.inf)
        for rp in itertools.permutations(range(k)):
            for cp in itertools.permutations(range(k)):
                plan = _nw_corner(r, c, rp, cp)
                val = np.einsum("sij,sij->s", plan, cost)
                better = val < best_val - 1e-15
                if best is None:
                    best = plan
                    best_val = val
                else:
                    best[better] = plan[better]
                    best_val = np.where(better, val, best_val)
        return best, best_val
    # the per-state problems are independent: solve them as one block-diagonal LP
    A = np.zeros((2 * k - 1, k * k))
    for a in range(k):
        A[a, a * k : (a + 1) * k] = 1.0
    for a in range(k - 1):
        A[k + a, a::k] = 1.0
    A_eq = sp.block_diag([sp.csr_matrix(A)] * S, format="csr")
    b_eq = np.concatenate([r, c[:, :-1]], axis=1).ravel()
    res = linprog(cost.reshape(-1), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise DomainError(f"transport LP failed: {res.message}")
    plans = np.maximum(res.x.reshape(S, k, k), 0.0)
    vals = np.einsum("sij,sij->s", plans, cost)
    return plans, vals


def _maximal_coupling(r, c):
    S, k = r.shape
    diag = np.minimum(r, c)
    ur = r - diag
    uc = c - diag
    mass = ur.sum(axis=1)
    plan = np.zeros((S, k, k))
    plan[:, np.arange(k), np.arange(k)] = diag
    nz = mass > 0
    plan[nz] += ur[nz, :, None] * uc[nz, None, :] / mass[nz, None, None]
    return plan


def _coupling_value(plans, nxt, disagree):
    """Long-run disagreement of a Markovian coupling, minimized over closed classes."""
    S = plans.shape[0]
    k2 = plans.shape[1] * plans.shape[2]
    probs = plans.reshape(S, k2)
    rows = np.repeat(np.arange(S), k2)
    cols = nxt.reshape(-1)
    keep = probs.reshape(-1) > 0
    P = sp.csr_matrix((probs.reshape(-1)[keep], (rows[keep], cols[keep])), shape=(S, S))
    P.sum_duplicates()
    cost = (probs * disagree.reshape(1, k2)).sum(axis=1)
    ncomp, labels = connected_components(P, directed=True, connection="strong")
    coo = P.tocoo()
    leaving = np.zeros(ncomp, dtype=bool)
    leaving[labels[coo.row][labels[coo.row] != labels[coo.col]]] = True
    best = math.inf
    for comp in np.flatnonzero(~leaving):
        members = np.flatnonzero(labels == comp)
        sub = P[members][:, members].toarray()
        m = members.size
        A = sub.T - np.eye(m)
        A[-1, :] = 1.0
        rhs = np.zeros(m)
        rhs[-1] = 1.0
        pi = np.linalg.lstsq(A, rhs, rcond=None)[0]
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
        best = min(best, float(pi @ cost[members]))
    return best


def dbar_upper_markov(m1: MarkovMeasure, m2: MarkovMeasure, *, max_iter: int = 5000, tol: float = 1e-12) -> Enclosure:
    """Upper bound on d-bar from a stationary Markovian coupling.

    The coupling lives on pairs of ``L``-blocks.  Relative value iteration on
    the average-disagreement problem picks a transport plan per state; the
    resulting policy, the greedy maximal coupling and the independent coupling
    are then evaluated exactly and the smallest value is returned.  Any closed
    class of a Markovian coupling carries a stationary coupling of the two
    processes, so every candidate value is a valid upper bound.

    Returned as ``[TV_1, upper]``: the one-symbol lower bound is free.
    """
    if not (m1.stationary and m2.stationary):
        raise DomainError("d-bar coupling bounds need stationary measures")
    k = _same_alphabet(m1, m2)
    L = max(m1.order, m2.order)
    n = k**L
    S = check_capacity(n * n, "product chain states")
    p1 = lift_order(m1, L).kernel
    p2 = lift_order(m2, L).kernel
    s1 = np.repeat(np.arange(n), n)
    s2 = np.tile(np.arange(n), n)
    r = p1[s1]
    c = p2[s2]
    b = np.arange(k)
    nx1 = (s1[:, None] * k + b[None, :]) % n
    nx2 = (s2[:, None] * k + b[None, :]) % n
    nxt = nx1[:, :, None] * n + nx2[:, None, :]
    disagree = 1.0 - np.eye(k)

    h = np.zeros(S)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        cost = disagree[None, :, :] + h[nxt]
        plans, vals = _transport_batch(r, c, cost)
        # aperiodicity transform keeps the iteration from oscillating
        new = 0.5 * vals + 0.5 * h
        new = new - new[0]
        span = float(np.max(new - h) - np.min(new - h))
        h = new
        if span < tol:
            converged = True
            break
    plans, _ = _transport_batch(r, c, disagree[None, :, :] + h[nxt])

    candidates = {
        "optimized": _coupling_value(plans, nxt, disagree),
        "maximal": _coupling_value(_maximal_coupling(r, c), nxt, disagree),
        "independent": _coupling_value(r[:, :, None] * c[:, None, :], nxt, disagree),
    }
    which = min(candidates, key=candidates.get)
    upper = min(1.0, candidates[which] + 64 * _EPS * S)
    lower = dbar_lower_blocks(m1, m2, 1).lo
    return Enclosure(
        min(lower, upper),
        upper,
        "dbar-upper",
        {"coupling": which, "candidates": candidates, "iterations": it, "converged": converged, "states": S},
    )
