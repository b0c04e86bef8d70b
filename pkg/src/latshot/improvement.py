"""Shot budgets and noise-free sampling-improvement quantities.

The cost of measuring a partitioning with an optimally split shot budget M is
(sum_b sqrt(Var(H_b)))^2 / M; the M-independent square is what partition_cost
returns, and the ratio of two such costs is the relative sampling complexity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .lattice import Lattice
from .partition import CutPair, Partitioning, parse_kind
from .paulis import PauliSum
from .spectral import apply as apply_op
from .spectral import _amps, correlation, expectation, variance

import numpy as np

EIGENSTATE_TOL = 1e-8
DIVERGENCE_TOL = 1e-9


def _parts_of(parts) -> Sequence[PauliSum]:
    if isinstance(parts, Partitioning):
        return parts.parts
    return tuple(parts)


def part_variances(parts, psi) -> list[float]:
    return [variance(p, psi) for p in _parts_of(parts)]


# ---------------------------------------------------------------------------
# optimal shot allocation


@dataclass(frozen=True)
class Allocation:
    budgets: tuple[int, ...]
    total: int
    achieved_cost: float


def optimal_allocation(variances: Sequence[float], M: int) -> Allocation:
    """Integer shot split with M_b proportional to sqrt(Var_b).

    Zero-variance parts still get one shot each (their deterministic mean
    must be recorded) whenever the budget covers every part; the remaining
    budget is split by largest-remainder rounding of the continuous optimum,
    and every positive-variance part keeps at least one shot.
    """
    var = [float(v) for v in variances]
    if any(v < 0 for v in var):
        raise ValueError("variances must be nonnegative")
    pos = [i for i, v in enumerate(var) if v > 0]
    zero = [i for i, v in enumerate(var) if v == 0]
    if M < len(pos):
        raise ValueError(f"budget {M} cannot cover {len(pos)} positive-variance parts")
    budgets = [0] * len(var)
    remaining = M
    if M >= len(var):
        for i in zero:
            budgets[i] = 1
        remaining -= len(zero)
    if pos:
        roots = [math.sqrt(var[i]) for i in pos]
        total_root = sum(roots)
        cont = [remaining * r / total_root for r in roots]
        floors = [int(math.floor(c)) for c in cont]
        short = remaining - sum(floors)
        order = sorted(range(len(pos)), key=lambda j: (-(cont[j] - floors[j]), j))
        for j in order[:short]:
            floors[j] += 1
        for j, i in enumerate(pos):
            budgets[i] = floors[j]
        # rounding may starve a tiny-variance part; steal from the largest
        for j, i in enumerate(pos):
            while budgets[i] < 1:
                donor = max(
                    (k for k in pos if budgets[k] > 1),
                    key=lambda k: budgets[k],
                )
                budgets[donor] -= 1
                budgets[i] += 1
    cost = sum(var[i] / budgets[i] for i in pos)
    return Allocation(budgets=tuple(budgets), total=M, achieved_cost=cost)


def allocation_cost(variances: Sequence[float], budgets: Sequence[int]) -> float:
    out = 0.0
    for v, m in zip(variances, budgets):
        if v > 0:
            if m <= 0:
                return math.inf
            out += v / m
    return out


# ---------------------------------------------------------------------------
# partition cost and relative sampling complexity


def partition_cost(parts, psi) -> float:
    """(sum_b sqrt(Var_psi(H_b)))^2, the budget-normalized sampling cost."""
    return sum(math.sqrt(v) for v in part_variances(parts, psi)) ** 2


def variance_sandwich(parts, psi) -> tuple[float, float, float]:
    """(|B|*sum Var, (sum sqrt Var)^2, sum (2k-1) Var_k non-increasing)."""
    var = part_variances(parts, psi)
    upper = len(var) * sum(var)
    mid = sum(math.sqrt(v) for v in var) ** 2
    lower = sum((2 * k + 1) * v for k, v in enumerate(sorted(var, reverse=True)))
    return upper, mid, lower


def theorem1_bound(kind: str, cor_cut: float | None = None, *, strengthened: bool = False) -> float:
    """Guaranteed eigenstate improvement of a geometric kind over any baseline.

    Strip kinds: 4L/(1-CoR); patch kinds: 4 LxLy/(Lx+Ly)/(1-CoR); the domino
    kind: 4/3 flat.  strengthened=True selects the stricter width->=2 strip
    variant 4L(1+CoR)/(1-CoR).
    """
    name, params = parse_kind(kind)
    if name == "two_local":
        if strengthened:
            raise ValueError("no strengthened variant for the 2-local kind")
        return 4.0 / 3.0
    if name not in ("geo1d", "geo2d"):
        raise ValueError(f"no eigenstate bound for kind {kind!r}")
    if cor_cut is None:
        raise ValueError("cor_cut required for strip and patch kinds")
    if not -1.0 <= cor_cut:
        raise ValueError("cor_cut below -1")
    if cor_cut >= 1.0:
        return math.inf
    if name == "geo1d":
        L = params["L"]
        if strengthened:
            if L < 2:
                raise ValueError("strengthened strip bound needs width >= 2")
            return 4.0 * L * (1.0 + cor_cut) / (1.0 - cor_cut)
        return 4.0 * L / (1.0 - cor_cut)
    if strengthened:
        raise ValueError("no strengthened variant for patch kinds")
    Lx, Ly = params["Lx"], params["Ly"]
    return 4.0 * (Lx * Ly / (Lx + Ly)) / (1.0 - cor_cut)


def infer_cut_pair(p: Partitioning, H: PauliSum) -> CutPair:
    """Recover the cut sets of a two-part geometric partitioning from its parts:
    a term missing from one part belongs to the cut removed from it."""
    if p.n_parts != 2:
        raise ValueError("cut pair defined only for two-part partitionings")
    cut = {}
    cut_prime = {}
    for c, s in H:
        in0 = p.parts[0].coefficient(s) != 0.0
        in1 = p.parts[1].coefficient(s) != 0.0
        if not in0 and in1:
            cut[(s.x_mask, s.z_mask)] = c
        elif in0 and not in1:
            cut_prime[(s.x_mask, s.z_mask)] = c
    return CutPair(
        h_cut=PauliSum(H.n_qubits, cut), h_cut_prime=PauliSum(H.n_qubits, cut_prime)
    )


@dataclass(frozen=True)
class ImprovementReport:
    g: float
    cost_numerator: float
    cost_denominator: float
    bound: float | None
    appendix_bound: float | None
    cor_cut: float | None
    hypotheses_met: str
    diverging: bool

    def as_dict(self) -> dict:
        return {
            "g": self.g,
            "cost_numerator": self.cost_numerator,
            "cost_denominator": self.cost_denominator,
            "bound": self.bound,
            "appendix_bound": self.appendix_bound,
            "cor_cut": self.cor_cut,
            "hypotheses_met": self.hypotheses_met,
            "diverging": self.diverging,
        }


def is_eigenstate(H: PauliSum, psi, tol: float = EIGENSTATE_TOL) -> bool:
    amps = _amps(psi)
    e = expectation(H, amps)
    resid = np.linalg.norm(apply_op(H, amps) - e * amps)
    return resid <= tol * max(1.0, abs(e))


def _translation_invariant(H: PauliSum, lat: Lattice) -> bool:
    for d in ((1, 0), (0, 1)):
        if not H.permuted(lat.translation_permutation(*d)).allclose(H, tol=1e-9):
            return False
    return True


def relative_complexity(
    b1: Partitioning,
    b2: Partitioning,
    psi,
    *,
    lat: Lattice | None = None,
    degenerate: bool | None = None,
) -> ImprovementReport:
    """Sampling-cost ratio g = cost(b1)/cost(b2), with the eigenstate bound
    for geometric b2 attached when the state passes the eigenstate check."""
    H = b2.total()
    if not b1.total().allclose(H, tol=1e-9):
        raise ValueError("partitionings do not sum to the same operator")
    num = partition_cost(b1.parts, psi)
    den = partition_cost(b2.parts, psi)
    # den is never exactly zero in floating point (an eigenbasis part on a
    # numerical eigenstate leaves ~1e-14 of variance), so divergence is
    # declared scale-free: the denominator is negligible against the
    # numerator rather than against an absolute cutoff.
    if num == 0.0 and den == 0.0:
        g = math.nan
        diverging = False
    elif den <= DIVERGENCE_TOL * num:
        g = math.inf
        diverging = True
    else:
        g = num / den
        diverging = False

    eigen = is_eigenstate(H, psi)
    bound = appendix = cor = None
    name, params = parse_kind(b2.kind) if b2.kind != "pauli" else (None, None)
    if eigen and name in ("geo1d", "geo2d", "two_local") and b2.n_parts in (2, 4):
        if name == "two_local":
            bound = theorem1_bound("two_local")
        else:
            cp = infer_cut_pair(b2, H)
            cor = correlation(cp.h_cut, cp.h_cut_prime, psi)
            if math.isfinite(cor):
                bound = theorem1_bound(b2.kind, cor)
                if name == "geo1d" and params["L"] >= 2:
                    appendix = theorem1_bound(b2.kind, cor, strengthened=True)

    if not eigen:
        hypotheses = "not-eigenstate"
    elif degenerate:
        hypotheses = "degenerate"
    elif lat is not None and not _translation_invariant(H, lat):
        hypotheses = "not-translation-invariant"
    else:
        hypotheses = "met"
    return ImprovementReport(
        g=g,
        cost_numerator=num,
        cost_denominator=den,
        bound=bound,
        appendix_bound=appendix,
        cor_cut=cor,
        hypotheses_met=hypotheses,
        diverging=diverging,
    )


# ---------------------------------------------------------------------------
# shot counts and perturbative oracles


def shots_for_confidence(variance_value: float, eps: float, failure_prob: float) -> int:
    """Chebyshev shot count: the mean of M samples deviates by more than eps
    with probability at most Var/(M eps^2)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not 0.0 < failure_prob < 1.0:
        raise ValueError("failure probability must lie in (0, 1)")
    if variance_value < 0:
        raise ValueError("variance must be nonnegative")
    return max(1, math.ceil(variance_value / (eps * eps * failure_prob)))


@dataclass(frozen=True)
class PerturbativePrediction:
    value: float | None
    scaling: str | None
    warning: bool


def tfim_perturbative_G(
    regime: str, L: int, seam_shift: int = 1, lam: float = 0.0
) -> PerturbativePrediction:
    """Leading-order improvement of width-L strips over the Pauli baseline
    for the transverse-field Ising chain of couplings, small parameter lam.

    disordered (2-local couplings weak): g -> 4L.  ordered (field weak):
    width <= 2 strips scale as 1/lam^2; wider strips give 32L when the two
    seam families sit one column apart, 16L otherwise.
    """
    if L < 1:
        raise ValueError("strip width must be >= 1")
    if seam_shift < 1:
        raise ValueError("seam shift must be >= 1")
    warn = not 0.0 <= lam <= 0.1
    if regime == "disordered":
        return PerturbativePrediction(value=4.0 * L, scaling=None, warning=warn)
    if regime == "ordered":
        if L <= 2:
            return PerturbativePrediction(value=None, scaling="1/lam^2", warning=warn)
        factor = 32.0 if seam_shift == 1 else 16.0
        return PerturbativePrediction(value=factor * L, scaling=None, warning=warn)
    raise ValueError(f"unknown regime {regime!r}")
