"""Variance and improvement statistics for imperfectly prepared eigenstates.

A noisy preparation is modeled as sqrt(1-eps)|psi> + sqrt(eps)|xi> with |xi>
Haar random.  The closed forms below average the (unnormalized) quadratic
forms of that vector over xi, so Monte Carlo checks must use the same
convention: no renormalization, and the operator shifted to its traceless
part first (the unnormalized forms are not shift-invariant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .paulis import PauliSum
from .spectral import MomentStats, StateVector, _amps, apply

DIVERGENCE_TOL = 1e-9
ENERGY_TOL = 1e-12


@dataclass(frozen=True)
class NoiseConfig:
    eps: float
    seed: int = 0
    samples: int = 10_000
    truncate: bool = False

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("mixing weight eps must lie in [0, 1]")
        if self.samples < 1:
            raise ValueError("need at least one Monte Carlo sample")


def haar_sample(n_qubits: int, seed) -> StateVector:
    """Normalized i.i.d. complex Gaussian amplitudes (exactly Haar)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    d = 1 << n_qubits
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return StateVector(v, n_qubits, provenance="haar")


def perturbed_state(psi, xi, eps: float, *, orthogonalize: bool = False) -> StateVector:
    """sqrt(1-eps) psi + sqrt(eps) xi, deliberately left unnormalized.

    orthogonalize projects psi out of xi first (sensitivity studies only;
    the closed forms assume the plain mixture).
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("mixing weight eps must lie in [0, 1]")
    a = _amps(psi)
    b = _amps(xi)
    if a.shape != b.shape:
        raise ValueError("state dimensions differ")
    if orthogonalize:
        b = b - np.vdot(a, b) * a
        nb = np.linalg.norm(b)
        if nb < 1e-14:
            raise ValueError("xi is parallel to psi; nothing left after projection")
        b = b / nb
    amps = math.sqrt(1.0 - eps) * a + math.sqrt(eps) * b
    n = a.size.bit_length() - 1
    return StateVector(
        amps,
        n,
        provenance=f"perturbed eps={eps:g} norm={np.linalg.norm(amps):.12g}",
        require_norm=False,
    )


def expected_variance(stats: MomentStats, eps: float, d: int, *, truncate: bool = False) -> float:
    """Haar average of Var over preparations, from the moments on psi alone.

    Traceless convention: the mean and second moment entering here are the
    shifted ones; variance itself is shift-invariant.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("mixing weight eps must lie in [0, 1]")
    if d < 2:
        raise ValueError("dimension must be at least 2")
    var = stats.variance
    m = stats.shifted_mean
    f = stats.frob_sq_over_d
    out = (1.0 - eps) * var + eps * (1.0 - eps) * m * m + eps * f
    if not truncate:
        # cross term: E[(c + conj(c))^2] = 2 E|c|^2 with c = <psi|O|xi>,
        # since E[c^2] vanishes by the phase symmetry of xi
        out -= 2.0 * eps * (1.0 - eps) * stats.shifted_second_moment / d
        out -= eps * eps * f / (d + 1)
    return out


def _root_cost(stats_list: Sequence[MomentStats], eps, d, truncate) -> float:
    total = 0.0
    for s in stats_list:
        ev = expected_variance(s, eps, d, truncate=truncate)
        total += math.sqrt(max(ev, 0.0))
    return total * total


def ensemble_complexity(
    stats1: Sequence[MomentStats],
    stats2: Sequence[MomentStats],
    eps: float,
    d: int,
    *,
    truncate: bool = False,
) -> float:
    """Improvement of partitioning 2 over partitioning 1 averaged over the
    noise ensemble, from per-part moments taken on the clean state."""
    num = _root_cost(stats1, eps, d, truncate)
    den = _root_cost(stats2, eps, d, truncate)
    if num == 0.0 and den == 0.0:
        return math.nan
    if den <= DIVERGENCE_TOL * num:
        return math.inf
    return num / den


def frobenius_criterion(parts1: Sequence[PauliSum], parts2: Sequence[PauliSum]) -> float:
    """State-independent eps=1 limit: squared ratio of summed traceless
    Frobenius norms.  Computable from coefficients alone."""
    num = sum(math.sqrt(p.frobenius_norm_sq_over_d()) for p in parts1)
    den = sum(math.sqrt(p.frobenius_norm_sq_over_d()) for p in parts2)
    if num == 0.0 and den == 0.0:
        return math.nan
    if den <= DIVERGENCE_TOL * num:
        return math.inf
    return (num / den) ** 2


# ---------------------------------------------------------------------------
# asymmetries and the noisy-improvement sandwich


@dataclass(frozen=True)
class AsymmetryStats:
    """alpha: energy split asymmetry of part 1; beta: squared-weight split
    asymmetry.  The _max variants take the worse of the two parts (the
    definition nominally uses part 1; both readings are reported)."""

    alpha: float
    beta: float
    alpha_max: float
    beta_max: float


def _energy(h_stats: MomentStats) -> float:
    e = h_stats.shifted_mean
    if abs(e) <= ENERGY_TOL:
        raise ValueError("asymmetry is undefined at zero shifted energy")
    return e


def asymmetries(parts_stats: Sequence[MomentStats], h_stats: MomentStats) -> AsymmetryStats:
    if len(parts_stats) != 2:
        raise ValueError("asymmetries are defined for exactly 2 parts")
    e = _energy(h_stats)
    f_h = h_stats.frob_sq_over_d
    if f_h <= 0.0:
        raise ValueError("operator has no traceless content")
    alphas = [abs(s.shifted_mean / e - 0.5) for s in parts_stats]
    betas = [abs(s.frob_sq_over_d / f_h - 0.5) for s in parts_stats]
    return AsymmetryStats(
        alpha=alphas[0], beta=betas[0], alpha_max=max(alphas), beta_max=max(betas)
    )


def _g_part(part1: MomentStats, h_stats: MomentStats, asym: AsymmetryStats, eps: float) -> float:
    e = _energy(h_stats)
    return (
        4.0 * (1.0 - eps) * part1.variance
        + eps * (1.0 + asym.beta) * h_stats.frob_sq_over_d
        + eps * (1.0 - eps) * (1.0 + asym.alpha**2) * e * e
    )


def _two_part_view(parts_stats: Sequence[MomentStats], h_stats: MomentStats) -> AsymmetryStats:
    """Merge parts 2..k into one for the asymmetry formulas.  Fine for
    disjoint Pauli groupings: squared weights add, shifted means add."""
    if len(parts_stats) == 2:
        return asymmetries(parts_stats, h_stats)
    first = parts_stats[0]
    rest = MomentStats(
        label="rest",
        mean=sum(s.mean for s in parts_stats[1:]),
        second_moment=0.0,
        variance=0.0,
        frob_sq_over_d=sum(s.frob_sq_over_d for s in parts_stats[1:]),
        identity_coeff=sum(s.identity_coeff for s in parts_stats[1:]),
    )
    return asymmetries([first, rest], h_stats)


def corollary3_bounds(
    pauli_stats: Sequence[MomentStats],
    geo_stats: Sequence[MomentStats],
    h_stats: MomentStats,
    eps: float,
    d: int,
) -> tuple[float, float]:
    """Sandwich on the ensemble improvement of a geometric partitioning over
    the Pauli baseline, from clean-state moments."""
    if not 0.0 < eps < 1.0:
        raise ValueError("the sandwich needs eps strictly inside (0, 1)")
    e = _energy(h_stats)
    f_h = h_stats.frob_sq_over_d
    k = len(pauli_stats)
    # worst part makes the numerator of the upper bound safe
    var_top = max(s.variance for s in pauli_stats)
    upper = k + k * k * var_top / (eps * e * e + eps / (1.0 - eps) * f_h)
    asym_p = _two_part_view(pauli_stats, h_stats)
    asym_g = _two_part_view(geo_stats, h_stats)
    g_p = _g_part(pauli_stats[0], h_stats, asym_p, eps)
    g_g = _g_part(geo_stats[0], h_stats, asym_g, eps)
    lower = g_p / g_g if g_g > 0 else math.inf
    return lower, upper


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    low_boundary: float
    high_boundary: float
    overlapping: bool


def regime_classify(eps: float, part1_stats: MomentStats, h_stats: MomentStats) -> RegimeReport:
    """Noise regimes: I below 4 Var(part 1)/E^2 (clean behavior persists),
    III above 1 - f_H/E^2 (Frobenius-dominated), II between."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("mixing weight eps must lie in [0, 1]")
    e = _energy(h_stats)
    low = 4.0 * part1_stats.variance / (e * e)
    high = 1.0 - h_stats.frob_sq_over_d / (e * e)
    in_i = eps <= low
    in_iii = eps >= high
    if in_i and in_iii:
        regime = "I+III"
    elif in_i:
        regime = "I"
    elif in_iii:
        regime = "III"
    else:
        regime = "II"
    return RegimeReport(
        regime=regime, low_boundary=low, high_boundary=high, overlapping=low >= high
    )


# ---------------------------------------------------------------------------
# overhead thresholds


@dataclass(frozen=True)
class ThresholdReport:
    delta: float
    eps_threshold_closed: float
    eps_threshold_numeric: float | None
    ratio_pauli_over_geo: float | None = None
    note: str | None = None


def epsilon_threshold(
    parts_stats: Sequence[MomentStats],
    h_stats: MomentStats,
    delta: float,
    d: int,
) -> ThresholdReport:
    """Largest eps at which measuring the 2-part partitioning costs at most
    delta+1 times the eigenbasis measurement, on average over preparations.

    The numeric root uses the untruncated expected variances; the closed
    form drops the O(1/d) pieces and is reported for comparison.
    """
    if len(parts_stats) != 2:
        raise ValueError("threshold is defined for exactly 2 parts")
    asym = asymmetries(parts_stats, h_stats)
    if delta <= asym.alpha**2:
        raise ValueError("overhead delta must exceed alpha^2")
    if delta < len(parts_stats):
        raise ValueError("overhead delta must be at least the number of parts")
    e = _energy(h_stats)
    closed = 4.0 * parts_stats[0].variance / (e * e * (delta - asym.alpha**2))

    target = delta + 1.0

    def excess(eps: float) -> float:
        return ensemble_complexity(parts_stats, [h_stats], eps, d) - target

    lo, hi = 1e-12, 1.0
    f_lo, f_hi = excess(lo), excess(hi)
    numeric = None
    note = None
    if f_lo <= 0.0 or f_hi >= 0.0:
        note = f"no sign change in bracket: excess({lo:g})={f_lo:g}, excess({hi:g})={f_hi:g}"
    else:
        while hi - lo > 1e-10:
            mid = 0.5 * (lo + hi)
            if excess(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        numeric = 0.5 * (lo + hi)
    return ThresholdReport(
        delta=delta, eps_threshold_closed=closed, eps_threshold_numeric=numeric, note=note
    )


@dataclass(frozen=True)
class ThresholdComparison:
    delta: float
    pauli: ThresholdReport
    geo: ThresholdReport
    ratio_numeric: float
    ratio_predicted: float


def threshold_comparison(
    pauli_stats: Sequence[MomentStats],
    geo_stats: Sequence[MomentStats],
    h_stats: MomentStats,
    delta: float,
    d: int,
) -> ThresholdComparison:
    """Numeric threshold ratio against the leading-order prediction
    G * delta/(delta - alpha^2), alpha taken from the baseline split."""
    rp = epsilon_threshold(pauli_stats, h_stats, delta, d)
    rg = epsilon_threshold(geo_stats, h_stats, delta, d)
    if rp.eps_threshold_numeric is None or rg.eps_threshold_numeric is None:
        raise ValueError("no numeric threshold root on one side; see report notes")
    ratio = rp.eps_threshold_numeric / rg.eps_threshold_numeric
    cost_p = (sum(math.sqrt(s.variance) for s in pauli_stats)) ** 2
    cost_g = (sum(math.sqrt(s.variance) for s in geo_stats)) ** 2
    g = cost_p / cost_g
    alpha = asymmetries(pauli_stats, h_stats).alpha
    predicted = g * delta / (delta - alpha**2)
    return ThresholdComparison(
        delta=delta,
        pauli=ThresholdReport(
            delta=delta,
            eps_threshold_closed=rp.eps_threshold_closed,
            eps_threshold_numeric=rp.eps_threshold_numeric,
            ratio_pauli_over_geo=ratio,
            note=rp.note,
        ),
        geo=rg,
        ratio_numeric=ratio,
        ratio_predicted=predicted,
    )


# ---------------------------------------------------------------------------
# Monte Carlo oracle


@dataclass(frozen=True)
class MCEstimate:
    eps: float
    mean: float
    stderr: float
    samples: int


def mc_expected_variance(
    op: PauliSum, psi, eps_values: Sequence[float], samples: int, seed: int
) -> list[MCEstimate]:
    """Sample mean of the perturbed-state variance over Haar draws.

    One operator application per draw serves every eps: the quadratic forms
    of the mixture decompose into four inner products.  Per-trial RNG
    streams are spawned from the seed; reduction order is fixed.
    """
    if samples < 2:
        raise ValueError("need at least two samples for a standard error")
    for eps in eps_values:
        if not 0.0 <= eps <= 1.0:
            raise ValueError("mixing weight eps must lie in [0, 1]")
    op0 = op.traceless_part()
    a = _amps(psi)
    n = a.size.bit_length() - 1
    u0 = apply(op0, a)
    m_psi = float(np.real(np.vdot(a, u0)))
    s_psi = float(np.real(np.vdot(u0, u0)))

    streams = np.random.SeedSequence(seed).spawn(samples)
    values = np.empty((len(eps_values), samples))
    for t, ss in enumerate(streams):
        xi = haar_sample(n, np.random.default_rng(ss)).amplitudes
        w = apply(op0, xi)
        m_xi = float(np.real(np.vdot(xi, w)))
        s_xi = float(np.real(np.vdot(w, w)))
        cross_m = np.vdot(a, w)
        cross_s = np.vdot(u0, w)
        for j, eps in enumerate(eps_values):
            root = 2.0 * math.sqrt(eps * (1.0 - eps))
            m = (1.0 - eps) * m_psi + eps * m_xi + root * float(np.real(cross_m))
            s = (1.0 - eps) * s_psi + eps * s_xi + root * float(np.real(cross_s))
            values[j, t] = s - m * m
    out = []
    for j, eps in enumerate(eps_values):
        row = values[j]
        out.append(
            MCEstimate(
                eps=eps,
                mean=float(row.mean()),
                stderr=float(row.std(ddof=1) / math.sqrt(samples)),
                samples=samples,
            )
        )
    return out
