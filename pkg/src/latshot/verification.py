"""Release checks: ten numbered validations of the toolkit's headline results.

Each check builds its own small instances, runs against a fixed time budget,
and returns a CheckResult with a one-line detail string.  run_suite executes
a selection and aggregates.  size="smoke" shrinks instances and Monte Carlo
scale for quick runs; size="desk" is the gate configuration.
"""

from __future__ import annotations

import math
import time
import traceback
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .improvement import (
    partition_cost,
    relative_complexity,
)
from .lattice import (
    Lattice,
    build_bnnni,
    build_hcbh,
    build_spinless_hubbard,
    build_tfim,
    build_tfxym,
    fermion_number_operator,
)
from .noise import (
    corollary3_bounds,
    ensemble_complexity,
    expected_variance,
    mc_expected_variance,
    regime_classify,
    threshold_comparison,
)
from .partition import Partitioning, geometric_partition, pauli_baseline
from .paulis import PauliSum
from .sampling import compare_predictions, simulate_estimator
from .spectral import (
    apply,
    correlation,
    dense,
    ground_state,
    part_stats,
    stats_for_parts,
    variance,
)


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed_s: float
    budget_s: float

    @property
    def status(self) -> str:
        return "pass" if self.passed else "FAIL"

    def as_dict(self) -> dict:
        return {
            "number": self.number,
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
            "elapsed_s": round(self.elapsed_s, 3),
            "budget_s": self.budget_s,
        }


class Workspace:
    """Ground-state cache shared across checks (and across a test session)."""

    def __init__(self) -> None:
        self._store: dict = {}

    def solve(self, key: str, build: Callable, *, method: str = "lanczos", k: int = 1):
        """build() -> (H, lat); returns (H, lat, EigenSolution), memoized."""
        if key not in self._store:
            H, lat = build()
            self._store[key] = (H, lat, ground_state(H, k=k, method=method))
        return self._store[key]


def _tfim(nx: int, ny: int, J: float = 1.0, h: float = 1.0):
    lat = Lattice(nx, ny)
    return build_tfim(lat, J=J, h=h), lat


_MODELS = {
    "tfxym": lambda lat: build_tfxym(lat, eta=0.5, h=1.0),
    "tfim": lambda lat: build_tfim(lat, J=1.0, h=1.0),
    "bnnni": lambda lat: build_bnnni(lat, kappa=0.3, h=1.0),
    "hcbh": lambda lat: build_hcbh(lat, J=0.45, h=1.0),
}


def _model_on(name: str, nx: int, ny: int):
    lat = Lattice(nx, ny)
    return _MODELS[name](lat), lat


# ---------------------------------------------------------------------------
# 1: eigenstate identities


def check_eigenstate_identities(ws: Workspace, size: str) -> tuple[bool, str]:
    models = ("tfxym", "tfim", "bnnni", "hcbh") if size == "desk" else ("tfim", "hcbh")
    nx, ny = (3, 4) if size == "desk" else (2, 3)
    worst_var = worst_rel = worst_comm = 0.0
    ok = True
    notes = []
    for name in models:
        H, lat, sol = ws.solve(f"{name}-{nx}x{ny}", lambda n=name: _model_on(n, nx, ny))
        if sol.degenerate:
            ok = False
            notes.append(f"{name}: ground flagged degenerate (gap {sol.gap:.2e})")
            continue
        psi = sol.ground
        var_h = abs(variance(H, psi))
        geo = geometric_partition(H, lat, "geo1d:1")
        w1 = apply(geo.parts[0], psi)
        w2 = apply(geo.parts[1], psi)
        v1 = variance(geo.parts[0], psi)
        v2 = variance(geo.parts[1], psi)
        rel = abs(v1 - v2) / max(v1, v2)
        comm = 2.0 * abs(float(np.imag(np.vdot(w1, w2))))
        worst_var = max(worst_var, var_h)
        worst_rel = max(worst_rel, rel)
        worst_comm = max(worst_comm, comm)
        ok = ok and var_h <= 1e-8 and rel <= 1e-8 and comm <= 1e-8
    detail = (
        f"{len(models)} models on {nx}x{ny}: worst Var(H)={worst_var:.2e}, "
        f"worst part-variance split {worst_rel:.2e} rel, "
        f"worst commutator expectation {worst_comm:.2e} (all gated at 1e-8)"
    )
    if notes:
        detail += "; " + "; ".join(notes)
    return ok, detail


# ---------------------------------------------------------------------------
# 2: eigenstate improvement bounds


def check_improvement_bounds(ws: Workspace, size: str) -> tuple[bool, str]:
    gated: list[tuple[str, str, int, int]] = []
    if size == "desk":
        for name in ("tfxym", "tfim", "bnnni", "hcbh"):
            gated.append((name, "geo1d:1", 3, 4))
        # width-2 strips cannot contain the next-nearest couplings of bnnni
        for name in ("tfxym", "tfim", "hcbh"):
            gated.append((name, "geo1d:2", 3, 4))
        # 2x2 patches and dominoes need even extents, so these run on 4x4
        for name in ("tfxym", "tfim", "hcbh"):
            gated.append((name, "geo2d:2x2", 4, 4))
        for name in ("tfxym", "tfim"):
            gated.append((name, "two_local", 4, 4))
    else:
        gated = [("tfim", "geo1d:1", 2, 3), ("tfxym", "geo1d:1", 2, 3), ("tfim", "two_local", 2, 4)]

    ok = True
    min_slack = math.inf
    rows = []
    for name, kind, nx, ny in gated:
        H, lat, sol = ws.solve(f"{name}-{nx}x{ny}", lambda n=name, a=nx, b=ny: _model_on(n, a, b))
        geo = geometric_partition(H, lat, kind)
        rep = relative_complexity(
            pauli_baseline(H), geo, sol.ground, lat=lat, degenerate=sol.degenerate
        )
        if rep.bound is None or rep.hypotheses_met != "met":
            ok = False
            rows.append(f"{name}/{kind}: no bound ({rep.hypotheses_met})")
            continue
        slack = rep.g - rep.bound
        min_slack = min(min_slack, slack)
        if slack < -1e-6:
            ok = False
            rows.append(f"{name}/{kind}: g={rep.g:.4f} < bound={rep.bound:.4f}")
    detail = f"{len(gated)} gated (model, kind) pairs, min slack {min_slack:.3e} >= -1e-6"
    if size == "desk":
        # number-conserving counterexample to the flat 4/3 domino bound: the
        # one-local group is a function of the conserved particle number, so
        # its variance vanishes on every eigenstate and the bound's premise
        # (interaction variance dominating domino-interior variance) fails.
        H, lat, sol = ws.solve("hcbh-4x4", lambda: _model_on("hcbh", 4, 4))
        geo = geometric_partition(H, lat, "two_local")
        rep = relative_complexity(
            pauli_baseline(H), geo, sol.ground, lat=lat, degenerate=sol.degenerate
        )
        detail += (
            f"; ungated: hcbh/two_local on 4x4 measures g={rep.g:.4f} below the "
            f"flat 4/3 domino bound (particle-number conservation zeroes the "
            f"one-local group variance, voiding that bound's derivation)"
        )
    if rows:
        detail += "; " + "; ".join(rows)
    return ok, detail


# ---------------------------------------------------------------------------
# 3: coupling-limit behavior of the improvement


def check_coupling_limits(ws: Workspace, size: str) -> tuple[bool, str]:
    def g_for(J: float, h: float) -> float:
        H, lat, sol = ws.solve(
            f"tfim-3x4-J{J:g}-h{h:g}", lambda: _tfim(3, 4, J=J, h=h)
        )
        geo = geometric_partition(H, lat, "geo1d:2")
        return partition_cost(pauli_baseline(H).parts, sol.ground) / partition_cost(
            geo.parts, sol.ground
        )

    dev1 = abs(g_for(0.01, 1.0) - 8.0) / 8.0
    ok = dev1 <= 0.05
    detail = f"weak-coupling dev(lam=0.01)={dev1:.4f} <= 0.05"
    if size == "desk":
        dev2 = abs(g_for(0.005, 1.0) - 8.0) / 8.0
        halving = dev2 / dev1
        ok = ok and 0.375 <= halving <= 0.625
        g_a = g_for(1.0, 0.05)
        g_b = g_for(1.0, 0.025)
        ordered_ratio = g_b / g_a
        ok = ok and 3.4 <= ordered_ratio <= 4.6
        detail += (
            f", halving ratio {halving:.3f} in [0.375, 0.625]; "
            f"strong-coupling ratio g(0.025)/g(0.05)={ordered_ratio:.3f} in [3.4, 4.6]"
        )
    return ok, detail


# ---------------------------------------------------------------------------
# 4: location of the diverging improvement


def _scan_point(eta: float, nx: int, ny: int):
    lat = Lattice(nx, ny)
    H = build_tfxym(lat, eta=eta, h=1.0)
    sol = ground_state(H, method="lanczos")
    geo = geometric_partition(H, lat, "geo1d:1")
    from .improvement import infer_cut_pair

    cp = infer_cut_pair(geo, H)
    cor = correlation(cp.h_cut, cp.h_cut_prime, sol.ground)
    g = partition_cost(pauli_baseline(H).parts, sol.ground) / partition_cost(
        geo.parts, sol.ground
    )
    return cor, g


def _scan_argmax(etas: np.ndarray, nx: int, ny: int) -> tuple[int, int]:
    cors, gs = [], []
    for eta in etas:
        cor, g = _scan_point(float(eta), nx, ny)
        cors.append(cor)
        gs.append(g)
    return int(np.argmax(cors)), int(np.argmax(gs))


def check_divergence_location(ws: Workspace, size: str) -> tuple[bool, str]:
    target = math.sqrt(3.0) / 2.0
    if size == "desk":
        etas = np.linspace(0.6, 1.1, 26)
    else:
        etas = np.linspace(0.80, 0.92, 7)
    step = float(etas[1] - etas[0])
    i_cor, i_g = _scan_argmax(etas, 3, 4)
    dist = abs(float(etas[i_g]) - target)
    ok = i_cor == i_g and dist <= 2.0 * step + 1e-12
    detail = (
        f"3x4 scan ({len(etas)} pts, step {step:g}): argmax correlation idx {i_cor}, "
        f"argmax improvement idx {i_g}, peak at eta={float(etas[i_g]):.2f} "
        f"({dist / step:.1f} steps from sqrt(3)/2)"
    )
    if size == "desk":
        etas4 = np.linspace(0.78, 0.96, 10)
        j_cor, j_g = _scan_argmax(etas4, 4, 4)
        dist4 = abs(float(etas4[j_g]) - target)
        ok = ok and j_cor == j_g and dist4 <= dist + 1e-12
        detail += (
            f"; 4x4 scan: argmaxes {j_cor}/{j_g} agree, peak offset "
            f"{dist4:.4f} <= 3x4 offset {dist:.4f}"
        )
    return ok, detail


# ---------------------------------------------------------------------------
# 5: Monte Carlo vs closed-form perturbed variance


def check_perturbed_variance_mc(ws: Workspace, size: str) -> tuple[bool, str]:
    # width-2 strips fit neither extent of 2x5, so the geometric part here
    # comes from the width-1 partitioning
    H, lat, sol = ws.solve("tfim-2x5", lambda: _tfim(2, 5), method="dense")
    psi = sol.ground
    d = 1 << lat.n_sites
    parts = {
        "whole": H,
        "pauli-1": pauli_baseline(H).parts[0],
        "geo-1": geometric_partition(H, lat, "geo1d:1").parts[0],
    }
    samples = 20000 if size == "desk" else 2000
    eps_values = (0.01, 0.1, 0.5, 0.9)
    worst_full = worst_trunc = 0.0
    ok = True
    for name, op in parts.items():
        stats = part_stats(op, psi, label=name)
        for est in mc_expected_variance(op, psi, eps_values, samples=samples, seed=1234):
            z = abs(est.mean - expected_variance(stats, est.eps, d)) / est.stderr
            trunc_gap = abs(est.mean - expected_variance(stats, est.eps, d, truncate=True))
            excess = max(0.0, trunc_gap - 2.0 * stats.shifted_second_moment / d)
            z_trunc = excess / est.stderr
            worst_full = max(worst_full, z)
            worst_trunc = max(worst_trunc, z_trunc)
            ok = ok and z <= 3.0 and z_trunc <= 3.0
    detail = (
        f"{samples} draws x 3 parts x 4 mixing weights on 2x5: worst full-form "
        f"|z|={worst_full:.2f} <= 3, worst truncated-form excess z={worst_trunc:.2f} <= 3"
    )
    return ok, detail


# ---------------------------------------------------------------------------
# 6: noisy improvement sandwich, caps, and clean limit


def check_noisy_improvement(ws: Workspace, size: str) -> tuple[bool, str]:
    if size == "desk":
        H, lat, sol = ws.solve("tfim-3x4-J1-h1", lambda: _tfim(3, 4))
        kind = "geo1d:2"
    else:
        H, lat, sol = ws.solve("tfim-3x3-J1-h1", lambda: _tfim(3, 3))
        kind = "geo1d:1"
    psi = sol.ground
    d = 1 << lat.n_sites
    ps = stats_for_parts(pauli_baseline(H).parts, psi)
    gs = stats_for_parts(geometric_partition(H, lat, kind).parts, psi)
    hs = part_stats(H, psi)
    g0 = partition_cost(pauli_baseline(H).parts, psi) / partition_cost(
        geometric_partition(H, lat, kind).parts, psi
    )
    grid = np.geomspace(1e-2, 0.9, 20)
    sandwich_ok = True
    cap_p = cap_g = 0.0
    b_pauli = regime_classify(0.5, ps[0], hs).low_boundary
    b_geo = regime_classify(0.5, gs[0], hs).low_boundary
    for eps in map(float, grid):
        lo, hi = corollary3_bounds(ps, gs, hs, eps, d)
        mid = ensemble_complexity(ps, gs, eps, d)
        sandwich_ok = sandwich_ok and lo <= mid + 1e-12 and mid <= hi + 1e-12
        if eps > b_pauli:
            cap_p = max(cap_p, ensemble_complexity(ps, [hs], eps, d))
        if eps > b_geo:
            cap_g = max(cap_g, ensemble_complexity(gs, [hs], eps, d))
    rel0 = abs(ensemble_complexity(ps, gs, 1e-12, d) - g0) / g0
    ok = sandwich_ok and cap_p <= 3.05 and cap_g <= 2.05 and rel0 <= 0.01
    detail = (
        f"20-point grid: sandwich {'holds' if sandwich_ok else 'VIOLATED'}; "
        f"whole-basis overhead caps {cap_p:.3f} <= 3.05 (baseline) / {cap_g:.3f} <= 2.05 "
        f"(geometric); clean limit matches g within {rel0:.2e}"
    )
    return ok, detail


# ---------------------------------------------------------------------------
# 7: overhead thresholds vs leading-order ratio


def _threshold_devs(ws: Workspace, key: str, nx: int, ny: int) -> dict[float, float]:
    H, lat, sol = ws.solve(key, lambda: _tfim(nx, ny))
    psi = sol.ground
    ps = stats_for_parts(pauli_baseline(H).parts, psi)
    gs = stats_for_parts(geometric_partition(H, lat, "geo1d:1").parts, psi)
    hs = part_stats(H, psi)
    d = 1 << lat.n_sites
    out = {}
    for delta in (3.0, 5.0, 10.0):
        tc = threshold_comparison(ps, gs, hs, delta, d)
        out[delta] = abs(tc.ratio_numeric - tc.ratio_predicted) / tc.ratio_predicted
    return out

def check_overhead_thresholds(ws: Workspace, size: str) -> tuple[bool, str]:
    dev9 = _threshold_devs(ws, "tfim-3x3-J1-h1", 3, 3)
    dev12 = _threshold_devs(ws, "tfim-2x6-J1-h1", 2, 6)
    ok = all(dev12[d] <= 0.25 for d in dev12) and all(dev12[d] < dev9[d] for d in dev9)
    fmt = lambda ds: ", ".join(f"{d:g}: {v:.3f}" for d, v in ds.items())
    detail = (
        f"12-site deviations ({fmt(dev12)}) all <= 0.25 and below the 9-site "
        f"deviations ({fmt(dev9)})"
    )
    if size == "desk":
        # on the square-ish 12-site lattice the deviation does not drop: its
        # leading piece scales with the baseline's energy-split asymmetry,
        # which is nearly identical for 3x3 and 3x4; the elongated 2x6
        # lattice lowers that asymmetry and restores the decrease
        dev12b = _threshold_devs(ws, "tfim-3x4-J1-h1", 3, 4)
        detail += f"; ungated 3x4 deviations ({fmt(dev12b)}) stay near the 3x3 values"
    return ok, detail


# ---------------------------------------------------------------------------
# 8: shot-simulator calibration


def check_estimator_calibration(ws: Workspace, size: str) -> tuple[bool, str]:
    H, lat, sol = ws.solve("tfim-3x4-J1-h1", lambda: _tfim(3, 4))
    psi = sol.ground
    pauli = pauli_baseline(H)
    geo = geometric_partition(H, lat, "geo1d:2")
    shots, trials = (4000, 200) if size == "desk" else (1000, 60)
    cost_p = partition_cost(pauli.parts, psi)
    cost_g = partition_cost(geo.parts, psi)
    g = cost_p / cost_g
    run_p = simulate_estimator(pauli, psi, shots, seed=0, trials=trials)
    run_g = simulate_estimator(geo, psi, shots, seed=1000, trials=trials)
    rep_p = compare_predictions(run_p, cost_p)
    rep_g = compare_predictions(run_g, cost_g)
    ratio = rep_p.empirical_variance / rep_g.empirical_variance
    z_ratio = math.log(ratio / g) / math.sqrt(4.0 / (trials - 1))
    ok = abs(rep_p.z) <= 3.0 and abs(rep_g.z) <= 3.0 and abs(z_ratio) <= 3.0
    detail = (
        f"M={shots}, {trials} trials: baseline z={rep_p.z:+.2f}, geometric "
        f"z={rep_g.z:+.2f}, variance-ratio z={z_ratio:+.2f} vs g={g:.1f} (all |z| <= 3)"
    )
    return ok, detail


# ---------------------------------------------------------------------------
# 9: independent oracle equivalences


def _fock_spinless_hubbard(lat: Lattice, t: float, U: float, mu: float) -> np.ndarray:
    """Occupation-basis matrix with mode k occupation at bit k; annihilating
    mode q costs (-1)^(occupied modes below q)."""
    m = lat.n_sites
    dim = 1 << m
    mat = np.zeros((dim, dim))
    edges = [(e.a, e.b) for e in lat.nn_edges()]
    for b in range(dim):
        occ = [(b >> p) & 1 for p in range(m)]
        val = -mu * sum(occ)
        for a, c in edges:
            val += U * occ[a] * occ[c]
        mat[b, b] = val
    for a, c in edges:
        for p, q in ((a, c), (c, a)):
            for b in range(dim):
                if (b >> q) & 1 and not (b >> p) & 1:
                    sign_q = -1.0 if bin(b & ((1 << q) - 1)).count("1") % 2 else 1.0
                    b2 = b ^ (1 << q)
                    sign_p = -1.0 if bin(b2 & ((1 << p) - 1)).count("1") % 2 else 1.0
                    mat[b2 | (1 << p), b] += -t * sign_q * sign_p
    return mat


def check_oracle_equivalence(ws: Workspace, size: str) -> tuple[bool, str]:
    lat23 = Lattice(2, 3)
    ops = {
        "tfim-2x3": build_tfim(lat23, J=1.0, h=0.7),
        "tfxym-2x3": build_tfxym(lat23, eta=0.8, h=1.0),
        "hubbard-2x3": build_spinless_hubbard(lat23, t=1.0, U=2.0, mu=0.5),
    }
    rng = np.random.default_rng(11)
    strings = {}
    for _ in range(30):
        x, z = int(rng.integers(32)), int(rng.integers(32))
        strings[(x, z)] = strings.get((x, z), 0.0) + float(rng.normal())
    ops["random-5q"] = PauliSum(5, strings)

    worst_apply = 0.0
    for op in ops.values():
        mat = dense(op)
        d = 1 << op.n_qubits
        for _ in range(2):
            v = rng.normal(size=d) + 1j * rng.normal(size=d)
            v /= np.linalg.norm(v)
            err = np.linalg.norm(mat @ v - apply(op, v)) / max(np.linalg.norm(mat @ v), 1.0)
            worst_apply = max(worst_apply, err)
    ok = worst_apply <= 1e-12

    nx, ny = (3, 3) if size == "desk" else (2, 3)
    H, lat, sol_l = ws.solve(f"tfim-{nx}x{ny}-J1-h1", lambda: _tfim(nx, ny))
    sol_d = ground_state(H, method="dense")
    de = abs(sol_d.ground_energy - sol_l.ground_energy)
    overlap = abs(np.vdot(np.asarray(sol_d.ground.amplitudes), np.asarray(sol_l.ground.amplitudes)))
    e_tol = 1e-8 * max(1.0, abs(sol_d.ground_energy))
    ok = ok and de <= e_tol and overlap >= 1.0 - 1e-8

    fock = _fock_spinless_hubbard(lat23, t=1.0, U=2.0, mu=0.5)
    jw_err = float(np.max(np.abs(dense(ops["hubbard-2x3"]) - fock)))
    ok = ok and jw_err <= 1e-12

    worst_frob = 0.0
    for op in ops.values():
        d = 1 << op.n_qubits
        mat0 = dense(op.traceless_part())
        tr = float(np.real(np.trace(mat0 @ mat0))) / d
        coeff = op.frobenius_norm_sq_over_d()
        worst_frob = max(worst_frob, abs(tr - coeff) / max(1.0, tr))
    ok = ok and worst_frob <= 1e-10

    detail = (
        f"matrix-free apply vs dense {worst_apply:.1e}; iterative vs dense ground "
        f"dE={de:.1e}, overlap gap {1.0 - overlap:.1e}; fermionic encoding vs "
        f"occupation-basis matrix {jw_err:.1e}; coefficient vs trace norms {worst_frob:.1e}"
    )
    return ok, detail


# ---------------------------------------------------------------------------
# 10: fermionic lattice structure


def check_hubbard_structure(ws: Workspace, size: str) -> tuple[bool, str]:
    H, lat, sol = ws.solve(
        "hubbard-2x3",
        lambda: (build_spinless_hubbard(Lattice(2, 3), t=1.0, U=2.0, mu=0.5), Lattice(2, 3)),
        method="dense",
    )
    baseline = pauli_baseline(H)
    n_op = fermion_number_operator(lat.n_sites)
    dh = dense(H)
    dn = dense(n_op)
    comm = float(np.linalg.norm(dh @ dn - dn @ dh))
    geo = geometric_partition(H, lat, "geo1d:1")
    rep = relative_complexity(baseline, geo, sol.ground, lat=lat, degenerate=sol.degenerate)
    ok = baseline.n_parts == 5 and comm <= 1e-10 and rep.g >= 1.0
    detail = (
        f"baseline splits into {baseline.n_parts} groups (want 5); particle-number "
        f"commutator norm {comm:.1e}; g={rep.g:.3f} >= 1 on the ground state "
        f"(degenerate={sol.degenerate}, informational bound={rep.bound})"
    )
    return ok, detail


# ---------------------------------------------------------------------------
# registry and runner


CHECKS: tuple[tuple[int, str, Callable[[Workspace, str], tuple[bool, str]]], ...] = (
    (1, "eigenstate-identities", check_eigenstate_identities),
    (2, "improvement-bounds", check_improvement_bounds),
    (3, "coupling-limits", check_coupling_limits),
    (4, "divergence-location", check_divergence_location),
    (5, "perturbed-variance-mc", check_perturbed_variance_mc),
    (6, "noisy-improvement", check_noisy_improvement),
    (7, "overhead-thresholds", check_overhead_thresholds),
    (8, "estimator-calibration", check_estimator_calibration),
    (9, "oracle-equivalence", check_oracle_equivalence),
    (10, "hubbard-structure", check_hubbard_structure),
)

_BUDGET_S = {1: 60, 2: 120, 3: 300, 4: 600, 5: 600, 6: 120, 7: 180, 8: 300, 9: 180, 10: 120}


def run_check(number: int, ws: Workspace | None = None, size: str = "desk") -> CheckResult:
    if size not in ("smoke", "desk"):
        raise ValueError("size must be 'smoke' or 'desk'")
    entry = next((e for e in CHECKS if e[0] == number), None)
    if entry is None:
        raise ValueError(f"no check numbered {number}")
    _, name, fn = entry
    ws = ws if ws is not None else Workspace()
    start = time.perf_counter()
    try:
        passed, detail = fn(ws, size)
    except Exception:
        passed = False
        detail = "raised: " + traceback.format_exc(limit=3).strip().splitlines()[-1]
    elapsed = time.perf_counter() - start
    budget = float(_BUDGET_S[number])
    if passed and elapsed > budget:
        passed = False
        detail += f"; over time budget ({elapsed:.1f}s > {budget:.0f}s)"
    return CheckResult(number, name, passed, detail, elapsed, budget)


@dataclass(frozen=True)
class SuiteReport:
    size: str
    results: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def as_dict(self) -> dict:
        return {
            "size": self.size,
            "passed": self.passed,
            "checks": [r.as_dict() for r in self.results],
        }


def run_suite(
    size: str = "desk",
    numbers: Sequence[int] | None = None,
    ws: Workspace | None = None,
) -> SuiteReport:
    ws = ws if ws is not None else Workspace()
    selected = [n for n, _, _ in CHECKS] if numbers is None else list(numbers)
    results = tuple(run_check(n, ws=ws, size=size) for n in selected)
    return SuiteReport(size=size, results=results)
