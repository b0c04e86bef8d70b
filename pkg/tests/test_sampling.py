"""Measurement-simulation checks against exact spectral oracles."""

import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from latshot.improvement import (
    allocation_cost,
    optimal_allocation,
    part_variances,
    partition_cost,
)
from latshot.lattice import Lattice, build_tfim, build_tfxym
from latshot.partition import eigenbasis_whole, geometric_partition, pauli_baseline
from latshot.paulis import PauliSum
from latshot.sampling import (
    EstimatorRun,
    PartSampler,
    build_sampler,
    compare_predictions,
    simulate_estimator,
    _rotate,
)
from latshot.spectral import expectation, ground_state, variance

from conftest import cached_ground, random_state


def _tfim_2x3():
    lat = Lattice(2, 3, periodic=True)
    return lat, build_tfim(lat, 1.0, 0.7)


def _ground_2x3():
    lat, H = _tfim_2x3()
    sol = cached_ground("tfim-2x3", lambda: ground_state(build_tfim(Lattice(2, 3, periodic=True), 1.0, 0.7)))
    return lat, H, sol


def _tfim_3x4():
    lat = Lattice(3, 4, periodic=True)
    return lat, build_tfim(lat, 1.0, 1.0)


def _ground_3x4():
    lat, H = _tfim_3x4()
    sol = cached_ground(
        "tfim-3x4-J1-h1",
        lambda: ground_state(build_tfim(Lattice(3, 4, periodic=True), 1.0, 1.0)),
    )
    return lat, H, sol


# ---------------------------------------------------------------------------
# rotation and distribution correctness


def test_local_rotation_matches_dense_embedding():
    rng = np.random.default_rng(7)
    psi = random_state(rng, 4)
    u = unitary_group.rvs(4, random_state=3)
    got = _rotate(psi, 4, (0, 2), u)
    # embed u on qubits 0 and 2 by explicit matrix elements
    full = np.zeros((16, 16), dtype=complex)
    for i in range(16):
        for j in range(16):
            if (i >> 1) & 1 == (j >> 1) & 1 and (i >> 3) & 1 == (j >> 3) & 1:
                li = (i & 1) | (((i >> 2) & 1) << 1)
                lj = (j & 1) | (((j >> 2) & 1) << 1)
                full[i, j] = u[li, lj]
    assert np.abs(got - full @ psi).max() < 1e-14


def test_single_z_on_plus_state():
    plus = np.zeros(4, dtype=complex)
    plus[0] = plus[1] = 1.0 / math.sqrt(2.0)  # |+> on qubit 0, |0> on qubit 1
    sampler = build_sampler(PauliSum(2, {(0, 1): 1.0}), None, plus)
    values, probs = sampler.outcome_distribution()
    assert np.allclose(values, [-1.0, 1.0], atol=1e-12)
    assert np.allclose(probs, [0.5, 0.5], atol=1e-12)
    out = sampler.sample(4000, np.random.default_rng(0))
    assert set(np.unique(out)) == {-1.0, 1.0}
    assert abs(out.mean()) < 4.0 / math.sqrt(4000)


def test_whole_hamiltonian_on_eigenstate_is_constant():
    lat, H, sol = _ground_2x3()
    whole = eigenbasis_whole(H, lat)
    sampler = build_sampler(whole.parts[0], whole.patches[0], sol.states[0])
    out = sampler.sample(500, np.random.default_rng(1))
    assert np.ptp(out) < 1e-8
    assert abs(out.mean() - sol.energies[0]) < 1e-8
    _, dist_var = sampler.distribution_moments()
    assert dist_var < 1e-12


def _moment_cases():
    lat, H = _tfim_2x3()
    rng = np.random.default_rng(11)
    psi6 = random_state(rng, 6)
    cases = []
    geo = geometric_partition(H, lat, "geo1d:1")
    for part, patches in zip(geo.parts, geo.patches):
        cases.append((part, patches, psi6))
    for part in pauli_baseline(H).parts:
        cases.append((part, None, psi6))
    # X and Y single-site rotations both get exercised
    for part in pauli_baseline(build_tfxym(lat, 0.8, 1.0)).parts:
        cases.append((part, None, psi6))
    # commuting strings with clashing letters on shared sites take the
    # joint-diagonalization route
    hop = PauliSum(3, {(0b011, 0b000): 0.5, (0b011, 0b011): 0.5, (0b000, 0b011): 0.25})
    cases.append((hop, None, random_state(rng, 3)))
    return cases


def test_distribution_moments_match_spectral_oracle():
    for part, patches, psi in _moment_cases():
        sampler = build_sampler(part, patches, psi)
        values, probs = sampler.outcome_distribution()
        assert abs(probs.sum() - 1.0) < 1e-10
        mean, var = sampler.distribution_moments()
        assert abs(mean - expectation(part, psi)) < 1e-9
        assert abs(var - variance(part, psi)) < 1e-9


def test_identity_offset_shifts_every_outcome():
    lat, H = _tfim_2x3()
    rng = np.random.default_rng(3)
    psi = random_state(rng, 6)
    part = pauli_baseline(H).parts[0]
    shifted = part + PauliSum(6, {(0, 0): 2.5})
    s0 = build_sampler(part, None, psi)
    s1 = build_sampler(shifted, None, psi)
    v0, p0 = s0.outcome_distribution()
    v1, p1 = s1.outcome_distribution()
    assert np.allclose(v1, v0 + 2.5, atol=1e-12)
    assert np.allclose(p0, p1, atol=1e-12)


def test_sample_variance_matches_exact_variance():
    lat, H, sol = _ground_3x4()
    geo = geometric_partition(H, lat, "geo1d:2")
    sampler = build_sampler(geo.parts[0], geo.patches[0], sol.states[0])
    exact = variance(geo.parts[0], sol.states[0])
    values, probs = sampler.outcome_distribution()
    mean = probs @ values
    mu4 = probs @ (values - mean) ** 4
    m = 100_000
    out = sampler.sample(m, np.random.default_rng(42))
    se = math.sqrt((mu4 - exact**2 * (m - 3) / (m - 1)) / m)
    assert abs(out.var(ddof=1) - exact) < 3.0 * se


# ---------------------------------------------------------------------------
# build_sampler validation


def test_rejects_oversized_patch():
    psi = np.zeros(1 << 13, dtype=complex)
    psi[0] = 1.0
    part = PauliSum(13, {(0, 1): 1.0})
    with pytest.raises(ValueError, match="guard"):
        build_sampler(part, [tuple(range(13))], psi)


def test_rejects_overlapping_patches():
    plus = np.zeros(4, dtype=complex)
    plus[0] = 1.0
    with pytest.raises(ValueError, match="overlap"):
        build_sampler(PauliSum(2, {(0, 1): 1.0}), [(0, 1), (1,)], plus)


def test_cross_patch_term_merges_patches():
    # a string leaking outside its patch joins the touched patches into one
    # jointly diagonalized block instead of failing
    rng = np.random.default_rng(5)
    psi = random_state(rng, 3)
    part = PauliSum(3, {(0, 0b011): 1.0, (0b100, 0): 0.5})
    sampler = build_sampler(part, [(0,), (1,), (2,)], psi)
    mean, var = sampler.distribution_moments()
    assert abs(mean - expectation(part, psi)) < 1e-9
    assert abs(var - variance(part, psi)) < 1e-9
    sites = sorted(tuple(s) for s, w, _ in sampler.patch_eigs if w is not None)
    assert sites == [(0, 1), (2,)]


def test_oversized_block_from_bridging_terms():
    n = 13
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    terms = {(0, 0b11 << j): 1.0 for j in range(n - 1)}  # ZZ chain spans all sites
    with pytest.raises(ValueError, match="guard"):
        build_sampler(PauliSum(n, terms), [(j,) for j in range(n)], psi)


def test_rejects_noncommuting_group():
    psi = np.zeros(2, dtype=complex)
    psi[0] = 1.0
    part = PauliSum(1, {(1, 0): 1.0, (0, 1): 1.0})
    with pytest.raises(ValueError, match="not mutually commuting"):
        build_sampler(part, None, psi)


def test_rejects_wrong_state_dimension():
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1.0
    with pytest.raises(ValueError, match="dimension"):
        build_sampler(PauliSum(3, {(0, 1): 1.0}), None, psi)


def test_distribution_guard_on_wide_support():
    n = 13
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    terms = {(0, 1 << j): 1.0 for j in range(n)}
    sampler = build_sampler(PauliSum(n, terms), None, psi)
    out = sampler.sample(10, np.random.default_rng(0))
    assert np.allclose(out, n)  # all-zeros state, every Z reads +1
    with pytest.raises(ValueError, match="guard"):
        sampler.outcome_distribution()


def test_sample_needs_positive_count():
    plus = np.zeros(2, dtype=complex)
    plus[0] = 1.0
    sampler = build_sampler(PauliSum(1, {(0, 1): 1.0}), None, plus)
    with pytest.raises(ValueError):
        sampler.sample(0, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# estimator runs


def test_estimator_unbiased_on_baseline():
    lat, H, sol = _ground_2x3()
    base = pauli_baseline(H)
    run = simulate_estimator(base, sol.states[0], 600, "optimal", seed=5, trials=200)
    energy = expectation(H, sol.states[0])
    assert run.total_shots == 600
    assert sum(run.allocation) == 600
    assert abs(run.estimate - energy) <= 4.0 * run.empirical_stderr / math.sqrt(run.trials)
    assert abs(sum(run.part_means) - run.estimate) < 1e-12
    for mean_b, part in zip(run.part_means, base.parts):
        spread = math.sqrt(variance(part, sol.states[0]))
        assert abs(mean_b - expectation(part, sol.states[0])) < 5.0 * spread


def test_eigenstate_whole_partitioning_has_zero_spread():
    lat, H, sol = _ground_2x3()
    whole = eigenbasis_whole(H, lat)
    run = simulate_estimator(whole, sol.states[0], 50, "uniform", seed=2, trials=40)
    assert run.empirical_stderr < 1e-10
    report = compare_predictions(run, 0.0)
    assert report.z == 0.0


def test_estimator_reproducible_by_seed():
    lat, H, sol = _ground_2x3()
    base = pauli_baseline(H)
    r1 = simulate_estimator(base, sol.states[0], 100, "uniform", seed=9, trials=5)
    r2 = simulate_estimator(base, sol.states[0], 100, "uniform", seed=9, trials=5)
    r3 = simulate_estimator(base, sol.states[0], 100, "uniform", seed=10, trials=5)
    assert r1.estimates == r2.estimates
    assert r1.estimates != r3.estimates


def test_explicit_and_uniform_allocations():
    lat, H, sol = _ground_2x3()
    base = pauli_baseline(H)
    run = simulate_estimator(base, sol.states[0], 30, (12, 18), seed=0, trials=2)
    assert run.allocation == (12, 18)
    run = simulate_estimator(base, sol.states[0], 7, "uniform", seed=0, trials=2)
    assert run.allocation == (4, 3)
    with pytest.raises(ValueError, match="sums to"):
        simulate_estimator(base, sol.states[0], 30, (12, 12), seed=0, trials=2)
    with pytest.raises(ValueError, match="entries"):
        simulate_estimator(base, sol.states[0], 30, (10, 10, 10), seed=0, trials=2)
    with pytest.raises(ValueError, match="at least one shot"):
        simulate_estimator(base, sol.states[0], 30, (30, 0), seed=0, trials=2)
    with pytest.raises(ValueError, match="allocation mode"):
        simulate_estimator(base, sol.states[0], 30, "greedy", seed=0, trials=2)
    with pytest.raises(ValueError, match="trial"):
        simulate_estimator(base, sol.states[0], 30, "uniform", seed=0, trials=0)


def test_optimal_beats_uniform_on_unequal_variances():
    # any 2-part split of H has equal variances on an eigenstate, so an
    # unequal instance needs three parts: the XX/YY/Z baseline
    lat = Lattice(2, 3, periodic=True)
    H = build_tfxym(lat, 0.8, 1.0)
    sol = cached_ground(
        "tfxym-2x3",
        lambda: ground_state(build_tfxym(Lattice(2, 3, periodic=True), 0.8, 1.0)),
    )
    psi = sol.states[0]
    base = pauli_baseline(H)
    variances = part_variances(base.parts, psi)
    assert max(variances) > 3.0 * min(variances)  # instance is genuinely unequal
    wins = 0
    opt_vars = []
    uni_vars = []
    for seed in range(50):
        opt = simulate_estimator(base, psi, 150, "optimal", seed=seed, trials=60)
        uni = simulate_estimator(base, psi, 150, "uniform", seed=seed + 1000, trials=60)
        opt_vars.append(opt.empirical_stderr**2)
        uni_vars.append(uni.empirical_stderr**2)
        wins += opt.empirical_stderr < uni.empirical_stderr
    assert np.mean(opt_vars) < 0.9 * np.mean(uni_vars)
    assert wins >= 34  # far into the tail of a fair binomial over 50 seeds


# ---------------------------------------------------------------------------
# prediction calibration


def test_matched_prediction_is_calibrated():
    lat, H, sol = _ground_2x3()
    base = pauli_baseline(H)
    psi = sol.states[0]
    cost = partition_cost(base.parts, psi)
    inside = 0
    z_main = None
    for seed in range(10):
        run = simulate_estimator(base, psi, 800, "optimal", seed=seed, trials=200)
        z = compare_predictions(run, cost).z
        if seed == 0:
            z_main = z
        inside += abs(z) <= 3.0
    assert abs(z_main) <= 3.0
    assert inside >= 9


def test_halved_prediction_is_flagged():
    lat, H, sol = _ground_2x3()
    base = pauli_baseline(H)
    psi = sol.states[0]
    run = simulate_estimator(base, psi, 800, "optimal", seed=0, trials=200)
    report = compare_predictions(run, 0.5 * partition_cost(base.parts, psi))
    assert abs(report.z) > 3.0


def test_nonoptimal_allocation_uses_allocation_cost():
    lat, H, sol = _ground_2x3()
    base = pauli_baseline(H)
    psi = sol.states[0]
    run = simulate_estimator(base, psi, 400, (350, 50), seed=3, trials=200)
    cost = 400.0 * allocation_cost(part_variances(base.parts, psi), run.allocation)
    report = compare_predictions(run, cost)
    assert abs(report.z) <= 3.0


def test_prediction_needs_thirty_trials():
    lat, H, sol = _ground_2x3()
    base = pauli_baseline(H)
    run = simulate_estimator(base, sol.states[0], 100, "uniform", seed=0, trials=10)
    with pytest.raises(ValueError, match="30"):
        compare_predictions(run, 1.0)


def _trial_variance_inflation(partitioning, psi, M, trials):
    """How much wider than the plain chi-square band the sample variance of
    trial estimates spreads; near-eigenstate parts have strongly kurtotic
    outcomes and the 1/m kurtosis decay of the trial mean is not negligible
    at these shot counts."""
    variances = part_variances(partitioning.parts, psi)
    alloc = optimal_allocation(variances, M).budgets
    patch_lists = partitioning.patches or (None,) * len(partitioning.parts)
    num = 0.0
    den = 0.0
    for part, patches, m_b in zip(partitioning.parts, patch_lists, alloc):
        sampler = build_sampler(part, patches, psi)
        values, probs = sampler.outcome_distribution()
        mu = probs @ values
        sig2 = probs @ (values - mu) ** 2
        mu4 = probs @ (values - mu) ** 4
        gamma = mu4 / sig2**2 - 3.0
        num += (gamma / m_b) * (sig2 / m_b) ** 2
        den += sig2 / m_b
    gamma_trial = num / den**2
    return math.sqrt(1.0 + gamma_trial * (trials - 1) / (2.0 * trials))


def test_geometric_run_beats_baseline_by_measured_factor():
    lat, H, sol = _ground_3x4()
    psi = sol.states[0]
    base = pauli_baseline(H)
    geo = geometric_partition(H, lat, "geo1d:2")
    cost_p = partition_cost(base.parts, psi)
    cost_g = partition_cost(geo.parts, psi)
    run_p = simulate_estimator(base, psi, 2000, "optimal", seed=21, trials=200)
    run_g = simulate_estimator(geo, psi, 2000, "optimal", seed=22, trials=200)
    infl_p = _trial_variance_inflation(base, psi, 2000, 200)
    infl_g = _trial_variance_inflation(geo, psi, 2000, 200)
    assert abs(compare_predictions(run_p, cost_p).z) <= 3.0 * infl_p
    assert abs(compare_predictions(run_g, cost_g).z) <= 3.0 * infl_g
    g = cost_p / cost_g
    assert g > 10.0
    ratio = run_p.empirical_stderr**2 / run_g.empirical_stderr**2
    # two independent 199-dof variance estimates: 3 sigma on the log ratio
    band = 3.0 * math.sqrt((2.0 / 199.0) * (infl_p**2 + infl_g**2))
    assert g * math.exp(-band) < ratio < g * math.exp(band)
