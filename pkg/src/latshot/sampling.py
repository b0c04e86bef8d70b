"""Monte Carlo simulation of eigenbasis measurements on lattice parts.

A part assembled from lattice patches is measured by rotating the state with
each patch's eigenbasis transformation and reading a bitstring; the recorded
outcome is the sum of the patch eigenvalues picked out by the bits.  Baseline
groups of mutually commuting strings take one of two routes: when every site
carries at most one Pauli letter across the group, single-site rotations make
all strings diagonal and outcomes are scored straight off the bits; otherwise
strings sharing support are diagonalized together on their joint support,
guarded to at most PATCH_SITE_LIMIT sites.

Qubit j is bit j of the basis index throughout, matching the operator
encoding.  Samplers bind one state at build time and are immutable after;
drawing uses cumulative-probability inversion on the rotated amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import eigh

from .improvement import optimal_allocation, part_variances
from .partition import Partitioning
from .paulis import PauliString, PauliSum
from .spectral import _amps, dense

PATCH_SITE_LIMIT = 12
# joint outcome spaces above 2**12 are never materialized
DISTRIBUTION_SITE_LIMIT = 12

# columns are the +1 / -1 eigenvectors, so conjugation sends the letter to Z
_SITE_ROT = {
    "X": np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0),
    "Y": np.array([[1.0, 1.0], [1.0j, -1.0j]]) / math.sqrt(2.0),
}

_EIG_CACHE: dict = {}


def _sites_of(mask: int) -> list[int]:
    out = []
    while mask:
        out.append((mask & -mask).bit_length() - 1)
        mask &= mask - 1
    return out


def _mask_of(sites: Sequence[int]) -> int:
    m = 0
    for s in sites:
        m |= 1 << s
    return m


def _local_sum(terms: Sequence[tuple[int, int, float]], sites: Sequence[int]) -> PauliSum:
    """Compress global masks onto a patch; local bit t is sites[t]."""
    local: dict[tuple[int, int], float] = {}
    for x, z, c in terms:
        lx = lz = 0
        for t, s in enumerate(sites):
            lx |= ((x >> s) & 1) << t
            lz |= ((z >> s) & 1) << t
        local[(lx, lz)] = local.get((lx, lz), 0.0) + c
    return PauliSum(len(sites), local)


def _patch_eig(local: PauliSum) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a patch sub-operator, cached by its term list
    so translated copies of a patch pay for one factorization."""
    key = (local.n_qubits, tuple(sorted(local.terms.items())))
    hit = _EIG_CACHE.get(key)
    if hit is None:
        w, u = eigh(dense(local))
        hit = (w, np.ascontiguousarray(u))
        _EIG_CACHE[key] = hit
    return hit


def _rotate(amps: np.ndarray, n: int, sites: Sequence[int], u_dag: np.ndarray) -> np.ndarray:
    """Apply a local matrix on the given qubits of a length-2**n vector."""
    k = len(sites)
    t = amps.reshape((2,) * n)
    axes = [n - 1 - s for s in reversed(sites)]
    t = np.moveaxis(t, axes, range(k))
    shape = t.shape
    t = (u_dag @ t.reshape(1 << k, -1)).reshape(shape)
    t = np.moveaxis(t, range(k), axes)
    return np.ascontiguousarray(t.reshape(-1))


def _letter(xbit: int, zbit: int) -> str:
    return "IXZY"[xbit | (zbit << 1)]


def _components(
    terms: Sequence[tuple[int, int, float]],
) -> list[tuple[tuple[int, ...], list[tuple[int, int, float]]]]:
    """Group terms into connected components of support overlap."""
    parent: dict[int, int] = {}

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for x, z, _ in terms:
        ss = _sites_of(x | z)
        for s in ss:
            parent.setdefault(s, s)
        for s in ss[1:]:
            parent[find(s)] = find(ss[0])
    buckets: dict[int, list[tuple[int, int, float]]] = {}
    masks: dict[int, int] = {}
    for x, z, c in terms:
        root = find(_sites_of(x | z)[0])
        buckets.setdefault(root, []).append((x, z, c))
        masks[root] = masks.get(root, 0) | x | z
    return [
        (tuple(_sites_of(masks[r])), bucket) for r, bucket in sorted(buckets.items())
    ]


class PartSampler:
    """Born-rule outcome sampler for one part on one fixed state.

    patch_eigs lists (sites, eigenvalues, basis change) per dense unit; the
    basis change is None for units scored directly off the bits.
    """

    def __init__(
        self,
        part: PauliSum,
        patch_eigs: list[tuple[tuple[int, ...], np.ndarray, np.ndarray | None]],
        direct_terms: list[tuple[int, float]],
        offset: float,
        probs: np.ndarray,
    ):
        self.part = part
        self.patch_eigs = patch_eigs
        self._direct = [(np.uint64(m), c) for m, c in direct_terms]
        self._offset = offset
        self._probs = probs
        cum = np.cumsum(probs)
        cum /= cum[-1]
        self._cum = cum

    @property
    def n_qubits(self) -> int:
        return self.part.n_qubits

    def _score(self, idx: np.ndarray) -> np.ndarray:
        out = np.full(idx.shape, self._offset, dtype=np.float64)
        for sites, table, _ in self.patch_eigs:
            if table is None:
                continue
            local = np.zeros(idx.shape, dtype=np.int64)
            for t, s in enumerate(sites):
                local |= ((idx >> np.uint64(s)) & np.uint64(1)).astype(np.int64) << t
            out += table[local]
        for mask, c in self._direct:
            par = np.bitwise_count(idx & mask).astype(np.int64) & 1
            out += c * (1.0 - 2.0 * par)
        return out

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        """Draw m outcomes of measuring the part's eigenbasis."""
        if m < 1:
            raise ValueError("need at least one draw")
        idx = np.searchsorted(self._cum, rng.random(m), side="right")
        return self._score(idx.astype(np.uint64))

    def _score_sites(self) -> list[int]:
        mask = 0
        for sites, table, _ in self.patch_eigs:
            if table is not None:
                mask |= _mask_of(sites)
        for m, _ in self._direct:
            mask |= int(m)
        return _sites_of(mask)

    def outcome_distribution(self) -> tuple[np.ndarray, np.ndarray]:
        """Materialized (values, probabilities) over joint patch outcomes,
        exactly equal values aggregated.  Guarded to small joint spaces."""
        sites = self._score_sites()
        u = len(sites)
        if u > DISTRIBUTION_SITE_LIMIT:
            raise ValueError(
                f"joint outcome space covers {u} sites; "
                f"materialization is guarded to {DISTRIBUTION_SITE_LIMIT}"
            )
        n = self.n_qubits
        t = self._probs.reshape((2,) * n)
        axes = [n - 1 - s for s in reversed(sites)]
        t = np.moveaxis(t, axes, range(u))
        marg = t.reshape(1 << u, -1).sum(axis=1)
        joint = np.arange(1 << u, dtype=np.uint64)
        idx = np.zeros(1 << u, dtype=np.uint64)
        for tbit, s in enumerate(sites):
            idx |= ((joint >> np.uint64(tbit)) & np.uint64(1)) << np.uint64(s)
        scores = self._score(idx)
        values, inverse = np.unique(scores, return_inverse=True)
        probs = np.zeros(values.shape)
        np.add.at(probs, inverse, marg)
        return values, probs

    def distribution_moments(self) -> tuple[float, float]:
        values, probs = self.outcome_distribution()
        mean = float(probs @ values)
        return mean, float(probs @ (values - mean) ** 2)


def build_sampler(part: PauliSum, patches, psi) -> PartSampler:
    """Assemble the measurement for a part: patch eigenbases when patches are
    given, commuting-group diagonalization otherwise.

    A term whose support (Z factors included, not just the footprint) crosses
    patch boundaries merges the touched patches into one jointly diagonalized
    block; without patches the strings must be mutually commuting.
    """
    amps = _amps(psi)
    n = part.n_qubits
    if amps.shape[0] != 1 << n:
        raise ValueError("state dimension does not match the part's register")
    terms = [(x, z, c) for (x, z), c in part.terms.items() if (x, z) != (0, 0)]
    offset = part.identity_coefficient
    rotations: list[tuple[tuple[int, ...], np.ndarray]] = []
    patch_eigs: list[tuple[tuple[int, ...], np.ndarray | None, np.ndarray | None]] = []
    direct: list[tuple[int, float]] = []

    if patches is not None:
        patch_list = [tuple(sorted(p)) for p in patches]
        seen = 0
        for p in patch_list:
            m = _mask_of(p)
            if m & seen:
                raise ValueError("patches overlap")
            seen |= m
        # terms whose support leaks outside a patch (fermionic tails) merge
        # the patches they touch into one joint block; with no leaks the
        # blocks are exactly the given patches
        pseudo = [(0, _mask_of(p), 0.0) for p in patch_list if p]
        blocks = _components(list(pseudo) + terms)
        for sites, bucket in blocks:
            real = [(x, z, c) for x, z, c in bucket if (x, z) != (0, 0)]
            if not real:
                continue
            if len(sites) > PATCH_SITE_LIMIT:
                raise ValueError(
                    f"measurement block of {len(sites)} sites exceeds the "
                    f"dense diagonalization guard of {PATCH_SITE_LIMIT}"
                )
            w, u = _patch_eig(_local_sum(real, sites))
            rotations.append((sites, u))
            patch_eigs.append((sites, w, u))
    else:
        strings = [PauliString(x, z, n) for x, z, _ in terms]
        for i in range(len(strings)):
            for j in range(i + 1, len(strings)):
                if not strings[i].commutes_with(strings[j]):
                    raise ValueError(
                        "group is not mutually commuting: "
                        f"{strings[i].to_label()} vs {strings[j].to_label()}"
                    )
        letters: dict[int, str] = {}
        qubitwise = True
        for x, z, _ in terms:
            for s in _sites_of(x | z):
                letter = _letter((x >> s) & 1, (z >> s) & 1)
                if letters.setdefault(s, letter) != letter:
                    qubitwise = False
        if qubitwise:
            for s in sorted(letters):
                rot = _SITE_ROT.get(letters[s])
                if rot is not None:
                    rotations.append(((s,), rot))
                    patch_eigs.append(((s,), None, rot))
            direct = [(x | z, c) for x, z, c in terms]
        else:
            for sites, bucket in _components(terms):
                if len(sites) > PATCH_SITE_LIMIT:
                    raise ValueError(
                        f"commuting group spans {len(sites)} sites jointly; "
                        f"diagonalization is guarded to {PATCH_SITE_LIMIT}"
                    )
                w, u = _patch_eig(_local_sum(bucket, sites))
                rotations.append((sites, u))
                patch_eigs.append((sites, w, u))

    rotated = amps
    for sites, u in rotations:
        rotated = _rotate(rotated, n, sites, u.conj().T)
    probs = (rotated.real**2 + rotated.imag**2).astype(np.float64)
    return PartSampler(part, patch_eigs, direct, offset, probs)


# ---------------------------------------------------------------------------
# estimator runs


@dataclass(frozen=True)
class EstimatorRun:
    """Repeated empirical-mean estimates of <H> from per-part measurements."""

    estimate: float
    part_means: tuple[float, ...]
    allocation: tuple[int, ...]
    total_shots: int
    trials: int
    empirical_stderr: float
    estimates: tuple[float, ...]


def _resolve_allocation(allocation, variances: Sequence[float], M: int) -> tuple[int, ...]:
    k = len(variances)
    if isinstance(allocation, str):
        if allocation == "optimal":
            return optimal_allocation(variances, M).budgets
        if allocation == "uniform":
            if M < k:
                raise ValueError(f"budget {M} cannot cover {k} parts")
            base, extra = divmod(M, k)
            return tuple(base + (1 if b < extra else 0) for b in range(k))
        raise ValueError(f"unknown allocation mode {allocation!r}")
    budgets = tuple(int(m) for m in allocation)
    if len(budgets) != k:
        raise ValueError(f"allocation has {len(budgets)} entries for {k} parts")
    if any(m < 1 for m in budgets):
        raise ValueError("every part needs at least one shot")
    if sum(budgets) != M:
        raise ValueError(f"allocation sums to {sum(budgets)}, budget is {M}")
    return budgets


def simulate_estimator(
    partitioning: Partitioning,
    psi,
    M: int,
    allocation="optimal",
    *,
    seed: int = 0,
    trials: int = 100,
) -> EstimatorRun:
    """Simulate the shot-budgeted empirical mean over independent trials.

    Each trial draws M_b outcomes per part and sums the per-part sample
    means; empirical_stderr is the across-trial standard deviation of that
    estimate (so the spread of the mean over trials is stderr/sqrt(trials)).
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    parts = partitioning.parts
    patch_lists = partitioning.patches or (None,) * len(parts)
    samplers = [build_sampler(p, pl, psi) for p, pl in zip(parts, patch_lists)]
    budgets = _resolve_allocation(allocation, part_variances(parts, psi), M)
    estimates = np.empty(trials)
    part_sums = np.zeros(len(parts))
    for t, ss in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(ss)
        est = 0.0
        for b, (smp, m_b) in enumerate(zip(samplers, budgets)):
            mean_b = float(smp.sample(m_b, rng).mean())
            part_sums[b] += mean_b
            est += mean_b
        estimates[t] = est
    stderr = float(np.std(estimates, ddof=1)) if trials > 1 else 0.0
    return EstimatorRun(
        estimate=float(estimates.mean()),
        part_means=tuple(part_sums / trials),
        allocation=budgets,
        total_shots=int(sum(budgets)),
        trials=trials,
        empirical_stderr=stderr,
        estimates=tuple(float(e) for e in estimates),
    )


@dataclass(frozen=True)
class PredictionReport:
    z: float
    empirical_variance: float
    predicted_variance: float
    variance_stderr: float
    trials: int


def compare_predictions(run: EstimatorRun, predicted_cost: float, M: int | None = None) -> PredictionReport:
    """Calibration z-score of the achieved estimator variance against a
    predicted sampling cost, with the chi-square standard error of a sample
    variance at the run's trial count."""
    if run.trials < 30:
        raise ValueError(f"need at least 30 trials for a variance z-score, got {run.trials}")
    shots = run.total_shots if M is None else int(M)
    predicted = float(predicted_cost) / shots
    empirical = run.empirical_stderr**2
    if predicted == 0.0:
        # zero-variance convention: a deterministic part that stayed
        # deterministic scores 0, anything else is flagged hard
        z = 0.0 if empirical <= 1e-18 else math.inf
        se = 0.0
    else:
        se = predicted * math.sqrt(2.0 / (run.trials - 1))
        z = (empirical - predicted) / se
    return PredictionReport(
        z=z,
        empirical_variance=empirical,
        predicted_variance=predicted,
        variance_stderr=se,
        trials=run.trials,
    )
