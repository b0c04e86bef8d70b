"""Statevectors, matrix-free Pauli-sum kernels, eigensolvers, and moments.

Basis convention: amplitude index b is the bitstring with qubit j stored in
bit j, so b = 5 on three qubits is |q2 q1 q0> = |101> with q0 = q2 = 1.

The apply kernel never materializes the operator: terms are grouped by their
X mask, each group contributing out[j] += amp_x[j] * psi[j ^ x] with a
precomputed sign/phase vector amp_x.  Group vectors are cached on the
PauliSum when they fit a memory budget, which makes repeated applies
(Lanczos, Monte Carlo batches) cheap.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .paulis import PauliSum

NORM_TOL = 1e-10
RESIDUAL_TOL = 1e-8
DEGENERACY_TOL = 1e-8
DENSE_QUBIT_LIMIT = 13
LANCZOS_MAX_ITER = 500
_APPLY_CACHE_BUDGET = 1 << 23  # max cached elements (per PauliSum)

_MAGIC = b"LSVEC01"


# ---------------------------------------------------------------------------
# statevector container


@dataclass
class StateVector:
    """Dense complex amplitudes plus bookkeeping.

    `normalized` is checked at construction; callers producing intentionally
    unnormalized vectors (e.g. noisy mixtures) pass require_norm=False.
    """

    amplitudes: np.ndarray
    n_qubits: int
    provenance: str = ""
    require_norm: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] != 1 << self.n_qubits:
            raise ValueError("amplitude length must be 2**n_qubits")
        self.amplitudes = amps
        if self.require_norm and not self.is_normalized:
            raise ValueError(
                f"state norm {self.norm():.6g} deviates from 1 by more than {NORM_TOL}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm() - 1.0) <= NORM_TOL

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.n_qubits, self.provenance)


def _amps(psi) -> np.ndarray:
    if isinstance(psi, StateVector):
        return psi.amplitudes
    return np.asarray(psi)


def save_statevector(sv: StateVector, path) -> None:
    """Binary layout: 16-byte header (7-byte magic "LSVEC01", zero pad byte,
    little-endian uint32 n_qubits, 4 zero bytes) then 2*2^n little-endian
    float64 values interleaved (re, im)."""
    header = _MAGIC + b"\x00" + struct.pack("<I", sv.n_qubits) + b"\x00" * 4
    inter = np.empty(2 * sv.amplitudes.size, dtype="<f8")
    inter[0::2] = sv.amplitudes.real
    inter[1::2] = sv.amplitudes.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(inter.tobytes())


def load_statevector(path) -> StateVector:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:7] != _MAGIC:
            raise ValueError(f"{path}: not a statevector file (bad magic)")
        (n_qubits,) = struct.unpack("<I", header[8:12])
        payload = np.frombuffer(fh.read(), dtype="<f8")
    if payload.size != 2 * (1 << n_qubits):
        raise ValueError(f"{path}: truncated payload for n_qubits={n_qubits}")
    amps = payload[0::2] + 1j * payload[1::2]
    return StateVector(amps, n_qubits, provenance=f"loaded:{path}", require_norm=False)


# ---------------------------------------------------------------------------
# matrix-free kernels

_IDX_CACHE: dict[int, np.ndarray] = {}


def _indices(d: int) -> np.ndarray:
    arr = _IDX_CACHE.get(d)
    if arr is None:
        arr = np.arange(d, dtype=np.uint64)
        if len(_IDX_CACHE) > 4:
            _IDX_CACHE.clear()
        _IDX_CACHE[d] = arr
    return arr


def _parity(a: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(a) & np.uint64(1)).astype(np.int8)


def _group_terms(op: PauliSum) -> dict[int, list[tuple[int, float, int]]]:
    groups: dict[int, list[tuple[int, float, int]]] = {}
    for (x, z), c in op.terms.items():
        k = bin(x & z).count("1") % 4
        groups.setdefault(x, []).append((z, c, k))
    return groups


def _amp_vector(x: int, entries, d: int) -> np.ndarray:
    """amp_x[j] = sum_t c_t * i**k_t * (-1)**popcount((j^x) & z_t)."""
    src = _indices(d) ^ np.uint64(x)
    real_only = all(k % 2 == 0 for _, _, k in entries)
    amp = np.zeros(d, dtype=np.float64 if real_only else np.complex128)
    for z, c, k in entries:
        signs = 1.0 - 2.0 * _parity(src & np.uint64(z))
        phase = (1j**k) if k % 2 else ((-1.0) ** (k // 2))
        amp += (c * phase) * signs
    return amp


def _apply_plan(op: PauliSum):
    plan = op._cache.get("apply_plan")
    if plan is not None:
        return plan
    d = 1 << op.n_qubits
    groups = _group_terms(op)
    cacheable = len(groups) * d <= _APPLY_CACHE_BUDGET
    if cacheable:
        plan = ("vectors", [(x, _amp_vector(x, ents, d)) for x, ents in groups.items()])
    else:
        plan = ("terms", list(groups.items()))
    op._cache["apply_plan"] = plan
    return plan


def apply(op: PauliSum, psi) -> np.ndarray:
    """Matrix-free op @ psi. psi may be (d,) or (d, batch)."""
    psi = _amps(psi)
    d = 1 << op.n_qubits
    if psi.shape[0] != d:
        raise ValueError("state dimension does not match operator register")
    out = np.zeros(psi.shape, dtype=np.complex128)
    idx = _indices(d)
    kind, payload = _apply_plan(op)
    if kind == "vectors":
        for x, amp in payload:
            src = psi if x == 0 else psi[idx ^ np.uint64(x)]
            if psi.ndim == 1:
                out += amp * src
            else:
                out += amp[:, None] * src
    else:
        for x, entries in payload:
            amp = _amp_vector(x, entries, d)
            src = psi if x == 0 else psi[idx ^ np.uint64(x)]
            if psi.ndim == 1:
                out += amp * src
            else:
                out += amp[:, None] * src
    return out


def dense(op: PauliSum, *, force: bool = False) -> np.ndarray:
    """Materialize the operator; real symmetric when no string carries an odd
    number of Y factors. Guarded to small registers unless force=True."""
    if op.n_qubits > DENSE_QUBIT_LIMIT and not force:
        raise ValueError(
            f"dense() guarded to n <= {DENSE_QUBIT_LIMIT} qubits "
            f"(got {op.n_qubits}); pass force=True to override"
        )
    d = 1 << op.n_qubits
    groups = _group_terms(op)
    real_only = all(k % 2 == 0 for ents in groups.values() for _, _, k in ents)
    mat = np.zeros((d, d), dtype=np.float64 if real_only else np.complex128)
    idx = _indices(d)
    cols = idx.astype(np.int64)
    for x, ents in groups.items():
        amp = _amp_vector(x, ents, d)
        rows = (idx ^ np.uint64(x)).astype(np.int64)
        mat[rows, cols] += amp[rows] if x else amp
    return mat


# ---------------------------------------------------------------------------
# moments


def expectation(op: PauliSum, psi) -> float:
    v = _amps(psi)
    return float(np.real(np.vdot(v, apply(op, v))))


def second_moment(op: PauliSum, psi) -> float:
    w = apply(op, _amps(psi))
    return float(np.real(np.vdot(w, w)))


def variance(op: PauliSum, psi) -> float:
    v = _amps(psi)
    w = apply(op, v)
    m = float(np.real(np.vdot(v, w)))
    s = float(np.real(np.vdot(w, w)))
    return max(s - m * m, 0.0)


def covariance_sym(a: PauliSum, b: PauliSum, psi) -> float:
    """Symmetrized covariance <{A,B}>/2 - <A><B>."""
    v = _amps(psi)
    wa = apply(a, v)
    wb = apply(b, v)
    ma = float(np.real(np.vdot(v, wa)))
    mb = float(np.real(np.vdot(v, wb)))
    return float(np.real(np.vdot(wa, wb))) - ma * mb


def correlation(a: PauliSum, b: PauliSum, psi, *, tol: float = 1e-14) -> float:
    """Pearson-type correlation from the symmetrized covariance.

    Returns NaN when either variance vanishes (undefined direction).
    """
    v = _amps(psi)
    wa = apply(a, v)
    wb = apply(b, v)
    ma = float(np.real(np.vdot(v, wa)))
    mb = float(np.real(np.vdot(v, wb)))
    va = max(float(np.real(np.vdot(wa, wa))) - ma * ma, 0.0)
    vb = max(float(np.real(np.vdot(wb, wb))) - mb * mb, 0.0)
    scale = max(va, vb, 1.0)
    if va <= tol * scale or vb <= tol * scale:
        return float("nan")
    cov = float(np.real(np.vdot(wa, wb))) - ma * mb
    # rounding can push a perfectly (anti-)correlated pair past +-1
    return float(np.clip(cov / np.sqrt(va * vb), -1.0, 1.0))


@dataclass(frozen=True)
class MomentStats:
    """First/second moments of one observable on one state.

    mean and second_moment include any identity component; variance is
    shift-invariant; frob_sq_over_d and identity_coeff let downstream
    formulas re-shift to the traceless convention.
    """

    label: str
    mean: float
    second_moment: float
    variance: float
    frob_sq_over_d: float
    identity_coeff: float

    @property
    def shifted_mean(self) -> float:
        return self.mean - self.identity_coeff

    @property
    def shifted_second_moment(self) -> float:
        return self.variance + self.shifted_mean**2


def part_stats(op: PauliSum, psi, label: str = "") -> MomentStats:
    v = _amps(psi)
    w = apply(op, v)
    m = float(np.real(np.vdot(v, w)))
    s = float(np.real(np.vdot(w, w)))
    return MomentStats(
        label=label,
        mean=m,
        second_moment=s,
        variance=max(s - m * m, 0.0),
        frob_sq_over_d=op.frobenius_norm_sq_over_d(),
        identity_coeff=op.identity_coefficient,
    )


def stats_for_parts(parts: Sequence[PauliSum], psi, labels=None) -> list[MomentStats]:
    labels = labels or [f"part{i + 1}" for i in range(len(parts))]
    return [part_stats(p, psi, lab) for p, lab in zip(parts, labels)]


# ---------------------------------------------------------------------------
# eigensolvers


@dataclass
class EigenSolution:
    energies: tuple[float, ...]
    states: list[StateVector]
    gap: float
    degenerate: bool
    residuals: tuple[float, ...]
    method: str
    iterations: int | None = None

    @property
    def ground_energy(self) -> float:
        return self.energies[0]

    @property
    def ground(self) -> StateVector:
        return self.states[0]


def ground_state(
    op: PauliSum,
    k: int = 1,
    *,
    method: str = "auto",
    seed: int = 7,
    sector_popcount: int | None = None,
    tol: float = 1e-10,
) -> EigenSolution:
    """Lowest-k eigenpairs. Dense LAPACK for n <= 12, Lanczos with full
    reorthogonalization above (method overrides: "dense" | "lanczos").

    Every returned state satisfies ||H s - E s|| <= 1e-8 * max(1, |E0|); the
    degenerate flag fires when E1 - E0 < 1e-8 * max(1, |E0|).  On the Lanczos
    path the gap (and hence the flag) is best-effort for truly degenerate
    ground spaces.  sector_popcount restricts the Lanczos start vector to the
    given bitstring Hamming weight (for number-conserving models); it is
    ignored on the dense path.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    d = 1 << op.n_qubits
    if k > d:
        raise ValueError("k exceeds Hilbert-space dimension")
    if method == "auto":
        method = "dense" if op.n_qubits <= 12 else "lanczos"
    if method == "dense":
        return _dense_lowest(op, k)
    if method == "lanczos":
        return _lanczos_lowest(op, k, seed=seed, sector_popcount=sector_popcount, tol=tol)
    raise ValueError(f"unknown method {method!r}")


def _finalize(op, energies, vectors, method, iterations=None) -> EigenSolution:
    k = len(vectors)
    e0 = energies[0]
    scale = max(1.0, abs(e0))
    residuals = []
    states = []
    for i in range(k):
        v = vectors[i]
        r = float(np.linalg.norm(apply(op, v) - energies[i] * v))
        if r > RESIDUAL_TOL * scale:
            raise RuntimeError(
                f"eigenpair {i} residual {r:.3e} exceeds {RESIDUAL_TOL * scale:.3e}; "
                "increase iterations or use sector projection"
            )
        residuals.append(r)
        states.append(
            StateVector(v, op.n_qubits, provenance=f"{method} eigenstate {i} E={energies[i]:.12g}")
        )
    gap = float(energies[1] - energies[0]) if len(energies) > 1 else float("inf")
    degenerate = gap < DEGENERACY_TOL * scale
    return EigenSolution(
        energies=tuple(float(e) for e in energies),
        states=states,
        gap=gap,
        degenerate=degenerate,
        residuals=tuple(residuals),
        method=method,
        iterations=iterations,
    )


def _dense_lowest(op: PauliSum, k: int) -> EigenSolution:
    d = 1 << op.n_qubits
    mat = dense(op)
    hi = min(k, d - 1)  # one extra pair when available, for the gap
    vals, vecs = eigh(mat, subset_by_index=[0, hi])
    vectors = [np.ascontiguousarray(vecs[:, i]).astype(np.complex128) for i in range(k)]
    return _finalize(op, list(vals[: max(k, min(2, d))]), vectors, "dense")


def _lanczos_lowest(
    op: PauliSum,
    k: int,
    *,
    seed: int,
    sector_popcount: int | None,
    tol: float,
) -> EigenSolution:
    d = 1 << op.n_qubits
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    if sector_popcount is not None:
        mask = np.bitwise_count(_indices(d)) == sector_popcount
        if not mask.any():
            raise ValueError(f"empty popcount sector {sector_popcount}")
        v = np.where(mask, v, 0.0)
    v /= np.linalg.norm(v)

    scale_guess = max(1.0, op.coeff_one_norm())
    kk = min(k + 1, d)  # converge one extra pair for the gap
    max_iter = min(LANCZOS_MAX_ITER, d)
    V = np.empty((d, max_iter + 1), dtype=np.complex128)
    V[:, 0] = v
    alphas: list[float] = []
    betas: list[float] = []
    j = 0
    while j < max_iter:
        w = apply(op, V[:, j])
        if j > 0:
            w -= betas[j - 1] * V[:, j - 1]
        a = float(np.real(np.vdot(V[:, j], w)))
        alphas.append(a)
        w -= a * V[:, j]
        # full reorthogonalization, two passes
        for _ in range(2):
            w -= V[:, : j + 1] @ (V[:, : j + 1].conj().T @ w)
        b = float(np.linalg.norm(w))
        j += 1
        if b < 1e-13 * scale_guess:
            break  # invariant subspace found
        betas.append(b)
        V[:, j] = w / b
        if j >= kk and (j % 5 == 0 or j == max_iter):
            vals, vecs = eigh_tridiagonal(
                np.asarray(alphas), np.asarray(betas[: j - 1]), select="i", select_range=(0, kk - 1)
            )
            bounds = b * np.abs(vecs[-1, :])
            if np.all(bounds <= tol * max(1.0, abs(vals[0]))):
                break

    m = len(alphas)
    beta_arr = np.asarray(betas[: m - 1]) if m > 1 else np.empty(0)
    vals, vecs = eigh_tridiagonal(
        np.asarray(alphas), beta_arr, select="i", select_range=(0, min(kk, m) - 1)
    )
    ritz = V[:, :m] @ vecs
    vectors = []
    for i in range(min(k, ritz.shape[1])):
        u = ritz[:, i]
        vectors.append(u / np.linalg.norm(u))
    energies = list(vals[: max(k, min(2, m))])
    return _finalize(op, energies, vectors, "lanczos", iterations=m)
