"""Rectangular lattices and the model Hamiltonians built on them.

Site order is row-major within a layer, layers stacked: index(x, y, layer) =
layer*nx*ny + y*nx + x.  Fermionic models use this same order as the
Jordan-Wigner mode order (all layer-0 modes before layer-1 modes).

Edge conventions on periodic lattices:

* nearest-neighbour edges are deduplicated when a direction has extent 2
  (the +1 and -1 neighbours coincide), so a 2 x m row contributes one bond;
* axial next-nearest edges are enumerated one per site per direction with no
  deduplication; coincident Pauli strings then merge by coefficient addition
  (extent 4 doubles the wrapped pair, extent 3 folds onto nearest-neighbour
  pairs), which is the convention the term-count checks pin down.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .paulis import PauliString, PauliSum


@dataclass(frozen=True)
class Edge:
    a: int
    b: int
    axis: str  # "x" or "y"
    span: int  # 1 = nearest neighbour, 2 = axial next-nearest


@dataclass(frozen=True)
class Lattice:
    nx: int
    ny: int
    layers: int = 1
    periodic: bool = True

    def __post_init__(self) -> None:
        if self.nx < 2 or self.ny < 2:
            raise ValueError("lattice extents must be >= 2")
        if self.layers not in (1, 2):
            raise ValueError("layers must be 1 or 2")

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny * self.layers

    def site_index(self, x: int, y: int, layer: int = 0) -> int:
        if not (0 <= x < self.nx and 0 <= y < self.ny and 0 <= layer < self.layers):
            raise ValueError(f"site ({x},{y},{layer}) outside lattice")
        return layer * self.nx * self.ny + y * self.nx + x

    def site_coords(self, idx: int) -> tuple[int, int, int]:
        if not (0 <= idx < self.n_sites):
            raise ValueError("site index out of range")
        layer, rest = divmod(idx, self.nx * self.ny)
        y, x = divmod(rest, self.nx)
        return x, y, layer

    def _axis_edges(self, span: int, dedup: bool) -> list[Edge]:
        edges: list[Edge] = []
        for layer in range(self.layers):
            for y in range(self.ny):
                for x in range(self.nx):
                    # +x neighbour
                    if self.periodic:
                        tx = (x + span) % self.nx
                        keep = not (dedup and self.nx == 2 and x == 1)
                    else:
                        tx = x + span
                        keep = tx < self.nx
                    if keep:
                        edges.append(
                            Edge(self.site_index(x, y, layer), self.site_index(tx, y, layer), "x", span)
                        )
                    # +y neighbour
                    if self.periodic:
                        ty = (y + span) % self.ny
                        keep = not (dedup and self.ny == 2 and y == 1)
                    else:
                        ty = y + span
                        keep = ty < self.ny
                    if keep:
                        edges.append(
                            Edge(self.site_index(x, y, layer), self.site_index(x, ty, layer), "y", span)
                        )
        return edges

    def nn_edges(self) -> list[Edge]:
        return self._axis_edges(span=1, dedup=True)

    def nnn_axial_edges(self) -> list[Edge]:
        if self.nx < 3 or self.ny < 3:
            raise ValueError("axial next-nearest edges need extents >= 3")
        return self._axis_edges(span=2, dedup=False)

    def translation_permutation(self, dx: int, dy: int) -> list[int]:
        """perm[j] = index of site j translated by (dx, dy); periodic only."""
        if not self.periodic:
            raise ValueError("translations need periodic boundaries")
        perm = [0] * self.n_sites
        for j in range(self.n_sites):
            x, y, layer = self.site_coords(j)
            perm[j] = self.site_index((x + dx) % self.nx, (y + dy) % self.ny, layer)
        return perm


# ---------------------------------------------------------------------------
# spin models


def _one_site(lat: Lattice, site: int, ch: str) -> PauliString:
    x = z = 0
    if ch in ("X", "Y"):
        x = 1 << site
    if ch in ("Z", "Y"):
        z = 1 << site
    return PauliString(x, z, lat.n_sites)


def _two_site(lat: Lattice, a: int, b: int, ch: str) -> PauliString:
    x = z = 0
    for s in (a, b):
        if ch in ("X", "Y"):
            x |= 1 << s
        if ch in ("Z", "Y"):
            z |= 1 << s
    return PauliString(x, z, lat.n_sites)


def _require_single_layer(lat: Lattice) -> None:
    if lat.layers != 1:
        raise ValueError("spin models are single-layer")


def build_tfxym(lat: Lattice, eta: float, h: float) -> PauliSum:
    """-1/2 sum_<ij> [(1+eta) X_iX_j + (1-eta) Y_iY_j] - h sum_i Z_i."""
    _require_single_layer(lat)
    pairs: list[tuple[float, PauliString]] = []
    cx, cy = -(1.0 + eta) / 2.0, -(1.0 - eta) / 2.0
    for e in lat.nn_edges():
        pairs.append((cx, _two_site(lat, e.a, e.b, "X")))
        pairs.append((cy, _two_site(lat, e.a, e.b, "Y")))
    for s in range(lat.n_sites):
        pairs.append((-h, _one_site(lat, s, "Z")))
    return PauliSum.from_strings(pairs)


def build_tfim(lat: Lattice, J: float, h: float) -> PauliSum:
    """-J sum_<ij> Z_iZ_j - h sum_i X_i."""
    _require_single_layer(lat)
    pairs: list[tuple[float, PauliString]] = []
    for e in lat.nn_edges():
        pairs.append((-J, _two_site(lat, e.a, e.b, "Z")))
    for s in range(lat.n_sites):
        pairs.append((-h, _one_site(lat, s, "X")))
    return PauliSum.from_strings(pairs)


def build_bnnni(lat: Lattice, kappa: float, h: float, J: float = 1.0) -> PauliSum:
    """J(-sum_nn Z_iZ_j + kappa sum_nnn-axial Z_iZ_j) - h sum_i X_i."""
    _require_single_layer(lat)
    if lat.nx < 3 or lat.ny < 3:
        raise ValueError("biaxial next-nearest model needs extents >= 3")
    pairs: list[tuple[float, PauliString]] = []
    for e in lat.nn_edges():
        pairs.append((-J, _two_site(lat, e.a, e.b, "Z")))
    for e in lat.nnn_axial_edges():
        pairs.append((J * kappa, _two_site(lat, e.a, e.b, "Z")))
    for s in range(lat.n_sites):
        pairs.append((-h, _one_site(lat, s, "X")))
    return PauliSum.from_strings(pairs)


def build_hcbh(lat: Lattice, J: float, h: float) -> PauliSum:
    """-(J/2) sum_<ij> (X_iX_j + Y_iY_j) + (h/2) sum_i Z_i.

    Hard-core boson occupation is n_i = (I + Z_i)/2 here: the zero-boson
    vacuum is the all-(Z = -1) computational state, the J -> 0 ground state
    for h > 0.
    """
    _require_single_layer(lat)
    pairs: list[tuple[float, PauliString]] = []
    for e in lat.nn_edges():
        pairs.append((-J / 2.0, _two_site(lat, e.a, e.b, "X")))
        pairs.append((-J / 2.0, _two_site(lat, e.a, e.b, "Y")))
    for s in range(lat.n_sites):
        pairs.append((h / 2.0, _one_site(lat, s, "Z")))
    return PauliSum.from_strings(pairs)


def hcbh_number_operator(lat: Lattice) -> PauliSum:
    """N = sum_i (I + Z_i)/2 under the hard-core convention above."""
    n = lat.n_sites
    terms: dict[tuple[int, int], float] = {(0, 0): n / 2.0}
    for s in range(n):
        terms[(0, 1 << s)] = 0.5
    return PauliSum(n, terms)


# ---------------------------------------------------------------------------
# Jordan-Wigner and fermionic models


def jordan_wigner(
    kind: str,
    modes: Sequence[int],
    n_modes: int,
    order: Sequence[int] | None = None,
) -> PauliSum:
    """Qubit image of one fermionic monomial.

    kind: "number" (n_p), "hopping" (c+_p c_q + c+_q c_p, p != q), or
    "density_density" (n_p n_q, p != q).  `order` maps mode -> qubit position
    (default: identity).  Vacuum is all-(Z = +1): n_p -> (I - Z_p)/2; hopping
    between positions a < b carries the Z string on a+1..b-1.
    """
    pos = list(range(n_modes)) if order is None else list(order)
    if sorted(pos) != list(range(n_modes)):
        raise ValueError("order must be a permutation of modes")
    if any(not (0 <= m < n_modes) for m in modes):
        raise ValueError("mode index out of range")

    if kind == "number":
        (p,) = modes
        q = pos[p]
        return PauliSum(n_modes, {(0, 0): 0.5, (0, 1 << q): -0.5})
    if kind == "density_density":
        p, q = modes
        if p == q:
            raise ValueError("density_density needs distinct modes")
        a, b = pos[p], pos[q]
        return PauliSum(
            n_modes,
            {
                (0, 0): 0.25,
                (0, 1 << a): -0.25,
                (0, 1 << b): -0.25,
                (0, (1 << a) | (1 << b)): 0.25,
            },
        )
    if kind == "hopping":
        p, q = modes
        if p == q:
            raise ValueError("hopping needs distinct modes")
        a, b = sorted((pos[p], pos[q]))
        string_z = 0
        for j in range(a + 1, b):
            string_z |= 1 << j
        ends = (1 << a) | (1 << b)
        xx = (ends, string_z)
        yy = (ends, string_z | ends)
        return PauliSum(n_modes, {xx: 0.5, yy: 0.5})
    raise ValueError(f"unsupported fermionic monomial kind {kind!r}")


def fermion_number_operator(n_modes: int) -> PauliSum:
    terms: dict[tuple[int, int], float] = {(0, 0): n_modes / 2.0}
    for s in range(n_modes):
        terms[(0, 1 << s)] = -0.5
    return PauliSum(n_modes, terms)


def build_spinless_hubbard(lat: Lattice, t: float, U: float, mu: float) -> PauliSum:
    """-t sum_<ij> (c+_i c_j + h.c.) + U sum_<ij> n_i n_j - mu sum_i n_i."""
    _require_single_layer(lat)
    n = lat.n_sites
    total = PauliSum.zero(n)
    for e in lat.nn_edges():
        total = total.combine(1.0, jordan_wigner("hopping", (e.a, e.b), n), -t)
        if U != 0.0:
            total = total.combine(1.0, jordan_wigner("density_density", (e.a, e.b), n), U)
    if mu != 0.0:
        for s in range(n):
            total = total.combine(1.0, jordan_wigner("number", (s,), n), -mu)
    return total


def build_hubbard(lat: Lattice, t: float, U: float, mu: float) -> PauliSum:
    """Two-layer (spin-1/2) Hubbard: in-layer hopping, on-site U n_up n_down.

    Requires layers == 2; modes ordered all spin-up (layer 0) then all
    spin-down (layer 1), matching site_index.
    """
    if lat.layers != 2:
        raise ValueError("spinful model needs layers == 2")
    n = lat.n_sites
    per_layer = lat.nx * lat.ny
    total = PauliSum.zero(n)
    for e in lat.nn_edges():  # already layer-resolved (no inter-layer edges)
        total = total.combine(1.0, jordan_wigner("hopping", (e.a, e.b), n), -t)
    if U != 0.0:
        for s in range(per_layer):
            total = total.combine(
                1.0, jordan_wigner("density_density", (s, s + per_layer), n), U
            )
    if mu != 0.0:
        for s in range(n):
            total = total.combine(1.0, jordan_wigner("number", (s,), n), -mu)
    return total


# ---------------------------------------------------------------------------
# registry used by the CLI

MODEL_BUILDERS: dict[str, tuple[Callable[..., PauliSum], tuple[str, ...]]] = {
    "tfxym": (build_tfxym, ("eta", "h")),
    "tfim": (build_tfim, ("J", "h")),
    "bnnni": (build_bnnni, ("kappa", "h", "J")),
    "hcbh": (build_hcbh, ("J", "h")),
    "spinless_hubbard": (build_spinless_hubbard, ("t", "U", "mu")),
    "hubbard": (build_hubbard, ("t", "U", "mu")),
}

FERMIONIC_MODELS = {"spinless_hubbard", "hubbard"}
NUMBER_CONSERVING_MODELS = {"hcbh", "spinless_hubbard", "hubbard"}
