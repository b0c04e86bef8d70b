"""Measurement partitionings: commuting Pauli groups and geometric patch splits.

A geometric kind is described by one or more patch *tilings*: families of
disjoint site sets covering the lattice.  Each tiling owns one part, and every
Hamiltonian term is split evenly across the tilings whose patches contain its
geometric footprint.  For two tilings this reproduces the half-share
construction H1 = (H - H_cut + H_cut')/2, H2 = (H + H_cut - H_cut')/2; for the
four domino tilings it yields the quarter-share of 1-local terms; for
width-3 strips on an axial next-nearest model it produces three parts.

The footprint of a term is the set of sites where it acts with an X or Y
component, or its full support when it is purely diagonal.  This matters for
fermion-mapped Hamiltonians, whose hopping strings carry Z tails between the
two endpoint sites: the tail collapses under a patch-local refermionization,
so only the endpoints constrain which patch can measure the term.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass

from .lattice import Lattice
from .paulis import PauliString, PauliSum

RESIDUAL_TOL = 1e-12

KIND_PAULI = "pauli"
KIND_WHOLE = "whole"
KIND_TWO_LOCAL = "two_local"


def footprint_mask(term: PauliString) -> int:
    """Sites that pin the term to a patch: X/Y sites, or all of a Z-only term."""
    return term.x_mask if term.x_mask else term.z_mask


# ---------------------------------------------------------------------------
# tilings


class _Tiling:
    """Disjoint patches covering all sites, with a site -> patch lookup."""

    def __init__(self, patches: list[list[int]], n_sites: int):
        self.patches = [tuple(sorted(p)) for p in patches]
        self.site_patch = [-1] * n_sites
        for k, patch in enumerate(self.patches):
            for s in patch:
                if self.site_patch[s] != -1:
                    raise ValueError("tiling patches overlap")
                self.site_patch[s] = k
        if any(v == -1 for v in self.site_patch):
            raise ValueError("tiling does not cover the lattice")

    def contains(self, mask: int) -> bool:
        if mask == 0:
            return True
        k = self.site_patch[(mask & -mask).bit_length() - 1]
        m = mask
        while m:
            s = (m & -m).bit_length() - 1
            if self.site_patch[s] != k:
                return False
            m &= m - 1
        return True


def _region_patch(lat: Lattice, cells: list[tuple[int, int]]) -> list[int]:
    """All layers of the given (x, y) cells form one patch, so that on-site
    inter-layer couplings of bilayer models stay inside a patch."""
    return [
        lat.site_index(x, y, layer)
        for layer in range(lat.layers)
        for (x, y) in cells
    ]


def _strip_tiling(lat: Lattice, L: int, axis: str, offset: int) -> _Tiling:
    extent = lat.nx if axis == "x" else lat.ny
    patches = []
    for m in range(extent // L):
        cols = [(offset + m * L + i) % extent for i in range(L)]
        if axis == "x":
            cells = [(c, y) for c in cols for y in range(lat.ny)]
        else:
            cells = [(x, c) for c in cols for x in range(lat.nx)]
        patches.append(_region_patch(lat, cells))
    return _Tiling(patches, lat.n_sites)


def _line_tiling(lat: Lattice, axis: str) -> _Tiling:
    """Full columns (axis x) or rows (axis y) as patches."""
    patches = []
    if axis == "x":
        for x in range(lat.nx):
            patches.append(_region_patch(lat, [(x, y) for y in range(lat.ny)]))
    else:
        for y in range(lat.ny):
            patches.append(_region_patch(lat, [(x, y) for x in range(lat.nx)]))
    return _Tiling(patches, lat.n_sites)


def _block_tiling(lat: Lattice, Lx: int, Ly: int, ox: int, oy: int) -> _Tiling:
    patches = []
    for mx in range(lat.nx // Lx):
        for my in range(lat.ny // Ly):
            cells = [
                ((ox + mx * Lx + i) % lat.nx, (oy + my * Ly + j) % lat.ny)
                for i in range(Lx)
                for j in range(Ly)
            ]
            patches.append(_region_patch(lat, cells))
    return _Tiling(patches, lat.n_sites)


def _domino_tiling(lat: Lattice, axis: str, offset: int) -> _Tiling:
    patches = []
    if axis == "x":
        for y in range(lat.ny):
            for m in range(lat.nx // 2):
                a = (offset + 2 * m) % lat.nx
                patches.append(_region_patch(lat, [(a, y), ((a + 1) % lat.nx, y)]))
    else:
        for x in range(lat.nx):
            for m in range(lat.ny // 2):
                a = (offset + 2 * m) % lat.ny
                patches.append(_region_patch(lat, [(x, a), (x, (a + 1) % lat.ny)]))
    return _Tiling(patches, lat.n_sites)


# ---------------------------------------------------------------------------
# kind parsing


def parse_kind(kind: str) -> tuple[str, dict]:
    """Canonical kind strings: pauli, whole, two_local, geo1d:L[:axis], geo2d:LXxLY."""
    k = kind.strip().lower()
    if k in (KIND_PAULI, KIND_WHOLE, KIND_TWO_LOCAL):
        return k, {}
    m = re.fullmatch(r"geo1d:(\d+)(?::([xy]|auto))?", k)
    if m:
        return "geo1d", {"L": int(m.group(1)), "axis": m.group(2) or "auto"}
    m = re.fullmatch(r"geo2d:(\d+)x(\d+)", k)
    if m:
        return "geo2d", {"Lx": int(m.group(1)), "Ly": int(m.group(2))}
    raise ValueError(
        f"unknown partition kind {kind!r}; expected pauli, whole, two_local, "
        "geo1d:L[:axis], or geo2d:LXxLY"
    )


def _resolve_axis(lat: Lattice, L: int, axis: str) -> str:
    def fits(extent: int) -> bool:
        return extent % L == 0 and extent // L >= 2

    if axis in ("x", "y"):
        extent = lat.nx if axis == "x" else lat.ny
        if not fits(extent):
            raise ValueError(
                f"strip width {L} needs the {axis} extent divisible by L with >= 2 strips"
            )
        return axis
    if fits(lat.nx):
        return "x"
    if fits(lat.ny):
        return "y"
    raise ValueError(f"strip width {L} fits neither extent of {lat.nx}x{lat.ny}")


def _geometric_tilings(H: PauliSum, lat: Lattice, kind: str) -> tuple[str, list[_Tiling]]:
    """Resolve a kind string to its tilings; canonical label returned too."""
    name, params = parse_kind(kind)
    if name == KIND_WHOLE:
        return KIND_WHOLE, [_Tiling([list(range(lat.n_sites))], lat.n_sites)]
    if name == "geo1d":
        L, axis = params["L"], params["axis"]
        if L == 1:
            # columns vs rows; the cut sets are all x-bonds and all y-bonds
            return "geo1d:1", [_line_tiling(lat, "x"), _line_tiling(lat, "y")]
        axis = _resolve_axis(lat, L, axis)
        offset_sets = ([0, L - 1], list(range(L)))
        for offsets in offset_sets:
            tilings = [_strip_tiling(lat, L, axis, o) for o in offsets]
            if _covers_all_terms(H, tilings):
                return f"geo1d:{L}:{axis}", tilings
        raise ValueError(
            f"interaction range exceeds the width-{L} strip spacing along {axis}"
        )
    if name == "geo2d":
        Lx, Ly = params["Lx"], params["Ly"]
        if lat.nx % Lx or lat.ny % Ly or lat.nx // Lx < 2 or lat.ny // Ly < 2:
            raise ValueError(
                f"patch size {Lx}x{Ly} needs both extents divisible with >= 2 patches per axis"
            )
        tilings = [_block_tiling(lat, Lx, Ly, 0, 0), _block_tiling(lat, Lx, Ly, Lx - 1, Ly - 1)]
        if not _covers_all_terms(H, tilings):
            raise ValueError(f"interaction range exceeds the {Lx}x{Ly} patch spacing")
        return f"geo2d:{Lx}x{Ly}", tilings
    if name == KIND_TWO_LOCAL:
        if lat.nx % 2 or lat.ny % 2:
            raise ValueError("2-local partitioning needs even lattice extents")
        tilings = [
            _domino_tiling(lat, "x", 1),
            _domino_tiling(lat, "x", 0),
            _domino_tiling(lat, "y", 1),
            _domino_tiling(lat, "y", 0),
        ]
        if not _covers_all_terms(H, tilings):
            raise ValueError("2-local partitioning needs a nearest-neighbour 2-local model")
        return KIND_TWO_LOCAL, tilings
    raise ValueError(f"kind {kind!r} is not geometric")


def _covers_all_terms(H: PauliSum, tilings: list[_Tiling]) -> bool:
    return all(
        any(t.contains(footprint_mask(s)) for t in tilings) for _, s in H
    )


# ---------------------------------------------------------------------------
# partitionings


@dataclass(frozen=True)
class Partitioning:
    label: str
    kind: str
    parts: tuple[PauliSum, ...]
    patches: tuple[tuple[tuple[int, ...], ...], ...] | None = None

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    def total(self) -> PauliSum:
        out = PauliSum.zero(self.parts[0].n_qubits)
        for p in self.parts:
            out = out.combine(1.0, p, 1.0)
        return out


@dataclass(frozen=True)
class CutPair:
    h_cut: PauliSum
    h_cut_prime: PauliSum


def geometric_partition(H: PauliSum, lat: Lattice, kind: str) -> Partitioning:
    if H.n_qubits != lat.n_sites:
        raise ValueError("operator and lattice sizes disagree")
    label, tilings = _geometric_tilings(H, lat, kind)
    buckets: list[dict[tuple[int, int], float]] = [{} for _ in tilings]
    for c, s in H:
        fp = footprint_mask(s)
        members = [b for b, t in enumerate(tilings) if t.contains(fp)]
        if not members:
            raise ValueError(f"term {s.to_label()} fits no patch of kind {label}")
        share = c / len(members)
        for b in members:
            key = (s.x_mask, s.z_mask)
            buckets[b][key] = buckets[b].get(key, 0.0) + share
    parts = tuple(PauliSum(H.n_qubits, b) for b in buckets)
    patches = tuple(tuple(t.patches) for t in tilings)
    return Partitioning(label=label, kind=label, parts=parts, patches=patches)


def make_cut_pair(H: PauliSum, lat: Lattice, kind: str) -> CutPair:
    label, tilings = _geometric_tilings(H, lat, kind)
    if len(tilings) != 2:
        raise ValueError(f"kind {label} has {len(tilings)} parts; no single cut pair")
    cuts = []
    for t in tilings:
        terms = {
            (s.x_mask, s.z_mask): c for c, s in H if not t.contains(footprint_mask(s))
        }
        cuts.append(PauliSum(H.n_qubits, terms))
    return CutPair(h_cut=cuts[0], h_cut_prime=cuts[1])


def eigenbasis_whole(H: PauliSum, lat: Lattice) -> Partitioning:
    return geometric_partition(H, lat, KIND_WHOLE)


# ---------------------------------------------------------------------------
# Pauli baseline


def _all_commute(terms: list[PauliString]) -> bool:
    return all(
        terms[i].commutes_with(terms[j])
        for i in range(len(terms))
        for j in range(i + 1, len(terms))
    )


def _greedy_commuting_groups(H: PauliSum) -> list[dict[tuple[int, int], float]]:
    order = sorted(
        ((c, s) for c, s in H), key=lambda cs: (-abs(cs[0]), cs[1].to_label())
    )
    groups: list[list[PauliString]] = []
    buckets: list[dict[tuple[int, int], float]] = []
    for c, s in order:
        for g, b in zip(groups, buckets):
            if all(s.commutes_with(m) for m in g):
                g.append(s)
                b[(s.x_mask, s.z_mask)] = c
                break
        else:
            groups.append([s])
            buckets.append({(s.x_mask, s.z_mask): c})
    return buckets


def _hopping_groups(H: PauliSum) -> list[dict[tuple[int, int], float]]:
    """Diagonal group plus endpoint-disjoint hopping groups (first-fit)."""
    diag: dict[tuple[int, int], float] = {}
    bonds: dict[tuple[int, ...], dict[tuple[int, int], float]] = {}
    for c, s in H:
        if s.x_mask == 0:
            diag[(s.x_mask, s.z_mask)] = c
        else:
            bonds.setdefault(tuple(sorted(_mask_sites(s.x_mask))), {})[
                (s.x_mask, s.z_mask)
            ] = c
    colors: list[set[int]] = []
    buckets: list[dict[tuple[int, int], float]] = []
    for bond in sorted(bonds):
        for used, b in zip(colors, buckets):
            if not used.intersection(bond):
                used.update(bond)
                b.update(bonds[bond])
                break
        else:
            colors.append(set(bond))
            buckets.append(dict(bonds[bond]))
    if diag:
        buckets.append(diag)
    return buckets


def _mask_sites(mask: int) -> list[int]:
    sites = []
    while mask:
        sites.append((mask & -mask).bit_length() - 1)
        mask &= mask - 1
    return sites


def pauli_baseline(H: PauliSum, hint: str | None = None) -> Partitioning:
    """Mutually commuting groups; a model hint selects the published grouping.

    tfim/bnnni: diagonal ZZ group + field group.  tfxym/hcbh: {XX}, {YY}, {Z}.
    hubbard/spinless_hubbard: endpoint-disjoint hopping groups + one diagonal
    group.  Without a hint: greedy first-fit by pairwise commutation over
    terms in descending |coefficient| order.
    """
    n = H.n_qubits
    if hint in ("tfim", "bnnni"):
        diag = {(s.x_mask, s.z_mask): c for c, s in H if s.x_mask == 0}
        rest = {(s.x_mask, s.z_mask): c for c, s in H if s.x_mask != 0}
        buckets = [d for d in (diag, rest) if d]
    elif hint in ("tfxym", "hcbh"):
        xx = {(s.x_mask, s.z_mask): c for c, s in H if s.x_mask and not s.z_mask}
        yy = {(s.x_mask, s.z_mask): c for c, s in H if s.x_mask and s.x_mask == s.z_mask}
        zz = {(s.x_mask, s.z_mask): c for c, s in H if not s.x_mask}
        leftover = len(H) - len(xx) - len(yy) - len(zz)
        if leftover:
            raise ValueError(f"hint {hint!r} does not match the operator's terms")
        buckets = [d for d in (xx, yy, zz) if d]
    elif hint in ("hubbard", "spinless_hubbard"):
        buckets = _hopping_groups(H)
    elif hint is None:
        buckets = _greedy_commuting_groups(H)
    else:
        raise ValueError(f"unknown model hint {hint!r}")
    parts = tuple(PauliSum(n, b) for b in buckets)
    for p in parts:
        if not _all_commute([s for _, s in p]):
            raise ValueError(f"hint {hint!r} produced a non-commuting group")
    return Partitioning(
        label=f"pauli[{hint or 'greedy'}]", kind=KIND_PAULI, parts=parts, patches=None
    )


# ---------------------------------------------------------------------------
# validation and serialization


@dataclass(frozen=True)
class PartitionReport:
    max_residual: float
    patch_violations: tuple[str, ...]
    commutation_violations: tuple[str, ...]
    overlap_violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return (
            self.max_residual < RESIDUAL_TOL
            and not self.patch_violations
            and not self.commutation_violations
            and not self.overlap_violations
        )


def validate_partition(p: Partitioning, H: PauliSum) -> PartitionReport:
    total: dict[tuple[int, int], float] = {}
    for part in p.parts:
        for c, s in part:
            key = (s.x_mask, s.z_mask)
            total[key] = total.get(key, 0.0) + c
    for c, s in H:
        key = (s.x_mask, s.z_mask)
        total[key] = total.get(key, 0.0) - c
    residual = max((abs(v) for v in total.values()), default=0.0)

    patch_bad: list[str] = []
    overlap_bad: list[str] = []
    if p.patches is not None:
        for b, (part, patches) in enumerate(zip(p.parts, p.patches)):
            masks = []
            for patch in patches:
                m = 0
                for s in patch:
                    m |= 1 << s
                masks.append(m)
            for i in range(len(masks)):
                for j in range(i + 1, len(masks)):
                    if masks[i] & masks[j]:
                        overlap_bad.append(f"part {b}: patches {i} and {j} overlap")
            for _, s in part:
                fp = footprint_mask(s)
                if fp and not any(fp & m == fp for m in masks):
                    patch_bad.append(f"part {b}: {s.to_label()} not inside one patch")

    comm_bad: list[str] = []
    if p.kind == KIND_PAULI:
        for b, part in enumerate(p.parts):
            strings = [s for _, s in part]
            for i in range(len(strings)):
                for j in range(i + 1, len(strings)):
                    if not strings[i].commutes_with(strings[j]):
                        comm_bad.append(
                            f"part {b}: {strings[i].to_label()} vs {strings[j].to_label()}"
                        )
    return PartitionReport(
        max_residual=residual,
        patch_violations=tuple(patch_bad),
        commutation_violations=tuple(comm_bad),
        overlap_violations=tuple(overlap_bad),
    )


def export_partitioning(p: Partitioning, dirpath: str) -> None:
    os.makedirs(dirpath, exist_ok=True)
    manifest = {
        "label": p.label,
        "kind": p.kind,
        "n_parts": p.n_parts,
        "n_qubits": p.parts[0].n_qubits,
        "patches": [[list(patch) for patch in pp] for pp in p.patches]
        if p.patches is not None
        else None,
        "files": [f"part_{b:02d}.txt" for b in range(p.n_parts)],
    }
    for b, part in enumerate(p.parts):
        with open(os.path.join(dirpath, f"part_{b:02d}.txt"), "w") as fh:
            fh.write(part.to_text())
    with open(os.path.join(dirpath, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def load_partitioning(dirpath: str) -> Partitioning:
    with open(os.path.join(dirpath, "manifest.json")) as fh:
        manifest = json.load(fh)
    parts = []
    for name in manifest["files"]:
        with open(os.path.join(dirpath, name)) as fh:
            text = fh.read()
        if text.strip():
            parts.append(PauliSum.from_text(text))
        else:
            parts.append(PauliSum.zero(manifest["n_qubits"]))
    patches = (
        tuple(tuple(tuple(patch) for patch in pp) for pp in manifest["patches"])
        if manifest["patches"] is not None
        else None
    )
    return Partitioning(
        label=manifest["label"], kind=manifest["kind"], parts=tuple(parts), patches=patches
    )
