"""Lattice geometry and model-builder checks against independent oracles."""

import numpy as np
import pytest

from latshot.lattice import (
    Lattice,
    build_bnnni,
    build_hcbh,
    build_hubbard,
    build_spinless_hubbard,
    build_tfim,
    build_tfxym,
    fermion_number_operator,
    hcbh_number_operator,
    jordan_wigner,
)
from latshot.spectral import ground_state

from conftest import dense_of


def two_site_label(n, i, j, ch):
    chars = ["I"] * n
    chars[i] = chars[j] = ch
    return "".join(chars)


def one_site_label(n, i, ch):
    chars = ["I"] * n
    chars[i] = ch
    return "".join(chars)


# ---------------------------------------------------------------------------
# geometry


def test_site_index_round_trip():
    lat = Lattice(3, 4, layers=2)
    seen = set()
    for layer in range(2):
        for y in range(4):
            for x in range(3):
                idx = lat.site_index(x, y, layer)
                assert lat.site_coords(idx) == (x, y, layer)
                seen.add(idx)
    assert seen == set(range(24))
    assert lat.site_index(0, 1, 0) == 3  # row-major within layer
    assert lat.site_index(0, 0, 1) == 12


def test_nn_edge_counts():
    assert len(Lattice(3, 3).nn_edges()) == 18
    assert len(Lattice(4, 6).nn_edges()) == 48
    # extent-2 directions deduplicate the wrapped pair
    assert len(Lattice(2, 3).nn_edges()) == 9
    assert len(Lattice(2, 2).nn_edges()) == 4
    # open boundaries drop the wrap edges
    assert len(Lattice(3, 3, periodic=False).nn_edges()) == 12


def test_nn_edges_are_distinct_pairs():
    for shape in [(2, 2), (2, 3), (3, 3), (3, 4)]:
        lat = Lattice(*shape)
        pairs = [frozenset((e.a, e.b)) for e in lat.nn_edges()]
        assert len(pairs) == len(set(pairs))
        assert all(len(p) == 2 for p in pairs)


def test_nnn_edges_enumerated_per_site():
    lat = Lattice(4, 6)
    edges = lat.nnn_axial_edges()
    assert len(edges) == 48  # two per site, no dedup
    assert all(e.span == 2 for e in edges)
    # span-2 on the extent-4 axis lands each unordered pair twice
    x_pairs = [frozenset((e.a, e.b)) for e in edges if e.axis == "x"]
    assert len(set(x_pairs)) == 12
    with pytest.raises(ValueError):
        Lattice(2, 3).nnn_axial_edges()


def test_translation_permutation_is_permutation():
    lat = Lattice(3, 4)
    perm = lat.translation_permutation(1, 2)
    assert sorted(perm) == list(range(12))
    assert perm[lat.site_index(2, 3)] == lat.site_index(0, 1)


# ---------------------------------------------------------------------------
# spin models


def test_tfim_terms():
    lat = Lattice(3, 4)
    H = build_tfim(lat, J=1.2, h=0.7)
    assert len(H) == 24 + 12
    i, j = lat.site_index(0, 0), lat.site_index(1, 0)
    assert H.coefficient(two_site_label(12, i, j, "Z")) == pytest.approx(-1.2)
    assert H.coefficient(one_site_label(12, 5, "X")) == pytest.approx(-0.7)


def test_tfxym_terms_and_anisotropy_limit():
    lat = Lattice(3, 4)
    H = build_tfxym(lat, eta=0.3, h=0.4)
    assert len(H) == 2 * 24 + 12
    i, j = lat.site_index(1, 2), lat.site_index(1, 3)
    assert H.coefficient(two_site_label(12, i, j, "X")) == pytest.approx(-0.65)
    assert H.coefficient(two_site_label(12, i, j, "Y")) == pytest.approx(-0.35)
    assert H.coefficient(one_site_label(12, 0, "Z")) == pytest.approx(-0.4)
    # eta = 1 kills the YY coupling entirely
    H1 = build_tfxym(lat, eta=1.0, h=0.4)
    assert len(H1) == 24 + 12
    assert all(s.to_label().count("Y") == 0 for _, s in H1)


def test_tfxym_isotropic_matches_hardcore_boson():
    lat = Lattice(2, 3)
    assert build_tfxym(lat, 0.0, 0.55).allclose(build_hcbh(lat, 1.0, -1.1))


def test_bnnni_reduces_to_tfim_at_zero_kappa():
    lat = Lattice(3, 4)
    assert build_bnnni(lat, kappa=0.0, h=0.9).allclose(build_tfim(lat, 1.0, 0.9))


def test_bnnni_folding_and_doubling():
    # extent 3: the span-2 x edges fold onto the x nearest-neighbour bonds
    lat = Lattice(3, 4)
    H = build_bnnni(lat, kappa=0.5, h=0.7)
    assert len(H) == 24 + 6 + 12
    n = 12
    ix0, ix1 = lat.site_index(0, 1), lat.site_index(1, 1)
    assert H.coefficient(two_site_label(n, ix0, ix1, "Z")) == pytest.approx(-1.0 + 0.5)
    iy0, iy1 = lat.site_index(2, 1), lat.site_index(2, 2)
    assert H.coefficient(two_site_label(n, iy0, iy1, "Z")) == pytest.approx(-1.0)
    # extent 4 along y: wrapped span-2 pairs coincide and double
    jy0, jy2 = lat.site_index(1, 0), lat.site_index(1, 2)
    assert H.coefficient(two_site_label(n, jy0, jy2, "Z")) == pytest.approx(2 * 0.5)

    lat46 = Lattice(4, 6)
    H46 = build_bnnni(lat46, kappa=0.3, h=0.2, J=1.5)
    assert len(H46) == 48 + 12 + 24 + 24
    n = 24
    a, b = lat46.site_index(0, 2), lat46.site_index(2, 2)
    assert H46.coefficient(two_site_label(n, a, b, "Z")) == pytest.approx(2 * 1.5 * 0.3)
    c, d = lat46.site_index(1, 1), lat46.site_index(1, 3)
    assert H46.coefficient(two_site_label(n, c, d, "Z")) == pytest.approx(1.5 * 0.3)


def _classical_bnnni_scan(kappa):
    """Energies of all Z-basis configs on 4x4, straight from the geometry."""
    n = 16
    idx = np.arange(1 << n, dtype=np.uint64)
    bits = ((idx[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & 1).astype(float)
    s = 1.0 - 2.0 * bits  # s[b, site], Z eigenvalue of each qubit

    def site(x, y):
        return (y % 4) * 4 + (x % 4)

    E = np.zeros(1 << n)
    for y in range(4):
        for x in range(4):
            E -= s[:, site(x, y)] * s[:, site(x + 1, y)]
            E -= s[:, site(x, y)] * s[:, site(x, y + 1)]
            E += kappa * s[:, site(x, y)] * s[:, site(x + 2, y)]
            E += kappa * s[:, site(x, y)] * s[:, site(x, y + 2)]
    return E


@pytest.mark.parametrize("kappa", [0.4, 0.6])
def test_bnnni_classical_limit_matches_config_scan(kappa):
    H = build_bnnni(Lattice(4, 4), kappa=kappa, h=0.0)
    idx = np.arange(1 << 16, dtype=np.uint64)
    diag = np.zeros(1 << 16)
    for c, st in H:
        assert st.x_mask == 0  # h = 0 leaves a classical Hamiltonian
        par = np.bitwise_count(idx & np.uint64(st.z_mask)) & np.uint64(1)
        diag += c * np.where(par == 1, -1.0, 1.0)
    oracle = _classical_bnnni_scan(kappa)
    assert np.allclose(diag, oracle, atol=1e-10)

    argmins = set(np.flatnonzero(oracle < oracle.min() + 1e-9).tolist())
    if kappa < 0.5:
        # ferromagnetic phase: both uniform configs are ground states
        assert 0 in argmins and (1 << 16) - 1 in argmins
        assert oracle.min() == pytest.approx(32.0 * (kappa - 1.0))
    else:
        # frustration along both axes favours the 2x2-block checkerboard,
        # which anti-aligns every distance-2 pair: E = -32*kappa
        block = 0x33CC  # rows (y=0..3): 1100, 1100, 0011, 0011
        assert block in argmins
        assert 0 not in argmins
        assert oracle.min() == pytest.approx(-32.0 * kappa)


def test_hcbh_conserves_boson_number():
    lat = Lattice(2, 3)
    H = dense_of(build_hcbh(lat, 0.8, 0.3))
    N = dense_of(hcbh_number_operator(lat))
    assert np.linalg.norm(H @ N - N @ H) < 1e-12


def test_translation_invariance():
    lat = Lattice(3, 4)
    for H in [build_tfim(lat, 1.0, 0.5), build_tfxym(lat, 0.4, 0.2)]:
        assert H.permuted(lat.translation_permutation(1, 0)).allclose(H)
        assert H.permuted(lat.translation_permutation(0, 1)).allclose(H)
    lat33 = Lattice(3, 3)
    Hb = build_bnnni(lat33, 0.4, 0.6)
    assert Hb.permuted(lat33.translation_permutation(1, 1)).allclose(Hb)


# ---------------------------------------------------------------------------
# Jordan-Wigner against an explicit Fock-space construction


def fock_dense(n_modes, kind, modes):
    """Dense matrix of a fermionic monomial, built from occupation bitstrings.

    Mode k occupation is bit k of the basis index; annihilating mode q picks
    up (-1)^(number of occupied modes below q).
    """
    d = 1 << n_modes
    mat = np.zeros((d, d))
    if kind == "number":
        (p,) = modes
        for b in range(d):
            if (b >> p) & 1:
                mat[b, b] = 1.0
    elif kind == "density_density":
        p, q = modes
        for b in range(d):
            if (b >> p) & 1 and (b >> q) & 1:
                mat[b, b] = 1.0
    elif kind == "hopping":
        p, q = modes
        for b in range(d):
            if (b >> q) & 1 and not (b >> p) & 1:
                sign_q = -1 if bin(b & ((1 << q) - 1)).count("1") % 2 else 1
                b2 = b ^ (1 << q)
                sign_p = -1 if bin(b2 & ((1 << p) - 1)).count("1") % 2 else 1
                mat[b2 | (1 << p), b] = sign_q * sign_p
        mat = mat + mat.T
    else:
        raise ValueError(kind)
    return mat


@pytest.mark.parametrize(
    "kind,modes",
    [
        ("number", (1,)),
        ("density_density", (0, 2)),
        ("hopping", (0, 1)),
        ("hopping", (0, 2)),
        ("hopping", (2, 0)),
    ],
)
def test_jordan_wigner_matches_fock_oracle(kind, modes):
    op = jordan_wigner(kind, modes, 3)
    assert np.allclose(dense_of(op), fock_dense(3, kind, modes), atol=1e-12)


def test_jordan_wigner_long_range_string():
    op = jordan_wigner("hopping", (0, 2), 3)
    assert op.coefficient("XZX") == pytest.approx(0.5)
    assert op.coefficient("YZY") == pytest.approx(0.5)
    assert len(op) == 2


def test_jordan_wigner_custom_order():
    op = jordan_wigner("number", (0,), 3, order=[1, 0, 2])
    assert op.coefficient("IZI") == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        jordan_wigner("number", (0,), 3, order=[0, 0, 2])


def test_fermion_number_operator():
    N = fermion_number_operator(3)
    oracle = sum(fock_dense(3, "number", (p,)) for p in range(3))
    assert np.allclose(dense_of(N), oracle, atol=1e-12)


# ---------------------------------------------------------------------------
# Hubbard models


def test_spinless_hubbard_free_fermion_energy():
    lat = Lattice(2, 3)
    t = 1.3
    H = build_spinless_hubbard(lat, t=t, U=0.0, mu=0.0)
    # one-particle hopping matrix written out by hand for the 2x3 torus
    A = np.zeros((6, 6))

    def si(x, y):
        return (y % 3) * 2 + (x % 2)

    for y in range(3):
        A[si(0, y), si(1, y)] += 1.0
        A[si(1, y), si(0, y)] += 1.0
        for x in range(2):
            a, b = si(x, y), si(x, y + 1)
            A[a, b] += 1.0
            A[b, a] += 1.0
    eps = np.linalg.eigvalsh(-t * A)
    expected = eps[eps < 0].sum()
    sol = ground_state(H, method="dense")
    assert sol.ground_energy == pytest.approx(expected, abs=1e-9)


def test_spinless_hubbard_interaction_is_diagonal():
    H = build_spinless_hubbard(Lattice(2, 3), t=0.0, U=1.7, mu=0.4)
    assert all(st.x_mask == 0 for _, st in H)
    assert len(H) > 0


def test_spinless_hubbard_conserves_particle_number():
    H = build_spinless_hubbard(Lattice(2, 3), t=0.9, U=2.0, mu=0.3)
    Hd = dense_of(H)
    Nd = dense_of(fermion_number_operator(6))
    assert np.linalg.norm(Hd @ Nd - Nd @ Hd) < 1e-12


def test_hubbard_layer_structure_and_number_conservation():
    lat = Lattice(2, 2, layers=2)
    H = build_hubbard(lat, t=1.0, U=3.0, mu=0.5)
    per_layer = 4
    for _, st in H:
        if st.x_mask:
            sup = st.support()
            assert all(s < per_layer for s in sup) or all(s >= per_layer for s in sup)
    Hd = dense_of(H)
    Nd = dense_of(fermion_number_operator(8))
    assert np.linalg.norm(Hd @ Nd - Nd @ Hd) < 1e-12
    # on-site repulsion couples the layers diagonally
    assert H.coefficient("ZIIIZIII") == pytest.approx(3.0 / 4.0)


def test_hubbard_requires_two_layers():
    with pytest.raises(ValueError):
        build_hubbard(Lattice(2, 2), 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        build_spinless_hubbard(Lattice(2, 2, layers=2), 1.0, 1.0, 0.0)
