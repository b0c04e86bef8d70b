"""Shared oracles and cached heavy fixtures.

The dense oracle here builds operators by explicit Kronecker products from
text labels, independent of the bit-packed algebra under test.  Qubit j is
character j of the label and occupies bit j of the basis index, so the kron
order is reversed (last qubit = leftmost factor).
"""

import numpy as np
import pytest

_P1 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_string(label: str) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for ch in reversed(label):
        out = np.kron(out, _P1[ch])
    return out


def kron_sum(pairs) -> np.ndarray:
    """pairs: iterable of (coeff, label)."""
    pairs = list(pairs)
    d = 2 ** len(pairs[0][1])
    out = np.zeros((d, d), dtype=complex)
    for c, label in pairs:
        out += c * kron_string(label)
    return out


def dense_of(op) -> np.ndarray:
    """Dense oracle for a PauliSum, via labels and krons only."""
    return kron_sum((c, p.to_label()) for c, p in op)


def random_pauli_sum(rng, n, n_terms):
    from latshot.paulis import PauliString, PauliSum

    pairs = []
    for _ in range(n_terms):
        label = "".join(rng.choice(list("IXYZ"), size=n))
        pairs.append((float(rng.normal()), PauliString.from_label(label)))
    return PauliSum.from_strings(pairs)


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# cached ground states for the heavy acceptance instances

_GS_CACHE = {}


def cached_ground(model_key, builder, **kwargs):
    """Memoize EigenSolutions across test modules within one session."""
    key = (model_key, tuple(sorted(kwargs.items())))
    if key not in _GS_CACHE:
        _GS_CACHE[key] = builder(**kwargs)
    return _GS_CACHE[key]


@pytest.fixture(scope="session")
def ground_cache():
    return cached_ground
