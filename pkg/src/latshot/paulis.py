"""Bit-packed Pauli strings and real-coefficient Pauli sums.

A Pauli string on n qubits is stored as two n-bit integers (x_mask, z_mask).
Bit j of x_mask / z_mask says whether site j carries an X / Z factor; a site
with both bits set carries Y.  The operator represented is the Hermitian

    W(x, z) = i**popcount(x & z) * prod_j X_j**x_j * Z_j**z_j

so every site factor is exactly I, X, Y or Z and W is its own dagger.  With
this convention a Hermitian operator is a real linear combination of strings,
and products reduce to XORs on the masks plus a phase in {1, i, -1, -i}.

Matrix elements (used by the dense/matrix-free kernels elsewhere):

    W(x, z) |b> = i**popcount(x & z) * (-1)**popcount(b & z) |b ^ x>

Text serialization maps qubit j to character j (counting from the left), e.g.
"ZZII" on four qubits is Z_0 Z_1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)  # i**k
_CHAR_TO_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_TO_CHAR = {v: k for k, v in _CHAR_TO_BITS.items()}

COEFF_PRUNE_TOL = 1e-14


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    """One Pauli string, bit-packed. Immutable and hashable."""

    x_mask: int
    z_mask: int
    n_qubits: int

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        full = (1 << self.n_qubits) - 1
        if not (0 <= self.x_mask <= full and 0 <= self.z_mask <= full):
            raise ValueError("mask outside qubit register")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        x = z = 0
        for j, ch in enumerate(label):
            try:
                xb, zb = _CHAR_TO_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli character {ch!r} in {label!r}") from None
            x |= xb << j
            z |= zb << j
        return cls(x, z, len(label))

    def to_label(self) -> str:
        return "".join(
            _BITS_TO_CHAR[(self.x_mask >> j) & 1, (self.z_mask >> j) & 1]
            for j in range(self.n_qubits)
        )

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def weight(self) -> int:
        """Number of non-identity sites."""
        return _popcount(self.x_mask | self.z_mask)

    def support(self) -> tuple[int, ...]:
        m = self.x_mask | self.z_mask
        return tuple(j for j in range(self.n_qubits) if (m >> j) & 1)

    def commutes_with(self, other: "PauliString") -> bool:
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit count mismatch")
        anti = _popcount(self.x_mask & other.z_mask) + _popcount(self.z_mask & other.x_mask)
        return anti % 2 == 0

    def mul(self, other: "PauliString") -> tuple[complex, "PauliString"]:
        """Product self*other as (phase, string) with phase in {1,-1,i,-i}."""
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit count mismatch")
        x3 = self.x_mask ^ other.x_mask
        z3 = self.z_mask ^ other.z_mask
        k = (
            _popcount(self.x_mask & self.z_mask)
            + _popcount(other.x_mask & other.z_mask)
            - _popcount(x3 & z3)
            + 2 * _popcount(self.z_mask & other.x_mask)
        ) % 4
        return _PHASES[k], PauliString(x3, z3, self.n_qubits)

    def phase_power(self) -> int:
        """k such that W = i**k * X^x Z^z; popcount(x & z) mod 4."""
        return _popcount(self.x_mask & self.z_mask) % 4

    def __str__(self) -> str:
        return self.to_label()


class PauliSum:
    """Real linear combination of Pauli strings on a fixed register.

    Treated as immutable after construction: all arithmetic returns new
    instances, and numeric kernels may attach caches to existing ones.
    Coefficients with |c| == 0 are never stored; arithmetic prunes below
    COEFF_PRUNE_TOL.
    """

    __slots__ = ("n_qubits", "_terms", "_cache")

    def __init__(
        self,
        n_qubits: int,
        terms: Mapping[tuple[int, int], float] | Iterable[tuple[tuple[int, int], float]] = (),
        *,
        _skip_checks: bool = False,
    ) -> None:
        if n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        self.n_qubits = n_qubits
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple[int, int], float] = {}
        full = (1 << n_qubits) - 1
        for (x, z), c in items:
            if not _skip_checks:
                if not (0 <= x <= full and 0 <= z <= full):
                    raise ValueError("mask outside qubit register")
                if isinstance(c, complex):
                    if abs(c.imag) > 1e-12 * max(1.0, abs(c.real)):
                        raise ValueError(
                            f"non-real coefficient {c!r}; Y phases are absorbed into strings"
                        )
                    c = c.real
                c = float(c)
            key = (x, z)
            acc[key] = acc.get(key, 0.0) + c
        self._terms = {k: v for k, v in acc.items() if v != 0.0}
        self._cache: dict = {}

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_strings(cls, pairs: Iterable[tuple[float, PauliString]]) -> "PauliSum":
        pairs = list(pairs)
        if not pairs:
            raise ValueError("need at least one (coeff, string) pair")
        n = pairs[0][1].n_qubits
        for _, p in pairs:
            if p.n_qubits != n:
                raise ValueError("qubit count mismatch")
        return cls(n, [((p.x_mask, p.z_mask), c) for c, p in pairs])

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits, {})

    # -- inspection ---------------------------------------------------------

    @property
    def terms(self) -> Mapping[tuple[int, int], float]:
        return self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[float, PauliString]]:
        for (x, z), c in self._terms.items():
            yield c, PauliString(x, z, self.n_qubits)

    def coefficient(self, string: PauliString | str) -> float:
        if isinstance(string, str):
            string = PauliString.from_label(string)
        return self._terms.get((string.x_mask, string.z_mask), 0.0)

    @property
    def identity_coefficient(self) -> float:
        return self._terms.get((0, 0), 0.0)

    def support_mask(self) -> int:
        m = 0
        for x, z in self._terms:
            m |= x | z
        return m

    def support(self) -> tuple[int, ...]:
        m = self.support_mask()
        return tuple(j for j in range(self.n_qubits) if (m >> j) & 1)

    def max_weight(self) -> int:
        return max((_popcount(x | z) for x, z in self._terms), default=0)

    def coeff_one_norm(self) -> float:
        """Sum of |coefficients|; cheap upper bound on the operator norm."""
        return sum(abs(c) for c in self._terms.values())

    def frobenius_norm_sq_over_d(self) -> float:
        """Sum of squared non-identity coefficients; equals Tr(A_0^2)/2^n for
        the traceless part A_0 (string orthonormality under Tr/d)."""
        return sum(c * c for (x, z), c in self._terms.items() if (x, z) != (0, 0))

    # -- arithmetic ---------------------------------------------------------

    def combine(self, alpha: float, other: "PauliSum", beta: float) -> "PauliSum":
        """alpha*self + beta*other, pruning |c| < COEFF_PRUNE_TOL."""
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        acc = {k: alpha * v for k, v in self._terms.items()}
        for k, v in other._terms.items():
            acc[k] = acc.get(k, 0.0) + beta * v
        pruned = {k: v for k, v in acc.items() if abs(v) >= COEFF_PRUNE_TOL}
        return PauliSum(self.n_qubits, pruned, _skip_checks=True)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        return self.combine(1.0, other, 1.0)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self.combine(1.0, other, -1.0)

    def __mul__(self, scalar: float) -> "PauliSum":
        return self.scaled(scalar)

    __rmul__ = __mul__

    def scaled(self, scalar: float) -> "PauliSum":
        scalar = float(scalar)
        if scalar == 0.0:
            return PauliSum.zero(self.n_qubits)
        return PauliSum(
            self.n_qubits, {k: scalar * v for k, v in self._terms.items()}, _skip_checks=True
        )

    def traceless_part(self) -> "PauliSum":
        if (0, 0) not in self._terms:
            return self
        rest = {k: v for k, v in self._terms.items() if k != (0, 0)}
        return PauliSum(self.n_qubits, rest, _skip_checks=True)

    def restricted_to(self, keys: Iterable[tuple[int, int]]) -> "PauliSum":
        keys = set(keys)
        return PauliSum(
            self.n_qubits,
            {k: v for k, v in self._terms.items() if k in keys},
            _skip_checks=True,
        )

    def allclose(self, other: "PauliSum", tol: float = 1e-12) -> bool:
        if other.n_qubits != self.n_qubits:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(
            abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) <= tol for k in keys
        )

    def permuted(self, perm: Mapping[int, int] | list[int]) -> "PauliSum":
        """Relabel qubits: site j of the result carries what perm[j] carried...
        inverse convention: new site perm[j] <- old site j."""
        if not isinstance(perm, Mapping):
            perm = {j: p for j, p in enumerate(perm)}
        if sorted(perm) != list(range(self.n_qubits)) or sorted(perm.values()) != list(
            range(self.n_qubits)
        ):
            raise ValueError("perm must be a permutation of all qubits")

        def move(mask: int) -> int:
            out = 0
            for j in range(self.n_qubits):
                if (mask >> j) & 1:
                    out |= 1 << perm[j]
            return out

        return PauliSum(
            self.n_qubits,
            [((move(x), move(z)), c) for (x, z), c in self._terms.items()],
            _skip_checks=True,
        )

    # -- serialization ------------------------------------------------------

    def to_text(self) -> str:
        """One term per line: "<coeff> <label>", 17 significant digits,
        lines sorted by label. Round-trips bit-exactly."""
        lines = []
        for (x, z), c in self._terms.items():
            label = PauliString(x, z, self.n_qubits).to_label()
            lines.append((label, f"{c:.17g} {label}"))
        lines.sort()
        return "\n".join(line for _, line in lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        pairs: list[tuple[float, PauliString]] = []
        n = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ValueError(f"line {lineno}: expected '<coeff> <string>', got {raw!r}")
            try:
                c = float(fields[0])
            except ValueError:
                raise ValueError(f"line {lineno}: bad coefficient {fields[0]!r}") from None
            p = PauliString.from_label(fields[1])
            if n is None:
                n = p.n_qubits
            elif p.n_qubits != n:
                raise ValueError(f"line {lineno}: inconsistent string length")
            pairs.append((c, p))
        if n is None:
            raise ValueError("no terms found")
        return cls.from_strings(pairs)

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, n_terms={len(self._terms)})"
