"""The uniform probability space Z_J, its partitions and the mu-norm.

Operators are stored as J x J complex matrices tagged with a basis:

* ``"value"``: ``(Wf)(k) = sum_j W(k, j) f(j)`` acting on point values;
* ``"coefficient"``: ``(Wf)_k = sum_j W_{kj} f_j`` acting on the
  coefficients of ``f(x) = sum_j f_j eta^{jx}``, ``eta = exp(2 pi i / J)``.

The two are related by ``W(m, n) = (1/J) sum_{j,k} eta^{mk} W_{kj} eta^{-jn}``.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError, SizeError

VALUE = "value"
COEFFICIENT = "coefficient"
BASES = (VALUE, COEFFICIENT)

DEFAULT_GUARD_J = 10
DEFAULT_TOL = 1e-9


def guard_j() -> int:
    """Partition-enumeration guard, overridable with ``MUNORM_GUARD_J``."""
    raw = os.environ.get("MUNORM_GUARD_J")
    if raw is None:
        return DEFAULT_GUARD_J
    try:
        value = int(raw)
    except ValueError:
        raise InvalidInputError(f"MUNORM_GUARD_J must be an integer, got {raw!r}")
    if value < 1:
        raise InvalidInputError("MUNORM_GUARD_J must be positive")
    return value


@dataclass(frozen=True)
class FiniteSpace:
    J: int

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 1:
            raise InvalidInputError(f"J must be a positive integer, got {self.J!r}")

    @property
    def point_mass(self) -> float:
        return 1.0 / self.J

    def measure(self, subset: Iterable[int]) -> float:
        return len(self.subset(subset)) / self.J

    def subset(self, members: Iterable[int]) -> frozenset:
        s = frozenset(int(x) for x in members)
        bad = [x for x in s if not 0 <= x < self.J]
        if bad:
            raise InvalidInputError(f"subset members {sorted(bad)} outside Z_{self.J}")
        return s

    def indicator(self, subset: Iterable[int]) -> np.ndarray:
        mask = np.zeros(self.J, dtype=bool)
        mask[list(self.subset(subset))] = True
        return mask


@dataclass(frozen=True)
class Partition:
    """Set partition of Z_J into nonempty disjoint blocks."""

    J: int
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(frozenset(int(x) for x in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        seen: set = set()
        for b in blocks:
            if not b:
                raise InvalidInputError("partition blocks must be nonempty")
            if seen & b:
                raise InvalidInputError("partition blocks must be disjoint")
            seen |= b
        if seen != set(range(self.J)):
            raise InvalidInputError(f"partition blocks must cover Z_{self.J}")

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """Build from a label per point; blocks ordered by first occurrence."""
        order: dict = {}
        for x, lab in enumerate(labels):
            order.setdefault(lab, []).append(x)
        return cls(len(labels), tuple(order.values()))

    @classmethod
    def singletons(cls, J: int) -> "Partition":
        return cls(J, tuple((x,) for x in range(J)))

    @classmethod
    def trivial(cls, J: int) -> "Partition":
        return cls(J, (tuple(range(J)),))

    @property
    def K(self) -> int:
        return len(self.blocks)

    def measures(self) -> np.ndarray:
        return np.array([len(b) / self.J for b in self.blocks])

    def labels(self) -> np.ndarray:
        out = np.empty(self.J, dtype=np.int64)
        for i, b in enumerate(self.blocks):
            out[list(b)] = i
        return out

    def masks(self) -> np.ndarray:
        """Boolean array of shape (K, J)."""
        return self.labels()[None, :] == np.arange(self.K)[:, None]

    def refines(self, other: "Partition") -> bool:
        """True if every block of ``self`` lies inside a block of ``other``."""
        return all(any(b <= c for c in other.blocks) for b in self.blocks)


@dataclass(frozen=True)
class FiniteOperator:
    entries: np.ndarray
    basis: str = VALUE

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise InvalidInputError(f"operator must be a nonempty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("operator entries must be finite")
        if self.basis not in BASES:
            raise InvalidInputError(f"unknown basis {self.basis!r}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def J(self) -> int:
        return self.entries.shape[0]

    def to(self, basis: str) -> "FiniteOperator":
        return change_basis(self, basis)

    @property
    def value(self) -> np.ndarray:
        return change_basis(self, VALUE).entries

    @property
    def coefficient(self) -> np.ndarray:
        return change_basis(self, COEFFICIENT).entries

    def __matmul__(self, other: "FiniteOperator") -> "FiniteOperator":
        return FiniteOperator(self.value @ other.value, VALUE)

    def __add__(self, other: "FiniteOperator") -> "FiniteOperator":
        return FiniteOperator(self.value + other.value, VALUE)

    def __sub__(self, other: "FiniteOperator") -> "FiniteOperator":
        return FiniteOperator(self.value - other.value, VALUE)

    def scale(self, lam: complex) -> "FiniteOperator":
        return FiniteOperator(lam * self.entries, self.basis)


def fourier_matrix(J: int) -> np.ndarray:
    """``F[k, j] = eta^{kj}``; maps coefficients to values."""
    k = np.arange(J)
    return np.exp(2j * np.pi * np.outer(k, k) / J)


def change_basis(W: FiniteOperator, target: str) -> FiniteOperator:
    if target not in BASES:
        raise InvalidInputError(f"unknown basis {target!r}")
    if W.basis == target:
        return W
    J = W.J
    F = fourier_matrix(J)
    if target == VALUE:
        out = F @ W.entries @ F.conj() / J
    else:
        out = F.conj() @ W.entries @ F / J
    return FiniteOperator(out, target)


def identity(J: int) -> FiniteOperator:
    return FiniteOperator(np.eye(J), VALUE)


def projector(space: FiniteSpace, X: Iterable[int]) -> FiniteOperator:
    return FiniteOperator(np.diag(space.indicator(X).astype(complex)), VALUE)


def multiplication_operator_finite(g: Sequence[complex]) -> FiniteOperator:
    """Multiplication by the function with point values ``g``."""
    return FiniteOperator(np.diag(np.asarray(g, dtype=complex)), VALUE)


def dft(coeffs: Sequence[complex]) -> np.ndarray:
    """Point values ``f(k) = sum_j f_j eta^{kj}``."""
    c = np.asarray(coeffs, dtype=complex)
    return np.fft.ifft(c) * len(c)


def idft(values: Sequence[complex]) -> np.ndarray:
    """Coefficients ``f_j = (1/J) sum_k f(k) eta^{-kj}``."""
    v = np.asarray(values, dtype=complex)
    return np.fft.fft(v) / len(v)


def operator_norm(W: FiniteOperator) -> float:
    # the 1/J weight of the inner product cancels in the norm ratio
    return float(np.linalg.svd(W.value, compute_uv=False)[0])


def _restricted_norm_sq(V: np.ndarray, cols) -> float:
    cols = sorted(cols)
    if not cols:
        return 0.0
    return float(np.linalg.svd(V[:, cols], compute_uv=False)[0] ** 2)


def calM(W: FiniteOperator, chi: Partition) -> float:
    """``sum_j mu(Y_j) ||W pi_{Y_j}||^2``."""
    if chi.J != W.J:
        raise InvalidInputError("partition and operator live on different spaces")
    V = W.value
    return sum(len(b) / W.J * _restricted_norm_sq(V, b) for b in chi.blocks)


def mu_norm_sq(W: FiniteOperator) -> float:
    V = W.value
    return float(np.sum(np.abs(V) ** 2) / W.J)


def mu_norm_formula(W: FiniteOperator) -> float:
    """Closed form ``sqrt((1/J) sum |W(k, j)|^2)`` in the value basis."""
    return float(np.sqrt(mu_norm_sq(W)))


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def restricted_growth_strings(J: int) -> Iterator[tuple]:
    """All restricted growth strings of length J in lexicographic order."""
    if J < 1:
        return
    a = [0] * J
    b = [1] * J  # b[i] = 1 + max(a[:i])
    while True:
        yield tuple(a)
        i = J - 1
        while i > 0 and a[i] == b[i]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for k in range(i + 1, J):
            a[k] = 0
            b[k] = max(b[i], a[i] + 1)


def enumerate_partitions(J: int, guard: int | None = None) -> Iterator[Partition]:
    guard = guard_j() if guard is None else guard
    if J > guard:
        raise SizeError(f"J={J} exceeds the partition-enumeration guard {guard}")
    for rgs in restricted_growth_strings(J):
        yield Partition.from_labels(rgs)


class InfimumResult(NamedTuple):
    value: float
    singleton_value: float
    argmin: Partition
    n_partitions: int


def subset_norms_sq(W: FiniteOperator) -> np.ndarray:
    """``||W pi_Y||^2`` for every subset Y, indexed by bitmask."""
    V = W.value
    J = W.J
    out = np.zeros(1 << J)
    for mask in range(1, 1 << J):
        cols = [j for j in range(J) if mask >> j & 1]
        out[mask] = np.linalg.svd(V[:, cols], compute_uv=False)[0] ** 2
    return out


def mu_norm_infimum(W: FiniteOperator, max_J: int | None = None) -> InfimumResult:
    """Brute-force infimum of ``sqrt(M_chi(W))`` over all set partitions."""
    guard = guard_j() if max_J is None else max_J
    J = W.J
    if J > guard:
        raise SizeError(f"J={J} exceeds the partition-enumeration guard {guard}")
    norms = subset_norms_sq(W)
    best, best_rgs, count = np.inf, None, 0
    for rgs in restricted_growth_strings(J):
        count += 1
        masks: dict = {}
        for x, lab in enumerate(rgs):
            masks[lab] = masks.get(lab, 0) | (1 << x)
        total = sum(bin(m).count("1") / J * norms[m] for m in masks.values())
        if total < best:
            best, best_rgs = total, rgs
    singleton = sum(norms[1 << x] for x in range(J)) / J
    return InfimumResult(
        float(np.sqrt(best)), float(np.sqrt(singleton)), Partition.from_labels(best_rgs), count
    )


def all_subsets(J: int) -> Iterator[tuple]:
    for r in range(J + 1):
        yield from itertools.combinations(range(J), r)


def random_matrix(J: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((J, J)) + 1j * rng.standard_normal((J, J))


def random_unitary(J: int, rng: np.random.Generator) -> np.ndarray:
    """Orthonormalized complex Gaussian matrix (phases fixed by the R diagonal)."""
    q, r = np.linalg.qr(random_matrix(J, rng))
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]
