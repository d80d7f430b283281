"""Permutation automorphisms of Z_J, their Koopman operators, and entropy stages.

Stages are indexed by the number of letters ``n = N + 1`` of a word
``(j_0, ..., j_N)``.  The classical cell is
``X_j = F^{-N}(X_{j_N}) & ... & F^{-1}(X_{j_1}) & X_{j_0}`` and the quantum
word is ``pi_{X_{j_N}} U pi_{X_{j_{N-1}}} U ... U pi_{X_{j_0}}``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError, SizeError
from .finite_space import VALUE, FiniteOperator, Partition

WORD_GUARD = 10**7


@dataclass(frozen=True)
class Permutation:
    image: tuple

    def __post_init__(self):
        img = tuple(int(x) for x in self.image)
        if sorted(img) != list(range(len(img))) or not img:
            raise InvalidInputError(f"not a bijection of Z_J: {img}")
        object.__setattr__(self, "image", img)

    @classmethod
    def identity(cls, J: int) -> "Permutation":
        return cls(tuple(range(J)))

    @classmethod
    def shift(cls, J: int, step: int = 1) -> "Permutation":
        return cls(tuple((x + step) % J for x in range(J)))

    @property
    def J(self) -> int:
        return len(self.image)

    def __call__(self, x):
        return np.asarray(self.image)[x]

    def inverse(self) -> "Permutation":
        inv = [0] * self.J
        for x, y in enumerate(self.image):
            inv[y] = x
        return Permutation(tuple(inv))

    def power(self, n: int) -> "Permutation":
        base = self if n >= 0 else self.inverse()
        arr = np.arange(self.J)
        img = np.asarray(base.image)
        for _ in range(abs(n)):
            arr = img[arr]
        return Permutation(tuple(arr))

    def preimage(self, X) -> frozenset:
        X = set(X)
        return frozenset(x for x, y in enumerate(self.image) if y in X)


def koopman(F: Permutation) -> FiniteOperator:
    """``(U_F f)(k) = f(F(k))`` in the value basis."""
    U = np.zeros((F.J, F.J), dtype=complex)
    U[np.arange(F.J), list(F.image)] = 1.0
    return FiniteOperator(U, VALUE)


def koopman_projector_identity_check(F: Permutation, X, tol: float = 1e-12) -> bool:
    J = F.J
    U = koopman(F).value
    piX = np.diag(np.isin(np.arange(J), list(X)).astype(complex))
    piFX = np.diag(np.isin(np.arange(J), list(F.preimage(X))).astype(complex))
    return bool(np.max(np.abs(U @ piX - piFX @ U)) <= tol)


def _check_word(chi: Partition, word: Sequence[int]) -> tuple:
    word = tuple(int(j) for j in word)
    if not word:
        raise InvalidInputError("words have at least one letter")
    if any(not 0 <= j < chi.K for j in word):
        raise InvalidInputError(f"word {word} indexes outside a {chi.K}-block partition")
    return word


def preimage_cell(F: Permutation, chi: Partition, word: Sequence[int]) -> frozenset:
    """Points x with ``F^n(x)`` in block ``word[n]`` for every n."""
    word = _check_word(chi, word)
    labels = chi.labels()
    img = np.asarray(F.image)
    x = np.arange(F.J)
    orbit = x.copy()
    keep = np.ones(F.J, dtype=bool)
    for j in word:
        keep &= labels[orbit] == j
        orbit = img[orbit]
    return frozenset(int(v) for v in x[keep])


def _xlogx_sum(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p))) + 0.0  # no -0.0


def itinerary_codes(F: Permutation, chi: Partition, n: int) -> np.ndarray:
    """Integer code of the length-n itinerary of every point."""
    labels = chi.labels()
    img = np.asarray(F.image)
    orbit = np.arange(F.J)
    code = np.zeros(F.J, dtype=np.int64)
    for _ in range(n):
        code = code * chi.K + labels[orbit]
        orbit = img[orbit]
    return code


def ks_entropy_stage(F: Permutation, chi: Partition, N: int) -> float:
    """``h_F(chi, N+1) = -sum_j mu(X_j) log mu(X_j)`` over words of N+1 letters."""
    if N < 0:
        raise InvalidInputError("N must be nonnegative")
    _, counts = np.unique(itinerary_codes(F, chi, N + 1), return_counts=True)
    return _xlogx_sum(counts / F.J)


def ks_stages_batched(images: np.ndarray, labels: np.ndarray, K: int, n_max: int) -> np.ndarray:
    """KS stages ``h(chi, n)`` for n = 1..n_max, for a stack of permutations.

    ``images`` has shape (P, J).  Returns shape (P, n_max).
    """
    images = np.asarray(images)
    P, J = images.shape
    orbit = np.broadcast_to(np.arange(J), (P, J)).copy()
    code = np.zeros((P, J), dtype=np.int64)
    out = np.empty((P, n_max))
    for n in range(n_max):
        code = code * K + labels[orbit]
        orbit = np.take_along_axis(images, orbit, axis=1)
        same = (code[:, :, None] == code[:, None, :]).sum(axis=2)
        # each point carries weight 1/J of its cell: -sum_x (1/J) log(|cell(x)|/J)
        out[:, n] = -np.mean(np.log(same / J), axis=1)
    return out


def frak_word(U: FiniteOperator, chi: Partition, word: Sequence[int]) -> FiniteOperator:
    word = _check_word(chi, word)
    if U.J != chi.J:
        raise InvalidInputError("operator and partition sizes differ")
    masks = chi.masks()
    V = U.value
    A = np.diag(masks[word[0]].astype(complex))
    for j in word[1:]:
        A = masks[j][:, None] * (V @ A)
    return FiniteOperator(A, VALUE)


class WordWeights(NamedTuple):
    words: np.ndarray  # (n_words, N+1), lexicographic, j_0 most significant
    weights: np.ndarray  # squared mu-norms


def _guard_words(K: int, n: int) -> None:
    if K**n > WORD_GUARD:
        raise SizeError(f"{K}^{n} words exceed the guard {WORD_GUARD}")


def word_weight_levels(U: FiniteOperator, chi: Partition, N: int, prune: bool = True):
    """Yield WordWeights for words of 1, 2, ..., N+1 letters.

    With ``prune`` words whose prefix operator is exactly zero are dropped;
    their weight is exactly zero.
    """
    if N < 0:
        raise InvalidInputError("N must be nonnegative")
    if U.J != chi.J:
        raise InvalidInputError("operator and partition sizes differ")
    K, J = chi.K, chi.J
    _guard_words(K, N + 1)
    masks = chi.masks().astype(complex)
    V = U.value
    words = np.arange(K)[:, None]
    ops = masks[:, :, None] * np.eye(J)[None, :, :]
    for level in range(N + 1):
        if level:
            nxt = np.einsum("ij,wjk->wik", V, ops)
            ops = (masks[None, :, :, None] * nxt[:, None, :, :]).reshape(-1, J, J)
            words = np.concatenate(
                [np.repeat(words, K, axis=0), np.tile(np.arange(K), len(words))[:, None]], axis=1
            )
        if prune:
            alive = np.any(ops != 0, axis=(1, 2))
            ops, words = ops[alive], words[alive]
        yield WordWeights(words, np.sum(np.abs(ops) ** 2, axis=(1, 2)) / J)


def word_weights(U: FiniteOperator, chi: Partition, N: int, prune: bool = True) -> WordWeights:
    """Squared mu-norms of every word of N+1 letters."""
    *_, last = word_weight_levels(U, chi, N, prune)
    return last


def quantum_entropy_stage(U: FiniteOperator, chi: Partition, N: int) -> float:
    """``-sum_j ||X_j||_mu^2 log ||X_j||_mu^2`` over words of N+1 letters."""
    return _xlogx_sum(word_weights(U, chi, N).weights)


def entropy_rate_sequence(U: FiniteOperator, chi: Partition, n_max: int) -> list:
    """``[h_U(chi, n) / n for n = 1..n_max]``; no extrapolation."""
    if n_max < 1:
        raise InvalidInputError("n_max must be at least 1")
    _guard_words(chi.K, n_max)
    return [quantum_entropy_stage(U, chi, n - 1) / n for n in range(1, n_max + 1)]


class ChainResult(NamedTuple):
    mu_norm_sq: float
    forward_integral: float  # mean_x prod_k |g_k(F^k x)|^2
    reversed_integral: float  # mean_x prod_k |g_{K-k}(F^k x)|^2
    matches: str  # "forward", "reversed", "both" or "neither"


def chain_mu_norm(F: Permutation, gs: Sequence[Sequence[complex]], tol: float = 1e-12) -> ChainResult:
    """``||g_K U_F g_{K-1} ... U_F g_0||_mu^2`` with both candidate integrals.

    ``gs[k]`` holds the point values of ``g_k``.
    """
    gs = [np.asarray(g, dtype=complex) for g in gs]
    if not gs or any(g.shape != (F.J,) for g in gs):
        raise InvalidInputError("need at least one value vector of length J")
    U = koopman(F).value
    A = np.diag(gs[0])
    for g in gs[1:]:
        A = g[:, None] * (U @ A)
    value = float(np.sum(np.abs(A) ** 2) / F.J)
    K = len(gs) - 1
    orbits = [np.asarray(F.power(k).image) for k in range(K + 1)]
    fwd = np.prod([np.abs(gs[k][orbits[k]]) ** 2 for k in range(K + 1)], axis=0).mean()
    rev = np.prod([np.abs(gs[K - k][orbits[k]]) ** 2 for k in range(K + 1)], axis=0).mean()
    f_ok, r_ok = abs(value - fwd) <= tol, abs(value - rev) <= tol
    matches = {(True, True): "both", (True, False): "forward",
               (False, True): "reversed", (False, False): "neither"}[(f_ok, r_ok)]
    return ChainResult(value, float(fwd), float(rev), matches)


def finite_mu_UF(F: Permutation) -> np.ndarray:
    """Pair-mass table ``T[x', x'']``: mass 1/J on each pair (F(a), a)."""
    T = np.zeros((F.J, F.J))
    T[list(F.image), np.arange(F.J)] = 1.0 / F.J
    return T


def all_permutations(J: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(J))), dtype=np.int64)
