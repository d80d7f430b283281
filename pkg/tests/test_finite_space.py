import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from munorm.errors import InvalidInputError, SizeError
from munorm.finite_space import (
    COEFFICIENT,
    VALUE,
    FiniteOperator,
    FiniteSpace,
    Partition,
    bell_number,
    calM,
    change_basis,
    dft,
    enumerate_partitions,
    fourier_matrix,
    guard_j,
    identity,
    idft,
    mu_norm_formula,
    mu_norm_infimum,
    mu_norm_sq,
    multiplication_operator_finite,
    operator_norm,
    projector,
    random_matrix,
    random_unitary,
    restricted_growth_strings,
)


def bell_recurrence(n):
    """Bell numbers from B_{k+1} = sum_i C(k, i) B_i, independent of the library."""
    out = [1]
    for k in range(n):
        out.append(sum(math.comb(k, i) * out[i] for i in range(k + 1)))
    return out


@pytest.mark.parametrize("n", range(0, 11))
def test_bell_numbers_match_recurrence(n):
    assert bell_number(n) == bell_recurrence(n)[n]


@pytest.mark.parametrize("J", range(1, 8))
def test_restricted_growth_strings_are_distinct_partitions(J):
    rgs = list(restricted_growth_strings(J))
    assert len(rgs) == bell_recurrence(J)[J]
    blocks = {frozenset(Partition.from_labels(r).blocks) for r in rgs}
    assert len(blocks) == len(rgs)
    for r in rgs:
        assert r[0] == 0
        assert all(r[i] <= max(r[:i]) + 1 for i in range(1, J))


def test_enumeration_guard(monkeypatch):
    assert guard_j() == 10
    monkeypatch.setenv("MUNORM_GUARD_J", "3")
    assert guard_j() == 3
    with pytest.raises(SizeError):
        list(enumerate_partitions(4))
    with pytest.raises(SizeError):
        mu_norm_infimum(identity(4))
    monkeypatch.setenv("MUNORM_GUARD_J", "nope")
    with pytest.raises(InvalidInputError):
        guard_j()


def test_fourier_matrix_and_dft_roundtrip():
    rng = np.random.default_rng(1)
    for J in (1, 2, 5, 8):
        F = fourier_matrix(J)
        eta = np.exp(2j * np.pi / J)
        assert np.allclose(F, eta ** np.outer(np.arange(J), np.arange(J)))
        c = rng.standard_normal(J) + 1j * rng.standard_normal(J)
        assert np.allclose(dft(c), F @ c)
        assert np.allclose(idft(dft(c)), c)


def test_two_point_space_by_hand():
    # J = 2: eta = -1, values f(0) = f0 + f1, f(1) = f0 - f1
    C = np.array([[1.0, 2.0], [3.0, 4.0]])
    V = change_basis(FiniteOperator(C, COEFFICIENT), VALUE).entries
    expected = 0.5 * np.array([[1 + 2 + 3 + 4, 1 - 2 + 3 - 4],
                               [1 + 2 - 3 - 4, 1 - 2 - 3 + 4]])
    assert np.allclose(V, expected)
    W = FiniteOperator(C, COEFFICIENT)
    assert mu_norm_sq(W) == pytest.approx(np.sum(np.abs(expected) ** 2) / 2)


def test_basis_change_is_an_algebra_map():
    rng = np.random.default_rng(2)
    A = FiniteOperator(random_matrix(5, rng), COEFFICIENT)
    B = FiniteOperator(random_matrix(5, rng), COEFFICIENT)
    prod_coeff = A.coefficient @ B.coefficient
    assert np.allclose((A @ B).coefficient, prod_coeff)
    assert np.allclose(A.to(VALUE).to(COEFFICIENT).entries, A.entries)


def test_projector_example():
    W = projector(FiniteSpace(4), [0, 1])
    assert mu_norm_formula(W) == pytest.approx(np.sqrt(0.5), abs=1e-15)
    assert mu_norm_infimum(W).value == pytest.approx(np.sqrt(0.5), abs=1e-12)


def test_identity_and_unitary_norms():
    assert mu_norm_formula(identity(7)) == pytest.approx(1.0)
    U = FiniteOperator(random_unitary(6, np.random.default_rng(3)))
    assert mu_norm_formula(U) == pytest.approx(1.0)
    assert np.allclose(U.value.conj().T @ U.value, np.eye(6))


def test_calM_brute_force():
    rng = np.random.default_rng(4)
    W = FiniteOperator(random_matrix(4, rng))
    chi = Partition.from_labels([0, 1, 0, 2])
    V = W.value
    direct = sum(len(b) / 4 * np.linalg.norm(V[:, sorted(b)], 2) ** 2 for b in chi.blocks)
    assert calM(W, chi) == pytest.approx(direct)
    assert calM(W, Partition.singletons(4)) == pytest.approx(mu_norm_sq(W))
    assert calM(W, Partition.trivial(4)) == pytest.approx(operator_norm(W) ** 2)


@pytest.mark.parametrize("J", [2, 3, 4, 5])
def test_infimum_is_attained_at_singletons(J):
    rng = np.random.default_rng(J)
    for _ in range(5):
        W = FiniteOperator(random_matrix(J, rng))
        res = mu_norm_infimum(W)
        assert res.n_partitions == bell_number(J)
        assert res.value == pytest.approx(mu_norm_formula(W), abs=1e-9)
        assert res.singleton_value == pytest.approx(res.value, abs=1e-9)
        # no coarser partition does better
        for rgs in restricted_growth_strings(J):
            assert np.sqrt(calM(W, Partition.from_labels(rgs))) >= res.value - 1e-12


def test_refinement_decreases_M():
    rng = np.random.default_rng(9)
    W = FiniteOperator(random_matrix(5, rng))
    coarse = Partition.from_labels([0, 0, 1, 1, 1])
    fine = Partition.from_labels([0, 1, 2, 2, 3])
    assert fine.refines(coarse)
    assert calM(W, fine) <= calM(W, coarse) + 1e-12


def test_partition_validation():
    with pytest.raises(InvalidInputError):
        Partition(3, (frozenset({0}), frozenset({1})))
    with pytest.raises(InvalidInputError):
        Partition(3, (frozenset({0, 1}), frozenset({1, 2})))
    with pytest.raises(InvalidInputError):
        FiniteOperator(np.zeros((2, 3)))
    with pytest.raises(InvalidInputError):
        FiniteOperator(np.eye(2), "fourier")
    with pytest.raises(InvalidInputError):
        FiniteSpace(0)


def test_multiplication_operator_norm():
    g = np.array([1.0, -2.0, 0.5j, 3.0])
    W = multiplication_operator_finite(g)
    assert mu_norm_sq(W) == pytest.approx(np.mean(np.abs(g) ** 2))
    assert operator_norm(W) == pytest.approx(3.0)


matrices = st.integers(min_value=0, max_value=2**32 - 1).map(
    lambda s: FiniteOperator(random_matrix(6, np.random.default_rng(s))))


@settings(max_examples=60, deadline=None)
@given(matrices, matrices, st.complex_numbers(max_magnitude=10, allow_nan=False,
                                              allow_infinity=False))
def test_seminorm_laws(A, B, lam):
    mu = lambda W: np.sqrt(mu_norm_sq(W))  # noqa: E731
    assert mu(A + B) <= mu(A) + mu(B) + 1e-10
    assert mu(A.scale(lam)) == pytest.approx(abs(lam) * mu(A), abs=1e-10)
    assert mu(A @ B) <= operator_norm(A) * mu(B) + 1e-10
    assert abs(mu(A) - mu(B)) <= operator_norm(A - B) + 1e-10
    assert mu(A) <= operator_norm(A) + 1e-10


@settings(max_examples=40, deadline=None)
@given(matrices, st.integers(min_value=0, max_value=2**32 - 1))
def test_unitary_invariance(A, seed):
    U = FiniteOperator(random_unitary(6, np.random.default_rng(seed)))
    assert mu_norm_sq(U @ A) == pytest.approx(mu_norm_sq(A), rel=1e-12)
    assert mu_norm_sq(A @ U) == pytest.approx(mu_norm_sq(A), rel=1e-12)


def test_projector_law_small_exhaustive():
    for J in range(1, 7):
        space = FiniteSpace(J)
        for r in range(J + 1):
            for X in itertools.combinations(range(J), r):
                assert abs(mu_norm_sq(projector(space, X)) - len(X) / J) <= 1e-12
