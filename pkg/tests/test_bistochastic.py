import numpy as np
import pytest

from munorm import bistochastic as bs
from munorm.errors import InvalidInputError
from munorm.finite_space import (
    COEFFICIENT,
    FiniteOperator,
    idft,
    multiplication_operator_finite,
    mu_norm_sq,
    random_matrix,
    random_unitary,
)
from munorm.koopman_entropy import Permutation, koopman
from munorm.regular import omega_exact
from munorm.torus_dt import (
    ConvolutionOperator,
    FourierPolynomial,
    PeriodicOperator,
    QuadraticPhase,
    RotationPhase,
)


def omega_loops(C):
    J = C.shape[0]
    out = np.zeros((J, J), dtype=complex)
    for m in range(J):
        for n in range(J):
            for l in range(J):
                for j in range(J):
                    out[m, n] += C[(l + m) % J, j] * np.conj(C[l, (j + n) % J])
    return out / J


@pytest.mark.parametrize("J", [1, 3, 5])
def test_finite_omega_matches_loops(J):
    C = random_matrix(J, np.random.default_rng(J))
    assert np.allclose(bs.finite_omega(C), omega_loops(C))


@pytest.mark.parametrize("J", [2, 4, 6])
def test_point_kernel_is_squared_modulus(J):
    rng = np.random.default_rng(10 + J)
    W = FiniteOperator(random_matrix(J, rng))
    K = bs.build_finite(W).kernel_values()
    assert np.allclose(K, np.abs(W.value) ** 2)
    assert bs.build_finite(W).omega[0, 0] == pytest.approx(mu_norm_sq(W))


def test_finite_weighted_norm_formula():
    J = 5
    rng = np.random.default_rng(11)
    W = FiniteOperator(random_matrix(J, rng))
    g1 = rng.standard_normal(J) + 1j * rng.standard_normal(J)
    g2 = rng.standard_normal(J) + 1j * rng.standard_normal(J)
    lhs = mu_norm_sq(multiplication_operator_finite(g1) @ W @ multiplication_operator_finite(g2))
    om = bs.finite_omega(W.to(COEFFICIENT).entries)
    b1, b2 = idft(np.abs(g1) ** 2), idft(np.abs(g2) ** 2)
    k = np.arange(J)
    rhs = np.einsum("m,mn,n->", b1[(-k) % J], om, b2[(-k) % J])
    assert rhs == pytest.approx(lhs, abs=1e-12)


@pytest.mark.parametrize("J", [3, 6, 8])
def test_unitary_source_gives_doubly_stochastic_kernel(J):
    U = FiniteOperator(random_unitary(J, np.random.default_rng(J)))
    kernel = bs.build_finite(U)
    assert kernel.unitary
    K = kernel.kernel_values()
    assert np.allclose(K.sum(axis=0), 1) and np.allclose(K.sum(axis=1), 1)
    assert bs.check_unit(kernel) < 1e-12
    f = bs.nonnegative_from(np.random.default_rng(0).standard_normal(J))
    assert bs.check_mass(kernel, f) < 1e-12
    rep = bs.check_nonnegativity(kernel, trials=50)
    assert rep.passed and rep.trials == 50 + J
    l1 = bs.l1_bound(kernel)
    assert l1.induced == pytest.approx(1.0) and l1.slack >= -1e-12


def test_non_unitary_checks_are_skipped():
    kernel = bs.build_finite(FiniteOperator(random_matrix(4, np.random.default_rng(1))))
    assert not kernel.unitary
    assert bs.check_unit(kernel) is None
    assert bs.check_mass(kernel, np.ones(4)) is None
    assert bs.check_nonnegativity(kernel, trials=30).passed
    assert bs.l1_bound(kernel).slack >= -1e-9


def test_koopman_orientation():
    for image in [(1, 2, 0), (2, 0, 3, 1), (0, 1), (3, 0, 4, 1, 2)]:
        F = Permutation(image)
        cmp = bs.koopman_case_compare(F)
        assert cmp.orientation in ("F", "both")
        assert cmp.matches_F
    assert bs.koopman_case_compare(Permutation((1, 2, 0))).orientation == "F"
    assert bs.build_finite(koopman(Permutation((1, 0)))).unitary


def test_dt_norm_of_shift_and_identity():
    assert bs.finite_dt_norm(np.eye(4)) == pytest.approx(1.0)
    C = np.diag(np.arange(1.0, 5.0))
    assert bs.finite_dt_norm(C) == pytest.approx(4.0)


def test_torus_rotation_acts_as_translation():
    alpha = 0.9
    table = omega_exact(ConvolutionOperator(RotationPhase(alpha)), 6)
    kernel = bs.build_torus(table, True)
    f = FourierPolynomial({-2: 0.3, 0: 1.0, 1: 0.5j})
    out = bs.apply(kernel, f)
    for k in (-2, 0, 1):
        # coefficient k picks up e^{ik alpha}: a translation of f by alpha
        assert out[k] == pytest.approx(np.exp(1j * k * alpha) * f[k])
    assert bs.check_unit(kernel) < 1e-12
    assert bs.check_mass(kernel, f.abs2()) < 1e-12


@pytest.mark.parametrize("W", [ConvolutionOperator(QuadraticPhase(np.pi / 3)),
                               PeriodicOperator.random(np.random.default_rng(2), 2, 1)])
def test_torus_kernels_preserve_positivity(W):
    kernel = bs.build_torus(omega_exact(W, 10), False)
    assert bs.check_nonnegativity(kernel, trials=40).passed
    l1 = bs.l1_bound(kernel)
    assert l1.slack >= -1e-9


def test_apply_validation():
    kernel = bs.build_torus(omega_exact(ConvolutionOperator(RotationPhase(0.2)), 2), True)
    with pytest.raises(InvalidInputError):
        bs.apply(kernel, FourierPolynomial({3: 1.0}))
    with pytest.raises(InvalidInputError):
        bs.apply(kernel, np.ones(5))
    fk = bs.build_finite(FiniteOperator(np.eye(3)))
    with pytest.raises(InvalidInputError):
        bs.apply(fk, np.ones(4))
    with pytest.raises(InvalidInputError):
        kernel.kernel_values()
    assert fk.to_json()["mode"] == "finite" and len(fk.to_json()["omega"]) == 9
