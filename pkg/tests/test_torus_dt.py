import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from munorm.errors import InvalidInputError, SupportError
from munorm.torus_dt import (
    TWO_PI,
    ConstantSequence,
    ConvolutionOperator,
    FourierPolynomial,
    IntegerInterval,
    MultiplicationOperator,
    PeriodicOperator,
    ProductOperator,
    QuadraticPhase,
    RotationPhase,
    SumOperator,
    TableSequence,
    dt_norm,
    identity,
    localized_fourier_checks,
    localized_fourier_grid,
    operator_norm_window,
    random_bump,
    rho_interval,
    v_window,
    w_symbol,
)

X = np.arange(256) * TWO_PI / 256

polys = st.tuples(st.integers(0, 2**32 - 1), st.integers(0, 5)).map(
    lambda t: FourierPolynomial.random(np.random.default_rng(t[0]), t[1]))


@settings(max_examples=50, deadline=None)
@given(polys, polys)
def test_polynomial_arithmetic_matches_pointwise(f, g):
    assert np.allclose((f + g)(X), f(X) + g(X))
    assert np.allclose((f - g)(X), f(X) - g(X))
    assert np.allclose((f * g)(X), f(X) * g(X))
    assert np.allclose(f.conj()(X), np.conj(f(X)))
    assert np.allclose(f.abs2()(X), np.abs(f(X)) ** 2)
    assert f.l2_sq() == pytest.approx(np.mean(np.abs(f(X)) ** 2))
    assert f.sup_on_grid() <= f.acf_norm() + 1e-12


def test_polynomial_support_and_zero_pruning():
    g = FourierPolynomial({-2: 1.0, 3: 0.0, 1: 2j})
    assert g.coeffs == {-2: 1.0, 1: 2j}
    assert g.support == (-2, 1)
    assert g.degree == 2
    assert FourierPolynomial().support == (0, 0)


def test_interval():
    I = IntegerInterval.of_length(5, -2)
    assert (I.lo, I.hi, I.size) == (-2, 2, 5)
    assert I.shifted(3).points().tolist() == [1, 2, 3, 4, 5]
    with pytest.raises(InvalidInputError):
        IntegerInterval(3, 2)
    with pytest.raises(InvalidInputError):
        IntegerInterval.of_length(0)


@pytest.mark.parametrize("tau", [np.pi / 2, np.pi / 3, 2 * np.pi / 7, np.pi * 0.37, 1.0])
def test_quadratic_phase_reduction(tau):
    q = QuadraticPhase(tau)
    k = np.arange(-50, 51)
    assert np.allclose(q(k), np.exp(1j * tau * k.astype(float) ** 2), atol=1e-12)
    big = np.array([10**6 + 3])
    if q.rational is not None:
        p, d = q.rational.numerator, q.rational.denominator
        ref = np.exp(1j * np.pi * p * ((big[0] ** 2) % (2 * d)) / d)
        assert abs(q(big)[0] - ref) < 1e-14
    assert np.allclose(np.abs(q(big)), 1.0)


def test_sequences():
    assert RotationPhase(0.5)(np.array([2]))[0] == pytest.approx(np.exp(1j))
    t = TableSequence(-1, (1, 2, 3))
    assert t(np.arange(-3, 4)).tolist() == [0, 0, 1, 2, 3, 0, 0]
    assert t.sup == 3
    assert ConstantSequence(2j).to_json() == {"form": "constant", "value": [0.0, 2.0]}


def test_entry_rules():
    g = FourierPolynomial({0: 1.0, 1: 2.0, -2: 3j})
    W = MultiplicationOperator(g)
    A = W.matrix(-4, 4)
    for j in range(9):
        for k in range(9):
            assert A[j, k] == g[j - k]
    C = ConvolutionOperator(RotationPhase(0.3))
    assert np.allclose(C.matrix(-3, 3), np.diag(np.exp(0.3j * np.arange(-3, 4))))


def test_periodic_operator_layout():
    P = PeriodicOperator(3, {0: [1, 2, 3], -1: [4, 5, 6]})
    assert P.band == 1
    for j in range(-6, 6):
        assert P.entry(j, j) == [1, 2, 3][j % 3]
        assert P.entry(j, j + 1) == [4, 5, 6][j % 3]
        assert P.entry(j + 3, j + 4) == P.entry(j, j + 1)
    with pytest.raises(InvalidInputError):
        PeriodicOperator(2, {0: [1, 2, 3]})
    with pytest.raises(InvalidInputError):
        PeriodicOperator(0, {})


def test_product_and_sum_agree_with_dense_algebra():
    rng = np.random.default_rng(0)
    A = PeriodicOperator.random(rng, 2, 1)
    B = MultiplicationOperator(FourierPolynomial.random(rng, 2))
    Q = ConvolutionOperator(QuadraticPhase(0.7))
    lo, hi, pad = -10, 10, 6
    for P in (ProductOperator((A, B)), ProductOperator((B, Q, A)), A @ B @ Q):
        big = [f.matrix(lo - pad, hi + pad) for f in P.factors]
        dense = big[0]
        for m in big[1:]:
            dense = dense @ m
        inner = slice(pad, pad + hi - lo + 1)
        assert np.allclose(P.matrix(lo, hi), dense[inner, inner])
    S = A + B.scale(2.0) - Q
    assert np.allclose(S.matrix(lo, hi), A.matrix(lo, hi) + 2 * B.matrix(lo, hi) - Q.matrix(lo, hi))
    assert np.allclose(A.adjoint().matrix(lo, hi), A.matrix(lo, hi).conj().T)


def test_majorants():
    P = PeriodicOperator(2, {0: [1, -3], 1: [0.5, 0.25j]})
    assert P.majorant_exact
    assert P.majorant() == {-1: 0.0, 0: 3.0, 1: 0.5}
    assert dt_norm(P) == pytest.approx(3.5)
    g = FourierPolynomial({0: 1.0, 2: -2.0})
    assert dt_norm(MultiplicationOperator(g)) == pytest.approx(3.0)
    assert dt_norm(identity()) == 1.0
    # composites with a non-periodic factor carry a propagated upper bound
    Q = ConvolutionOperator(QuadraticPhase(0.7))
    R = ProductOperator((MultiplicationOperator(g), Q))
    assert not R.majorant_exact
    j = np.arange(-200, 200)
    for s, c in R.majorant().items():
        assert np.max(np.abs(R.entry(j + s, j))) <= c + 1e-12


def test_operator_norm_window_bounds():
    rng = np.random.default_rng(1)
    P = PeriodicOperator.random(rng, 3, 2)
    assert operator_norm_window(P, -20, 20) <= dt_norm(P) + 1e-12
    assert operator_norm_window(identity(), 0, 5) == pytest.approx(1.0)


def test_symbols_against_direct_sums():
    rng = np.random.default_rng(2)
    W = PeriodicOperator.random(rng, 3, 2)
    a = np.linspace(0, TWO_PI, 7)
    for l in (-4, 0, 5):
        direct = [sum(W.entry(l, k) * np.exp(1j * (l - k) * aa) for k in range(l - 3, l + 4))
                  for aa in a]
        assert np.allclose(w_symbol(W, l, a), direct)
    I = IntegerInterval.of_length(9, -3)
    for m in (0, 2):
        direct = np.mean([w_symbol(W, l + m, a) * np.conj(w_symbol(W, l, a)) for l in I.points()],
                         axis=0)
        assert np.allclose(v_window(W, I, m, a), direct)


def test_rho_interval():
    I = IntegerInterval.of_length(10)
    assert rho_interval(QuadraticPhase(0.4), I) == pytest.approx(1.0)
    assert rho_interval(TableSequence(0, (2.0,)), I) == pytest.approx(0.4)


@pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
def test_localized_fourier_inequalities(eps):
    rng = np.random.default_rng(int(eps * 100))
    for _ in range(10):
        a = float(rng.uniform(0, TWO_PI))
        f = random_bump(rng, 1 << 12, a, eps)
        grid = localized_fourier_grid(f, a, eps, np.arange(-5, 6), np.arange(-5, 6))
        for arr in grid:
            assert arr.min() >= -1e-6
        one = localized_fourier_checks(f, a, eps, 3, -2)
        assert one.shift == pytest.approx(grid.shift[8, 3], abs=1e-12)
        assert one.coefficient == pytest.approx(grid.coefficient[8, 3], abs=1e-12)
        assert one.correlation == pytest.approx(grid.correlation[8, 3], abs=1e-12)


def test_localized_support_is_enforced():
    N = 512
    f = np.ones(N, dtype=complex)
    with pytest.raises(SupportError):
        localized_fourier_checks(f, 1.0, 0.1, 1, 1)
    with pytest.raises(SupportError):
        localized_fourier_grid(f, 1.0, 0.1, [1], [1])


def test_sum_of_periods_uses_lcm():
    rng = np.random.default_rng(3)
    S = SumOperator(((1.0, PeriodicOperator.random(rng, 2, 1)),
                     (1.0, PeriodicOperator.random(rng, 3, 1))))
    assert S.period == 6
    assert ProductOperator((S, ConvolutionOperator(QuadraticPhase(1.0)))).period is None
