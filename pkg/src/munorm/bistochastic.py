"""The operator ``f -> int nu(., a) f(a) dmu(a)`` built from omega tables.

On coefficient vectors it acts by ``(Wf)_m = sum_n omega_{m,-n} f_n``.  In the
finite case indices are taken mod J; on the circle the action is truncated
to the table window.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError
from .finite_space import COEFFICIENT, FiniteOperator, dft, idft
from .koopman_entropy import Permutation, koopman
from .regular import OmegaTable, marginals
from .torus_dt import TWO_PI, FourierPolynomial

FINITE = "finite"
TORUS = "torus"


@dataclass(frozen=True)
class BistochasticKernel:
    mode: str
    omega: np.ndarray  # finite: omega[m, n], m, n in Z_J; torus: table values
    dt_bound: float  # ||W||_DT^2 of the source
    unitary: bool
    table: OmegaTable | None = None

    @property
    def size(self) -> int:
        return self.omega.shape[0]

    @property
    def action(self) -> np.ndarray:
        """Matrix ``A[m, n] = omega_{m,-n}`` acting on coefficient vectors."""
        if self.mode == FINITE:
            J = self.size
            return self.omega[:, (-np.arange(J)) % J]
        return self.omega[:, ::-1]

    def kernel_values(self) -> np.ndarray:
        """Finite mode: ``K[x, a] = nu(x, a) / J``, so ``Wf(x) = sum_a K[x, a] f(a)``."""
        if self.mode != FINITE:
            raise InvalidInputError("point kernel only exists in finite mode")
        J = self.size
        k = np.arange(J)
        E = np.exp(2j * np.pi * np.outer(k, k) / J)
        return (E @ self.omega @ E.T) / J

    def to_json(self) -> dict:
        if self.mode == FINITE:
            idx = np.arange(self.size)
        else:
            idx = self.table.indices
        rows = [[int(m), int(n), float(self.omega[a, b].real), float(self.omega[a, b].imag)]
                for a, m in enumerate(idx) for b, n in enumerate(idx)]
        return {"mode": self.mode, "omega": rows}


def finite_omega(C: np.ndarray) -> np.ndarray:
    """``omega_{m,n} = (1/J) sum_{j,l} C_{l+m,j} conj(C_{l,j+n})`` with indices mod J."""
    J = C.shape[0]
    out = np.empty((J, J), dtype=complex)
    Cc = np.conj(C)
    for n in range(J):
        shifted = np.roll(Cc, -n, axis=1)  # shifted[l, j] = conj(C[l, j+n])
        for m in range(J):
            out[m, n] = np.sum(np.roll(C, -m, axis=0) * shifted)
    return out / J


def finite_dt_norm(C: np.ndarray) -> float:
    """``sum_k max_j |C_{k+j,j}|`` with indices mod J (coefficient basis)."""
    J = C.shape[0]
    j = np.arange(J)
    return float(sum(np.max(np.abs(C[(k + j) % J, j])) for k in range(J)))


def is_unitary(V: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(V.conj().T @ V - np.eye(V.shape[0]))) <= tol)


def build_finite(W: FiniteOperator) -> BistochasticKernel:
    C = W.to(COEFFICIENT).entries
    return BistochasticKernel(FINITE, finite_omega(C), finite_dt_norm(C) ** 2, is_unitary(C))


def build_torus(table: OmegaTable, unitary: bool) -> BistochasticKernel:
    return BistochasticKernel(TORUS, np.array(table.values), table.dt_norm_bound**2,
                              unitary, table)


def apply(kernel: BistochasticKernel, f):
    """Apply to a coefficient vector (finite) or a FourierPolynomial (torus)."""
    if kernel.mode == FINITE:
        f = np.asarray(f, dtype=complex)
        if f.shape != (kernel.size,):
            raise InvalidInputError(f"expected {kernel.size} coefficients")
        return kernel.action @ f
    if not isinstance(f, FourierPolynomial):
        raise InvalidInputError("torus kernels act on FourierPolynomial")
    M = kernel.table.M
    if f.degree > M:
        raise InvalidInputError(f"degree {f.degree} exceeds the table window {M}")
    idx = kernel.table.indices
    vec = np.array([f[k] for k in idx])
    return FourierPolynomial(dict(zip(idx.tolist(), kernel.action @ vec)))


def constant_one(kernel: BistochasticKernel):
    if kernel.mode == FINITE:
        e = np.zeros(kernel.size, dtype=complex)
        e[0] = 1.0
        return e
    return FourierPolynomial.constant(1.0)


def nonnegative_from(g):
    """``f = g conj(g)`` via ``f_k = sum_s g_{k+s} conj(g_s)``."""
    if isinstance(g, FourierPolynomial):
        return g.abs2()
    g = np.asarray(g, dtype=complex)
    J = g.size
    return np.array([np.sum(np.roll(g, -k) * np.conj(g)) for k in range(J)])


def _values(kernel: BistochasticKernel, f, grid: int) -> np.ndarray:
    if kernel.mode == FINITE:
        return dft(f)
    return f(np.arange(grid) * TWO_PI / grid)


class NonnegativityReport(NamedTuple):
    trials: int
    min_value: float
    max_imag: float
    passed: bool


def check_nonnegativity(kernel: BistochasticKernel, trials: int = 200, seed: int = 0,
                        tol: float = 1e-9, grid: int = 512) -> NonnegativityReport:
    """Apply to random ``f = |g|^2`` and to indicator-type ``f``; all values must be >= -tol."""
    rng = np.random.default_rng(seed)
    lowest, worst_imag = np.inf, 0.0
    inputs = []
    if kernel.mode == FINITE:
        J = kernel.size
        for _ in range(trials):
            g = rng.standard_normal(J) + 1j * rng.standard_normal(J)
            inputs.append(nonnegative_from(g))
        for x in range(J):
            ind = np.zeros(J)
            ind[x] = 1.0
            inputs.append(idft(ind))
    else:
        deg = max((kernel.table.M - kernel.table.diagonal_spread()) // 2, 0)
        for _ in range(trials):
            d = int(rng.integers(0, deg + 1))
            inputs.append(FourierPolynomial.random(rng, d).abs2())
    for f in inputs:
        vals = _values(kernel, apply(kernel, f), grid)
        lowest = min(lowest, float(vals.real.min()))
        worst_imag = max(worst_imag, float(np.abs(vals.imag).max()))
    return NonnegativityReport(len(inputs), lowest, worst_imag,
                               lowest >= -tol and worst_imag <= max(tol, 1e-9))


def _l1_of_coeff_diff(kernel: BistochasticKernel, diff, grid: int) -> float:
    if kernel.mode == FINITE:
        return float(np.mean(np.abs(dft(diff))))
    # the absolute coefficient sum bounds both sup and L1 norms
    return diff.acf_norm()


def check_unit(kernel: BistochasticKernel, grid: int = 512) -> float | None:
    """``||W1 - 1||_1``, or None (skipped) for a non-unitary source."""
    if not kernel.unitary:
        return None
    one = constant_one(kernel)
    out = apply(kernel, one)
    return _l1_of_coeff_diff(kernel, out - one, grid)


def check_mass(kernel: BistochasticKernel, f) -> float | None:
    """``|int Wf - int f|``, or None for a non-unitary source."""
    if not kernel.unitary:
        return None
    out = apply(kernel, f)
    if kernel.mode == FINITE:
        return float(abs(out[0] - np.asarray(f)[0]))
    return float(abs(out[0] - f[0]))


class L1Bound(NamedTuple):
    induced: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.induced


def l1_bound(kernel: BistochasticKernel, grid: int = 2048) -> L1Bound:
    """Induced ``L^1 -> L^1`` norm against ``||W||_DT^2``.

    Finite mode: exact, the largest column sum of ``|K[x, a]|``.  Torus mode:
    the sup of the marginal ``phi`` (exact for a nonnegative kernel).
    """
    if kernel.mode == FINITE:
        K = kernel.kernel_values()
        induced = float(np.max(np.sum(np.abs(K), axis=0)))
    else:
        phi, _ = marginals(kernel.table)
        induced = phi.sup_on_grid(grid)
    return L1Bound(induced, kernel.dt_bound)


class KoopmanComparison(NamedTuple):
    matches_F: bool  # W f = f o F
    matches_F_inverse: bool  # W f = f o F^{-1}
    orientation: str


def koopman_case_compare(F: Permutation, tol: float = 1e-10) -> KoopmanComparison:
    """Compare the omega-built operator of ``U_F`` with ``f o F`` and ``f o F^{-1}``."""
    kernel = build_finite(koopman(F))
    J = F.J
    img = np.asarray(F.image)
    inv = np.asarray(F.inverse().image)
    ok_f = ok_inv = True
    for x in range(J):
        vals = np.zeros(J)
        vals[x] = 1.0
        out = dft(apply(kernel, idft(vals)))
        ok_f &= bool(np.max(np.abs(out - vals[img])) <= tol)
        ok_inv &= bool(np.max(np.abs(out - vals[inv])) <= tol)
    orientation = {(True, True): "both", (True, False): "F",
                   (False, True): "F^-1", (False, False): "neither"}[(ok_f, ok_inv)]
    return KoopmanComparison(ok_f, ok_inv, orientation)
