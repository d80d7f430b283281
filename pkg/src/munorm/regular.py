"""Correlation coefficients omega_{m,n} of regular diagonal-type operators.

For an integer interval I,

    omega_{I,m,n} = (1/#I) sum_{j in Z, l in I} W_{l+m,j} conj(W_{l,j+n}),

and ``omega_{m,n}`` is its limit as ``#I -> infinity``.  The kernel
``nu(x, a) = sum omega_{m,n} e^{imx + ina}`` carries the mu-norms of all
products ``g1^ W g2^``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InconsistencyError, InvalidInputError, NoClosedFormError
from .torus_dt import (
    TWO_PI,
    ConstantSequence,
    ConvolutionOperator,
    FourierPolynomial,
    IntegerInterval,
    LatticeOperator,
    MultiplicationOperator,
    ProductOperator,
    QuadraticPhase,
    RotationPhase,
    SumOperator,
    dt_norm,
    v_window,
)

RESONANCE_TOL = 1e-9
NEAR_RESONANCE_TOL = 1e-6
EXACT = 0  # interval_len marker for closed-form entries


@dataclass(frozen=True)
class OmegaTable:
    """Entries ``omega_{m,n}`` for ``|m|, |n| <= M``.

    ``interval_len`` is 0 for closed-form tables and ``#I`` for windowed
    estimates.
    """

    M: int
    values: np.ndarray
    dt_norm_bound: float
    interval_len: int = EXACT
    label: str = ""
    notes: tuple = field(default=())

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (2 * self.M + 1, 2 * self.M + 1):
            raise InvalidInputError(f"table of window {self.M} needs shape {(2 * self.M + 1,) * 2}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def exact(self) -> bool:
        return self.interval_len == EXACT

    @property
    def source(self) -> str:
        return "exact" if self.exact else "estimated"

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    def __getitem__(self, mn) -> complex:
        m, n = mn
        if abs(m) > self.M or abs(n) > self.M:
            raise IndexError(f"({m}, {n}) outside window {self.M}")
        return complex(self.values[m + self.M, n + self.M])

    def get(self, m: int, n: int, default: complex = 0j) -> complex:
        if abs(m) > self.M or abs(n) > self.M:
            return default
        return complex(self.values[m + self.M, n + self.M])

    def row(self, m: int) -> np.ndarray:
        return self.values[m + self.M]

    def col(self, n: int) -> np.ndarray:
        return self.values[:, n + self.M]

    def shrink(self, M: int) -> "OmegaTable":
        if M > self.M:
            raise InvalidInputError("cannot grow a table")
        d = self.M - M
        sl = slice(d, d + 2 * M + 1)
        return OmegaTable(M, self.values[sl, sl], self.dt_norm_bound,
                          self.interval_len, self.label, self.notes)

    def diagonal_spread(self, rel_tol: float = 1e-14) -> int:
        """Largest ``|m + n|`` over nonzero entries."""
        mag = np.abs(self.values)
        if mag.max() == 0:
            return 0
        m, n = np.nonzero(mag > rel_tol * mag.max())
        return int(np.max(np.abs(m + n - 2 * self.M)))

    def csv_rows(self):
        for m in self.indices:
            for n in self.indices:
                w = self[m, n]
                yield (int(m), int(n), w.real, w.imag, self.source, self.interval_len)


# --------------------------------------------------------------------------
# windowed sums


def omega_window_block(W: LatticeOperator, I: IntegerInterval,
                       ms: Sequence[int], ns: Sequence[int]) -> np.ndarray:
    """``omega_{I,m,n}`` for every m in ``ms`` and n in ``ns``, summed exactly."""
    ms = np.atleast_1d(np.asarray(ms, dtype=np.int64))
    ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
    B = W.band
    base = I.lo + min(0, int(ms.min()))
    rows = np.arange(base, I.hi + max(0, int(ms.max())) + 1)
    E = W.diagonals(rows)  # E[r, t + B] = W_{r, r + t}
    lidx = I.points() - base
    EI = E[lidx]
    out = np.zeros((ms.size, ns.size), dtype=complex)
    for a, m in enumerate(ms):
        A = E[lidx + m]
        for b, n in enumerate(ns):
            s = int(m + n)
            if abs(s) > 2 * B:
                continue
            # j = l + m + t, W_{l, j+n} = E[l, s + t]
            t_lo, t_hi = max(-B, -B - s), min(B, B - s)
            out[a, b] = np.sum(A[:, t_lo + B:t_hi + B + 1]
                               * np.conj(EI[:, s + t_lo + B:s + t_hi + B + 1]))
    return out / I.size


def omega_window(W: LatticeOperator, I: IntegerInterval, m: int, n: int) -> complex:
    return complex(omega_window_block(W, I, [m], [n])[0, 0])


def omega_estimate(W: LatticeOperator, I: IntegerInterval, M: int) -> OmegaTable:
    idx = np.arange(-M, M + 1)
    return OmegaTable(M, omega_window_block(W, I, idx, idx), dt_norm(W), I.size,
                      label=f"window {I.lo}..{I.hi}")


def average_trace_window(W: LatticeOperator, I: IntegerInterval) -> float:
    """``(1/#I) sum_{l in I, j} |W_{l,j}|^2``."""
    E = W.diagonals(I.points())
    return float(np.sum(np.abs(E) ** 2) / I.size)


# --------------------------------------------------------------------------
# closed forms


def is_resonant(tau: float, m: int) -> bool:
    r = tau * m / np.pi
    return abs(r - round(r)) <= RESONANCE_TOL


def _near_resonances(tau: float, ms) -> list:
    out = []
    for m in ms:
        r = tau * m / np.pi
        d = abs(r - round(r))
        if RESONANCE_TOL < d <= NEAR_RESONANCE_TOL:
            out.append(int(m))
    return out


def omega_closed_form(W: LatticeOperator, ms, ns) -> np.ndarray:
    """Limit coefficients for the kinds that have a closed form."""
    ms = np.atleast_1d(np.asarray(ms, dtype=np.int64))
    ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
    s = ms[:, None] + ns[None, :]
    if isinstance(W, MultiplicationOperator):
        gbar = W.g.abs2()
        out = np.zeros(s.shape, dtype=complex)
        for q, c in gbar.coeffs.items():
            out[s == q] = c
        return out
    if isinstance(W, ConvolutionOperator):
        lam = W.lam
        diag = s == 0
        m = np.broadcast_to(ms[:, None], s.shape).astype(float)
        if isinstance(lam, QuadraticPhase):
            res = np.array([is_resonant(lam.tau, int(v)) for v in ms])[:, None]
            phase = lam(ms)[:, None]
            return np.where(diag & res, np.broadcast_to(phase, s.shape), 0j)
        if isinstance(lam, RotationPhase):
            return np.where(diag, np.exp(1j * lam.alpha * m), 0j)
        if isinstance(lam, ConstantSequence):
            return np.where(diag, abs(lam.value) ** 2 + 0j, 0j)
    if W.period is not None:
        return omega_window_block(W, IntegerInterval.of_length(W.period), ms, ns)
    if isinstance(W, SumOperator) and len(W.terms) == 1:
        c, op = W.terms[0]
        return abs(c) ** 2 * omega_closed_form(op, ms, ns)
    raise NoClosedFormError(f"no closed form for {W.kind} operator {W!r}")


def _peel(W: LatticeOperator):
    """Split ``g1^ W0 g2^`` into its outer multipliers and the core."""
    one = FourierPolynomial.constant(1.0)
    if not isinstance(W, ProductOperator):
        return one, W, one
    fs = list(W.factors)
    g1 = g2 = one
    if len(fs) > 1 and isinstance(fs[0], MultiplicationOperator):
        g1 = fs.pop(0).g
    if len(fs) > 1 and isinstance(fs[-1], MultiplicationOperator):
        g2 = fs.pop().g
    core = fs[0] if len(fs) == 1 else ProductOperator(tuple(fs))
    return g1, core, g2


def omega_exact(W: LatticeOperator, M: int) -> OmegaTable:
    """Closed-form table; products ``g1^ W0 g2^`` go through the product formulas."""
    try:
        return _omega_exact_core(W, M)
    except NoClosedFormError:
        g1, core, g2 = _peel(W)
        if core is W:
            raise
    grow = g1.abs2().degree + g2.abs2().degree
    inner = omega_exact(core, M + grow)
    t = product_omega_both(g1, inner, g2).shrink(M)
    return OmegaTable(M, t.values, min(dt_norm(W), t.dt_norm_bound), EXACT,
                      label=W.kind, notes=inner.notes)


def _omega_exact_core(W: LatticeOperator, M: int) -> OmegaTable:
    idx = np.arange(-M, M + 1)
    notes = ()
    if isinstance(W, ConvolutionOperator) and isinstance(W.lam, QuadraticPhase):
        near = _near_resonances(W.lam.tau, idx)
        if near:
            notes = (f"near-resonant m (|tau m/pi - integer| <= {NEAR_RESONANCE_TOL}): {near}",)
    return OmegaTable(M, omega_closed_form(W, idx, idx), dt_norm(W), EXACT,
                      label=W.kind, notes=notes)


class ConvergenceRow(NamedTuple):
    interval_len: int
    start: int
    estimate: complex
    exact: complex
    error: float
    bound: float


def window_error_bound(W: LatticeOperator, m: int, n: int, length: int) -> float:
    """Provable bound on ``|omega_{I,m,n} - omega_{m,n}|`` for ``#I = length``."""
    if isinstance(W, ConvolutionOperator):
        lam = W.lam
        if isinstance(lam, (RotationPhase, ConstantSequence)) or m + n != 0:
            return 0.0
        if isinstance(lam, QuadraticPhase):
            if is_resonant(lam.tau, m):
                return 0.0
            # |sum_{l in I} e^{2i tau m l}| <= 1 / |sin(tau m)|
            return 1.0 / (length * abs(np.sin(lam.tau * m)))
    if W.period is not None:
        tau = W.period
        if length <= tau:
            return np.inf
        return tau * dt_norm(W) ** 2 * (1.0 / length + 1.0 / (length - tau))
    raise NoClosedFormError(f"no window bound for {W.kind} operator")


def omega_convergence_report(W: LatticeOperator, m: int, n: int,
                             lengths: Sequence[int], start: int = 0) -> list:
    exact = complex(omega_closed_form(W, [m], [n])[0, 0])
    rows = []
    for L in lengths:
        I = IntegerInterval.of_length(int(L), start)
        est = omega_window(W, I, m, n)
        rows.append(ConvergenceRow(int(L), start, est, exact, abs(est - exact),
                                   window_error_bound(W, m, n, int(L))))
    return rows


# --------------------------------------------------------------------------
# symbols, kernel, marginals


def v_from_table(table: OmegaTable, m: int, a) -> np.ndarray:
    """``v_m(a) = sum_n omega_{m,n} e^{i(m+n)a}`` over the table window."""
    a = np.asarray(a, dtype=float)
    n = table.indices
    return np.tensordot(np.exp(1j * np.multiply.outer(a, m + n)), table.row(m), axes=([-1], [0]))


def nu_eval(table: OmegaTable, x, a) -> np.ndarray:
    """Truncated kernel ``sum_{|m|,|n| <= M} omega_{m,n} e^{imx + ina}``."""
    x, a = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(a, dtype=float))
    k = table.indices
    ex = np.exp(1j * np.multiply.outer(x, k))
    ea = np.exp(1j * np.multiply.outer(a, k))
    return np.einsum("...m,mn,...n->...", ex, table.values, ea)


def fejer_order(table: OmegaTable) -> int:
    """Largest order whose x-Fourier rows are complete in the window."""
    return max(table.M - table.diagonal_spread(), 0)


def fejer_nu(table: OmegaTable, x, a, order: int | None = None) -> np.ndarray:
    """Cesaro mean in x of ``nu(., a)``: rows weighted by ``1 - |m|/(K+1)``."""
    K = fejer_order(table) if order is None else order
    if K > table.M:
        raise InvalidInputError("Fejer order exceeds the table window")
    weights = np.clip(1.0 - np.abs(table.indices) / (K + 1), 0.0, None)
    weighted = OmegaTable(table.M, table.values * weights[:, None], table.dt_norm_bound,
                          table.interval_len)
    return nu_eval(weighted, x, a)


def fejer_nu_grid(table: OmegaTable, x, a, order: int | None = None) -> np.ndarray:
    """``fejer_nu`` on the product grid: result ``[i, j]`` at ``(x[i], a[j])``."""
    K = fejer_order(table) if order is None else order
    if K > table.M:
        raise InvalidInputError("Fejer order exceeds the table window")
    k = table.indices
    weights = np.clip(1.0 - np.abs(k) / (K + 1), 0.0, None)
    ex = np.exp(1j * np.multiply.outer(np.asarray(x, dtype=float), k))
    ea = np.exp(1j * np.multiply.outer(np.asarray(a, dtype=float), k))
    return ex @ (table.values * weights[:, None]) @ ea.T


def dirichlet_kernel(M: int, t) -> np.ndarray:
    k = np.arange(-M, M + 1)
    return np.exp(1j * np.multiply.outer(np.asarray(t, dtype=float), k)).sum(axis=-1)


def marginals(table: OmegaTable) -> tuple:
    """``phi = sum_n omega_{0,n} e^{ina}`` and ``psi = sum_m omega_{m,0} e^{imx}``."""
    k = table.indices.tolist()
    phi = FourierPolynomial(dict(zip(k, table.row(0))))
    psi = FourierPolynomial(dict(zip(k, table.col(0))))
    return phi, psi


def mu_norm_regular(table: OmegaTable, tol: float = 1e-12) -> float:
    w = table[0, 0]
    if abs(w.imag) > tol:
        raise InconsistencyError(f"omega_00 has imaginary part {w.imag:.3e}")
    if w.real < -tol:
        raise InconsistencyError(f"omega_00 is negative ({w.real:.3e})")
    return float(np.sqrt(max(w.real, 0.0)))


def mu_norm_integral_estimate(W: LatticeOperator, n_grid: int, I: IntegerInterval) -> float:
    """Trapezoidal mean over ``a`` of the windowed ``rho_I(L_a) = v_{I,0}(a)``."""
    a = np.arange(n_grid) * TWO_PI / n_grid
    return float(np.mean(v_window(W, I, 0, a)).real)


class TraceInvariance(NamedTuple):
    interval_len: int
    trace_W: float
    trace_WU: float
    trace_UW: float
    residual: float


def unitary_trace_invariance_check(W: LatticeOperator, U: LatticeOperator,
                                   lengths: Sequence[int], start: int = 0) -> list:
    WU, UW = ProductOperator((W, U)), ProductOperator((U, W))
    rows = []
    for L in lengths:
        I = IntegerInterval.of_length(int(L), start)
        t = [average_trace_window(X, I) for X in (W, WU, UW)]
        rows.append(TraceInvariance(int(L), *t, max(abs(t[1] - t[0]), abs(t[2] - t[0]))))
    return rows


# --------------------------------------------------------------------------
# products with multiplication operators


def _gbar(g: FourierPolynomial) -> FourierPolynomial:
    return g.abs2()


def product_omega_right(table: OmegaTable, g: FourierPolynomial) -> OmegaTable:
    """Table of ``W g^``: ``sum_q omega_{m,n-q} gbar_q`` (kernel times ``|g(a)|^2``)."""
    gb = _gbar(g)
    D = gb.degree
    M = table.M - D
    if M < 0:
        raise InvalidInputError(f"table window {table.M} too small for |g|^2 of degree {D}")
    idx = np.arange(-M, M + 1)
    out = np.zeros((idx.size, idx.size), dtype=complex)
    for q, c in gb.coeffs.items():
        out += c * table.values[idx[:, None] + table.M, idx[None, :] - q + table.M]
    return OmegaTable(M, out, table.dt_norm_bound * g.acf_norm(), table.interval_len,
                      label=f"{table.label} * g")


def product_omega_left(g: FourierPolynomial, table: OmegaTable) -> OmegaTable:
    """Table of ``g^ W``: ``sum_p gbar_{m-p} omega_{p,n}`` (kernel times ``|g(x)|^2``)."""
    gb = _gbar(g)
    D = gb.degree
    M = table.M - D
    if M < 0:
        raise InvalidInputError(f"table window {table.M} too small for |g|^2 of degree {D}")
    idx = np.arange(-M, M + 1)
    out = np.zeros((idx.size, idx.size), dtype=complex)
    for q, c in gb.coeffs.items():  # p = m - q
        out += c * table.values[idx[:, None] - q + table.M, idx[None, :] + table.M]
    return OmegaTable(M, out, table.dt_norm_bound * g.acf_norm(), table.interval_len,
                      label=f"g * {table.label}")


def product_omega_both(g1: FourierPolynomial, table: OmegaTable,
                       g2: FourierPolynomial) -> OmegaTable:
    return product_omega_left(g1, product_omega_right(table, g2))


def gwg_mu_norm_sq(table: OmegaTable, g1: FourierPolynomial, g2: FourierPolynomial) -> float:
    """``||g1^ W g2^||_mu^2 = sum_{m,n} gbar1_{-m} omega_{m,n} gbar2_{-n}``."""
    gb1, gb2 = _gbar(g1), _gbar(g2)
    if max(gb1.degree, gb2.degree) > table.M:
        raise InvalidInputError("table window too small for the multipliers")
    total = 0j
    for p, c1 in gb1.coeffs.items():
        for q, c2 in gb2.coeffs.items():
            total += c1 * table[-p, -q] * c2
    return float(total.real)


# --------------------------------------------------------------------------
# interval indicators


def ramp_outer(x, alpha: float, beta: float, eps: float) -> np.ndarray:
    """``max(0, 1 - dist(x, [alpha, beta]) / eps)`` on the circle."""
    mid, half = (alpha + beta) / 2, (beta - alpha) / 2
    d = np.maximum(_circ(x - mid) - half, 0.0)
    return np.maximum(0.0, 1.0 - d / eps)


def ramp_inner(x, alpha: float, beta: float, eps: float) -> np.ndarray:
    """``min(1, dist(x, complement of [alpha, beta]) / eps)`` on the circle."""
    mid, half = (alpha + beta) / 2, (beta - alpha) / 2
    d = np.maximum(half - _circ(x - mid), 0.0)
    return np.minimum(1.0, d / eps)


def _circ(t):
    return np.abs(np.mod(np.asarray(t, dtype=float) + np.pi, TWO_PI) - np.pi)


def _fourier_coeffs(samples: np.ndarray, K: int) -> dict:
    N = samples.size
    c = np.fft.fft(samples) / N
    return {k: c[k % N] for k in range(-K, K + 1)}


def _pair(h_coeffs: dict, poly: FourierPolynomial) -> float:
    # (1/2pi) int h(x) p(x) dx = sum_k h_{-k} p_k
    return float(sum(h_coeffs.get(-k, 0j) * c for k, c in poly.coeffs.items()).real)


class IndicatorEstimate(NamedTuple):
    value: float  # pairing with the outer ramp g_eps
    lower: float  # pairing with the inner ramp g_{-eps}
    error_bar: float  # ||g_eps - g_{-eps}||^2 * ||marginal||_DT
    exact: float  # (1/2pi) int_alpha^beta marginal, in closed form


def indicator_mu_norm(table: OmegaTable, alpha: float, beta: float, eps: float,
                      side: str = "left", grid: int = 1 << 14) -> IndicatorEstimate:
    """``||1_[alpha,beta]^ W||_mu^2`` (``side="left"``) or ``||W 1^||_mu^2`` (``"right"``).

    Uses the ramp family squeezing the indicator; the marginal is ``psi``
    for the left product and ``phi`` for the right one.
    """
    if not beta > alpha:
        raise InvalidInputError("degenerate interval")
    if eps <= 0:
        raise InvalidInputError("eps must be positive")
    if side not in ("left", "right"):
        raise InvalidInputError(f"side must be 'left' or 'right', got {side!r}")
    phi, psi = marginals(table)
    marg = psi if side == "left" else phi
    length = beta - alpha
    if length >= TWO_PI:
        full = marg[0].real
        return IndicatorEstimate(full, full, 0.0, full)
    x = np.arange(grid) * TWO_PI / grid
    outer = ramp_outer(x, alpha, beta, eps)
    inner = ramp_inner(x, alpha, beta, eps)
    K = table.M
    val = _pair(_fourier_coeffs(outer**2, K), marg)
    low = _pair(_fourier_coeffs(inner**2, K), marg)
    gap = float(np.mean((outer - inner) ** 2))
    exact = 0j
    for k, c in marg.coeffs.items():
        if k == 0:
            exact += c * length
        else:
            exact += c * (np.exp(1j * k * beta) - np.exp(1j * k * alpha)) / (1j * k)
    return IndicatorEstimate(val, low, gap * marg.acf_norm(), float((exact / TWO_PI).real))


def omega_tail_bound_check(W: LatticeOperator, m: int, M: int) -> float:
    """Slack of ``sum_{|n+m| >= 2M} |omega_{m,n}| <= 2 cbar sum_{|k| >= M} c_k``."""
    B = W.band
    table = omega_exact(W, abs(m) + 2 * B)
    ns = np.arange(-m - 2 * B, -m + 2 * B + 1)
    ns = ns[np.abs(ns + m) >= 2 * M]
    lhs = float(sum(abs(table[m, int(n)]) for n in ns))
    c = W.majorant()
    rhs = 2 * sum(c.values()) * sum(v for k, v in c.items() if abs(k) >= M)
    return rhs - lhs
