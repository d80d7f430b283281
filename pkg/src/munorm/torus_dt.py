"""Diagonal-type operators on L^2 of the circle, as banded operators on Z.

An operator is given by its matrix ``W_{j,k}`` in the Fourier basis
``e^{ikx}``: ``Wf = sum_{j,k} W_{j,k} f_k e^{ijx}``.  Entries are produced
lazily by vectorized entry rules, so window sums are exact for any window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError, SupportError

TWO_PI = 2.0 * np.pi


# --------------------------------------------------------------------------
# trigonometric polynomials


@dataclass(frozen=True)
class FourierPolynomial:
    """Finitely supported map ``k -> g_k`` for ``g(x) = sum g_k e^{ikx}``."""

    coeffs: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(k): complex(v) for k, v in dict(self.coeffs).items() if v != 0}
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def constant(cls, c: complex = 1.0) -> "FourierPolynomial":
        return cls({0: c})

    @classmethod
    def from_array(cls, values: Sequence[complex], offset: int) -> "FourierPolynomial":
        return cls({offset + i: v for i, v in enumerate(values)})

    @classmethod
    def random(cls, rng: np.random.Generator, degree: int, scale: float = 1.0) -> "FourierPolynomial":
        k = np.arange(-degree, degree + 1)
        vals = (rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)) * scale
        return cls(dict(zip(k.tolist(), vals)))

    def __getitem__(self, k: int) -> complex:
        return self.coeffs.get(int(k), 0j)

    @property
    def support(self) -> tuple:
        if not self.coeffs:
            return (0, 0)
        return (min(self.coeffs), max(self.coeffs))

    @property
    def degree(self) -> int:
        return max((abs(k) for k in self.coeffs), default=0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for k, c in self.coeffs.items():
            out += c * np.exp(1j * k * x)
        return out

    def __add__(self, other: "FourierPolynomial") -> "FourierPolynomial":
        keys = set(self.coeffs) | set(other.coeffs)
        return FourierPolynomial({k: self[k] + other[k] for k in keys})

    def __sub__(self, other: "FourierPolynomial") -> "FourierPolynomial":
        return self + other.scale(-1)

    def scale(self, c: complex) -> "FourierPolynomial":
        return FourierPolynomial({k: c * v for k, v in self.coeffs.items()})

    def __mul__(self, other: "FourierPolynomial") -> "FourierPolynomial":
        out: dict = {}
        for k1, a in self.coeffs.items():
            for k2, b in other.coeffs.items():
                out[k1 + k2] = out.get(k1 + k2, 0j) + a * b
        return FourierPolynomial(out)

    def conj(self) -> "FourierPolynomial":
        """The function ``conj(g(x))``: coefficients ``conj(g_{-k})``."""
        return FourierPolynomial({-k: np.conj(v) for k, v in self.coeffs.items()})

    def abs2(self) -> "FourierPolynomial":
        """``|g|^2``, with coefficients ``sum_p g_p conj(g_{p-q})``."""
        return self * self.conj()

    def acf_norm(self) -> float:
        return float(sum(abs(v) for v in self.coeffs.values()))

    def l2_sq(self) -> float:
        """``(1/2pi) int |g|^2 dx``."""
        return float(sum(abs(v) ** 2 for v in self.coeffs.values()))

    def sup_on_grid(self, n: int = 1024) -> float:
        return float(np.max(np.abs(self(np.arange(n) * TWO_PI / n))))


@dataclass(frozen=True)
class IntegerInterval:
    lo: int
    hi: int

    def __post_init__(self):
        if self.hi < self.lo:
            raise InvalidInputError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def of_length(cls, length: int, start: int = 0) -> "IntegerInterval":
        if length < 1:
            raise InvalidInputError("interval length must be positive")
        return cls(start, start + length - 1)

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def points(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def shifted(self, s: int) -> "IntegerInterval":
        return IntegerInterval(self.lo + s, self.hi + s)


# --------------------------------------------------------------------------
# symbol sequences for convolution operators


class Sequence1D:
    """A bounded sequence ``k -> lambda_k`` evaluated on integer arrays."""

    form = "abstract"
    period: int | None = None

    def __call__(self, k: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def sup(self) -> float:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class QuadraticPhase(Sequence1D):
    """``lambda_k = e^{i tau k^2}``.

    When ``tau / pi`` is a rational p/q (to 1e-12, q <= 10^4) the phase is
    reduced exactly as ``pi p (k^2 mod 2q) / q``; otherwise ``tau k^2``
    loses ~1e-16 |tau| k^2 to rounding.
    """

    tau: float
    form = "quadratic_phase"

    @property
    def rational(self) -> Fraction | None:
        r = self.tau / np.pi
        fr = Fraction(r).limit_denominator(10**4)
        return fr if abs(float(fr) - r) <= 1e-12 else None

    def __call__(self, k):
        k = np.asarray(k, dtype=np.int64)
        fr = self.rational
        if fr is None:
            kf = k.astype(float)
            return np.exp(1j * self.tau * kf * kf)
        p, q = fr.numerator, fr.denominator
        red = np.mod(k * k, 2 * q)
        return np.exp(1j * np.pi * p * red / q)

    @property
    def sup(self) -> float:
        return 1.0

    def to_json(self):
        return {"form": self.form, "tau": self.tau}


@dataclass(frozen=True)
class RotationPhase(Sequence1D):
    """``lambda_k = e^{ik alpha}``: the Koopman operator of ``x -> x + alpha``."""

    alpha: float
    form = "rotation"

    def __call__(self, k):
        return np.exp(1j * self.alpha * np.asarray(k, dtype=float))

    @property
    def sup(self) -> float:
        return 1.0

    def to_json(self):
        return {"form": self.form, "alpha": self.alpha}


@dataclass(frozen=True)
class ConstantSequence(Sequence1D):
    value: complex = 1.0
    form = "constant"
    period = 1

    def __call__(self, k):
        return np.full(np.shape(k), complex(self.value))

    @property
    def sup(self) -> float:
        return abs(self.value)

    def to_json(self):
        v = complex(self.value)
        return {"form": self.form, "value": [v.real, v.imag]}


@dataclass(frozen=True)
class TableSequence(Sequence1D):
    """Explicit values on ``[offset, offset + len(values))``, zero elsewhere."""

    offset: int
    values: tuple
    form = "table"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(complex(v) for v in self.values))

    def __call__(self, k):
        k = np.asarray(k)
        idx = k - self.offset
        inside = (idx >= 0) & (idx < len(self.values))
        arr = np.asarray(self.values, dtype=complex)
        out = np.zeros(k.shape, dtype=complex)
        out[inside] = arr[idx[inside]]
        return out

    @property
    def sup(self) -> float:
        return max((abs(v) for v in self.values), default=0.0)

    def to_json(self):
        return {"form": self.form, "offset": self.offset,
                "values": [[v.real, v.imag] for v in self.values]}


# --------------------------------------------------------------------------
# lattice operators


def _lcm(periods):
    if any(p is None for p in periods):
        return None
    return reduce(lambda a, b: a * b // math.gcd(a, b), periods, 1)


class LatticeOperator:
    """Banded operator on Z: ``entry(j, k) = 0`` whenever ``|j - k| > band``."""

    kind = "abstract"
    band: int = 0
    period: int | None = None

    def entry(self, j, k) -> np.ndarray:
        j, k = np.broadcast_arrays(np.asarray(j, dtype=np.int64), np.asarray(k, dtype=np.int64))
        out = np.zeros(j.shape, dtype=complex)
        inside = np.abs(j - k) <= self.band
        if np.any(inside):
            out[inside] = self._entry(j[inside], k[inside])
        return out

    def _entry(self, j, k):
        raise NotImplementedError

    def diagonals(self, rows: np.ndarray) -> np.ndarray:
        """``E[r, u] = W_{row_r, row_r + u}`` for ``u`` in ``[-band, band]``."""
        rows = np.asarray(rows, dtype=np.int64)
        u = np.arange(-self.band, self.band + 1)
        return self.entry(rows[:, None], rows[:, None] + u[None, :])

    def matrix(self, lo: int, hi: int) -> np.ndarray:
        """Dense truncation to rows and columns ``lo..hi``."""
        idx = np.arange(lo, hi + 1)
        return self.entry(idx[:, None], idx[None, :])

    # majorating sequence c_s = sup_j |W_{j+s, j}|

    def _propagated_majorant(self) -> dict:
        raise NotImplementedError

    def majorant(self) -> dict:
        if self.period is not None:
            j = np.arange(self.period)
            return {s: float(np.max(np.abs(self.entry(j + s, j))))
                    for s in range(-self.band, self.band + 1)}
        return self._propagated_majorant()

    @property
    def majorant_exact(self) -> bool:
        return self.period is not None

    # algebra

    def __add__(self, other: "LatticeOperator") -> "LatticeOperator":
        return SumOperator(((1.0, self), (1.0, other)))

    def __sub__(self, other: "LatticeOperator") -> "LatticeOperator":
        return SumOperator(((1.0, self), (-1.0, other)))

    def __matmul__(self, other: "LatticeOperator") -> "LatticeOperator":
        return ProductOperator((self, other))

    def scale(self, c: complex) -> "LatticeOperator":
        return SumOperator(((c, self),))

    def adjoint(self) -> "LatticeOperator":
        return AdjointOperator(self)


class ConvolutionOperator(LatticeOperator):
    kind = "convolution"
    band = 0

    def __init__(self, lam: Sequence1D):
        self.lam = lam
        self.period = lam.period

    def _entry(self, j, k):
        return np.where(j == k, self.lam(k), 0j)

    def _propagated_majorant(self):
        return {0: float(self.lam.sup)}

    @property
    def majorant_exact(self) -> bool:
        return True

    def __repr__(self):
        return f"ConvolutionOperator({self.lam!r})"


class MultiplicationOperator(LatticeOperator):
    """Multiplication by a trigonometric polynomial: ``W_{j,k} = g_{j-k}``."""

    kind = "multiplication"
    period = 1

    def __init__(self, g: FourierPolynomial):
        self.g = g
        self.band = g.degree

    def _entry(self, j, k):
        s = j - k
        out = np.zeros(s.shape, dtype=complex)
        for q, c in self.g.coeffs.items():
            out[s == q] = c
        return out

    def __repr__(self):
        return f"MultiplicationOperator({self.g.coeffs!r})"


class PeriodicOperator(LatticeOperator):
    """``W_{j+tau, k+tau} = W_{j,k}``; ``diagonals[s][r]`` is ``W_{j, j-s}`` for ``j = r mod tau``."""

    kind = "periodic"

    def __init__(self, tau: int, diagonals: Mapping[int, Sequence[complex]]):
        if int(tau) != tau or tau < 1:
            raise InvalidInputError("tau must be a positive integer")
        self.tau = self.period = int(tau)
        self.diags = {}
        for s, vals in diagonals.items():
            vals = np.asarray(vals, dtype=complex)
            if vals.shape != (self.tau,):
                raise InvalidInputError(f"diagonal {s} needs {self.tau} values")
            if np.any(vals != 0):
                self.diags[int(s)] = vals
        self.band = max((abs(s) for s in self.diags), default=0)

    @classmethod
    def random(cls, rng: np.random.Generator, tau: int, band: int) -> "PeriodicOperator":
        return cls(tau, {s: rng.standard_normal(tau) + 1j * rng.standard_normal(tau)
                         for s in range(-band, band + 1)})

    def _entry(self, j, k):
        s = j - k
        r = np.mod(j, self.tau)
        out = np.zeros(s.shape, dtype=complex)
        for q, vals in self.diags.items():
            hit = s == q
            out[hit] = vals[r[hit]]
        return out

    def __repr__(self):
        return f"PeriodicOperator(tau={self.tau}, band={self.band})"


class SumOperator(LatticeOperator):
    kind = "sum"

    def __init__(self, terms):
        self.terms = tuple((complex(c), op) for c, op in terms)
        self.band = max(op.band for _, op in self.terms)
        self.period = _lcm([op.period for _, op in self.terms])

    def _entry(self, j, k):
        return sum(c * op.entry(j, k) for c, op in self.terms)

    def _propagated_majorant(self):
        out: dict = {}
        for c, op in self.terms:
            for s, v in op.majorant().items():
                out[s] = out.get(s, 0.0) + abs(c) * v
        return out

    @property
    def majorant_exact(self) -> bool:
        if self.period is not None:
            return True
        return len(self.terms) == 1 and self.terms[0][1].majorant_exact


class ProductOperator(LatticeOperator):
    kind = "product"

    def __init__(self, factors):
        flat = []
        for f in factors:
            flat.extend(f.factors if isinstance(f, ProductOperator) else [f])
        if not flat:
            raise InvalidInputError("empty product")
        self.factors = tuple(flat)
        self.band = sum(f.band for f in self.factors)
        self.period = _lcm([f.period for f in self.factors])

    def _entry(self, j, k):
        # (A B)_{j,k} = sum_t A_{j,k+t} B_{k+t,k}, |t| <= band(B)
        if len(self.factors) == 1:
            return self.factors[0].entry(j, k)
        A = ProductOperator(self.factors[:-1]) if len(self.factors) > 2 else self.factors[0]
        B = self.factors[-1]
        out = np.zeros(np.shape(j), dtype=complex)
        for t in range(-B.band, B.band + 1):
            out += A.entry(j, k + t) * B.entry(k + t, k)
        return out

    def _propagated_majorant(self):
        # upper bound: c^{AB}_s <= sum_t c^A_t c^B_{s-t}
        acc = {0: 1.0}
        for f in self.factors:
            nxt: dict = {}
            for s1, a in acc.items():
                for s2, b in f.majorant().items():
                    nxt[s1 + s2] = nxt.get(s1 + s2, 0.0) + a * b
            acc = nxt
        return acc

    @property
    def majorant_exact(self) -> bool:
        if self.period is not None:
            return True
        return len(self.factors) == 1 and self.factors[0].majorant_exact


class AdjointOperator(LatticeOperator):
    kind = "adjoint"

    def __init__(self, op: LatticeOperator):
        self.op = op
        self.band = op.band
        self.period = op.period

    def _entry(self, j, k):
        return np.conj(self.op.entry(k, j))

    def _propagated_majorant(self):
        return {-s: v for s, v in self.op.majorant().items()}

    @property
    def majorant_exact(self) -> bool:
        return self.op.majorant_exact

    def adjoint(self):
        return self.op


def identity() -> ConvolutionOperator:
    return ConvolutionOperator(ConstantSequence(1.0))


def convolution_operator(lam: Sequence1D) -> ConvolutionOperator:
    return ConvolutionOperator(lam)


def multiplication_operator_torus(g: FourierPolynomial) -> MultiplicationOperator:
    return MultiplicationOperator(g)


def dt_norm(W: LatticeOperator) -> float:
    """``sum_s c_s``; an upper bound when ``W.majorant_exact`` is False."""
    return float(sum(W.majorant().values()))


def operator_norm_window(W: LatticeOperator, lo: int, hi: int) -> float:
    """Spectral norm of a dense truncation (a lower bound for ``||W||``)."""
    return float(np.linalg.svd(W.matrix(lo, hi), compute_uv=False)[0])


# --------------------------------------------------------------------------
# windowed functionals and symbols


def rho_interval(lam: Callable, I: IntegerInterval) -> float:
    """``(1/#I) sum_{k in I} |lambda_k|^2``."""
    return float(np.mean(np.abs(lam(I.points())) ** 2))


def w_symbol(W: LatticeOperator, l, a) -> np.ndarray:
    """``w_l(a) = sum_k W_{l,k} e^{i(l-k)a}``; vectorized over ``l`` and ``a``."""
    l = np.asarray(l, dtype=np.int64)
    a = np.asarray(a, dtype=float)
    l, a = np.broadcast_arrays(l, a)
    out = np.zeros(l.shape, dtype=complex)
    for s in range(-W.band, W.band + 1):
        out += W.entry(l, l - s) * np.exp(1j * s * a)
    return out


def v_window(W: LatticeOperator, I: IntegerInterval, m: int, a) -> np.ndarray:
    """``(1/#I) sum_{l in I} w_{l+m}(a) conj(w_l(a))``; vectorized over ``a``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    B = W.band
    s = np.arange(-B, B + 1)
    phases = np.exp(1j * np.multiply.outer(s, a))  # (2B+1, n_a)
    l = I.points()
    # w_l(a) = sum_s W_{l,l-s} e^{isa}; diagonals store W_{l,l+u} at column u + B
    w_l = W.diagonals(l)[:, ::-1] @ phases
    w_lm = w_l if m == 0 else W.diagonals(l + m)[:, ::-1] @ phases
    out = np.mean(w_lm * np.conj(w_l), axis=0)
    return out if out.size > 1 else out[0]


# --------------------------------------------------------------------------
# localized Fourier coefficients on a grid


class LocalizedFourierMargins(NamedTuple):
    """``bound - lhs`` for each inequality; nonnegative when the bound holds."""

    shift: float  # ||f - e^{im(x-a)} f|| <= |m| eps ||f||
    coefficient: float  # |f_m - e^{ila} f_{m+l}| <= eps^{3/2}/sqrt(pi) |l| ||f||
    correlation: float  # |sum_k e^{-ima} f_k conj(f_{k+m}) - ||f||^2| <= |m| eps ||f||^2


def circular_distance(x, a) -> np.ndarray:
    d = np.mod(np.asarray(x) - a + np.pi, TWO_PI) - np.pi
    return np.abs(d)


def localized_fourier_checks(samples: np.ndarray, a: float, eps: float, m: int, l: int,
                             support_tol: float = 1e-12) -> LocalizedFourierMargins:
    """Margins of the three localized-Fourier inequalities, by grid quadrature.

    ``samples`` are values of ``f`` on the uniform grid ``x_i = 2 pi i / N``;
    ``f`` must vanish outside ``[a - eps, a + eps]``.
    """
    f = np.asarray(samples, dtype=complex)
    N = f.size
    x = np.arange(N) * TWO_PI / N
    outside = circular_distance(x, a) > eps * (1 + 1e-12)
    if np.any(np.abs(f[outside]) > support_tol):
        raise SupportError("grid function is nonzero outside [a - eps, a + eps]")
    norm_sq = float(np.mean(np.abs(f) ** 2))
    norm = np.sqrt(norm_sq)

    shifted = f * np.exp(1j * m * (x - a))
    lhs1 = np.sqrt(np.mean(np.abs(f - shifted) ** 2))
    bound1 = abs(m) * eps * norm

    def coeff(k):
        return np.mean(f * np.exp(-1j * k * x))

    lhs2 = abs(coeff(m) - np.exp(1j * l * a) * coeff(m + l))
    bound2 = eps**1.5 / np.sqrt(np.pi) * abs(l) * norm

    # sum_k f_k conj(f_{k+m}) = (1/2pi) int |f|^2 e^{imx} dx
    corr = np.exp(-1j * m * a) * np.mean(np.abs(f) ** 2 * np.exp(1j * m * x))
    lhs3 = abs(corr - norm_sq)
    bound3 = abs(m) * eps * norm_sq
    return LocalizedFourierMargins(float(bound1 - lhs1), float(bound2 - lhs2), float(bound3 - lhs3))


class LocalizedFourierGrid(NamedTuple):
    """Margins as arrays indexed ``[i, j]`` for ``m = ms[i]``, ``l = ls[j]``."""

    shift: np.ndarray
    coefficient: np.ndarray
    correlation: np.ndarray


def localized_fourier_grid(samples: np.ndarray, a: float, eps: float, ms, ls,
                           support_tol: float = 1e-12) -> LocalizedFourierGrid:
    """All margins of :func:`localized_fourier_checks` at once, through one FFT."""
    f = np.asarray(samples, dtype=complex)
    N = f.size
    x = np.arange(N) * TWO_PI / N
    outside = circular_distance(x, a) > eps * (1 + 1e-12)
    if np.any(np.abs(f[outside]) > support_tol):
        raise SupportError("grid function is nonzero outside [a - eps, a + eps]")
    ms = np.asarray(ms, dtype=np.int64)
    ls = np.asarray(ls, dtype=np.int64)
    p = np.abs(f) ** 2
    norm_sq = float(np.mean(p))
    norm = np.sqrt(norm_sq)
    shape = (ms.size, ls.size)

    # |1 - e^{im(x-a)}|^2 = 2 - 2 cos(m(x-a))
    lhs1 = np.sqrt(np.maximum([np.mean(p * (2 - 2 * np.cos(m * (x - a)))) for m in ms], 0.0))
    shift = np.broadcast_to((np.abs(ms) * eps * norm - lhs1)[:, None], shape)

    fh = np.fft.fft(f) / N  # fh[k mod N] = mean f e^{-ikx}
    mm, ll = np.meshgrid(ms, ls, indexing="ij")
    lhs2 = np.abs(fh[mm % N] - np.exp(1j * ll * a) * fh[(mm + ll) % N])
    coefficient = eps**1.5 / np.sqrt(np.pi) * np.abs(ll) * norm - lhs2

    ph = np.fft.fft(p) / N  # mean p e^{imx} = ph[-m mod N]
    corr = np.exp(-1j * ms * a) * ph[(-ms) % N]
    lhs3 = np.abs(corr - norm_sq)
    correlation = np.broadcast_to((np.abs(ms) * eps * norm_sq - lhs3)[:, None], shape)
    return LocalizedFourierGrid(shift, coefficient, correlation)


def random_bump(rng: np.random.Generator, N: int, a: float, eps: float) -> np.ndarray:
    """A random function on the grid supported in ``[a - eps, a + eps]``."""
    x = np.arange(N) * TWO_PI / N
    d = np.mod(x - a + np.pi, TWO_PI) - np.pi  # signed offset from a
    inside = np.abs(d) <= eps
    t = d / eps
    shape = rng.integers(3)
    if shape == 0:  # plateau
        prof = np.ones_like(t)
    elif shape == 1:  # smooth cosine bump
        prof = np.cos(np.pi * t / 2) ** 2
    else:  # rough random profile
        prof = rng.standard_normal(N)
    phase = np.exp(1j * (rng.uniform(-3, 3) * t + rng.uniform(0, TWO_PI)))
    return np.where(inside, prof * phase * rng.uniform(0.5, 2.0), 0j)
