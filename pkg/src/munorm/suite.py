"""The acceptance suite: thirteen property and oracle checks at desk scale.

Every criterion returns a :class:`CriterionResult`.  Reports are plain data
(no timings, no addresses), so equal seeds give byte-identical output.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import bistochastic as bs
from .finite_space import (
    FiniteOperator,
    FiniteSpace,
    all_subsets,
    mu_norm_formula,
    mu_norm_infimum,
    mu_norm_sq,
    operator_norm,
    projector,
    random_matrix,
    random_unitary,
    restricted_growth_strings,
    Partition,
)
from .koopman_entropy import (
    Permutation,
    all_permutations,
    itinerary_codes,
    koopman,
    ks_stages_batched,
    word_weight_levels,
)
from .regular import (
    fejer_nu_grid,
    marginals,
    mu_norm_integral_estimate,
    omega_estimate,
    omega_exact,
    is_resonant,
    omega_tail_bound_check,
    omega_window_block,
)
from .torus_dt import (
    TWO_PI,
    ConvolutionOperator,
    FourierPolynomial,
    IntegerInterval,
    LatticeOperator,
    MultiplicationOperator,
    PeriodicOperator,
    ProductOperator,
    QuadraticPhase,
    RotationPhase,
    SumOperator,
    dt_norm,
    identity,
    localized_fourier_grid,
    random_bump,
)

INTERVALS = (64, 256, 1024)
TABLE_M = 8


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    tol: float | None = None  # replaces every stated tolerance when set
    intervals: tuple = INTERVALS
    grid: int = 512


class CriterionResult(NamedTuple):
    number: int
    name: str
    tag: str
    passed: bool
    checks: int
    violations: int
    worst: float  # largest error seen; for margin checks the largest -slack
    tolerance: float
    detail: dict

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.number:2d} {self.name}: {self.checks} checks, "
                f"{self.violations} violations, worst {self.worst:.3e} (tol {self.tolerance:.1e})")

    def to_json(self) -> dict:
        return {"criterion": self.number, "name": self.name, "tag": self.tag,
                "passed": self.passed, "checks": self.checks, "violations": self.violations,
                "worst": self.worst, "tolerance": self.tolerance, "detail": self.detail}


@dataclass
class _Tally:
    """Running count of ``error <= tol`` checks."""

    tol: float
    checks: int = 0
    violations: int = 0
    worst: float = -np.inf
    failures: list = field(default_factory=list)

    def error(self, err: float, where=None, tol: float | None = None) -> None:
        t = self.tol if tol is None else tol
        self.checks += 1
        err = float(err)
        self.worst = max(self.worst, err)
        if not err <= t:
            self.violations += 1
            if len(self.failures) < 5:
                self.failures.append([str(where), err])

    def margin(self, slack: float, where=None) -> None:
        """``slack >= -tol``; ``worst`` records the deficit ``-slack``."""
        self.error(-float(slack), where)

    def result(self, number, name, tag, detail=None) -> CriterionResult:
        d = dict(detail or {})
        if self.failures:
            d["first_failures"] = self.failures
        worst = self.worst if self.checks else 0.0
        return CriterionResult(number, name, tag, self.violations == 0, self.checks,
                               self.violations, worst, self.tol, d)


def _tol(stated: float, cfg: SuiteConfig) -> float:
    return stated if cfg.tol is None else cfg.tol


def _rng(cfg: SuiteConfig, number: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, number])


# --------------------------------------------------------------------------
# operator corpus for the circle


def table_corpus(seed: int = 0) -> list:
    """Named regular operators with closed-form tables."""
    rng = np.random.default_rng([seed, 100])
    g1, g2 = FourierPolynomial.random(rng, 3), FourierPolynomial.random(rng, 2)
    p2, p3 = PeriodicOperator.random(rng, 2, 2), PeriodicOperator.random(rng, 3, 2)
    h1, h2 = FourierPolynomial.random(rng, 1), FourierPolynomial.random(rng, 2)
    return [
        ("identity", identity()),
        ("rotation alpha=0.7", ConvolutionOperator(RotationPhase(0.7))),
        ("rotation alpha=2.0", ConvolutionOperator(RotationPhase(2.0))),
        ("quadratic tau=pi/2", ConvolutionOperator(QuadraticPhase(np.pi / 2))),
        ("quadratic tau=pi/3", ConvolutionOperator(QuadraticPhase(np.pi / 3))),
        ("quadratic tau=pi/4", ConvolutionOperator(QuadraticPhase(np.pi / 4))),
        ("multiplication deg 3", MultiplicationOperator(g1)),
        ("multiplication deg 2", MultiplicationOperator(g2)),
        ("periodic tau=2", p2),
        ("periodic tau=3", p3),
        ("periodic sum tau=6", SumOperator(((1.0, p2), (0.5j, p3)))),
        ("periodic product", ProductOperator((MultiplicationOperator(h1), p3))),
        ("g quadratic g", ProductOperator((MultiplicationOperator(h1),
                                           ConvolutionOperator(QuadraticPhase(np.pi / 2)),
                                           MultiplicationOperator(h2)))),
    ]


def corpus_tables(seed: int = 0, M: int = TABLE_M) -> list:
    return [(name, W, omega_exact(W, M)) for name, W in table_corpus(seed)]


# --------------------------------------------------------------------------
# finite space


def criterion_1(cfg: SuiteConfig) -> CriterionResult:
    rng = _rng(cfg, 1)
    t = _Tally(_tol(1e-9, cfg))
    not_singleton = 0
    for J in range(2, 7):
        for trial in range(50):
            W = FiniteOperator(random_matrix(J, rng))
            res = mu_norm_infimum(W, max_J=J)
            t.error(abs(res.value - mu_norm_formula(W)), (J, trial))
            gap = res.singleton_value - res.value
            t.error(gap, (J, trial, "singleton"))
            not_singleton += gap > t.tol
    return t.result(1, "partition infimum equals the closed formula", "eq:|.|mu(finite)",
                    {"J": [2, 6], "matrices_per_J": 50, "singleton_not_minimal": not_singleton})


def criterion_2(cfg: SuiteConfig) -> CriterionResult:
    t = _Tally(_tol(1e-12, cfg))
    for J in range(1, 13):
        space = FiniteSpace(J)
        for X in all_subsets(J):
            t.error(abs(mu_norm_sq(projector(space, X)) - len(X) / J), (J, X))
    return t.result(2, "projector law |X|/J", "eq:|1|", {"J_max": 12})


def criterion_3(cfg: SuiteConfig) -> CriterionResult:
    rng = _rng(cfg, 3)
    t = _Tally(_tol(1e-10, cfg))
    J = 8
    mu = lambda W: np.sqrt(mu_norm_sq(W))  # noqa: E731
    rand = lambda: FiniteOperator(random_matrix(J, rng))  # noqa: E731
    for i in range(100):
        A, B = rand(), rand()
        t.error(mu(A + B) - mu(A) - mu(B), ("triangle", i))
    for i in range(100):
        A = rand()
        lam = complex(rng.standard_normal(), rng.standard_normal())
        t.error(abs(mu(A.scale(lam)) - abs(lam) * mu(A)), ("homogeneity", i))
    for i in range(100):
        A, U = rand(), FiniteOperator(random_unitary(J, rng))
        t.error(abs(mu(U @ A) - mu(A)), ("unitary", i))
    for i in range(100):
        A, B = rand(), rand()
        t.error(mu(A @ B) - operator_norm(A) * mu(B), ("product", i))
    for i in range(100):
        A = rand()
        B = FiniteOperator(A.value + 0.1 * random_matrix(J, rng))
        t.error(abs(mu(A) - mu(B)) - operator_norm(A - B), ("lipschitz", i))
    return t.result(3, "seminorm, invariance and Lipschitz laws", "eq:UWWU",
                    {"J": J, "trials_per_law": 100})


# --------------------------------------------------------------------------
# entropy


def _partitions_with_blocks(J: int, ks) -> list:
    return [rgs for rgs in restricted_growth_strings(J) if max(rgs) + 1 in ks]


def criterion_4(cfg: SuiteConfig) -> CriterionResult:
    rng = _rng(cfg, 4)
    J, N_max = 8, 4
    perms = all_permutations(J)
    chosen = perms[np.sort(rng.choice(len(perms), 200, replace=False))]
    parts = _partitions_with_blocks(J, (2, 3))
    picks = [parts[i] for i in np.sort(rng.choice(len(parts), 20, replace=False))]
    cell = _Tally(_tol(1e-12, cfg))
    stage = _Tally(_tol(1e-10, cfg))
    literal_mismatch = 0
    for img in chosen:
        F = Permutation(tuple(img))
        U = koopman(F)
        for rgs in picks:
            chi = Partition.from_labels(rgs)
            K = chi.K
            for n, ww in enumerate(word_weight_levels(U, chi, N_max), start=1):
                counts = np.bincount(itinerary_codes(F, chi, n), minlength=K**n) / J
                powers = K ** np.arange(n - 1, -1, -1)
                # the word pi_{j_N} U ... U pi_{j_0} cuts out the cell whose itinerary
                # reads j_N, ..., j_0; pruned words have empty cells
                codes = ww.words[:, ::-1] @ powers
                err = np.max(np.abs(ww.weights - counts[codes]))
                err = max(err, abs(1.0 - counts[codes].sum()))
                cell.error(err, (img.tolist(), rgs, n))
                literal = ww.words @ powers
                literal_mismatch += bool(np.max(np.abs(ww.weights - counts[literal])) > cell.tol)
                p = counts[counts > 0]
                ks = float(-np.sum(p * np.log(p)))
                w = ww.weights[ww.weights > 0]
                qs = float(-np.sum(w * np.log(w)))
                stage.error(abs(qs - ks), (img.tolist(), rgs, n))
    res = cell.result(4, "Koopman words: quantum stage equals KS stage", "eq:UF=F")
    passed = res.passed and stage.violations == 0
    detail = {"permutations": 200, "partitions": 20, "N_max": N_max,
              "word_checks": cell.checks, "word_worst": cell.worst, "word_tol": cell.tol,
              "literal_order_mismatches": literal_mismatch, "stage_checks": stage.checks, "stage_worst": stage.worst, "stage_tol": stage.tol}
    if stage.failures:
        detail["stage_failures"] = stage.failures
    if cell.failures:
        detail["word_failures"] = cell.failures
    return CriterionResult(4, res.name, res.tag, passed, cell.checks + stage.checks,
                           cell.violations + stage.violations, max(cell.worst, stage.worst),
                           stage.tol, detail)


def criterion_5(cfg: SuiteConfig) -> CriterionResult:
    t = _Tally(_tol(1e-12, cfg))
    n_total = 6
    for J in range(1, 7):
        images = all_permutations(J)
        for rgs in restricted_growth_strings(J):
            labels = np.asarray(rgs)
            h = ks_stages_batched(images, labels, int(labels.max()) + 1, n_total)
            for n in range(1, n_total):
                for m in range(1, n_total - n + 1):
                    excess = h[:, n + m - 1] - h[:, n - 1] - h[:, m - 1]
                    t.error(float(excess.max()), (J, rgs, n, m))
    return t.result(5, "KS subadditivity, exhaustive", "eq:limfrakh",
                    {"J_max": 6, "n_plus_m_max": n_total})


# --------------------------------------------------------------------------
# omega coefficients


def _telescopes(W: LatticeOperator, m: int, n: int, L: int) -> bool:
    if isinstance(W, ConvolutionOperator):
        lam = W.lam
        if m + n != 0 or not isinstance(lam, QuadraticPhase):
            return True
        return is_resonant(lam.tau, m)
    return W.period is not None and L % W.period == 0


def _stated_window_bound(W: LatticeOperator, L: int) -> float:
    c = dt_norm(W)
    if isinstance(W, ConvolutionOperator):
        return 2 * c * c / L
    tau = W.period
    return tau * c * c * (1.0 / L + 1.0 / (L - tau))


def criterion_6(cfg: SuiteConfig) -> CriterionResult:
    rng = _rng(cfg, 6)
    t = _Tally(_tol(1e-12, cfg))
    bound_margin = _Tally(0.0)
    kinds = [W for name, W in table_corpus(cfg.seed)
             if name.startswith(("quadratic", "rotation", "multiplication", "periodic tau"))]
    mn = np.arange(-3, 4)
    exact_checks = 0
    for W in kinds:
        ex = omega_exact(W, 3).values
        for L in cfg.intervals:
            start = int(rng.integers(-1000, 1000))
            est = omega_window_block(W, IntegerInterval.of_length(L, start), mn, mn)
            err = np.abs(est - ex)
            bound = _stated_window_bound(W, L)
            for a, m in enumerate(mn):
                for b, n in enumerate(mn):
                    bound_margin.margin(bound - err[a, b], (W, L, int(m), int(n)))
                    if _telescopes(W, int(m), int(n), L):
                        exact_checks += 1
                        t.error(err[a, b], (repr(W), L, int(m), int(n)))
    passed = t.violations == 0 and bound_margin.violations == 0
    detail = {"intervals": list(cfg.intervals), "bound_checks": bound_margin.checks,
              "bound_violations": bound_margin.violations, "exact_checks": exact_checks,
              "exact_worst": t.worst}
    if t.failures:
        detail["exact_failures"] = t.failures
    if bound_margin.failures:
        detail["bound_failures"] = [[str(w), e] for w, e in bound_margin.failures]
    return CriterionResult(6, "windowed omega converges to the closed forms", "eq:limomega",
                           passed, t.checks + bound_margin.checks,
                           t.violations + bound_margin.violations, t.worst, t.tol, detail)


def criterion_7(cfg: SuiteConfig) -> CriterionResult:
    t = _Tally(_tol(1e-9, cfg))
    herm = 0.0
    for name, W, tab in corpus_tables(cfg.seed):
        c2 = tab.dt_norm_bound ** 2
        v = tab.values
        d = float(np.max(np.abs(v - np.conj(v[::-1, ::-1]))))
        herm = max(herm, d)
        t.error(d, (name, "hermitian"))
        t.margin(c2 - np.abs(v).sum(axis=1).max(), (name, "rows"))
        t.margin(c2 - np.abs(v).sum(axis=0).max(), (name, "columns"))
        for m in range(-3, 4):
            for M in range(0, 4):
                t.margin(omega_tail_bound_check(W, m, M), (name, "tail", m, M))
    return t.result(7, "omega symmetry, l1 and tail bounds", "eq:sum_P",
                    {"tables": len(table_corpus(cfg.seed)), "hermitian_worst": herm})


def criterion_8(cfg: SuiteConfig) -> CriterionResult:
    rng = _rng(cfg, 8)
    t = _Tally(_tol(1e-10, cfg))
    integral_tol = _tol(1e-3, cfg)
    I = IntegerInterval.of_length(1024, -512)
    worst_int = 0.0
    named = []
    for i in range(20):
        g = FourierPolynomial.random(rng, int(rng.integers(0, 9)))
        W = MultiplicationOperator(g)
        t.error(abs(omega_exact(W, 0)[0, 0] - g.l2_sq()), ("multiplication", i))
        named.append((f"multiplication {i}", W))
    for tau in (np.pi / 2, np.pi / 3, np.pi / 4, 1.0):
        W = ConvolutionOperator(QuadraticPhase(tau))
        t.error(abs(omega_exact(W, 0)[0, 0] - 1.0), ("quadratic", tau))
        named.append((f"quadratic tau={tau!r}", W))
    for name, W in named:
        err = abs(mu_norm_integral_estimate(W, 256, I) - omega_exact(W, 0)[0, 0].real)
        worst_int = max(worst_int, err)
        t.error(err, (name, "integral"), tol=integral_tol)
    # the rest of the corpus, against its own window bound (not gated)
    corpus = {}
    for name, W, tab in corpus_tables(cfg.seed, M=0):
        err = abs(mu_norm_integral_estimate(W, 256, I) - tab[0, 0].real)
        if W.period is None and not isinstance(W, ConvolutionOperator):
            bound = None
        else:
            bound = 0.0 if _telescopes(W, 0, 0, I.size) else _stated_window_bound(W, I.size)
        corpus[name] = [err, bound]
    return t.result(8, "mu-norm equals omega_00", "eq:dim=omega",
                    {"polynomials": 20, "integral_worst": worst_int,
                     "integral_tol": integral_tol, "corpus_integral_error_and_bound": corpus})


def criterion_9(cfg: SuiteConfig) -> CriterionResult:
    rng = _rng(cfg, 9)
    t = _Tally(0.0)
    L, M = 1024, 4
    cores = []
    for i in range(20):
        kind = i % 4
        if kind == 0:
            W = PeriodicOperator.random(rng, int(rng.integers(1, 4)), int(rng.integers(0, 3)))
        elif kind == 1:
            W = ConvolutionOperator(QuadraticPhase(float(rng.uniform(0.3, 3.0))))
        elif kind == 2:
            W = ConvolutionOperator(RotationPhase(float(rng.uniform(0, TWO_PI))))
        else:
            W = PeriodicOperator.random(rng, 2, 1)
        g1 = FourierPolynomial.random(rng, int(rng.integers(0, 5)))
        g2 = FourierPolynomial.random(rng, int(rng.integers(0, 5)))
        cores.append(W.kind)
        P = ProductOperator((MultiplicationOperator(g1), W, MultiplicationOperator(g2)))
        closed = omega_exact(P, M).values
        start = int(rng.integers(-1000, 1000))
        est = omega_estimate(P, IntegerInterval.of_length(L, start), M).values
        c = dt_norm(W)
        bound = 5 * c * c * (1 + g1.acf_norm() ** 2) * (1 + g2.acf_norm() ** 2) / L
        t.margin(bound - np.abs(est - closed).max(), (i, W.kind))
    return t.result(9, "product formulas for g1^ W g2^", "eq:tildeomega_e_WgWWg",
                    {"trials": 20, "interval": L, "M": M})


# --------------------------------------------------------------------------
# bistochastic kernel


def criterion_10(cfg: SuiteConfig) -> CriterionResult:
    rng = _rng(cfg, 10)
    t = _Tally(_tol(1e-10, cfg))
    neg_tol = _tol(1e-9, cfg)
    cases = []
    for J in (4, 8, 16):
        cases.append((f"unitary J={J}", bs.build_finite(FiniteOperator(random_unitary(J, rng)))))
    for J in (4, 8, 16):
        F = Permutation(tuple(rng.permutation(J)))
        cases.append((f"koopman J={J}", bs.build_finite(koopman(F))))
    for M in (16, 32, 64):
        for name, W in (("rotation", ConvolutionOperator(RotationPhase(0.7))),
                        ("quadratic", ConvolutionOperator(QuadraticPhase(np.pi / 3)))):
            cases.append((f"{name} M={M}", bs.build_torus(omega_exact(W, M), unitary=True)))
    lowest = np.inf
    for i, (name, K) in enumerate(cases):
        rep = bs.check_nonnegativity(K, trials=200, seed=cfg.seed + i, tol=neg_tol)
        lowest = min(lowest, rep.min_value)
        t.error(-rep.min_value, (name, "nonnegativity"), tol=neg_tol)
        t.error(rep.max_imag, (name, "imaginary part"), tol=neg_tol)
        t.error(bs.check_unit(K), (name, "unit"))
        for _ in range(5):
            f = (bs.nonnegative_from(rng.standard_normal(K.size) + 1j * rng.standard_normal(K.size))
                 if K.mode == bs.FINITE else FourierPolynomial.random(rng, K.table.M // 4).abs2())
            t.error(bs.check_mass(K, f), (name, "mass"))
        t.error(-bs.l1_bound(K).slack, (name, "L1 bound"), tol=neg_tol)
    return t.result(10, "bistochastic kernel conditions", "eq:norm_calW",
                    {"cases": [n for n, _ in cases], "lowest_value": lowest})


def criterion_11(cfg: SuiteConfig) -> CriterionResult:
    rng = _rng(cfg, 11)
    t = _Tally(_tol(1e-6, cfg))
    N = 1 << 12
    ml = np.arange(-5, 6)
    per_inequality = [0.0, 0.0, 0.0]
    for eps in (0.2, 0.1, 0.05):
        for i in range(50):
            a = float(rng.uniform(0, TWO_PI))
            f = random_bump(rng, N, a, eps)
            margins = localized_fourier_grid(f, a, eps, ml, ml)
            for k, arr in enumerate(margins):
                per_inequality[k] = min(per_inequality[k], float(arr.min()))
                for (p, q), v in np.ndenumerate(arr):
                    t.margin(v, (eps, i, ml[p], ml[q], k))
    return t.result(11, "localized Fourier inequalities", "eq:lem:YfJ",
                    {"bumps_per_eps": 50, "grid": N, "min_margins": per_inequality})


def criterion_12(cfg: SuiteConfig) -> CriterionResult:
    t = _Tally(_tol(1e-8, cfg))
    marg_tol = _tol(1e-9, cfg)
    n = cfg.grid
    x = np.arange(n) * TWO_PI / n
    lowest = np.inf
    for name, W, tab in corpus_tables(cfg.seed):
        vals = fejer_nu_grid(tab, x, x)
        lowest = min(lowest, float(vals.real.min()))
        t.error(-vals.real.min(), (name, "fejer"))
        phi, _ = marginals(tab)
        pv = phi(x)
        c2 = tab.dt_norm_bound ** 2
        t.error(np.abs(pv.imag).max(), (name, "phi real"), tol=marg_tol)
        t.error(-pv.real.min(), (name, "phi >= 0"), tol=marg_tol)
        t.error(pv.real.max() - c2, (name, "phi <= cbar^2"), tol=marg_tol)
    return t.result(12, "Fejer means of nu are nonnegative", "eq:nu",
                    {"grid": n, "lowest_fejer": lowest})


# --------------------------------------------------------------------------
# driver


CRITERIA: dict = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12,
}


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def render(results: list, cfg: SuiteConfig) -> str:
    doc = {"seed": cfg.seed, "tolerance_override": cfg.tol,
           "passed": all(r.passed for r in results),
           "criteria": [r.to_json() for r in results]}
    return json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n"


def run_criteria(cfg: SuiteConfig, which=None,
                 progress: Callable[[CriterionResult], None] | None = None) -> list:
    out = []
    for k in sorted(CRITERIA if which is None else which):
        r = CRITERIA[k](cfg)
        out.append(r)
        if progress:
            progress(r)
    return out


def determinism_result(first: str, second: str) -> CriterionResult:
    same = first == second
    return CriterionResult(13, "identical seeds give byte-identical reports", "determinism",
                           same, 1, 0 if same else 1, 0.0 if same else 1.0, 0.0,
                           {"bytes": len(first)})
