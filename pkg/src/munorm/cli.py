"""Command-line entry point: ``munorm <command> [options]``.

Exit codes: 0 success, 1 invalid input, 2 a check failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import bistochastic as bs
from . import suite
from .errors import InvalidInputError, MuNormError, NoClosedFormError, SizeError
from .finite_space import (
    FiniteOperator,
    Partition,
    guard_j,
    mu_norm_formula,
    mu_norm_infimum,
)
from .koopman_entropy import entropy_rate_sequence, ks_entropy_stage
from .regular import (
    average_trace_window,
    omega_estimate,
    omega_exact,
    omega_window_block,
    window_error_bound,
)
from .specs import is_finite_spec, load_spec, parse_operator, parse_permutation
from .torus_dt import (
    ConstantSequence,
    ConvolutionOperator,
    FourierPolynomial,
    IntegerInterval,
    LatticeOperator,
    MultiplicationOperator,
    ProductOperator,
    QuadraticPhase,
    RotationPhase,
)

OK, INVALID, CHECK_FAILED = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    op: str | None = None
    inline: str | None = None
    J: int | None = None
    M: int = 3
    band: int = 2
    intervals: tuple = (64, 256, 1024)
    start: int = 0
    grid: int = 512
    seed: int = 0
    tol: float | None = None
    format: str = "json"
    out: str | None = None
    partition: str = "halves"
    n_max: int = 4
    trials: int = 200
    convergence: bool = False
    criteria: tuple | None = None

    def validate(self) -> "RunConfig":
        for name in ("M", "band", "grid", "n_max", "trials"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"--{name.replace('_', '-')} must be positive")
        if self.J is not None and self.J < 1:
            raise InvalidInputError("--J must be positive")
        if not self.intervals or any(L < 1 for L in self.intervals):
            raise InvalidInputError("--intervals must be positive integers")
        if self.tol is not None and not self.tol > 0:
            raise InvalidInputError("--tol must be positive")
        if self.seed < 0:
            raise InvalidInputError("--seed must be nonnegative")
        return self


class Report:
    """A report body plus the exit status it implies."""

    def __init__(self, body: str, status: int = OK):
        self.body = body
        self.status = status


# --------------------------------------------------------------------------
# formatting


def _num(x):
    if isinstance(x, complex):
        return [_num(x.real), _num(x.imag)]
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    return x


def dump_json(doc: dict) -> str:
    return json.dumps(_num(doc), indent=2, sort_keys=True) + "\n"


def dump_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# --------------------------------------------------------------------------
# operator loading


def _load(cfg: RunConfig):
    spec = load_spec(cfg.op, cfg.inline)
    if cfg.J is not None and is_finite_spec(spec) and spec.get("J", cfg.J) != cfg.J:
        raise InvalidInputError(f"--J {cfg.J} disagrees with the operator spec's J={spec['J']}")
    if cfg.J is not None and spec["kind"] in ("random_unitary", "random_matrix", "identity"):
        spec = {**spec, "J": spec.get("J", cfg.J)}
    return spec, parse_operator(spec, cfg.seed, cfg.band)


def lattice_unitary(W: LatticeOperator, tol: float = 1e-10) -> bool | None:
    """True/False when decidable, None when unitarity cannot be settled."""
    if isinstance(W, ConvolutionOperator):
        lam = W.lam
        if isinstance(lam, (QuadraticPhase, RotationPhase)):
            return True
        if isinstance(lam, ConstantSequence):
            return abs(abs(lam.value) - 1) <= tol
        return None
    if isinstance(W, MultiplicationOperator):
        c = W.g.coeffs
        return len(c) == 1 and abs(abs(next(iter(c.values()))) - 1) <= tol
    if isinstance(W, ProductOperator):
        flags = [lattice_unitary(f, tol) for f in W.factors]
        return True if all(flags) else None
    if W.period is not None:
        j = np.arange(W.period)
        for G in (ProductOperator((W.adjoint(), W)), ProductOperator((W, W.adjoint()))):
            for s in range(-G.band, G.band + 1):
                want = 1.0 if s == 0 else 0.0
                if np.max(np.abs(G.entry(j + s, j) - want)) > tol:
                    return False
        return True
    return None


# --------------------------------------------------------------------------
# commands


def cmd_mu_norm(cfg: RunConfig) -> Report:
    spec, W = _load(cfg)
    tol = 1e-9 if cfg.tol is None else cfg.tol
    if isinstance(W, FiniteOperator):
        value = mu_norm_formula(W)
        doc = {"command": "mu-norm", "tag": "eq:|.|mu(finite)", "mode": "finite", "J": W.J,
               "mu_norm": value, "mu_norm_sq": value * value, "tolerance": tol}
        passed = True
        if W.J <= guard_j():
            res = mu_norm_infimum(W)
            agree = abs(res.value - value) <= tol
            passed = agree
            doc["infimum"] = {"value": res.value, "partitions": res.n_partitions,
                              "argmin": [sorted(b) for b in res.argmin.blocks],
                              "singleton_value": res.singleton_value,
                              "difference": abs(res.value - value), "agrees": agree}
        else:
            doc["infimum"] = {"skipped": f"J={W.J} exceeds the enumeration guard {guard_j()}"}
        doc["passed"] = passed
        return Report(dump_json(doc), OK if passed else CHECK_FAILED)

    doc = {"command": "mu-norm", "tag": "eq:dim=omega", "mode": "torus", "kind": W.kind}
    windows = []
    for L in cfg.intervals:
        I = IntegerInterval.of_length(L, cfg.start)
        windows.append({"interval_len": L, "start": cfg.start,
                        "average_trace": average_trace_window(W, I)})
    doc["windows"] = windows
    passed = True
    try:
        table = omega_exact(W, 0)
    except NoClosedFormError:
        last = windows[-1]["average_trace"]
        doc.update(source="estimated", mu_norm=math.sqrt(max(last, 0.0)), mu_norm_sq=last)
    else:
        w00 = table[0, 0].real
        doc.update(source="exact", mu_norm=math.sqrt(max(w00, 0.0)), mu_norm_sq=w00)
        if table.notes:
            doc["notes"] = list(table.notes)
        for row in windows:
            try:
                bound = window_error_bound(W, 0, 0, row["interval_len"])
            except NoClosedFormError:
                bound = None
            err = abs(row["average_trace"] - w00)
            row["error"] = err
            row["bound"] = bound
            if bound is not None and err > bound + tol:
                passed = False
    doc["passed"] = passed
    return Report(dump_json(doc), OK if passed else CHECK_FAILED)


def _parse_partition(text: str, J: int) -> Partition:
    if text == "halves":
        if J < 2:
            raise InvalidInputError("halves needs J >= 2")
        return Partition.from_labels([0 if x < J // 2 else 1 for x in range(J)])
    if text == "trivial":
        return Partition.trivial(J)
    if text == "singletons":
        return Partition.singletons(J)
    try:
        labels = [int(v) for v in text.split(",")]
    except ValueError:
        raise InvalidInputError(f"--partition must be halves, trivial, singletons or labels, got {text!r}")
    if len(labels) != J:
        raise InvalidInputError(f"--partition needs {J} labels, got {len(labels)}")
    return Partition.from_labels(labels)


def cmd_entropy(cfg: RunConfig) -> Report:
    spec, U = _load(cfg)
    if not isinstance(U, FiniteOperator):
        raise InvalidInputError("entropy stages need a finite operator")
    F = parse_permutation(spec) if spec["kind"] == "permutation" else None
    chi = _parse_partition(cfg.partition, U.J)
    rates = entropy_rate_sequence(U, chi, cfg.n_max)
    rows = []
    for n, rate in enumerate(rates, start=1):
        ks = ks_entropy_stage(F, chi, n - 1) if F is not None else None
        rows.append((n, ks, rate * n, rate))
    tol = 1e-10 if cfg.tol is None else cfg.tol
    passed = all(ks is None or abs(ks - q) <= tol for _, ks, q, _ in rows)
    if cfg.format == "csv":
        body = dump_csv(["n", "ks_stage", "quantum_stage", "ratio"],
                        [(n, "" if ks is None else ks, q, r) for n, ks, q, r in rows])
    else:
        body = dump_json({"command": "entropy", "tag": "eq:hUchiN", "J": U.J,
                          "partition": [sorted(b) for b in chi.blocks],
                          "koopman": F is not None, "tolerance": tol, "passed": passed,
                          "rows": [{"n": n, "ks_stage": ks, "quantum_stage": q, "ratio": r}
                                   for n, ks, q, r in rows]})
    return Report(body, OK if passed else CHECK_FAILED)


def cmd_omega(cfg: RunConfig) -> Report:
    _, W = _load(cfg)
    if isinstance(W, FiniteOperator):
        raise InvalidInputError("omega tables are for operators on the circle")
    tol = 0.0 if cfg.tol is None else cfg.tol
    try:
        table = omega_exact(W, cfg.M)
    except NoClosedFormError:
        table = None
    conv_rows, passed = [], True
    if table is not None and (cfg.convergence or cfg.format == "json"):
        idx = table.indices
        for L in cfg.intervals:
            est = omega_window_block(W, IntegerInterval.of_length(L, cfg.start), idx, idx)
            for a, m in enumerate(idx):
                for b, n in enumerate(idx):
                    try:
                        bound = window_error_bound(W, int(m), int(n), L)
                    except NoClosedFormError:
                        bound = math.inf
                    err = abs(est[a, b] - table.values[a, b])
                    ok = err <= bound + tol
                    passed &= ok
                    conv_rows.append((int(m), int(n), L, cfg.start, est[a, b], table.values[a, b],
                                      err, bound, ok))
    if table is None:
        table = omega_estimate(W, IntegerInterval.of_length(max(cfg.intervals), cfg.start), cfg.M)
    status = OK if passed else CHECK_FAILED
    if cfg.format == "csv":
        if cfg.convergence:
            body = dump_csv(["m", "n", "interval_len", "start", "estimate_re", "estimate_im",
                             "exact_re", "exact_im", "error", "bound", "within"],
                            [(m, n, L, s, e.real, e.imag, x.real, x.imag, err, bound, ok)
                             for m, n, L, s, e, x, err, bound, ok in conv_rows])
        else:
            body = dump_csv(["m", "n", "re", "im", "source", "interval_len"], table.csv_rows())
        return Report(body, status)
    doc = {"command": "omega", "tag": "eq:limomega", "kind": W.kind, "M": table.M,
           "source": table.source, "interval_len": table.interval_len,
           "dt_norm_bound": table.dt_norm_bound, "notes": list(table.notes),
           "omega": [[int(m), int(n), table[m, n].real, table[m, n].imag]
                     for m in table.indices for n in table.indices],
           "passed": passed}
    if conv_rows:
        doc["convergence"] = [{"m": m, "n": n, "interval_len": L, "start": s, "estimate": e,
                               "exact": x, "error": err, "bound": bound, "within": ok}
                              for m, n, L, s, e, x, err, bound, ok in conv_rows]
    return Report(dump_json(doc), status)


def cmd_bistochastic(cfg: RunConfig) -> Report:
    _, W = _load(cfg)
    tol = 1e-10 if cfg.tol is None else cfg.tol
    neg_tol = 1e-9 if cfg.tol is None else cfg.tol
    notes = []
    if isinstance(W, FiniteOperator):
        kernel = bs.build_finite(W)
    else:
        unitary = lattice_unitary(W)
        if unitary is None:
            notes.append("unitarity could not be decided; treated as non-unitary")
        try:
            table = omega_exact(W, cfg.M)
        except NoClosedFormError:
            raise InvalidInputError(f"no closed-form omega table for {W.kind} operators")
        kernel = bs.build_torus(table, bool(unitary))
    rep = bs.check_nonnegativity(kernel, cfg.trials, cfg.seed, neg_tol, cfg.grid)
    checks = {"nonnegativity": {"trials": rep.trials, "min_value": rep.min_value,
                                "max_imag": rep.max_imag, "passed": rep.passed}}
    ok = rep.passed
    if kernel.unitary:
        unit = bs.check_unit(kernel, cfg.grid)
        rng = np.random.default_rng(cfg.seed)
        if kernel.mode == bs.FINITE:
            f = bs.nonnegative_from(rng.standard_normal(kernel.size)
                                    + 1j * rng.standard_normal(kernel.size))
        else:
            f = FourierPolynomial.random(rng, max(kernel.table.M // 4, 0)).abs2()
        mass = bs.check_mass(kernel, f)
        checks["unit"] = {"residual": unit, "passed": unit <= tol}
        checks["mass"] = {"residual": mass, "passed": mass <= tol}
        ok = ok and unit <= tol and mass <= tol
    else:
        notes.append("source is not unitary: unit and mass checks skipped")
        checks["unit"] = {"skipped": True}
        checks["mass"] = {"skipped": True}
    l1 = bs.l1_bound(kernel)
    checks["l1_bound"] = {"induced": l1.induced, "bound": l1.bound, "slack": l1.slack,
                          "passed": l1.slack >= -neg_tol}
    ok = ok and l1.slack >= -neg_tol
    doc = {"command": "bistochastic", "tag": "eq:norm_calW", "mode": kernel.mode,
           "size": kernel.size, "unitary": kernel.unitary, "seed": cfg.seed, "checks": checks,
           "notes": notes, "passed": ok}
    if cfg.format == "csv":
        rows = [(name, c.get("passed", ""), "skipped" if c.get("skipped") else "")
                for name, c in checks.items()]
        return Report(dump_csv(["check", "passed", "note"], rows), OK if ok else CHECK_FAILED)
    return Report(dump_json(doc), OK if ok else CHECK_FAILED)


def cmd_suite(cfg: RunConfig, progress=None) -> Report:
    scfg = suite.SuiteConfig(seed=cfg.seed, tol=cfg.tol, intervals=tuple(cfg.intervals),
                             grid=cfg.grid)
    which = cfg.criteria
    if which is not None and any(k not in suite.CRITERIA and k != 13 for k in which):
        raise InvalidInputError(f"criteria are numbered 1..13, got {list(which)}")
    numbers = sorted(k for k in (which or suite.CRITERIA) if k != 13)
    first = suite.run_criteria(scfg, numbers, progress)
    results = list(first)
    if which is None or 13 in which:
        second = suite.run_criteria(scfg, numbers)
        det = suite.determinism_result(suite.render(first, scfg), suite.render(second, scfg))
        if progress:
            progress(det)
        results.append(det)
    passed = all(r.passed for r in results)
    if cfg.format == "csv":
        body = dump_csv(["criterion", "name", "passed", "checks", "violations", "worst",
                         "tolerance"],
                        [(r.number, r.name, r.passed, r.checks, r.violations, r.worst,
                          r.tolerance) for r in results])
    else:
        body = suite.render(results, scfg)
    return Report(body, OK if passed else CHECK_FAILED)


COMMANDS = {"mu-norm": cmd_mu_norm, "entropy": cmd_entropy, "omega": cmd_omega,
            "bistochastic": cmd_bistochastic, "suite": cmd_suite}


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(INVALID, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--op", metavar="FILE", help="operator spec (JSON file)")
    src.add_argument("--inline", metavar="JSON", help="operator spec as a JSON string")
    common.add_argument("--J", type=int, help="size of the finite space")
    common.add_argument("--M", type=int, default=3, help="table window |m|, |n| <= M")
    common.add_argument("--band", type=int, default=2,
                        help="band of random periodic operators ({\"kind\": \"periodic\", \"random\": true})")
    common.add_argument("--intervals", type=_int_list, default=(64, 256, 1024),
                        help="window lengths, e.g. 64,256,1024")
    common.add_argument("--start", type=int, default=0, help="first index of each window")
    common.add_argument("--grid", type=int, default=512, help="evaluation grid size")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, help="override the default tolerance")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", metavar="FILE", help="write the report here instead of stdout")

    p = _Parser(prog="munorm", description="mu-norms, omega tables and entropy stages")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("mu-norm", parents=[common], help="mu-norm of an operator")
    e = sub.add_parser("entropy", parents=[common], help="entropy stages of a finite operator")
    e.add_argument("--partition", default="halves",
                   help="halves, trivial, singletons or comma-separated block labels")
    e.add_argument("--n-max", type=int, default=4, help="largest number of letters")
    o = sub.add_parser("omega", parents=[common], help="omega table of a circle operator")
    o.add_argument("--convergence", action="store_true",
                   help="with --format csv, emit the window convergence rows")
    b = sub.add_parser("bistochastic", parents=[common], help="bistochastic kernel checks")
    b.add_argument("--trials", type=int, default=200)
    s = sub.add_parser("suite", parents=[common], help="run the acceptance suite")
    s.add_argument("--criteria", type=_int_list, help="subset of criteria, e.g. 1,2,13")
    s.add_argument("--quiet", action="store_true", help="no per-criterion lines on stderr")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command)
    fields = {k: v for k, v in vars(ns).items()
              if k in RunConfig.__dataclass_fields__ and v is not None}
    return replace(cfg, **fields).validate()


def _needs_op(cfg: RunConfig) -> None:
    if cfg.command != "suite" and cfg.op is None and cfg.inline is None:
        raise InvalidInputError(f"{cfg.command} needs --op FILE or --inline JSON")


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        _needs_op(cfg)
        if cfg.command == "suite":
            progress = None if ns.quiet else (lambda r: print(r.line(), file=sys.stderr))
            report = cmd_suite(cfg, progress)
        else:
            report = COMMANDS[cfg.command](cfg)
    except (InvalidInputError, SizeError, NoClosedFormError) as exc:
        print(f"munorm: error: {exc}", file=sys.stderr)
        return INVALID
    except MuNormError as exc:
        print(f"munorm: check failed: {exc}", file=sys.stderr)
        return CHECK_FAILED
    if cfg.out:
        try:
            with open(cfg.out, "w") as fh:
                fh.write(report.body)
        except OSError as exc:
            print(f"munorm: error: cannot write {cfg.out}: {exc.strerror}", file=sys.stderr)
            return INVALID
    else:
        sys.stdout.write(report.body)
    return report.status


if __name__ == "__main__":
    sys.exit(main())
