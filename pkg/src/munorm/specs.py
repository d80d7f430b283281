"""Parsing of JSON operator specs into finite or lattice operators.

Complex numbers are written ``[re, im]`` or as a bare real.  A spec with a
``"J"`` field (or kind ``matrix``/``projector``/``permutation``) is finite;
everything else lives on the circle.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidInputError
from .finite_space import (
    BASES,
    VALUE,
    FiniteOperator,
    FiniteSpace,
    identity as finite_identity,
    multiplication_operator_finite,
    projector,
    random_matrix,
    random_unitary,
)
from .koopman_entropy import Permutation, koopman
from .torus_dt import (
    ConstantSequence,
    ConvolutionOperator,
    FourierPolynomial,
    LatticeOperator,
    MultiplicationOperator,
    PeriodicOperator,
    ProductOperator,
    QuadraticPhase,
    RotationPhase,
    SumOperator,
    TableSequence,
)

FINITE_KINDS = {"matrix", "projector", "permutation", "random_unitary", "random_matrix"}


def load_spec(path: str | None = None, inline: str | None = None) -> dict:
    if (path is None) == (inline is None):
        raise InvalidInputError("give exactly one of an operator file or inline JSON")
    try:
        text = Path(path).read_text() if path is not None else inline
    except OSError as exc:
        raise InvalidInputError(f"cannot read operator spec {path!r}: {exc.strerror}")
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"operator spec is not valid JSON: {exc}")
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidInputError("operator spec must be an object with a 'kind'")
    return spec


def to_complex(v: Any) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise InvalidInputError(f"complex numbers are [re, im], got {v!r}")
        re, im = v
    else:
        re, im = v, 0.0
    try:
        z = complex(float(re), float(im))
    except (TypeError, ValueError):
        raise InvalidInputError(f"not a number: {v!r}")
    if not np.isfinite(z):
        raise InvalidInputError(f"non-finite number {v!r}")
    return z


def _int(spec: dict, key: str, minimum: int = 1) -> int:
    if key not in spec:
        raise InvalidInputError(f"spec of kind {spec.get('kind')!r} needs {key!r}")
    v = spec[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise InvalidInputError(f"{key!r} must be an integer >= {minimum}, got {v!r}")
    return v


def _float(spec: dict, key: str) -> float:
    if key not in spec:
        raise InvalidInputError(f"spec needs {key!r}")
    z = to_complex(spec[key])
    if z.imag:
        raise InvalidInputError(f"{key!r} must be real")
    return z.real


def is_finite_spec(spec: dict) -> bool:
    return spec["kind"] in FINITE_KINDS or "J" in spec


def parse_finite(spec: dict, seed: int = 0) -> FiniteOperator:
    kind = spec["kind"]
    J = _int(spec, "J")
    if kind == "matrix":
        basis = spec.get("basis", VALUE)
        if basis not in BASES:
            raise InvalidInputError(f"basis must be one of {BASES}")
        rows = spec.get("entries")
        if not isinstance(rows, list) or len(rows) != J or any(
                not isinstance(r, list) or len(r) != J for r in rows):
            raise InvalidInputError(f"'entries' must be a {J} x {J} list of numbers")
        return FiniteOperator(np.array([[to_complex(v) for v in r] for r in rows]), basis)
    if kind == "projector":
        subset = spec.get("subset")
        if not isinstance(subset, list):
            raise InvalidInputError("projector needs a 'subset' list")
        return projector(FiniteSpace(J), subset)
    if kind == "multiplication":
        vals = spec.get("values")
        if not isinstance(vals, list) or len(vals) != J:
            raise InvalidInputError(f"'values' must hold {J} numbers")
        return multiplication_operator_finite([to_complex(v) for v in vals])
    if kind == "permutation":
        return koopman(parse_permutation(spec))
    if kind == "identity":
        return finite_identity(J)
    rng = np.random.default_rng(spec.get("seed", seed))
    if kind == "random_unitary":
        return FiniteOperator(random_unitary(J, rng), spec.get("basis", VALUE))
    if kind == "random_matrix":
        return FiniteOperator(random_matrix(J, rng), spec.get("basis", VALUE))
    raise InvalidInputError(f"unknown finite operator kind {kind!r}")


def parse_permutation(spec: dict) -> Permutation:
    if spec.get("kind") != "permutation":
        raise InvalidInputError("expected a permutation spec")
    J = _int(spec, "J")
    image = spec.get("image")
    if not isinstance(image, list) or len(image) != J:
        raise InvalidInputError(f"'image' must list {J} points")
    return Permutation(tuple(image))


def parse_sequence(spec: dict):
    if not isinstance(spec, dict):
        raise InvalidInputError("'lambda' must be an object")
    form = spec.get("form")
    if form == "quadratic_phase":
        return QuadraticPhase(_float(spec, "tau"))
    if form == "rotation":
        return RotationPhase(_float(spec, "alpha"))
    if form == "constant":
        return ConstantSequence(to_complex(spec.get("value", 1.0)))
    if form == "table":
        offset = _int(spec, "offset", minimum=-(1 << 62))
        vals = spec.get("values")
        if not isinstance(vals, list) or not vals:
            raise InvalidInputError("table sequence needs nonempty 'values'")
        return TableSequence(offset, tuple(to_complex(v) for v in vals))
    raise InvalidInputError(f"unknown sequence form {form!r}")


def _coeff_dict(raw: Any) -> dict:
    if not isinstance(raw, dict):
        raise InvalidInputError("'coeffs' must map integer keys to numbers")
    out = {}
    for k, v in raw.items():
        out[_int_key(k, "coefficient")] = to_complex(v)
    return out


def _int_key(k: Any, what: str) -> int:
    try:
        return int(k)
    except (TypeError, ValueError):
        raise InvalidInputError(f"{what} key {k!r} is not an integer")


def parse_torus(spec: dict, seed: int = 0, band: int = 2) -> LatticeOperator:
    kind = spec["kind"]
    if kind == "convolution":
        return ConvolutionOperator(parse_sequence(spec.get("lambda")))
    if kind == "multiplication":
        return MultiplicationOperator(FourierPolynomial(_coeff_dict(spec.get("coeffs"))))
    if kind == "identity":
        return ConvolutionOperator(ConstantSequence(1.0))
    if kind == "periodic":
        tau = _int(spec, "tau")
        if spec.get("random"):
            rng = np.random.default_rng(spec.get("seed", seed))
            return PeriodicOperator.random(rng, tau, _int({"band": spec.get("band", band)}, "band", 0))
        block = spec.get("block")
        if not isinstance(block, dict) or not block:
            raise InvalidInputError("periodic spec needs 'block': {offset: [tau values]}")
        diags = {}
        for s, vals in block.items():
            if not isinstance(vals, list):
                raise InvalidInputError(f"block diagonal {s!r} must be a list")
            diags[_int_key(s, "block")] = [to_complex(v) for v in vals]
        return PeriodicOperator(tau, diags)
    if kind == "product":
        factors = spec.get("factors")
        if not isinstance(factors, list) or not factors:
            raise InvalidInputError("product needs a nonempty 'factors' list")
        return ProductOperator(tuple(parse_torus(_checked(f), seed, band) for f in factors))
    if kind == "sum":
        terms = spec.get("terms")
        if not isinstance(terms, list) or not terms:
            raise InvalidInputError("sum needs a nonempty 'terms' list")
        return SumOperator(tuple((to_complex(t.get("coef", 1.0)), parse_torus(_checked(t.get("op")), seed, band))
                                 for t in terms))
    raise InvalidInputError(f"unknown torus operator kind {kind!r}")


def _checked(spec: Any) -> dict:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidInputError("nested operator specs must be objects with a 'kind'")
    return spec


def parse_operator(spec: dict, seed: int = 0, band: int = 2):
    """A FiniteOperator or a LatticeOperator, depending on the operator spec.

    ``seed`` feeds the random kinds; ``band`` is the default band of random
    periodic operators.
    """
    _checked(spec)
    if is_finite_spec(spec):
        return parse_finite(spec, seed)
    return parse_torus(spec, seed, band)
