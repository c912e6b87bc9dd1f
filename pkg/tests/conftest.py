"""Shared fixtures: corpus paths, prebuilt models, and a seeded random
expression generator used by the differentiation tests."""

from __future__ import annotations

import math
import random
from pathlib import Path

import pytest

from fusegen import build_model, load_description
from fusegen.ast import Expr
from fusegen.symbolic import add, call, div, ident, mul, neg, num, powi, sub

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
EXPERIMENTS = ROOT / "experiments"
RUNTIME = ROOT / "runtime"


@pytest.fixture(scope="session")
def corpus() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def pendulum_model():
    desc, diags = load_description(CORPUS / "pendulum_filter.nt", search_paths=[str(CORPUS)])
    assert not diags
    return build_model(desc)


@pytest.fixture(scope="session")
def diffdrive_model():
    desc, diags = load_description(CORPUS / "diffdrive.nt", search_paths=[str(CORPUS)])
    assert not diags
    return build_model(
        desc, process=["drive_straight", "drive_turn"], measure="drive_measure"
    )


@pytest.fixture(scope="session")
def linear_model():
    desc, diags = load_description(
        CORPUS / "constant_velocity.nt", search_paths=[str(CORPUS)]
    )
    assert not diags
    return build_model(desc)


# -- random expressions ----------------------------------------------------

_VARS = ("x", "y", "u")


def random_expression(rng: random.Random, depth: int = 0) -> Expr:
    """A random expression over x, y, u that is differentiable and
    numerically tame on (0.2, 2.2)^3: division only by offset-positive
    subtrees, ln/sqrt wrapped the same way, and small integer powers."""
    if depth >= 4 or rng.random() < 0.28:
        if rng.random() < 0.7:
            return ident(rng.choice(_VARS))
        return num(round(rng.uniform(-3.0, 3.0), 3))
    kind = rng.choice(
        ("add", "sub", "mul", "div", "neg", "pow", "sin", "cos", "tan", "exp", "ln", "sqrt")
    )
    a = random_expression(rng, depth + 1)
    if kind == "add":
        return add(a, random_expression(rng, depth + 1))
    if kind == "sub":
        return sub(a, random_expression(rng, depth + 1))
    if kind == "mul":
        return mul(a, random_expression(rng, depth + 1))
    if kind == "div":
        # keep the denominator bounded away from zero
        return div(a, add(mul(random_expression(rng, depth + 1), ident("u")), num(2.5)))
    if kind == "neg":
        return neg(a)
    if kind == "pow":
        return powi(a, rng.choice((2, 3)))
    if kind in ("ln", "sqrt"):
        # force a positive argument
        return call(kind, add(mul(a, a), num(0.5)))
    if kind == "tan":
        # keep the argument away from the poles
        return call("tan", div(a, num(4.0)))
    return call(kind, a)


def random_env(rng: random.Random) -> dict[str, float]:
    return {name: rng.uniform(0.2, 2.2) for name in _VARS}


def central_difference(f, env: dict[str, float], name: str, h: float = 1e-6) -> float:
    hi = dict(env)
    lo = dict(env)
    step = h * max(1.0, abs(env[name]))
    hi[name] += step
    lo[name] -= step
    return (f(hi) - f(lo)) / (2.0 * step)


def finite(value: float, bound: float = 1e6) -> bool:
    return math.isfinite(value) and abs(value) < bound
