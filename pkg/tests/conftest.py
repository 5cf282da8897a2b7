"""Shared builders for compact inline problem specs and model artifacts."""

import json
import shutil
from fractions import Fraction
from pathlib import Path

import pytest

from stabex import ModelArtifact, ProblemSpec, load_model, load_spec, parse_model, parse_spec

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


def var(label, interface, type="real", range=None, **extra):
    """Variable declaration dict; keyword underscores map to dashes (rad_abs -> rad-abs)."""
    d = {"label": label, "interface": interface, "type": type}
    if range is not None:
        d["range"] = list(range)
    for k, v in extra.items():
        d[k.replace("_", "-")] = v
    return d


def make_spec(variables, **fields) -> ProblemSpec:
    doc = {"version": "1.2", "variables": variables}
    doc.update(fields)
    return parse_spec(json.dumps(doc, default=str))


def make_model(kind, features, outputs, payload) -> ModelArtifact:
    doc = {"kind": kind, "features": list(features), "outputs": list(outputs), "payload": payload}
    return parse_model(json.dumps(doc, default=str))


def const_model(features, values: dict) -> ModelArtifact:
    """Polynomial artifact that ignores its features: each output a constant."""
    nf = len(features)
    terms = [[{"coeff": v, "powers": [0] * nf}] for v in values.values()]
    return make_model("polynomial", features, list(values), {"terms": terms})


def poly1_model(coeffs, feature="p", output="y") -> ModelArtifact:
    """Univariate polynomial y = sum coeffs[k] * feature**k."""
    terms = [[{"coeff": c, "powers": [k]} for k, c in enumerate(coeffs)]]
    return make_model("polynomial", [feature], [output], {"terms": terms})


def frac(x) -> Fraction:
    return Fraction(str(x)) if not isinstance(x, Fraction) else x


@pytest.fixture(scope="session")
def demo_spec_path() -> str:
    return str(DATA / "demo_spec.json")


@pytest.fixture(scope="session")
def demo_model_path() -> str:
    return str(DATA / "demo_model.json")


@pytest.fixture(scope="session")
def demo_spec(demo_spec_path):
    return load_spec(demo_spec_path)


def external_solver_cmd():
    """Command line for an SMT-LIB2 solver process, or None to skip."""
    import os

    cmd = os.environ.get("STABEX_SOLVER_CMD")
    if cmd:
        return cmd
    z3 = shutil.which("z3")
    if z3:
        return f"{z3} -in"
    return None


@pytest.fixture(scope="session")
def demo_model(demo_model_path) -> ModelArtifact:
    return load_model(demo_model_path)
