"""Machine-readable result certificates.

Every CLI run emits a JSON certificate: input hashes, the mode and its
parameters, the verdict, and the payload needed to re-check the result
offline (witness assignments plus the exact condition they were verified
against, exclusion logs, optimization traces). Rationals are serialized as
exact decimal or p/q strings; `Fraction()` parses both back.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from importlib import metadata
from typing import Any, Mapping

from .errors import MalformedJsonError
from .solver import SolverStats
from .spec import ProblemSpec
from .stability import ExclusionRegion
from .terms import Assignment, Sort, Value, format_rational


def tool_version() -> str:
    try:
        return metadata.version("stabex")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def value_to_json(v: Value) -> str:
    return v if isinstance(v, str) else format_rational(v)


def assignment_to_json(a: Assignment) -> dict[str, str]:
    return {k: value_to_json(v) for k, v in a.items()}


def value_from_json(spec: ProblemSpec, label: str, raw: str) -> Value:
    if spec.var(label).sort is Sort.SET:
        return raw
    return Fraction(raw)


def assignment_from_json(spec: ProblemSpec, payload: Mapping[str, str]) -> dict[str, Value]:
    return {k: value_from_json(spec, k, raw) for k, raw in payload.items()}


def stats_to_json(stats: SolverStats) -> dict[str, Any]:
    return {
        "queries": stats.queries,
        "cells": stats.cells,
        "prunes": stats.prunes,
        "point_checks": stats.point_checks,
        "max_depth": stats.max_depth,
        "wall_seconds": round(stats.elapsed, 6),
    }


def exclusions_to_json(regions: tuple[ExclusionRegion, ...]) -> list[dict[str, Any]]:
    out = []
    for region in regions:
        out.append(
            {
                "center": {k: value_to_json(v) for k, v in region.center},
                "radii": {
                    k: (None if r is None else format_rational(r))
                    for k, r in region.radii
                },
            }
        )
    return out


def trace_to_json(trace: tuple[tuple[Fraction, str], ...]) -> list[dict[str, str]]:
    return [
        {"threshold": format_rational(z), "verdict": verdict} for z, verdict in trace
    ]


def make_certificate(
    mode: str,
    *,
    spec_path: str,
    model_path: str | None,
    parameters: Mapping[str, Any],
    verdict: str,
    payload: Mapping[str, Any],
    stats: SolverStats | None = None,
) -> dict[str, Any]:
    cert: dict[str, Any] = {
        "tool": "stabex",
        "version": tool_version(),
        "mode": mode,
        "inputs": {
            "spec_sha256": sha256_file(spec_path),
            "model_sha256": sha256_file(model_path) if model_path else None,
        },
        "parameters": dict(parameters),
        "verdict": verdict,
        "payload": dict(payload),
    }
    if stats is not None:
        cert["stats"] = stats_to_json(stats)
    return cert


def save_certificate(cert: Mapping[str, Any], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cert, fh, indent=2, sort_keys=False)
        fh.write("\n")


def load_certificate(path: str) -> dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cert = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedJsonError(f"invalid certificate JSON: {exc}") from exc
    if not isinstance(cert, dict) or cert.get("tool") != "stabex":
        raise MalformedJsonError("not a stabex certificate")
    return cert
