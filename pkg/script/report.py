"""JSON result documents; rationals are always "num/den" strings."""

import json
from typing import Any, Dict, Optional, Sequence

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from boost import OPTIMAL, ExactResult
from rational import format_rational
from standard_form import VariableMap
from verify import CertificateKind
from utils import LogLevel, log

SCHEMA_VERSION = 1


def _strings(values: Optional[Sequence]) -> Optional[list]:
    if values is None:
        return None
    return [format_rational(v) for v in values]


def result_to_json(result: ExactResult, vmap: Optional[VariableMap] = None, name: str = "",
                   include_trace: bool = False) -> Dict[str, Any]:
    """Result document; with `vmap` primal values are mapped back to the original variables.

    Dual values always refer to the rows of the standard-form LP that was solved.
    """
    cert = result.certificate
    doc: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "status": result.status,
        "objective": None,
        "x": None,
        "y": None,
        "certificate": None,
        "precision_final": result.precision_final,
        "failure_reason": result.failure_reason or None,
        "stats": result.statistics.to_dict(include_trace),
    }
    if vmap is not None and vmap.names:
        doc["variables"] = list(vmap.names)
    if cert is None:
        return doc

    if cert.kind is CertificateKind.OPTIMAL:
        x = vmap.recover(cert.x) if vmap is not None else cert.x
        objective = vmap.original_objective(cert.objective) if vmap is not None else cert.objective
        doc["objective"] = format_rational(objective)
        doc["x"] = _strings(x)
        doc["y"] = _strings(cert.y)
        doc["certificate"] = {
            "kind": cert.kind.value,
            "basis": list(cert.basis.basic) if cert.basis is not None else None,
        }
    elif cert.kind is CertificateKind.INFEASIBLE:
        doc["certificate"] = {"kind": cert.kind.value, "farkas_y": _strings(cert.farkas_y)}
    else:
        witness = vmap.recover(cert.witness_x) if vmap is not None else cert.witness_x
        ray = vmap.recover_direction(cert.ray_v) if vmap is not None else cert.ray_v
        doc["x"] = _strings(witness)
        doc["certificate"] = {
            "kind": cert.kind.value,
            "witness_x": _strings(witness),
            "ray_v": _strings(ray),
        }
    return doc


def write_result(path: str, result: ExactResult, vmap: Optional[VariableMap] = None, name: str = "",
                 log_file: Optional[str] = None) -> None:
    doc = result_to_json(result, vmap, name)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
    log(f"Result written to {path}", log_file, LogLevel.DEBUG)


def summary_line(result: ExactResult, vmap: Optional[VariableMap] = None) -> str:
    """One-line verdict such as ``optimal 1/3`` or ``failure: numerical``."""
    if result.status == OPTIMAL:
        objective = result.objective
        if vmap is not None:
            objective = vmap.original_objective(objective)
        return f"{result.status} {format_rational(objective)}"
    if result.failure_reason and result.status not in ("timeout",):
        return f"{result.status}: {result.failure_reason}"
    return result.status
