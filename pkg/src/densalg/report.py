"""Check orchestration and deterministic JSON reports.

Every check returns a :class:`~densalg.symbols.Certificate`.  A failing
certificate is a verdict (``fail``); a package error raised while running a
check is ``error``; :class:`~densalg.errors.InternalInconsistency` is the
distinguished ``internal`` verdict.
"""

from __future__ import annotations

import hashlib
import json
import time
from fractions import Fraction

from densalg import bv
from densalg.densities import DensityElement
from densalg.diffop import DiffOperator
from densalg.errors import DensalgError, InternalInconsistency
from densalg.expr import format_value
from densalg.graded import GradedScalar, Parity
from densalg.pencil import (
    PROBE_WEIGHTS,
    canonical_pencil,
    check_selfadjoint,
    pencil_from_operator,
    pencil_pullback,
    specialize_pullback,
)
from densalg.symbols import (
    Certificate,
    MomentumPolynomial,
    bracket_components_from_symbol,
    verify_connection_law,
)

REPORT_SCHEMA = "densalg-report/1"
CONVENTIONS = "densalg-conventions/1"

EXIT_PASS, EXIT_FAIL, EXIT_ERROR, EXIT_INTERNAL = 0, 1, 2, 3
_VERDICT_EXIT = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "error": EXIT_ERROR, "internal": EXIT_INTERNAL}


# JSON encoding -------------------------------------------------------------------------


def jsonable(value):
    """Convert certificate payloads to JSON values with canonical strings."""
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, Parity):
        return value.name.lower()
    if isinstance(value, (GradedScalar, DiffOperator, MomentumPolynomial, DensityElement)):
        return format_value(value) or "0"
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return str(value)


def dumps(payload):
    """Byte-deterministic JSON text (sorted keys, fixed indentation)."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def certificate_json(cert):
    return {
        "name": cert.name,
        "passed": cert.passed,
        "residuals": jsonable(cert.residuals),
        "witnesses": jsonable(cert.witnesses),
        "flags": jsonable(cert.flags),
    }


def data_json(data):
    names = data.chart.names
    return {
        "parity": data.parity.name.lower(),
        "S": {
            f"{a},{b}": format_value(data.S.component(a, b))
            for a in names
            for b in names
            if data.S.component(a, b)
        },
        "gamma": {a: format_value(data.gamma[a]) or "0" for a in names},
        "theta": format_value(data.theta) or "0",
    }


def pencil_json(pencil):
    return {
        "parity": Parity(pencil.parity).name.lower(),
        "delta0": format_value(pencil.delta0) or "0",
        "A": format_value(pencil.A) or "0",
        "B": format_value(pencil.B) or "0",
    }


# individual checks ------------------------------------------------------------------


def _weights(params, default=PROBE_WEIGHTS):
    return tuple(params.get("weights", default))


def check_selfadjoint_data(data, params, seed):
    cert = check_selfadjoint(canonical_pencil(data), _weights(params))
    cert.flags["weights"] = [str(w) for w in _weights(params)]
    return cert


def check_recover(op, params, seed):
    w0 = params["weight"]
    data = pencil_from_operator(op, w0)
    again = canonical_pencil(data).at(w0)
    residuals = {}
    if again != op:
        residuals["roundtrip"] = again - op
    cert = Certificate("recover", not residuals, residuals)
    cert.witnesses["data"] = data_json(data)
    cert.flags["weight"] = str(w0)
    return cert


def check_connection(op, params, seed, manifest):
    change = manifest.get(params["change"]).value
    return verify_connection_law(op, change)


def check_pullback(data, params, seed, manifest):
    change = manifest.get(params["change"]).value
    pencil = canonical_pencil(data)
    pulled = pencil_pullback(pencil, change)
    residuals = {}
    for w in _weights(params):
        direct = specialize_pullback(pencil, change, w)
        defect = pulled.at(w) - direct
        if defect:
            residuals[str(w)] = defect
    adjoint = check_selfadjoint(pulled)
    if not adjoint.passed:
        residuals.update({f"selfadjoint {k}": v for k, v in adjoint.residuals.items()})
    cert = Certificate("pullback", not residuals, residuals)
    cert.witnesses["pencil"] = pencil_json(pulled)
    return cert


def _structure(entry):
    if entry.kind == "data":
        return bv.OddPoissonStructure(entry.value.chart, entry.value.S)
    return bv.OddPoissonStructure(
        entry.value.chart, bracket_components_from_symbol(entry.value, Parity.ODD)
    )


def check_master(entry, params, seed, manifest):
    action = bv.EffectiveAction(entry.value.chart, manifest.get(params["action"]).value)
    return bv.master_equation_check(_structure(entry), action, params.get("weight", Fraction(1, 2)))


def check_modular(data, params, seed):
    field = bv.extract_modular_field(data, _weights(params))
    cert = Certificate("modular", True)
    cert.witnesses["X"] = {a: v for a, v in field.components.items()}
    cert.flags["zero"] = field.is_zero()
    return cert


_RUNNERS = {
    "selfadjoint": (check_selfadjoint_data, False),
    "recover": (check_recover, False),
    "connection": (check_connection, True),
    "pullback": (check_pullback, True),
    "jacobi": (lambda op, p, s: bv.jacobi_check_base(op), False),
    "flatness": (lambda op, p, s: bv.flatness_check(op, seed=p.get("seed", s)), False),
    "theorem3": (lambda d, p, s: bv.jacobi_check_densities(d, seed=p.get("seed", s)), False),
    "modular": (check_modular, False),
    "reduce": (lambda d, p, s: bv.nondegenerate_reduction(d), False),
    "master": (check_master, True),
}


def run_check(manifest, check, seed=0):
    """Run one check; returns its JSON record (verdict never raises)."""
    runner, needs_manifest = _RUNNERS[check.kind]
    entry = manifest.get(check.target)
    target = entry if check.kind == "master" else entry.value
    record = {
        "kind": check.kind,
        "target": check.target,
        "line": check.line,
        "params": {k: jsonable(v) for k, v in sorted(check.params.items())},
    }
    try:
        if needs_manifest:
            cert = runner(target, check.params, seed, manifest)
        else:
            cert = runner(target, check.params, seed)
    except InternalInconsistency as exc:
        record.update(verdict="internal", message=str(exc))
        return record
    except DensalgError as exc:
        record.update(verdict="error", message=f"{type(exc).__name__}: {exc}")
        return record
    record.update(certificate_json(cert))
    record["verdict"] = "pass" if cert.passed else "fail"
    return record


def exit_code_for(records):
    return max((_VERDICT_EXIT[r["verdict"]] for r in records), default=EXIT_PASS)


def run_checks(manifest, seed=0, source_text=None, timing=False):
    """Run all checks in manifest order; returns ``(report, exit_code)``."""
    records = []
    for index, check in enumerate(manifest.checks):
        start = time.perf_counter()
        record = run_check(manifest, check, seed)
        if timing:
            record["seconds"] = round(time.perf_counter() - start, 6)
        record["index"] = index
        records.append(record)
    summary = {v: sum(1 for r in records if r["verdict"] == v) for v in _VERDICT_EXIT}
    code = exit_code_for(records)
    report = {
        "schema": REPORT_SCHEMA,
        "conventions": CONVENTIONS,
        "seed": seed,
        "summary": summary,
        "exit_code": code,
        "checks": records,
    }
    if source_text is not None:
        if isinstance(source_text, str):
            source_text = source_text.encode("utf-8")
        report["manifest_sha256"] = hashlib.sha256(source_text).hexdigest()
    return report, code
