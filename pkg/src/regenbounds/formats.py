"""Serialization: canonical JSON for bounds and certificates, CSV for
envelope and tradeoff tables, JSON for concrete code specs.

All renderers are deterministic (sorted keys, sorted variable lists, fixed
separators) so identical inputs produce identical bytes, and parsing then
re-rendering reproduces the input exactly.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .core import (
    LinearForm,
    ParameterRangeError,
    SystemParams,
    Variable,
    VerificationReport,
)
from .codes import Gf2Matrix, RegeneratingCodeSpec
from .envelope import (
    FAMILY_NAMES,
    PiecewiseLinearEnvelope,
    TradeoffBoundary,
    family_members,
    tradeoff_boundary,
    upper_envelope,
)
from .generators import (
    ChainCertificate,
    ChainStep,
    Combination,
    CutSet,
    EnumerationResult,
    LinearBound,
    MinimalConfiguration,
    PackingCertificate,
    Rectangle,
)


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def fraction_str(value) -> str:
    return str(Fraction(value))


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterRangeError(f"bad rational {text!r}: {exc}") from exc


def parse_variable(text: str) -> Variable:
    text = text.strip()
    try:
        if text == "m":
            return Variable.message()
        if text.startswith("w"):
            return Variable.node(int(text[1:]))
        if text.startswith("s") and ">" in text:
            src, dst = text[1:].split(">", 1)
            return Variable.helper(int(src), int(dst))
    except (ValueError, ParameterRangeError) as exc:
        raise ParameterRangeError(f"bad variable {text!r}") from exc
    raise ParameterRangeError(f"bad variable {text!r}")


def _var_list(variables) -> list:
    return [str(v) for v in sorted(variables)]


def _parse_vars(items) -> frozenset:
    return frozenset(parse_variable(item) for item in items)


def _claims_obj(claims: LinearBound) -> dict:
    return {"a": claims.a, "b": claims.b, "c": claims.c}


def _parse_claims(obj) -> LinearBound:
    return LinearBound(int(obj["c"]), LinearForm(int(obj["a"]), int(obj["b"])))


def _rectangle_obj(rect: Rectangle) -> dict:
    return {
        "helpers": sorted(rect.helpers),
        "targets": sorted(rect.targets),
        "r": rect.r,
        "t": rect.t,
        "s": rect.s,
    }


def _parse_rectangle(obj) -> Rectangle:
    return Rectangle(
        frozenset(int(x) for x in obj["helpers"]),
        frozenset(int(x) for x in obj["targets"]),
        int(obj["r"]),
        int(obj["t"]),
        int(obj["s"]),
    )


def _chain_obj(cert: ChainCertificate) -> dict:
    return {
        "type": "chain",
        "k": cert.params.k,
        "d": cert.params.d,
        "anchored": cert.anchored,
        "q": cert.q,
        "ell": cert.ell,
        "m": cert.m,
        "q_list": list(cert.q_list),
        "steps": [
            {"big": _var_list(step.big), "small": _var_list(step.small)}
            for step in cert.steps
        ],
        "claims": _claims_obj(cert.claims),
    }


def _parse_chain(obj) -> ChainCertificate:
    params = SystemParams(int(obj["k"]), int(obj["d"]))
    steps = tuple(
        ChainStep(_parse_vars(step["big"]), _parse_vars(step["small"]))
        for step in obj["steps"]
    )
    q = obj.get("q")
    return ChainCertificate(
        params,
        steps,
        bool(obj["anchored"]),
        _parse_claims(obj["claims"]),
        int(obj["ell"]),
        int(obj["m"]),
        tuple(int(x) for x in obj["q_list"]),
        None if q is None else int(q),
    )


def certificate_to_obj(prov) -> Optional[dict]:
    if prov is None:
        return None
    if isinstance(prov, CutSet):
        config = prov.configuration
        return {
            "type": "cutset",
            "k": prov.params.k,
            "d": prov.params.d,
            "q": prov.q,
            "vprime": sorted(config.vprime),
            "repaired": sorted(config.repaired),
            "unused": sorted(config.unused),
        }
    if isinstance(prov, ChainCertificate):
        return _chain_obj(prov)
    if isinstance(prov, PackingCertificate):
        return {
            "type": "packing",
            "k": prov.params.k,
            "d": prov.params.d,
            "q": prov.q,
            "rectangles": [_rectangle_obj(r) for r in prov.rectangles],
            "term_modes": list(prov.term_modes),
            "claims": _claims_obj(prov.claims),
        }
    if isinstance(prov, Combination):
        return {
            "type": "combination",
            "k": prov.params.k,
            "d": prov.params.d,
            "base": _chain_obj(prov.base),
            "refinements": [
                {"step": step, "rectangle": _rectangle_obj(rect)}
                for step, rect in prov.refinements
            ],
        }
    raise ParameterRangeError(f"unknown certificate type {type(prov).__name__}")


def certificate_from_obj(obj) -> Optional[object]:
    if obj is None:
        return None
    kind = obj.get("type")
    if kind == "cutset":
        params = SystemParams(int(obj["k"]), int(obj["d"]))
        config = MinimalConfiguration(
            params,
            frozenset(int(x) for x in obj["vprime"]),
            frozenset(int(x) for x in obj["repaired"]),
            frozenset(int(x) for x in obj["unused"]),
        )
        return CutSet(params, int(obj["q"]), config)
    if kind == "chain":
        return _parse_chain(obj)
    if kind == "packing":
        params = SystemParams(int(obj["k"]), int(obj["d"]))
        rects = tuple(_parse_rectangle(r) for r in obj["rectangles"])
        return PackingCertificate(
            params,
            int(obj["q"]),
            rects,
            tuple(str(m) for m in obj["term_modes"]),
            _parse_claims(obj["claims"]),
        )
    if kind == "combination":
        params = SystemParams(int(obj["k"]), int(obj["d"]))
        base = _parse_chain(obj["base"])
        refs = tuple(
            (int(item["step"]), _parse_rectangle(item["rectangle"]))
            for item in obj["refinements"]
        )
        return Combination(params, base, refs)
    raise ParameterRangeError(f"unknown certificate type {kind!r}")


def bound_to_obj(bound: LinearBound) -> dict:
    return {
        "a": bound.a,
        "b": bound.b,
        "c": bound.c,
        "id": bound.bound_id,
        "markers": list(bound.markers),
        "provenance": certificate_to_obj(bound.provenance),
    }


def bound_from_obj(obj) -> LinearBound:
    try:
        return LinearBound(
            int(obj["c"]),
            LinearForm(int(obj["a"]), int(obj["b"])),
            certificate_from_obj(obj.get("provenance")),
            tuple(str(m) for m in obj.get("markers", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterRangeError(f"bad bound object: {exc}") from exc


def bounds_artifact_obj(params: SystemParams, result: EnumerationResult) -> dict:
    return {
        "k": params.k,
        "d": params.d,
        "truncated": result.truncated,
        "bounds": [bound_to_obj(b.normalize()) for b in result.bounds],
    }


def render_bounds_json(params: SystemParams, result: EnumerationResult) -> str:
    return dumps_canonical(bounds_artifact_obj(params, result))


def bounds_csv(params: SystemParams, result: EnumerationResult) -> str:
    """One row per normalized bound: c*B <= a*alpha + b*beta."""
    obj = bounds_artifact_obj(params, result)
    rows = [
        (entry["c"], entry["a"], entry["b"], entry["id"])
        for entry in obj["bounds"]
    ]
    return _csv_text(("c", "a", "b", "id"), rows)


def _csv_text(header, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def _family_envelopes(bounds: Sequence[LinearBound]):
    for family in FAMILY_NAMES:
        members = family_members(bounds, family)
        if members:
            yield family, upper_envelope(members)


def envelope_csv(bounds: Sequence[LinearBound]) -> str:
    rows = []
    for family, env in _family_envelopes(bounds):
        for segment in env.segments:
            rows.append(
                (
                    family,
                    fraction_str(segment.lo),
                    fraction_str(segment.value_at(segment.lo)),
                    segment.bound.bound_id,
                )
            )
    return _csv_text(
        ("family", "alpha_over_beta", "B_over_beta", "active_bound_id"), rows
    )


def envelope_families_obj(bounds: Sequence[LinearBound]) -> dict:
    families = {}
    for family, env in _family_envelopes(bounds):
        families[family] = [
            {
                "lo": fraction_str(segment.lo),
                "hi": None if segment.hi is None else fraction_str(segment.hi),
                "a": segment.bound.a,
                "b": segment.bound.b,
                "c": segment.bound.c,
                "id": segment.bound.bound_id,
            }
            for segment in env.segments
        ]
    return {"families": families}


def envelope_json(bounds: Sequence[LinearBound]) -> str:
    return dumps_canonical(envelope_families_obj(bounds))


def tradeoff_csv(bounds: Sequence[LinearBound]) -> str:
    rows = []
    for family, env in _family_envelopes(bounds):
        boundary = tradeoff_boundary(env)
        for vertex in boundary.vertices:
            rows.append((family, fraction_str(vertex.x), fraction_str(vertex.y)))
    return _csv_text(("family", "x", "y"), rows)


def tradeoff_families_obj(bounds: Sequence[LinearBound]) -> dict:
    families = {}
    for family, env in _family_envelopes(bounds):
        boundary = tradeoff_boundary(env)
        families[family] = {
            "vertices": [
                {"x": fraction_str(v.x), "y": fraction_str(v.y)}
                for v in boundary.vertices
            ],
            "facets": [
                {"a": f.a, "b": f.b, "c": f.c, "id": f.bound_id}
                for f in boundary.facets
            ],
        }
    return {"families": families}


def tradeoff_json(bounds: Sequence[LinearBound]) -> str:
    return dumps_canonical(tradeoff_families_obj(bounds))


# --- concrete code specs ----------------------------------------------------


def code_spec_to_obj(spec: RegeneratingCodeSpec) -> dict:
    obj = {
        "k": spec.params.k,
        "d": spec.params.d,
        "B": spec.file_size,
        "alpha": spec.alpha,
        "beta": spec.beta,
        "name": spec.name,
        "generator": spec.generator.to_strings(),
        "repair": {
            f"{i}->{j}": mapping.to_strings()
            for (i, j), mapping in sorted(spec.repair_maps.items())
        },
    }
    if spec.parity is not None:
        obj["parity"] = spec.parity.to_strings()
    return obj


def code_spec_from_obj(obj) -> RegeneratingCodeSpec:
    try:
        params = SystemParams(int(obj["k"]), int(obj["d"]))
        generator = Gf2Matrix.from_strings(obj["generator"])
        repair = {}
        for key, rows in obj["repair"].items():
            src, dst = key.split("->", 1)
            repair[(int(src), int(dst))] = Gf2Matrix.from_strings(rows)
        parity = (
            Gf2Matrix.from_strings(obj["parity"])
            if obj.get("parity") is not None
            else None
        )
        return RegeneratingCodeSpec(
            params,
            int(obj["B"]),
            int(obj["alpha"]),
            int(obj["beta"]),
            generator,
            repair,
            parity,
            str(obj.get("name", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterRangeError(f"bad code spec: {exc}") from exc


def render_code_spec(spec: RegeneratingCodeSpec) -> str:
    return dumps_canonical(code_spec_to_obj(spec))


def parse_json(text: str) -> object:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParameterRangeError(f"bad JSON: {exc}") from exc


def report_obj(report: VerificationReport) -> dict:
    return {
        "ok": report.ok,
        "summary": report.summary(),
        "checks": [
            {"name": c.name, "ok": c.ok, "detail": c.detail}
            for c in report.checks
        ],
    }


def render_report(report: VerificationReport) -> str:
    lines = []
    for check in report.checks:
        if check.ok:
            lines.append(f"ok   {check.name}")
        else:
            lines.append(f"FAIL {check.name}: {check.detail}")
    lines.append(report.summary())
    return "\n".join(lines) + "\n"


def atomic_write(path: str, text: str):
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    handle, tmp_path = tempfile.mkstemp(
        dir=directory, prefix=".tmp-", suffix=os.path.basename(path)
    )
    try:
        with os.fdopen(handle, "w") as fh:
            fh.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise
