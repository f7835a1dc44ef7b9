"""HTTP service exposing bound generation, certification, and code tools."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from ..codes import build_congruence_family, builtin_code_423, builtin_code_433
from ..core import RegenBoundsError, SystemParams
from ..formats import (
    bound_from_obj,
    bound_to_obj,
    bounds_artifact_obj,
    code_spec_from_obj,
    code_spec_to_obj,
    envelope_families_obj,
    report_obj,
    tradeoff_families_obj,
)
from ..generators import EnumerationLimits, enumerate_bounds, verify_certificate
from ..ops import verify_code_spec_fully
from .schemas import (
    BoundsResponse,
    CertifyRequest,
    CertifyResponse,
    CodeSpecModel,
    ConstructRequest,
    EnvelopeResponse,
    GenerationRequest,
    HealthResponse,
    ReportModel,
    TradeoffResponse,
    VerifyRequest,
)

app = FastAPI(
    title="regenbounds",
    description=(
        "Storage/repair bounds with machine-checkable certificates, "
        "piecewise-linear envelopes, and concrete binary codes."
    ),
)


@app.exception_handler(RegenBoundsError)
async def _domain_error(request: Request, exc: RegenBoundsError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


def _limits(request: GenerationRequest) -> EnumerationLimits:
    if request.caps is None:
        return EnumerationLimits()
    return EnumerationLimits(**request.caps.model_dump())


def _result(request: GenerationRequest):
    params = SystemParams(request.k, request.d)
    return params, enumerate_bounds(params, _limits(request), request.mode)


@app.get("/health", response_model=HealthResponse)
def health() -> dict:
    return {"status": "ok"}


@app.post("/bounds", response_model=BoundsResponse)
def post_bounds(request: GenerationRequest) -> dict:
    params, result = _result(request)
    return bounds_artifact_obj(params, result)


@app.post("/envelope", response_model=EnvelopeResponse)
def post_envelope(request: GenerationRequest) -> dict:
    _, result = _result(request)
    return envelope_families_obj(result.bounds)


@app.post("/tradeoff", response_model=TradeoffResponse)
def post_tradeoff(request: GenerationRequest) -> dict:
    _, result = _result(request)
    return tradeoff_families_obj(result.bounds)


@app.post("/certify", response_model=CertifyResponse)
def post_certify(request: CertifyRequest) -> dict:
    _, result = _result(request)
    for bound in result.bounds:
        if bound.bound_id == request.bound_id:
            report = verify_certificate(bound)
            return {"bound": bound_to_obj(bound), "report": report_obj(report)}
    raise HTTPException(
        status_code=404,
        detail=f"no generated bound has id {request.bound_id!r}",
    )


_BUILTINS = {"423": builtin_code_423, "433": builtin_code_433}


@app.post("/construct", response_model=CodeSpecModel)
def post_construct(request: ConstructRequest) -> dict:
    if request.builtin is not None:
        maker = _BUILTINS.get(request.builtin)
        if maker is None:
            raise HTTPException(
                status_code=422,
                detail=f"unknown builtin {request.builtin!r}",
            )
        return code_spec_to_obj(maker())
    if request.family != "congruence":
        raise HTTPException(
            status_code=422, detail=f"unknown family {request.family!r}"
        )
    if request.d is None:
        raise HTTPException(
            status_code=422, detail="the congruence family needs d"
        )
    return code_spec_to_obj(build_congruence_family(request.d))


@app.post("/verify", response_model=ReportModel)
def post_verify(request: VerifyRequest) -> dict:
    payload = request.payload
    if "generator" in payload:
        report = verify_code_spec_fully(code_spec_from_obj(payload))
    elif "c" in payload:
        report = verify_certificate(bound_from_obj(payload))
    else:
        raise HTTPException(
            status_code=422,
            detail="payload must be a code spec (generator) or bound (c)",
        )
    return report_obj(report)
