"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel


class CapsModel(BaseModel):
    max_chain_steps: int = 6
    max_rectangles: int = 4
    max_refinements: int = 8
    multiset_budget: int = 1500


class GenerationRequest(BaseModel):
    k: int
    d: int
    caps: Optional[CapsModel] = None
    mode: Optional[str] = None


class BoundModel(BaseModel):
    c: int
    a: int
    b: int
    id: str
    markers: List[str] = []
    provenance: Optional[dict] = None


class BoundsResponse(BaseModel):
    k: int
    d: int
    truncated: bool
    bounds: List[BoundModel]


class SegmentModel(BaseModel):
    lo: str
    hi: Optional[str]
    a: int
    b: int
    c: int
    id: str


class EnvelopeResponse(BaseModel):
    families: Dict[str, List[SegmentModel]]


class VertexModel(BaseModel):
    x: str
    y: str


class FacetModel(BaseModel):
    a: int
    b: int
    c: int
    id: str


class TradeoffFamilyModel(BaseModel):
    vertices: List[VertexModel]
    facets: List[FacetModel]


class TradeoffResponse(BaseModel):
    families: Dict[str, TradeoffFamilyModel]


class CertifyRequest(GenerationRequest):
    bound_id: str


class CheckModel(BaseModel):
    name: str
    ok: bool
    detail: str = ""


class ReportModel(BaseModel):
    ok: bool
    summary: str
    checks: List[CheckModel]


class CertifyResponse(BaseModel):
    bound: BoundModel
    report: ReportModel


class ConstructRequest(BaseModel):
    family: Optional[str] = None
    d: Optional[int] = None
    builtin: Optional[str] = None


class CodeSpecModel(BaseModel):
    k: int
    d: int
    B: int
    alpha: int
    beta: int
    name: str = ""
    generator: List[str]
    repair: Dict[str, List[str]]
    parity: Optional[List[str]] = None


class VerifyRequest(BaseModel):
    """``payload`` is either a code spec (has "generator") or a bound
    object (has "c")."""

    payload: dict


class HealthResponse(BaseModel):
    status: str
