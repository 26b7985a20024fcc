"""
Network reduction API endpoints
Same pipeline as the CLI; documents travel as JSON objects.
"""

import json
import logging
from typing import Any, Dict, List, Literal, Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from example_catalog import EXAMPLE_CATALOG, example_names, example_text
from linalg_core import Tolerances, default_tolerances
from netlist_io import (
    NetworkSpec,
    convert_network,
    network_diagnostics,
    parse_network,
    reduce_network,
    serialize_model,
    series_network,
)

logger = logging.getLogger(__name__)

network_router = APIRouter(tags=["network"])


class ReduceRequest(BaseModel):
    """Reduce every connected channel of a network document"""
    document: Dict[str, Any]
    route: Literal["ito", "strat", "both"] = "ito"
    tol: Optional[float] = Field(default=None, gt=0)


class ConvertRequest(BaseModel):
    document: Dict[str, Any]
    to: Literal["slh", "strat"]
    tol: Optional[float] = Field(default=None, gt=0)


class CheckRequest(BaseModel):
    document: Dict[str, Any]
    tol: Optional[float] = Field(default=None, gt=0)


class SeriesRequest(BaseModel):
    """second ◁ first: the output of `first` drives `second`"""
    second: Dict[str, Any]
    first: Dict[str, Any]
    tol: Optional[float] = Field(default=None, gt=0)


class DocumentResponse(BaseModel):
    document: Dict[str, Any]
    discrepancy: Optional[float] = None  # only for route "both"


class ExampleSummary(BaseModel):
    name: str
    description: str


def _tolerances(tol: Optional[float]) -> Tolerances:
    return default_tolerances() if tol is None else Tolerances.with_eq_tol(tol)


def _parse(document: Dict[str, Any], tol: Tolerances) -> NetworkSpec:
    return parse_network(json.dumps(document), tol)


def _as_document(text: str) -> Dict[str, Any]:
    return json.loads(text)


@network_router.post("/reduce", response_model=DocumentResponse)
def reduce_endpoint(request: ReduceRequest):
    tol = _tolerances(request.tol)
    result = reduce_network(_parse(request.document, tol), request.route, tol)
    logger.info(f"[REDUCE] route={request.route} channels={len(result.model.channels)}")
    return DocumentResponse(document=_as_document(serialize_model(result)), discrepancy=result.discrepancy)


@network_router.post("/convert", response_model=DocumentResponse)
def convert_endpoint(request: ConvertRequest):
    tol = _tolerances(request.tol)
    result = convert_network(_parse(request.document, tol), request.to, tol)
    return DocumentResponse(document=_as_document(serialize_model(result)))


@network_router.post("/check")
def check_endpoint(request: CheckRequest):
    tol = _tolerances(request.tol)
    return network_diagnostics(_parse(request.document, tol), tol)


@network_router.post("/series", response_model=DocumentResponse)
def series_endpoint(request: SeriesRequest):
    tol = _tolerances(request.tol)
    result = series_network(_parse(request.second, tol), _parse(request.first, tol), tol)
    return DocumentResponse(document=_as_document(serialize_model(result)))


@network_router.get("/examples", response_model=List[ExampleSummary])
def list_examples():
    return [ExampleSummary(name=name, description=EXAMPLE_CATALOG[name]["description"]) for name in example_names()]


@network_router.get("/examples/{name}")
def get_example(name: str):
    if name not in EXAMPLE_CATALOG:
        raise HTTPException(
            status_code=404,
            detail=f"Unknown example '{name}'. Available: {example_names()}"
        )
    return _as_document(example_text(name))
