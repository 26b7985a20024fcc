"""
Network documents: parsing, open-loop assembly, reduction and serialization.

A document is one JSON object:

    {"hilbert_dim": d,
     "components": [{"name", "inputs", "form": "slh"|"strat", "S", "L", "H" | "E"}],
     "connections": [{"from": "comp.out[port]", "to": "comp.in[port]"}]}

Complex numbers are [re, im]; an operator literal is either one [re, im]
(meaning that scalar times I_d) or a d x d array of [re, im] pairs.
Channel labels inside the models are "<component>.<port>".
"""

import json
import logging
import re
from dataclasses import dataclass
from typing import Any, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from block_algebra import LabeledBlockMatrix, sub_block
from errors import (
    CrossCheckFailed,
    DimMismatch,
    DuplicateConnection,
    LabelCollision,
    NetlistSyntaxError,
    NotRepresentable,
    SizeMismatch,
    UnknownPort,
)
from linalg_core import Tolerances, as_operator, default_tolerances, identity, max_abs, relative_pivot
from models import (
    ZERO,
    SLHModel,
    StratGenerator,
    slh_from_strat,
    slh_from_v,
    strat_from_slh,
    v_from_slh,
)
from network_calculus import (
    ChannelSplit,
    Permutation,
    concat_slh,
    concat_strat,
    e_ii_representability,
    feedback_slh,
    feedback_strat,
    feedback_v,
    route_channels,
    series_slh,
    wellposedness,
)

logger = logging.getLogger(__name__)

ROUTES = ("ito", "strat", "both")
FORMS = ("slh", "strat")

# route=both fails above CROSS_CHECK_FACTOR * eq_tol (scaled by the result's magnitude)
CROSS_CHECK_FACTOR = 10.0

PORT_PATTERN = re.compile(r"^(?P<component>[^.\[\]]+)\.(?P<direction>in|out)\[(?P<port>[^\[\]]+)\]$")
NAME_PATTERN = re.compile(r"^[^.\[\]\s]+$")

REDUCED_NAME = "reduced"


# ============================================
# DOCUMENT SCHEMA
# ============================================

class ComponentDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    inputs: List[str]
    form: Literal["slh", "strat"]
    S: Optional[List[List[Any]]] = None
    L: Optional[List[Any]] = None
    H: Optional[Any] = None
    E: Optional[List[List[Any]]] = None


class ConnectionDocument(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    source: str = Field(alias="from")
    target: str = Field(alias="to")


class NetworkDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    hilbert_dim: int = Field(ge=1)
    components: List[ComponentDocument] = Field(min_length=1)
    connections: List[ConnectionDocument]


# ============================================
# PARSED NETWORK
# ============================================

def channel_label(component: str, port: str) -> str:
    return f"{component}.{port}"


@dataclass(frozen=True, eq=False)
class ComponentDecl:
    """payload is an SLHModel (form "slh") or a StratGenerator (form "strat") over the component's channels."""

    name: str
    inputs: tuple
    form: str
    payload: Any

    @property
    def channels(self) -> tuple:
        return tuple(channel_label(self.name, p) for p in self.inputs)

    def slh(self, tol: Tolerances) -> SLHModel:
        if self.form == "slh":
            return self.payload
        return slh_from_strat(self.payload, tol)

    def strat(self, tol: Tolerances) -> StratGenerator:
        if self.form == "strat":
            return self.payload
        return strat_from_slh(self.payload, tol)


@dataclass(frozen=True)
class Connection:
    """(component, output port) -> (component, input port)."""

    source: tuple
    target: tuple

    @property
    def source_channel(self) -> str:
        return channel_label(*self.source)

    @property
    def target_channel(self) -> str:
        return channel_label(*self.target)


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    hilbert_dim: int
    components: tuple
    connections: tuple = ()

    @property
    def channels(self) -> tuple:
        """Declaration order: components, then ports within a component."""
        return tuple(c for comp in self.components for c in comp.channels)

    def component(self, name: str) -> ComponentDecl:
        for comp in self.components:
            if comp.name == name:
                return comp
        raise UnknownPort(f"No component named {name!r}", block=name)

    def single_component(self) -> ComponentDecl:
        if len(self.components) != 1 or self.connections:
            raise SizeMismatch(
                f"Expected a single component without connections, got {len(self.components)} "
                f"component(s) and {len(self.connections)} connection(s)"
            )
        return self.components[0]


@dataclass(frozen=True, eq=False)
class OpenLoop:
    """
    Concatenated network before feedback.

    routing maps every output channel position to the input channel position
    it drives; it is the identity when only self-loops are wired.
    """

    model: SLHModel
    generator: Optional[StratGenerator]
    split: ChannelSplit
    routing: Permutation
    unrepresentable: tuple = ()

    def absorbed(self) -> SLHModel:
        return route_channels(self.model, self.routing)

    def absorbed_generator(self, tol: Tolerances) -> StratGenerator:
        if self.routing.is_identity:
            if self.generator is None:
                raise NotRepresentable(
                    f"Components {list(self.unrepresentable)} have no Stratonovich form (I + S singular)",
                    block="I+S",
                )
            return self.generator
        return strat_from_slh(self.absorbed(), tol)


@dataclass(frozen=True, eq=False)
class ReductionResult:
    """model is always set; generator only when the Stratonovich form was requested and exists."""

    model: SLHModel
    form: str = "slh"
    generator: Optional[StratGenerator] = None
    route: Optional[str] = None
    discrepancy: Optional[float] = None
    name: str = REDUCED_NAME
    ports: Optional[tuple] = None


# ============================================
# OPERATOR LITERALS
# ============================================

def _contains_bool(literal: Any) -> bool:
    if isinstance(literal, bool):
        return True
    return isinstance(literal, list) and any(_contains_bool(x) for x in literal)


def parse_operator(literal: Any, dim: int, where: str) -> np.ndarray:
    if _contains_bool(literal):
        raise NetlistSyntaxError(f"{where}: operator literal must be numbers, not booleans")
    try:
        arr = np.asarray(literal, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise NetlistSyntaxError(f"{where}: operator literal must be numbers in [re, im] pairs") from e
    if arr.shape == (2,):
        return as_operator((arr[0] + 1j * arr[1]) * identity(dim), dim)
    if arr.shape != (dim, dim, 2):
        raise DimMismatch(
            f"{where}: expected [re, im] or a {dim}x{dim} array of [re, im] pairs, got shape {arr.shape}",
            block=where,
        )
    return as_operator(arr[..., 0] + 1j * arr[..., 1], dim)


def format_operator(A: np.ndarray) -> list:
    """Scalar form when A is exactly c * I, full array otherwise."""
    A = np.asarray(A, dtype=np.complex128)
    c = A[0, 0]
    if np.array_equal(A, c * np.eye(A.shape[0], dtype=np.complex128)):
        return [float(c.real), float(c.imag)]
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


def _parse_block_matrix(rows: list, labels: tuple, dim: int, where: str) -> LabeledBlockMatrix:
    if len(rows) != len(labels) or any(len(r) != len(labels) for r in rows):
        raise DimMismatch(f"{where}: expected {len(labels)}x{len(labels)} operator literals", block=where)
    blocks = {
        (labels[r], labels[c]): parse_operator(lit, dim, f"{where}[{r}][{c}]")
        for r, row in enumerate(rows) for c, lit in enumerate(row)
    }
    return LabeledBlockMatrix.from_blocks(labels, labels, dim, blocks)


def _format_block_matrix(X: LabeledBlockMatrix, labels: tuple) -> list:
    return [[format_operator(X.entry(r, c)) for c in labels] for r in labels]


# ============================================
# PARSE
# ============================================

def _parse_component(doc: ComponentDocument, dim: int, tol: Tolerances) -> ComponentDecl:
    if not NAME_PATTERN.match(doc.name):
        raise NetlistSyntaxError(f"Component name {doc.name!r} may not contain '.', brackets or spaces")
    if len(set(doc.inputs)) != len(doc.inputs):
        raise LabelCollision(f"Component {doc.name!r} declares a port twice", block=doc.name)
    for port in doc.inputs:
        if not port or "[" in port or "]" in port:
            raise NetlistSyntaxError(f"Component {doc.name!r}: invalid port name {port!r}")

    channels = tuple(channel_label(doc.name, p) for p in doc.inputs)
    n = len(channels)
    if doc.form == "slh":
        if doc.S is None or doc.L is None or doc.H is None or doc.E is not None:
            raise NetlistSyntaxError(f"Component {doc.name!r}: form 'slh' needs S, L and H (and no E)")
        S = _parse_block_matrix(doc.S, channels, dim, f"{doc.name}.S")
        if len(doc.L) != n:
            raise DimMismatch(f"{doc.name}.L: expected {n} operator literals, got {len(doc.L)}", block=f"{doc.name}.L")
        L = LabeledBlockMatrix.from_blocks(channels, (ZERO,), dim, {
            (c, ZERO): parse_operator(lit, dim, f"{doc.name}.L[{k}]") for k, (c, lit) in enumerate(zip(channels, doc.L))
        })
        H = parse_operator(doc.H, dim, f"{doc.name}.H")
        payload = SLHModel(channels, S, L, H).check_invariants(tol)
    else:
        if doc.E is None or doc.S is not None or doc.L is not None or doc.H is not None:
            raise NetlistSyntaxError(f"Component {doc.name!r}: form 'strat' needs E (and no S, L, H)")
        E = _parse_block_matrix(doc.E, (ZERO,) + channels, dim, f"{doc.name}.E")
        payload = StratGenerator(E).check_invariants(tol)
    return ComponentDecl(doc.name, tuple(doc.inputs), doc.form, payload)


def _parse_port(ref: str, direction: str, spec_components: dict) -> tuple:
    match = PORT_PATTERN.match(ref)
    if match is None:
        raise NetlistSyntaxError(f"Port reference {ref!r} is not of the form 'component.{direction}[port]'")
    if match["direction"] != direction:
        raise UnknownPort(f"{ref!r} is not an {direction}put port", block=ref)
    comp = spec_components.get(match["component"])
    if comp is None or match["port"] not in comp.inputs:
        raise UnknownPort(f"Unknown port {ref!r}", block=ref)
    return match["component"], match["port"]


def _locate(text: str, loc: tuple) -> Tuple[int, int]:
    """Best-effort line/column of a schema error: the last object key on its path found in order."""
    offset = 0
    for part in loc:
        if isinstance(part, str):
            found = text.find(json.dumps(part), offset)
            if found >= 0:
                offset = found
    line = text.count("\n", 0, offset) + 1
    return line, offset - (text.rfind("\n", 0, offset) + 1) + 1


def parse_network(text: str, tol: Tolerances = None) -> NetworkSpec:
    """Parse and validate a network document; model invariants are checked within eq_tol."""
    tol = tol or default_tolerances()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise NetlistSyntaxError(e.msg, line=e.lineno, column=e.colno) from e

    try:
        doc = NetworkDocument.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        line, column = _locate(text, first["loc"])
        raise NetlistSyntaxError(f"{where}: {first['msg']}", line=line, column=column) from e

    components = {}
    for comp_doc in doc.components:
        if comp_doc.name in components:
            raise LabelCollision(f"Component name {comp_doc.name!r} is used twice", block=comp_doc.name)
        components[comp_doc.name] = _parse_component(comp_doc, doc.hilbert_dim, tol)

    connections = []
    sources, targets = set(), set()
    for conn in doc.connections:
        source = _parse_port(conn.source, "out", components)
        target = _parse_port(conn.target, "in", components)
        if source in sources:
            raise DuplicateConnection(f"Output {conn.source!r} is connected twice", block=conn.source)
        if target in targets:
            raise DuplicateConnection(f"Input {conn.target!r} is connected twice", block=conn.target)
        sources.add(source)
        targets.add(target)
        connections.append(Connection(source, target))

    spec = NetworkSpec(doc.hilbert_dim, tuple(components.values()), tuple(connections))
    logger.debug(f"Parsed network: {len(spec.components)} component(s), {len(spec.channels)} channel(s), "
                 f"{len(spec.connections)} connection(s)")
    return spec


# ============================================
# OPEN LOOP + REDUCTION
# ============================================

def _routing(spec: NetworkSpec) -> Permutation:
    """
    Wired outputs drive their target inputs; the remaining outputs are paired
    with the remaining inputs in channel order.
    """
    channels = spec.channels
    pos = {c: k for k, c in enumerate(channels)}
    pairs = {c.source_channel: c.target_channel for c in spec.connections}
    free_outputs = [c for c in channels if c not in pairs]
    wired_inputs = set(pairs.values())
    free_inputs = [c for c in channels if c not in wired_inputs]
    pairs.update(zip(free_outputs, free_inputs))
    return Permutation(tuple(pos[pairs[c]] for c in channels))


def build_open_loop(spec: NetworkSpec, tol: Tolerances = None) -> OpenLoop:
    """Concatenate the components and work out the internal channels and routing."""
    tol = tol or default_tolerances()
    model = concat_slh([comp.slh(tol) for comp in spec.components])

    gens, unrepresentable = [], []
    for comp in spec.components:
        try:
            gens.append(comp.strat(tol))
        except NotRepresentable as e:
            logger.warning(f"Component {comp.name!r} has no Stratonovich form: {e.detail}")
            unrepresentable.append(comp.name)
    generator = None if unrepresentable else concat_strat(gens)

    internal = {c.source_channel for c in spec.connections}
    split = ChannelSplit.from_internal(model.channels, [c for c in model.channels if c in internal])
    return OpenLoop(model, generator, split, _routing(spec), tuple(unrepresentable))


def _cross_check(reference: SLHModel, other: SLHModel, what: str, tol: Tolerances) -> float:
    diff = reference.max_abs_diff(other)
    scale = max(1.0, max_abs(reference.S.data), max_abs(reference.L.data), max_abs(reference.H))
    logger.debug(f"Cross-check {what}: max discrepancy {diff:.3e}")
    if diff > CROSS_CHECK_FACTOR * tol.eq_tol * scale:
        raise CrossCheckFailed(
            f"Reduction routes disagree ({what}): max discrepancy {diff:.3e} exceeds "
            f"{CROSS_CHECK_FACTOR:g} x eq_tol x {scale:.3g}",
            block=what,
        )
    return diff


def reduce_network(spec: NetworkSpec, route: str = "ito", tol: Tolerances = None) -> ReductionResult:
    """
    Eliminate every wired channel.

    ito:   feedback on the SLH model after absorbing the routing
    strat: Schur complement of the Stratonovich generator over the internal channels
    both:  both of the above plus the V (Mobius) route, cross-checked
    """
    if route not in ROUTES:
        raise SizeMismatch(f"Unknown route {route!r}; expected one of {ROUTES}")
    tol = tol or default_tolerances()
    open_loop = build_open_loop(spec, tol)
    split = open_loop.split

    if route == "strat":
        reduced_gen = feedback_strat(open_loop.absorbed_generator(tol), split, tol)
        logger.info(f"Reduced network (strat): {len(split.internal)} internal channel(s) eliminated")
        return ReductionResult(slh_from_strat(reduced_gen, tol), "strat", reduced_gen, route)

    absorbed = open_loop.absorbed()
    reduced = feedback_slh(absorbed, split, tol)
    if route == "ito":
        logger.info(f"Reduced network (ito): {len(split.internal)} internal channel(s) eliminated")
        return ReductionResult(reduced, "slh", None, route)

    via_v = slh_from_v(feedback_v(v_from_slh(absorbed), split, tol), tol)
    reduced_gen = feedback_strat(open_loop.absorbed_generator(tol), split, tol)
    discrepancy = max(
        _cross_check(reduced, via_v, "V", tol),
        _cross_check(reduced, slh_from_strat(reduced_gen, tol), "strat", tol),
    )
    logger.info(f"Reduced network (both): routes agree within {discrepancy:.3e}")
    return ReductionResult(reduced, "slh", reduced_gen, route, discrepancy)


def convert_network(spec: NetworkSpec, to: str, tol: Tolerances = None) -> ReductionResult:
    """Convert a single-component document to the other form."""
    if to not in FORMS:
        raise SizeMismatch(f"Unknown form {to!r}; expected one of {FORMS}")
    tol = tol or default_tolerances()
    comp = spec.single_component()
    model = comp.slh(tol)
    generator = comp.strat(tol) if to == "strat" else None
    return ReductionResult(model, to, generator, name=comp.name, ports=comp.inputs)


def series_network(second: NetworkSpec, first: NetworkSpec, tol: Tolerances = None) -> ReductionResult:
    """second ◁ first for two single-component documents; the result keeps second's ports."""
    tol = tol or default_tolerances()
    comp2, comp1 = second.single_component(), first.single_component()
    if second.hilbert_dim != first.hilbert_dim:
        raise DimMismatch(f"hilbert_dim differs: {second.hilbert_dim} vs {first.hilbert_dim}")
    model = series_slh(comp2.slh(tol), comp1.slh(tol))
    return ReductionResult(model, "slh", name=comp2.name, ports=comp2.inputs)


def network_diagnostics(spec: NetworkSpec, tol: Tolerances = None) -> dict:
    """Well-posedness and representability of the absorbed network, as plain JSON data."""
    tol = tol or default_tolerances()
    open_loop = build_open_loop(spec, tol)
    split = open_loop.split
    absorbed = open_loop.absorbed()
    d = absorbed.dim

    I_i = LabeledBlockMatrix.identity(split.internal, d)
    pivot = relative_pivot((I_i - sub_block(absorbed.S, split.internal, split.internal)).data)

    report = None
    e_ii_ok = None
    try:
        gen = open_loop.absorbed_generator(tol)
    except NotRepresentable as e:
        logger.warning(f"Absorbed network has no Stratonovich form: {e.detail}")
    else:
        report = wellposedness(gen, split, tol).model_dump()
        e_ii_ok = e_ii_representability(absorbed, split, tol)

    return {
        "channels": list(absorbed.channels),
        "external": list(split.external),
        "internal": list(split.internal),
        "routing": [list(c) for c in open_loop.routing.cycles()],
        "components": [
            {"name": comp.name, "form": comp.form, "stratonovich": comp.name not in open_loop.unrepresentable}
            for comp in spec.components
        ],
        "well_posed": pivot >= tol.sing_tol,
        "i_minus_s_ii_pivot": pivot,
        "wellposedness": report,
        "e_ii_invertible": e_ii_ok,
    }


# ============================================
# SERIALIZE
# ============================================

def _format_number(x: float) -> str:
    text = f"{x:.17g}"
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def _dump(value: Any, level: int = 0) -> str:
    """JSON text: objects one key per line, lists without objects on a single line."""
    pad = "  " * level
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f'{pad}  {json.dumps(k, ensure_ascii=False)}: {_dump(v, level + 1)}' for k, v in value.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, list):
        if any(isinstance(v, dict) for v in value):
            items = [f"{pad}  {_dump(v, level + 1)}" for v in value]
            return "[\n" + ",\n".join(items) + f"\n{pad}]"
        return "[" + ", ".join(_dump(v, level + 1) for v in value) + "]"
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _format_number(value)
    return json.dumps(value, ensure_ascii=False)


def _component_payload(name: str, ports: tuple, form: str, model: SLHModel = None,
                       generator: StratGenerator = None) -> dict:
    doc = {"name": name, "inputs": list(ports), "form": form}
    if form == "slh":
        channels = model.channels
        doc["S"] = _format_block_matrix(model.S, channels)
        doc["L"] = [format_operator(model.L.entry(c, ZERO)) for c in channels]
        doc["H"] = format_operator(model.H)
    else:
        doc["E"] = _format_block_matrix(generator.E, (ZERO,) + generator.channels)
    return doc


def _document_text(dim: int, components: list, connections: list) -> str:
    return _dump({"hilbert_dim": dim, "components": components, "connections": connections}) + "\n"


def serialize_network(spec: NetworkSpec) -> str:
    """Canonical text of a full network document."""
    components = []
    for comp in spec.components:
        if comp.form == "slh":
            components.append(_component_payload(comp.name, comp.inputs, "slh", model=comp.payload))
        else:
            components.append(_component_payload(comp.name, comp.inputs, "strat", generator=comp.payload))
    connections = [
        {"from": f"{c.source[0]}.out[{c.source[1]}]", "to": f"{c.target[0]}.in[{c.target[1]}]"}
        for c in spec.connections
    ]
    return _document_text(spec.hilbert_dim, components, connections)


def serialize_model(result: ReductionResult) -> str:
    """One-component document holding the result in its requested form."""
    model = result.model
    ports = result.ports if result.ports is not None else model.channels
    comp = _component_payload(result.name, ports, result.form, model=model, generator=result.generator)
    return _document_text(model.dim, [comp], [])
