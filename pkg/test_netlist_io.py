import json

import numpy as np
import pytest

from conftest import scaled
from errors import (
    CrossCheckFailed,
    DimMismatch,
    DuplicateConnection,
    InvariantViolation,
    NetlistSyntaxError,
    NotRepresentable,
    SchurUndefined,
    SizeMismatch,
    UnknownPort,
)
from example_catalog import EXAMPLE_CATALOG, example_names, example_spec, example_text
from models import ZERO, SLHModel
from netlist_io import (
    _cross_check,
    ComponentDecl,
    Connection,
    NetworkSpec,
    build_open_loop,
    convert_network,
    network_diagnostics,
    parse_network,
    reduce_network,
    serialize_model,
    serialize_network,
    series_network,
)
from network_calculus import ChannelSplit, series_slh
from sampling import random_strat

ONE = [1.0, 0.0]
ZERO_C = [0.0, 0.0]


def one_port(name="m", S=ONE, L=ZERO_C, H=ZERO_C, d=1, connections=()):
    return json.dumps({
        "hilbert_dim": d,
        "components": [{"name": name, "inputs": ["1"], "form": "slh", "S": [[S]], "L": [L], "H": H}],
        "connections": list(connections),
    })


def document(name):
    return json.dumps(EXAMPLE_CATALOG[name]["document"])


class TestParse:
    def test_minimal(self, tol):
        spec = parse_network(one_port(), tol)
        assert spec.channels == ("m.1",)
        assert build_open_loop(spec, tol).split.internal == ()

    def test_self_loop(self, tol):
        spec = parse_network(document("beamsplitter_gamma0"), tol)
        open_loop = build_open_loop(spec, tol)
        assert open_loop.split.internal == ("bs.2",)
        assert open_loop.split.external == ("bs.1",)
        assert open_loop.routing.is_identity

    def test_unknown_port(self, tol):
        doc = EXAMPLE_CATALOG["beamsplitter_gamma0"]["document"]
        bad = dict(doc, connections=[{"from": "bs.out[3]", "to": "bs.in[3]"}])
        with pytest.raises(UnknownPort):
            parse_network(json.dumps(bad), tol)

    def test_wrong_direction(self, tol):
        with pytest.raises(UnknownPort):
            parse_network(one_port(connections=[{"from": "m.in[1]", "to": "m.in[1]"}]), tol)

    def test_duplicate_connection(self, tol):
        conns = [{"from": "m.out[1]", "to": "m.in[1]"}, {"from": "m.out[1]", "to": "m.in[1]"}]
        with pytest.raises(DuplicateConnection):
            parse_network(one_port(connections=conns), tol)

    def test_json_error_has_position(self, tol):
        with pytest.raises(NetlistSyntaxError) as exc:
            parse_network('{\n  "hilbert_dim": 1,\n  "components": [\n', tol)
        assert exc.value.line is not None
        assert exc.value.to_dict()["line"] == exc.value.line

    def test_schema_error(self, tol):
        with pytest.raises(NetlistSyntaxError):
            parse_network(json.dumps({"hilbert_dim": 1, "components": []}), tol)

    def test_schema_error_has_position(self, tol):
        doc = json.loads(one_port())
        doc["hilbert_dim"] = 0
        text = json.dumps(doc, indent=2)
        with pytest.raises(NetlistSyntaxError) as exc:
            parse_network(text, tol)
        line = text.splitlines()[exc.value.line - 1]
        assert line[exc.value.column - 1:].startswith('"hilbert_dim"')

    def test_boolean_operator_rejected(self, tol):
        with pytest.raises(NetlistSyntaxError):
            parse_network(one_port(H=[[[True, False]]]), tol)
        with pytest.raises(NetlistSyntaxError):
            parse_network(one_port(S=[True, False]), tol)

    def test_bad_port_reference(self, tol):
        with pytest.raises(NetlistSyntaxError):
            parse_network(one_port(connections=[{"from": "m-out-1", "to": "m.in[1]"}]), tol)

    def test_form_payload_mismatch(self, tol):
        doc = json.loads(one_port())
        doc["components"][0]["form"] = "strat"
        with pytest.raises(NetlistSyntaxError):
            parse_network(json.dumps(doc), tol)

    def test_not_unitary(self, tol):
        with pytest.raises(InvariantViolation):
            parse_network(one_port(S=[2.0, 0.0]), tol)

    def test_not_hermitian_structured(self, tol):
        doc = {
            "hilbert_dim": 1,
            "components": [{"name": "x", "inputs": ["1"], "form": "strat", "E": [[ZERO_C, ONE], [ZERO_C, ZERO_C]]}],
            "connections": [],
        }
        with pytest.raises(InvariantViolation):
            parse_network(json.dumps(doc), tol)

    def test_operator_shape(self, tol):
        with pytest.raises(DimMismatch):
            parse_network(one_port(d=2, H=[[ONE]]), tol)

    def test_scalar_lifts_to_identity(self, tol):
        spec = parse_network(one_port(d=2, H=[0.5, 0.0]), tol)
        np.testing.assert_array_equal(spec.components[0].payload.H, 0.5 * np.eye(2))


class TestOpenLoop:
    def test_disconnected_components(self, tol):
        doc = EXAMPLE_CATALOG["cascade"]["document"]
        spec = parse_network(json.dumps(dict(doc, connections=[])), tol)
        open_loop = build_open_loop(spec, tol)
        assert open_loop.split.internal == ()
        assert open_loop.routing.is_identity
        result = reduce_network(spec, "ito", tol)
        assert result.model.max_abs_diff(open_loop.model) == 0.0

    def test_unrepresentable_component_is_recorded(self, tol):
        open_loop = build_open_loop(parse_network(document("mirror"), tol), tol)
        assert open_loop.generator is None
        assert open_loop.unrepresentable == ("mirror",)
        with pytest.raises(NotRepresentable):
            open_loop.absorbed_generator(tol)

    def test_cascade_routing(self, tol):
        open_loop = build_open_loop(example_spec("cascade"), tol)
        assert open_loop.routing.image == (1, 0)
        assert open_loop.split.internal == ("a1.1",)


class TestReduce:
    def test_beamsplitter_gamma0_ito(self, tol):
        result = reduce_network(example_spec("beamsplitter_gamma0"), "ito", tol)
        np.testing.assert_allclose(result.model.S.data, [[-1.0]], atol=1e-10)

    @pytest.mark.parametrize("route", ["strat", "both"])
    def test_beamsplitter_gamma0_strat(self, route, tol):
        with pytest.raises(SchurUndefined):
            reduce_network(example_spec("beamsplitter_gamma0"), route, tol)

    def test_beamsplitter_both(self, tol):
        result = reduce_network(example_spec("beamsplitter"), "both", tol)
        assert result.discrepancy <= 10 * tol.eq_tol
        assert result.generator is not None

    def test_cascade_is_series_product(self, tol):
        spec = example_spec("cascade")
        a1, a2 = (c.payload for c in spec.components)
        result = reduce_network(spec, "ito", tol)
        assert result.model.channels == ("a2.1",)
        assert result.model.max_abs_diff(series_slh(a2, a1)) <= 1e-12

    def test_closed_loop(self, tol):
        result = reduce_network(example_spec("closed_loop"), "ito", tol)
        assert result.model.channels == ()
        np.testing.assert_allclose(result.model.H, np.diag([1.5, 0.0]), atol=1e-14)

    def test_unknown_route(self, tol):
        with pytest.raises(SizeMismatch):
            reduce_network(example_spec("mirror"), "magic", tol)

    def test_random_self_loops_both_routes(self, rng, tol):
        for _ in range(20):
            d = int(rng.integers(1, 3))
            components = []
            for name in ("p", "q"):
                channels = (f"{name}.1", f"{name}.2")
                split = ChannelSplit.from_internal(channels, [f"{name}.2"])
                gen = random_strat(rng, channels, d, split=split, min_pivot=1e-2)
                components.append(ComponentDecl(name, ("1", "2"), "strat", gen))
            loops = (Connection(("p", "2"), ("p", "2")), Connection(("q", "2"), ("q", "2")))
            spec = NetworkSpec(d, tuple(components), loops)
            result = reduce_network(spec, "both", tol)
            assert result.model.channels == ("p.1", "q.1")
            assert result.discrepancy <= scaled(10 * tol.eq_tol, result.model.L.data, result.model.H)

    def test_cross_check_failure(self, tol, monkeypatch):
        import netlist_io

        monkeypatch.setattr(netlist_io, "CROSS_CHECK_FACTOR", -1.0)
        with pytest.raises(CrossCheckFailed):
            reduce_network(example_spec("beamsplitter"), "both", tol)


    def test_cross_check_bound_scales_with_model_size(self, tol):
        small = SLHModel.from_arrays(["c"], [[1.0]], [[0.0]], [[1.0]])
        large = SLHModel.from_arrays(["c"], [[1.0]], [[0.0]], [[1e6]])
        with pytest.raises(CrossCheckFailed):
            _cross_check(small, SLHModel.from_arrays(["c"], [[1.0]], [[0.0]], [[1.0 + 5e-8]]), "V", tol)
        moved = SLHModel.from_arrays(["c"], [[1.0]], [[0.0]], [[1e6 + 5e-4]])
        assert _cross_check(large, moved, "V", tol) == pytest.approx(5e-4, rel=1e-6)


class TestConvertAndSeries:
    def test_mirror_has_no_strat_form(self, tol):
        with pytest.raises(NotRepresentable):
            convert_network(example_spec("mirror"), "strat", tol)

    def test_convert_keeps_ports(self, tol):
        doc = EXAMPLE_CATALOG["beamsplitter"]["document"]
        spec = parse_network(json.dumps(dict(doc, connections=[])), tol)
        out = json.loads(serialize_model(convert_network(spec, "slh", tol)))
        component = out["components"][0]
        assert component["name"] == "bs"
        assert component["inputs"] == ["1", "2"]
        assert component["form"] == "slh"

    def test_convert_needs_single_component(self, tol):
        with pytest.raises(SizeMismatch):
            convert_network(example_spec("cascade"), "strat", tol)

    def test_series_of_mirrors(self, tol):
        mirror = example_spec("mirror")
        result = series_network(mirror, mirror, tol)
        np.testing.assert_allclose(result.model.S.data, [[1.0]])


class TestSerialize:
    @pytest.mark.parametrize("name", example_names())
    def test_examples_byte_stable(self, name, tol):
        text = example_text(name)
        assert serialize_network(parse_network(text, tol)) == text

    def test_reduced_model_roundtrip_is_exact(self, tol):
        result = reduce_network(example_spec("cascade"), "ito", tol)
        reparsed = parse_network(serialize_model(result), tol).single_component().payload
        np.testing.assert_array_equal(reparsed.S.data, result.model.S.data)
        np.testing.assert_array_equal(reparsed.L.data, result.model.L.data)
        np.testing.assert_array_equal(reparsed.H, result.model.H)

    def test_reduced_beamsplitter_document(self, tol):
        doc = json.loads(serialize_model(reduce_network(example_spec("beamsplitter_gamma0"), "ito", tol)))
        component = doc["components"][0]
        assert component["form"] == "slh"
        assert component["inputs"] == ["bs.1"]
        assert component["S"][0][0] == pytest.approx([-1.0, 0.0], abs=1e-10)
        assert doc["connections"] == []

    def test_strat_result_document(self, tol):
        result = reduce_network(example_spec("beamsplitter"), "strat", tol)
        component = json.loads(serialize_model(result))["components"][0]
        assert component["form"] == "strat"
        assert "S" not in component
        E = np.array(component["E"])
        assert E.shape == (2, 2, 2)
        np.testing.assert_allclose(E[..., 0] + 1j * E[..., 1], result.generator.E.data, atol=0)

    def test_float_format(self, tol):
        text = serialize_model(reduce_network(example_spec("mirror"), "ito", tol))
        assert "[-1.0, 0.0]" in text
        assert text.endswith("}\n")

    def test_parse_serialize_parse(self, tol):
        spec = example_spec("cascade")
        again = parse_network(serialize_network(spec), tol)
        for a, b in zip(spec.components, again.components):
            assert a.payload.max_abs_diff(b.payload) == 0.0
        assert [c.source for c in again.connections] == [c.source for c in spec.connections]


class TestDiagnostics:
    def test_beamsplitter_gamma0(self, tol):
        diag = network_diagnostics(example_spec("beamsplitter_gamma0"), tol)
        assert diag["internal"] == ["bs.2"]
        assert diag["well_posed"]
        assert diag["wellposedness"]["e_ii_invertible"] is False
        assert diag["wellposedness"]["script_e_ii_invertible"] is True
        assert diag["e_ii_invertible"] is False
        json.dumps(diag)

    def test_swap_gate(self, tol):
        diag = network_diagnostics(example_spec("swap_gate"), tol)
        assert diag["components"] == [{"name": "swap", "form": "slh", "stratonovich": False}]
        assert diag["wellposedness"] is None
        assert diag["well_posed"]

    def test_l_column_label(self, tol):
        spec = example_spec("cascade")
        assert spec.components[0].payload.L.cols == (ZERO,)
