# example_catalog.py
# Bundled network documents, keyed by file stem.
# `cli examples` writes each one as <stem>.json in canonical form.
#
# "document" = the raw network document (same schema as the input files)
# "description" = one line shown by `GET /examples`

import json

from netlist_io import NetworkSpec, parse_network, serialize_network

ZERO_C = [0.0, 0.0]
ONE_C = [1.0, 0.0]

# 2x2 operators on a two-level system, basis (|e>, |g>)
SIGMA_MINUS = [[ZERO_C, ZERO_C], [ONE_C, ZERO_C]]
SIGMA_MINUS_HALF = [[ZERO_C, ZERO_C], [[0.5, 0.0], ZERO_C]]


def _beamsplitter(alpha: float, beta: list, gamma: float) -> dict:
    beta_conj = [beta[0], -beta[1]]
    return {
        "hilbert_dim": 1,
        "components": [{
            "name": "bs",
            "inputs": ["1", "2"],
            "form": "strat",
            "E": [
                [ZERO_C, ZERO_C, ZERO_C],
                [ZERO_C, [alpha, 0.0], beta],
                [ZERO_C, beta_conj, [gamma, 0.0]],
            ],
        }],
        "connections": [{"from": "bs.out[2]", "to": "bs.in[2]"}],
    }


EXAMPLE_CATALOG = {

    "beamsplitter_gamma0": {
        "description": "Beam-splitter with gamma = 0, channel 2 fed back; S_fb = -1 and E_ii = 0",
        "document": _beamsplitter(0.5, [1.0, 0.0], 0.0),
    },

    "beamsplitter": {
        "description": "Beam-splitter with gamma != 0, channel 2 fed back; both reduction routes agree",
        "document": _beamsplitter(0.5, [1.0, 0.5], 0.75),
    },

    "swap_gate": {
        "description": "Two-channel swap S = [[0, 1], [1, 0]]; no Stratonovich form (2-cycle)",
        "document": {
            "hilbert_dim": 1,
            "components": [{
                "name": "swap",
                "inputs": ["1", "2"],
                "form": "slh",
                "S": [[ZERO_C, ONE_C], [ONE_C, ZERO_C]],
                "L": [ZERO_C, ZERO_C],
                "H": ZERO_C,
            }],
            "connections": [],
        },
    },

    "mirror": {
        "description": "Optical mirror S = -1; no Stratonovich form",
        "document": {
            "hilbert_dim": 1,
            "components": [{
                "name": "mirror",
                "inputs": ["1"],
                "form": "slh",
                "S": [[[-1.0, 0.0]]],
                "L": [ZERO_C],
                "H": ZERO_C,
            }],
            "connections": [],
        },
    },

    "cascade": {
        "description": "Two driven two-level systems, the output of a1 driving a2; reduces to a2 ◁ a1",
        "document": {
            "hilbert_dim": 2,
            "components": [
                {
                    "name": "a1",
                    "inputs": ["1"],
                    "form": "slh",
                    "S": [[ONE_C]],
                    "L": [SIGMA_MINUS],
                    "H": [[[0.5, 0.0], ZERO_C], [ZERO_C, [-0.5, 0.0]]],
                },
                {
                    "name": "a2",
                    "inputs": ["1"],
                    "form": "slh",
                    "S": [[ONE_C]],
                    "L": [SIGMA_MINUS_HALF],
                    "H": [[[0.25, 0.0], ZERO_C], [ZERO_C, [-0.25, 0.0]]],
                },
            ],
            "connections": [{"from": "a1.out[1]", "to": "a2.in[1]"}],
        },
    },

    "closed_loop": {
        "description": "Every channel fed back: the reduced model has no channels, only H",
        "document": {
            "hilbert_dim": 2,
            "components": [{
                "name": "cavity",
                "inputs": ["1"],
                "form": "slh",
                "S": [[[0.0, 1.0]]],
                "L": [SIGMA_MINUS],
                "H": [[ONE_C, ZERO_C], [ZERO_C, ZERO_C]],
            }],
            "connections": [{"from": "cavity.out[1]", "to": "cavity.in[1]"}],
        },
    },
}


def example_names() -> list:
    return list(EXAMPLE_CATALOG.keys())


def example_spec(name: str) -> NetworkSpec:
    """Parsed example; KeyError for unknown names."""
    return parse_network(json.dumps(EXAMPLE_CATALOG[name]["document"]))


def example_text(name: str) -> str:
    """Canonical serialized document for an example."""
    return serialize_network(example_spec(name))
