"""Scenario files, JSON schemas and output validation.

A scenario JSON is the single source of truth for a verification run: plant
matrices, controller (inline or a path relative to the scenario file), the
state/target/initial sets, horizon, optional interval override and solver
tolerances. Sets are written either as {"box": {"lower", "upper"}} or as a
full hybrid-zonotope object. Every file the CLI writes is validated against
the schemas below before it hits disk.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import hz as hzm
from .hz import HybridZonotope
from .milp import DEFAULT_NODE_LIMIT, STRICT_TOL
from .network import FeedforwardNetwork, load_network, network_from_dict
from .reach import LinearPlant

__all__ = [
    "Scenario",
    "Tolerances",
    "load_scenario",
    "set_from_spec",
    "set_to_spec",
    "write_json",
    "SCHEMAS",
]

_NUM_ARRAY = {"type": "array", "items": {"type": "number"}}
_MATRIX = {"type": "array", "items": _NUM_ARRAY}

_HZ_SCHEMA = {
    "type": "object",
    "properties": {
        "center": _NUM_ARRAY,
        "Gc": _MATRIX, "Gb": _MATRIX, "Ac": _MATRIX, "Ab": _MATRIX,
        "b": _NUM_ARRAY,
    },
    "required": ["center"],
    "additionalProperties": False,
}

_SET_SPEC = {
    "oneOf": [
        _HZ_SCHEMA,
        {
            "type": "object",
            "properties": {"box": {
                "type": "object",
                "properties": {"lower": _NUM_ARRAY, "upper": _NUM_ARRAY},
                "required": ["lower", "upper"],
                "additionalProperties": False,
            }},
            "required": ["box"],
            "additionalProperties": False,
        },
    ]
}

SCHEMAS = {
    "hz": _HZ_SCHEMA,
    "graph_report": {
        "type": "object",
        "properties": {
            "counts": {"type": "object"},
            "expected": {"type": "object"},
            "formulas_pass": {"type": "boolean"},
            "alpha": {"type": "number"},
            "beta": {"type": "number"},
            "hidden_neurons": {"type": "integer"},
            "wall_time": {"type": "number"},
        },
        "required": ["counts", "expected", "formulas_pass"],
    },
    "brs": {
        "type": "object",
        "properties": {
            "horizon": {"type": "integer"},
            "steps": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "step": {"type": "integer"},
                        "set": _HZ_SCHEMA,
                        "n_g": {"type": "integer"},
                        "n_b": {"type": "integer"},
                        "n_c": {"type": "integer"},
                        "wall_time": {"type": "number"},
                        "empty": {"type": ["boolean", "null"]},
                    },
                    "required": ["step", "set", "n_g", "n_b", "n_c"],
                },
            },
        },
        "required": ["horizon", "steps"],
    },
    "verify_report": {
        "type": "object",
        "properties": {
            "safe": {"type": "boolean"},
            "relaxed": {"type": "boolean"},
            "steps": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "step": {"type": "integer"},
                        "safe": {"type": "boolean"},
                        "objective": {"type": ["number", "null"]},
                        "node_count": {"type": "integer"},
                        "wall_time": {"type": "number"},
                        "method": {"type": "string"},
                        "witness_state": {"oneOf": [_NUM_ARRAY, {"type": "null"}]},
                        "witness_trajectory": {"oneOf": [_MATRIX, {"type": "null"}]},
                        "witness_confirmed": {"type": ["boolean", "null"]},
                    },
                    "required": ["step", "safe"],
                },
            },
        },
        "required": ["safe", "steps"],
    },
    "polygons": {
        "type": "object",
        "properties": {
            "plane": _MATRIX,
            "polygons": {"type": "array", "items": _MATRIX},
            "leaf_assignments": {"type": "array", "items": _NUM_ARRAY},
        },
        "required": ["plane", "polygons", "leaf_assignments"],
    },
    "polygon_steps": {
        "type": "object",
        "properties": {
            "steps": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {"step": {"type": "integer"},
                                   "polygons": {"type": "object"}},
                    "required": ["step", "polygons"],
                },
            },
        },
        "required": ["steps"],
    },
    "trajectories": {
        "type": "object",
        "properties": {
            "seed": {"type": "integer"},
            "samples": {"type": "integer"},
            "horizon": {"type": "integer"},
            "trajectories": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "initial": _NUM_ARRAY,
                        "states": _MATRIX,
                        "enters_target_at": {"type": ["integer", "null"]},
                    },
                    "required": ["initial", "states", "enters_target_at"],
                },
            },
        },
        "required": ["seed", "samples", "horizon", "trajectories"],
    },
    "scenario": {
        "type": "object",
        "properties": {
            "name": {"type": "string"},
            "plant": {
                "type": "object",
                "properties": {"A": _MATRIX, "B": _MATRIX},
                "required": ["A", "B"],
            },
            "controller": {"type": ["string", "object"]},
            "state_set": _SET_SPEC,
            "target": _SET_SPEC,
            "initial_set": _SET_SPEC,
            "horizon": {"type": "integer", "minimum": 1},
            "alpha": {"type": "number"},
            "beta": {"type": "number"},
            "seed": {"type": "integer"},
            "flags": {
                "type": "object",
                "properties": {"prune_empty": {"type": "boolean"},
                               "relax": {"type": "boolean"}},
                "additionalProperties": False,
            },
            "tolerances": {
                "type": "object",
                "properties": {"membership": {"type": "number"},
                               "strict": {"type": "number"},
                               "node_limit": {"type": "integer"}},
                "additionalProperties": False,
            },
        },
        "required": ["plant", "controller", "state_set", "target", "horizon"],
    },
}


@dataclass
class Tolerances:
    membership: float = hzm.DEFAULT_TOL
    strict: float = STRICT_TOL
    node_limit: int = DEFAULT_NODE_LIMIT


@dataclass
class Scenario:
    plant: LinearPlant
    controller: FeedforwardNetwork
    state_set: HybridZonotope
    target: HybridZonotope
    horizon: int
    initial_set: Optional[HybridZonotope] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    seed: int = 0
    prune_empty: bool = False
    relax: bool = False
    tolerances: Tolerances = field(default_factory=Tolerances)
    name: str = "scenario"


def set_from_spec(spec: dict) -> HybridZonotope:
    if "box" in spec:
        return hzm.from_box(spec["box"]["lower"], spec["box"]["upper"])
    return hzm.hz_from_dict(spec)


def set_to_spec(z: HybridZonotope) -> dict:
    return hzm.hz_to_dict(z)


def load_scenario(path) -> Scenario:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    jsonschema.validate(raw, SCHEMAS["scenario"])

    controller_spec = raw["controller"]
    if isinstance(controller_spec, str):
        controller = load_network(path.parent / controller_spec)
    else:
        controller = network_from_dict(controller_spec)

    state_set = set_from_spec(raw["state_set"])
    sets = {
        "target": set_from_spec(raw["target"]),
        "initial_set": set_from_spec(raw["initial_set"]) if "initial_set" in raw else None,
    }
    for label, value in sets.items():
        if value is not None and value.dim != state_set.dim:
            raise hzm.DimensionMismatchError(
                f"{label} dimension ({value.dim}) != state set dimension ({state_set.dim})")

    tol_raw = raw.get("tolerances", {})
    flags = raw.get("flags", {})
    return Scenario(
        plant=LinearPlant(raw["plant"]["A"], raw["plant"]["B"]),
        controller=controller,
        state_set=state_set,
        target=sets["target"],
        initial_set=sets["initial_set"],
        horizon=int(raw["horizon"]),
        alpha=raw.get("alpha"),
        beta=raw.get("beta"),
        seed=int(raw.get("seed", 0)),
        prune_empty=bool(flags.get("prune_empty", False)),
        relax=bool(flags.get("relax", False)),
        tolerances=Tolerances(
            membership=float(tol_raw.get("membership", hzm.DEFAULT_TOL)),
            strict=float(tol_raw.get("strict", STRICT_TOL)),
            node_limit=int(tol_raw.get("node_limit", DEFAULT_NODE_LIMIT)),
        ),
        name=raw.get("name", path.stem),
    )


def write_json(path, payload: dict, schema: Optional[str] = None) -> None:
    """Dump JSON deterministically, validating against a named schema first."""
    if schema is not None:
        jsonschema.validate(payload, SCHEMAS[schema])
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
