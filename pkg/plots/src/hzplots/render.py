"""Render layered polygon sets and sampled trajectories to an image.

A figure spec lists polygon-set layers (file, fill color, label), an
optional trajectory-dot layer and axis cosmetics. Polygon-set files are
either a single object {plane, polygons, leaf_assignments} or a per-step
file {steps: [{step, polygons}, ...]}; every step of a per-step file is
drawn in the layer's color, which is how a whole backward-reachable
sequence gets its uniform fill. Rendering is deterministic: fixed style,
fixed dpi, pinned PNG metadata, no timestamps.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import Polygon as MplPolygon

_NUM_ARRAY = {"type": "array", "items": {"type": "number"}}
_MATRIX = {"type": "array", "items": _NUM_ARRAY}

FIGURE_SPEC_SCHEMA = {
    "type": "object",
    "properties": {
        "layers": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "file": {"type": "string"},
                    "color": {"type": "string"},
                    "label": {"type": "string"},
                    "alpha": {"type": "number"},
                    "edge_color": {"type": "string"},
                },
                "required": ["file", "color"],
                "additionalProperties": False,
            },
        },
        "trajectories": {
            "type": "object",
            "properties": {
                "file": {"type": "string"},
                "color": {"type": "string"},
                "size": {"type": "number"},
                "label": {"type": "string"},
                "only_entering": {"type": "boolean"},
            },
            "required": ["file"],
            "additionalProperties": False,
        },
        "xlabel": {"type": "string"},
        "ylabel": {"type": "string"},
        "title": {"type": "string"},
        "xlim": _NUM_ARRAY,
        "ylim": _NUM_ARRAY,
        "output": {"type": "string"},
    },
    "required": ["layers"],
    "additionalProperties": False,
}

POLYGONS_SCHEMA = {
    "type": "object",
    "properties": {
        "plane": _MATRIX,
        "polygons": {"type": "array", "items": _MATRIX},
        "leaf_assignments": {"type": "array", "items": _NUM_ARRAY},
    },
    "required": ["plane", "polygons"],
}

TRAJECTORIES_SCHEMA = {
    "type": "object",
    "properties": {
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
    "required": ["trajectories"],
}


@dataclass
class LayerSpec:
    file: str
    color: str
    label: Optional[str] = None
    alpha: float = 0.65
    edge_color: Optional[str] = None


@dataclass
class TrajectorySpec:
    file: str
    color: str = "#1f4e9c"
    size: float = 6.0
    label: Optional[str] = None
    only_entering: bool = True


@dataclass
class FigureSpec:
    layers: list
    trajectories: Optional[TrajectorySpec] = None
    xlabel: str = "x1"
    ylabel: str = "x2"
    title: Optional[str] = None
    xlim: Optional[tuple] = None
    ylim: Optional[tuple] = None
    output: str = "figure.png"
    base_dir: Path = field(default_factory=Path)


def load_figure_spec(path) -> FigureSpec:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    jsonschema.validate(raw, FIGURE_SPEC_SCHEMA)
    layers = [LayerSpec(**entry) for entry in raw["layers"]]
    traj = TrajectorySpec(**raw["trajectories"]) if "trajectories" in raw else None
    return FigureSpec(
        layers=layers,
        trajectories=traj,
        xlabel=raw.get("xlabel", "x1"),
        ylabel=raw.get("ylabel", "x2"),
        title=raw.get("title"),
        xlim=tuple(raw["xlim"]) if "xlim" in raw else None,
        ylim=tuple(raw["ylim"]) if "ylim" in raw else None,
        output=raw.get("output", "figure.png"),
        base_dir=path.parent,
    )


def _polygon_groups(path: Path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if "steps" in data:
        groups = []
        for entry in data["steps"]:
            jsonschema.validate(entry["polygons"], POLYGONS_SCHEMA)
            groups.append(entry["polygons"]["polygons"])
        return groups
    jsonschema.validate(data, POLYGONS_SCHEMA)
    return [data["polygons"]]


def _draw_polygon(ax, vertices, color, alpha, edge_color, label):
    if len(vertices) >= 3:
        ax.add_patch(MplPolygon(vertices, closed=True, facecolor=color,
                                edgecolor=edge_color or color, alpha=alpha,
                                linewidth=0.8, label=label))
    elif len(vertices) == 2:
        (x1, y1), (x2, y2) = vertices
        ax.plot([x1, x2], [y1, y2], color=edge_color or color, alpha=alpha,
                linewidth=1.6, label=label, solid_capstyle="round")
    elif len(vertices) == 1:
        ax.plot([vertices[0][0]], [vertices[0][1]], marker="o", markersize=3,
                color=edge_color or color, alpha=alpha, label=label)


def render(spec: FigureSpec, output: Optional[str] = None) -> Path:
    """Draw the figure and return the written path.

    Pure function of the referenced input files: the same spec and inputs
    give byte-identical output.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=160)
    for layer in spec.layers:
        label = layer.label
        for group in _polygon_groups(spec.base_dir / layer.file):
            for vertices in group:
                _draw_polygon(ax, vertices, layer.color, layer.alpha,
                              layer.edge_color, label)
                label = None  # one legend entry per layer

    if spec.trajectories is not None:
        traj = spec.trajectories
        with open(spec.base_dir / traj.file, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        jsonschema.validate(data, TRAJECTORIES_SCHEMA)
        xs, ys = [], []
        for rec in data["trajectories"]:
            if traj.only_entering and rec["enters_target_at"] is None:
                continue
            xs.append(rec["initial"][0])
            ys.append(rec["initial"][1])
        if xs:
            ax.scatter(xs, ys, s=traj.size, color=traj.color, zorder=5,
                       label=traj.label, linewidths=0)

    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    if spec.title:
        ax.set_title(spec.title)
    if spec.xlim:
        ax.set_xlim(*spec.xlim)
    if spec.ylim:
        ax.set_ylim(*spec.ylim)
    ax.set_aspect("auto")
    ax.grid(True, linewidth=0.3, alpha=0.4)
    handles, labels = ax.get_legend_handles_labels()
    if labels:
        ax.legend(loc="upper right", fontsize=8)
    ax.autoscale_view()

    out_path = Path(output) if output else spec.base_dir / spec.output
    fig.savefig(out_path, format=out_path.suffix.lstrip(".") or "png",
                metadata={"Software": "hzplots"})
    plt.close(fig)
    return out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hzplots-render",
        description="Render polygon-set/trajectory JSON files to a figure.")
    parser.add_argument("--spec", required=True, help="figure spec JSON")
    parser.add_argument("--out", default=None, help="override the output path")
    args = parser.parse_args(argv)
    try:
        spec = load_figure_spec(args.spec)
        out = render(spec, args.out)
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
