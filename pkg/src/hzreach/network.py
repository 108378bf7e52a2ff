"""Exact hybrid-zonotope graph sets of ReLU feedforward networks.

The input-output relation u = pi(x) of a ReLU network over a bounded domain
is a finite union of affine pieces, which a hybrid zonotope captures exactly:
the scalar ReLU graph over [-alpha, beta] is the union of its inactive
segment ([-alpha, 0] x {0}) and its active segment ({(z, z) : z in [0, beta]}),
encoded with 6 continuous factors, 1 binary factor and 4 equality rows per
neuron. Stacking neurons by Cartesian power, permuting the interleaved
(z_i, x_i) pairs into (z-block, x-block) and pinning the z-block to the
layer's pre-activation set yields one layer's activation graph; chaining the
layers and finally stacking the domain on top of the network output gives the
graph of the whole network.

The growth is linear in the hidden neuron count N: a graph over a domain with
counts (n_g, n_b, n_c) has exactly (n_g + 6N, n_b + N, n_c + 5N).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import hz as hzm
from .errors import DimensionMismatchError, EnclosureError
from .hz import HybridZonotope, IntervalBox

__all__ = [
    "FeedforwardNetwork",
    "SaturationBounds",
    "relu_graph_hz",
    "interleave_permutation",
    "activation_graph",
    "fnn_graph",
    "saturate_network",
    "preactivation_bounds",
    "auto_interval",
    "network_to_dict",
    "network_from_dict",
    "load_network",
    "save_network",
]


@dataclass(frozen=True)
class SaturationBounds:
    """Componentwise clamp interval for a controller output."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionMismatchError(
                f"saturation lower length ({lo.shape[0]}) != upper length ({hi.shape[0]})")
        if np.any(lo >= hi):
            raise DimensionMismatchError("saturation bounds need lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)


@dataclass(frozen=True)
class FeedforwardNetwork:
    """ReLU network: hidden layers apply ReLU, the final layer is affine only.

    ``saturation`` is carried as metadata by loaders; the clamp itself is
    materialized as two extra ReLU layers by :func:`saturate_network`.
    """

    weights: tuple
    biases: tuple
    saturation: Optional[SaturationBounds] = None

    def __post_init__(self):
        ws = tuple(np.asarray(w, dtype=float) for w in self.weights)
        vs = tuple(np.asarray(v, dtype=float).reshape(-1) for v in self.biases)
        if len(ws) == 0 or len(ws) != len(vs):
            raise DimensionMismatchError(
                f"weights ({len(ws)}) and biases ({len(vs)}) must pair up, at least one layer")
        for k, (w, v) in enumerate(zip(ws, vs)):
            if w.ndim != 2:
                raise DimensionMismatchError(f"weight {k} must be a matrix")
            if w.shape[0] != v.shape[0]:
                raise DimensionMismatchError(
                    f"weight {k} rows ({w.shape[0]}) != bias {k} length ({v.shape[0]})")
            if k and w.shape[1] != ws[k - 1].shape[0]:
                raise DimensionMismatchError(
                    f"weight {k} columns ({w.shape[1]}) != weight {k-1} rows ({ws[k-1].shape[0]})")
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", vs)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def hidden_widths(self) -> tuple:
        return tuple(w.shape[0] for w in self.weights[:-1])

    @property
    def n_hidden(self) -> int:
        """Total hidden neuron count across all ReLU layers."""
        return int(sum(self.hidden_widths))

    def evaluate(self, x) -> np.ndarray:
        """Forward pass: ReLU on every layer except the last (affine) one."""
        h = np.asarray(x, dtype=float).reshape(-1)
        if h.shape[0] != self.input_dim:
            raise DimensionMismatchError(
                f"input length ({h.shape[0]}) != network input dim ({self.input_dim})")
        for w, v in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(w @ h + v, 0.0)
        return self.weights[-1] @ h + self.biases[-1]

    def preactivations(self, x) -> list:
        """Pre-activation vectors of every hidden layer for one input."""
        h = np.asarray(x, dtype=float).reshape(-1)
        zs = []
        for w, v in zip(self.weights[:-1], self.biases[:-1]):
            z = w @ h + v
            zs.append(z)
            h = np.maximum(z, 0.0)
        return zs


def relu_graph_hz(alpha: float, beta: float) -> HybridZonotope:
    """Graph {(z, max(z, 0)) : z in [-alpha, beta]} as one hybrid zonotope.

    Union of the inactive and active segments; binary factor +1 selects the
    inactive branch (x = 0), -1 the active branch (x = z). Counts: 6
    continuous factors, 1 binary, 4 equality rows.
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError(f"interval scalars must be positive, got ({alpha}, {beta})")
    a, b = float(alpha), float(beta)
    gc = np.array([[a / 2, b / 2, 0.0, 0.0, 0.0, 0.0],
                   [0.0, b / 2, 0.0, 0.0, 0.0, 0.0]])
    gb = np.array([[-(a + b) / 4], [-b / 4]])
    center = np.array([(b - a) / 4, b / 4])
    ac = np.array([
        [1.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0, 0.0, 0.0, 1.0],
    ])
    ab = np.array([[0.5], [0.5], [-0.5], [-0.5]])
    rhs = np.full(4, 0.5)
    return hzm.make_hz(center, gc, gb, ac, ab, rhs)


def interleave_permutation(width: int) -> np.ndarray:
    """Permutation matrix sending (z1, x1, ..., zk, xk) to (z1..zk, x1..xk)."""
    order = np.concatenate([np.arange(0, 2 * width, 2), np.arange(1, 2 * width, 2)])
    return np.eye(2 * width)[order, :]


def _check_enclosure(box: IntervalBox, alpha: float, beta: float,
                     layer: Optional[int] = None) -> None:
    low_excess = -alpha - box.lower
    high_excess = box.upper - beta
    worst = np.maximum(low_excess, high_excess)
    i = int(np.argmax(worst))
    if worst[i] > 0:
        where = f" at layer {layer}" if layer is not None else ""
        raise EnclosureError(
            f"pre-activation enclosure violates [-{alpha}, {beta}]{where}: "
            f"coordinate {i} exceeds by {worst[i]:.6g}",
            coordinate=i, excess=float(worst[i]), layer=layer)


def activation_graph(domain: HybridZonotope, alpha: float, beta: float, *,
                     domain_factors_first: bool = False,
                     layer: Optional[int] = None,
                     certified_box: Optional[IntervalBox] = None) -> HybridZonotope:
    """Graph {(z, relu(z)) : z in domain} of the componentwise ReLU.

    Requires interval_enclosure(domain) within [-alpha, beta] on every
    coordinate, else raises :class:`EnclosureError` naming the coordinate and
    overshoot. A caller that already holds a tighter box certified to contain
    the domain (whole-network construction does, via interval propagation)
    may pass it as ``certified_box`` to be checked instead; the generator-sum
    enclosure of a constructed pre-activation set is loose by design and
    would reject deep compositions whose true ranges are fine.

    ``domain_factors_first`` puts the domain's factor columns ahead of the
    per-neuron graph factors, which whole-network construction relies on to
    keep the domain generators in the leading block.
    """
    width = domain.dim
    box = certified_box if certified_box is not None else hzm.interval_enclosure(domain)
    _check_enclosure(box, alpha, beta, layer)
    cell = relu_graph_hz(alpha, beta)
    stacked = hzm.cartesian_power(cell, width)
    graph_over_box = hzm.linear_map(interleave_permutation(width), stacked)
    project_inputs = np.hstack([np.eye(width), np.zeros((width, width))])
    return hzm.generalized_intersection(
        graph_over_box, project_inputs, domain,
        z1_factors_first=not domain_factors_first)


def fnn_graph(net: FeedforwardNetwork, domain: HybridZonotope,
              alpha: Optional[float] = None, beta: Optional[float] = None
              ) -> tuple[HybridZonotope, HybridZonotope]:
    """Exact graph {(x, pi(x)) : x in domain} and output set of a network.

    Walks the layers: affine-map the running set into pre-activation space,
    take the activation graph over it, project onto the outputs, and after
    the final affine layer stack the domain's coordinates back on top while
    reusing its leading generator columns. Hidden-layer interval checks use
    a single (alpha, beta) pair; omitted values are auto-sized from interval
    propagation (see :func:`auto_interval`).

    Returns ``(graph, output_set)`` with graph in R^(n+m).
    """
    if net.input_dim != domain.dim:
        raise DimensionMismatchError(
            f"network input dim ({net.input_dim}) != domain dimension ({domain.dim})")
    if alpha is None or beta is None:
        auto_a, auto_b = auto_interval(net, domain)
        alpha = auto_a if alpha is None else alpha
        beta = auto_b if beta is None else beta
    layer_boxes = preactivation_bounds(net, hzm.interval_enclosure(domain))

    running = domain
    for k in range(net.n_layers - 1):
        w, v = net.weights[k], net.biases[k]
        pre = hzm.affine_map(w, running, v)
        graph_k = activation_graph(pre, alpha, beta,
                                   domain_factors_first=True, layer=k,
                                   certified_box=layer_boxes[k])
        width = w.shape[0]
        take_outputs = np.hstack([np.zeros((width, width)), np.eye(width)])
        running = hzm.linear_map(take_outputs, graph_k)
    output_set = hzm.affine_map(net.weights[-1], running, net.biases[-1])

    n, n_gx, n_bx = domain.dim, domain.n_g, domain.n_b
    gc = np.vstack([
        np.hstack([domain.gen_cont, np.zeros((n, output_set.n_g - n_gx))]),
        output_set.gen_cont,
    ])
    gb = np.vstack([
        np.hstack([domain.gen_bin, np.zeros((n, output_set.n_b - n_bx))]),
        output_set.gen_bin,
    ])
    graph = hzm.make_hz(
        np.concatenate([domain.center, output_set.center]),
        gc, gb, output_set.con_cont, output_set.con_bin, output_set.con_rhs)
    return graph, output_set


def saturate_network(net: FeedforwardNetwork,
                     bounds: SaturationBounds) -> FeedforwardNetwork:
    """Append the clamp min(max(u, lower), upper) as two extra ReLU layers.

    The rewrite is exact (no conservatism): the returned network evaluates to
    clamp(pi(x)) pointwise. Its layer count is l+2 and the hidden neuron
    count grows by exactly 2 m, m being the output dimension.
    """
    m = net.output_dim
    if bounds.lower.shape[0] != m:
        raise DimensionMismatchError(
            f"saturation bound length ({bounds.lower.shape[0]}) != output dim ({m})")
    eye = np.eye(m)
    weights = list(net.weights[:-1]) + [
        -net.weights[-1],
        -eye,
        eye,
    ]
    biases = list(net.biases[:-1]) + [
        bounds.upper - net.biases[-1],
        bounds.upper - bounds.lower,
        bounds.lower.copy(),
    ]
    return FeedforwardNetwork(tuple(weights), tuple(biases), saturation=None)


def preactivation_bounds(net: FeedforwardNetwork, domain_box: IntervalBox) -> list:
    """Interval propagation of the domain box through the hidden layers."""
    lo = np.asarray(domain_box.lower, dtype=float)
    hi = np.asarray(domain_box.upper, dtype=float)
    out = []
    for w, v in zip(net.weights[:-1], net.biases[:-1]):
        w_pos = np.maximum(w, 0.0)
        w_neg = np.minimum(w, 0.0)
        z_lo = w_pos @ lo + w_neg @ hi + v
        z_hi = w_pos @ hi + w_neg @ lo + v
        out.append(IntervalBox(z_lo, z_hi))
        lo, hi = np.maximum(z_lo, 0.0), np.maximum(z_hi, 0.0)
    return out

def auto_interval(net: FeedforwardNetwork, domain: HybridZonotope,
                  safety_factor: float = 2.0) -> tuple[float, float]:
    """Pick one (alpha, beta) pair large enough for every hidden layer.

    Doubles the largest absolute pre-activation bound found by interval
    propagation from the domain's enclosure, with a floor of 1.
    """
    worst = 1.0
    for box in preactivation_bounds(net, hzm.interval_enclosure(domain)):
        worst = max(worst, float(np.max(np.abs(box.lower))),
                    float(np.max(np.abs(box.upper))))
    bound = safety_factor * worst
    return bound, bound


def network_to_dict(net: FeedforwardNetwork) -> dict:
    out = {
        "weights": [w.tolist() for w in net.weights],
        "biases": [v.tolist() for v in net.biases],
    }
    if net.saturation is not None:
        out["saturation"] = {"lower": net.saturation.lower.tolist(),
                             "upper": net.saturation.upper.tolist()}
    return out


def network_from_dict(data: dict) -> FeedforwardNetwork:
    sat = None
    if data.get("saturation") is not None:
        sat = SaturationBounds(data["saturation"]["lower"], data["saturation"]["upper"])
    return FeedforwardNetwork(tuple(data["weights"]), tuple(data["biases"]), saturation=sat)


def load_network(path) -> FeedforwardNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))


def save_network(net: FeedforwardNetwork, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_dict(net), fh, indent=1, sort_keys=True)
