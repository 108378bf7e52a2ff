"""Closed-loop model and exact backward reachable sets.

For the plant x+ = A x + B u under u = pi(x), the one-step backward set of a
target is obtained without any approximation: take the network's graph set
over the state domain, keep its state coordinates as the value map, and add
equality rows forcing D (x, u) = [A B](x, u) to land in the target. The
T-step sequence iterates that construction with the previous backward set as
the new target; the graph is computed once over the full state set and
reused for every step.

Counts grow linearly: step t has exactly
    n_g = t (n_gx + 6N) + n_g_target,
    n_b = t (n_bx + N) + n_b_target,
    n_c = t (n_cx + 5N + n) + n_c_target,
with N the controller's hidden neuron count; the iteration verifies these at
every step and records them alongside wall times.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import hz as hzm
from .errors import DimensionMismatchError
from .hz import HybridZonotope
from .network import FeedforwardNetwork, auto_interval, fnn_graph

__all__ = [
    "LinearPlant",
    "ClosedLoopSystem",
    "BrsSequence",
    "StepRecord",
    "one_step_brs",
    "t_step_brs",
    "forward_step",
    "simulate",
]


@dataclass(frozen=True)
class LinearPlant:
    """x(t+1) = A_d x(t) + B_d u(t)."""

    A_d: np.ndarray
    B_d: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A_d, dtype=float))
        b = np.atleast_2d(np.asarray(self.B_d, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatchError(f"A_d must be square, got {a.shape}")
        if b.shape[0] != a.shape[0]:
            raise DimensionMismatchError(
                f"B_d rows ({b.shape[0]}) != A_d rows ({a.shape[0]})")
        object.__setattr__(self, "A_d", a)
        object.__setattr__(self, "B_d", b)

    @property
    def state_dim(self) -> int:
        return self.A_d.shape[0]

    @property
    def input_dim(self) -> int:
        return self.B_d.shape[1]

    @property
    def D(self) -> np.ndarray:
        """Stacked map [A_d B_d] acting on (x, u)."""
        return np.hstack([self.A_d, self.B_d])


@dataclass
class ClosedLoopSystem:
    """Plant, controller and state set, with a cached controller graph.

    The cache records the exact (alpha, beta) it was built with; requesting a
    graph for different scalars rebuilds it.
    """

    plant: LinearPlant
    controller: FeedforwardNetwork
    state_set: HybridZonotope
    _graph_cache: Optional[HybridZonotope] = field(default=None, repr=False)
    _cache_key: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if self.controller.input_dim != self.plant.state_dim:
            raise DimensionMismatchError(
                f"controller input dim ({self.controller.input_dim}) != "
                f"state dim ({self.plant.state_dim})")
        if self.controller.output_dim != self.plant.input_dim:
            raise DimensionMismatchError(
                f"controller output dim ({self.controller.output_dim}) != "
                f"plant input dim ({self.plant.input_dim})")
        if self.state_set.dim != self.plant.state_dim:
            raise DimensionMismatchError(
                f"state set dimension ({self.state_set.dim}) != "
                f"state dim ({self.plant.state_dim})")

    def controller_graph(self, alpha: Optional[float] = None,
                         beta: Optional[float] = None) -> HybridZonotope:
        """Graph of the controller over the state set, cached per (alpha, beta)."""
        if alpha is None or beta is None:
            auto_a, auto_b = auto_interval(self.controller, self.state_set)
            alpha = auto_a if alpha is None else alpha
            beta = auto_b if beta is None else beta
        key = (float(alpha), float(beta))
        if self._cache_key != key:
            graph, _ = fnn_graph(self.controller, self.state_set, *key)
            self._graph_cache = graph
            self._cache_key = key
        return self._graph_cache


def forward_step(system: ClosedLoopSystem, x) -> np.ndarray:
    """One closed-loop step A_d x + B_d pi(x); the test oracle for every set op."""
    x = np.asarray(x, dtype=float).reshape(-1)
    u = system.controller.evaluate(x)
    return system.plant.A_d @ x + system.plant.B_d @ u


def simulate(system: ClosedLoopSystem, x0, steps: int) -> np.ndarray:
    """Trajectory [x(0), ..., x(steps)] under the closed loop."""
    states = [np.asarray(x0, dtype=float).reshape(-1)]
    for _ in range(steps):
        states.append(forward_step(system, states[-1]))
    return np.array(states)


def one_step_brs(graph: HybridZonotope, plant: LinearPlant,
                 target: HybridZonotope) -> HybridZonotope:
    """States of the domain whose closed-loop image lands in the target.

    The value map keeps the first n rows of the graph (the state block, with
    zero columns for the target's factors); the constraints stack both
    factor systems plus n coupling rows D G_graph = G_target.
    """
    n = plant.state_dim
    m = plant.input_dim
    if graph.dim != n + m:
        raise DimensionMismatchError(
            f"graph dimension ({graph.dim}) != state+input dim ({n + m})")
    if target.dim != n:
        raise DimensionMismatchError(
            f"target dimension ({target.dim}) != state dim ({n})")
    d = plant.D

    gc = np.hstack([graph.gen_cont[:n, :], np.zeros((n, target.n_g))])
    gb = np.hstack([graph.gen_bin[:n, :], np.zeros((n, target.n_b))])
    center = graph.center[:n].copy()
    ac = np.vstack([
        np.hstack([graph.con_cont, np.zeros((graph.n_c, target.n_g))]),
        np.hstack([np.zeros((target.n_c, graph.n_g)), target.con_cont]),
        np.hstack([d @ graph.gen_cont, -target.gen_cont]),
    ])
    ab = np.vstack([
        np.hstack([graph.con_bin, np.zeros((graph.n_c, target.n_b))]),
        np.hstack([np.zeros((target.n_c, graph.n_b)), target.con_bin]),
        np.hstack([d @ graph.gen_bin, -target.gen_bin]),
    ])
    rhs = np.concatenate([
        graph.con_rhs,
        target.con_rhs,
        target.center - d @ graph.center,
    ])
    return hzm.make_hz(center, gc, gb, ac, ab, rhs)


@dataclass(frozen=True)
class StepRecord:
    """Complexity and timing bookkeeping for one backward step."""

    step: int
    n_g: int
    n_b: int
    n_c: int
    wall_time: float
    empty: Optional[bool] = None

    def to_dict(self) -> dict:
        out = {"step": self.step, "n_g": self.n_g, "n_b": self.n_b,
               "n_c": self.n_c, "wall_time": self.wall_time}
        if self.empty is not None:
            out["empty"] = self.empty
        return out


@dataclass
class BrsSequence:
    """Backward sets P_0..P_T (P_0 is the target) plus per-step records."""

    sets: list
    records: list

    @property
    def horizon(self) -> int:
        return len(self.sets) - 1

    def __getitem__(self, t: int) -> HybridZonotope:
        return self.sets[t]


def expected_counts(domain: HybridZonotope, n_hidden: int, state_dim: int,
                    target: HybridZonotope, t: int) -> tuple[int, int, int]:
    """Closed-form complexity of the t-step backward set."""
    return (
        t * (domain.n_g + 6 * n_hidden) + target.n_g,
        t * (domain.n_b + n_hidden) + target.n_b,
        t * (domain.n_c + 5 * n_hidden + state_dim) + target.n_c,
    )


def t_step_brs(system: ClosedLoopSystem, target: HybridZonotope, horizon: int,
               alpha: Optional[float] = None, beta: Optional[float] = None, *,
               prune_empty: bool = False, **empty_kwargs) -> BrsSequence:
    """Iterate the one-step construction for t = 1..horizon.

    The controller graph is computed once over the full state set and shared
    by every step. Each step's counts are checked against the closed forms;
    a mismatch means the construction itself is broken, so it raises. With
    ``prune_empty`` the iteration stops after the first step certified empty
    (all later sets would be empty too); the emptiness verdicts are recorded.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if target.dim != system.plant.state_dim:
        raise DimensionMismatchError(
            f"target dimension ({target.dim}) != state dim ({system.plant.state_dim})")
    graph = system.controller_graph(alpha, beta)
    n_hidden = system.controller.n_hidden
    domain = system.state_set
    n = system.plant.state_dim

    sets = [target]
    records = [StepRecord(0, target.n_g, target.n_b, target.n_c, 0.0)]
    for t in range(1, horizon + 1):
        tic = time.perf_counter()
        step_set = one_step_brs(graph, system.plant, sets[-1])
        elapsed = time.perf_counter() - tic
        expected = expected_counts(domain, n_hidden, n, target, t)
        if step_set.counts() != expected:
            raise RuntimeError(
                f"complexity ledger mismatch at step {t}: "
                f"got {step_set.counts()}, expected {expected}")
        empty = None
        if prune_empty:
            from . import milp

            empty = milp.is_empty(step_set, **empty_kwargs)
        sets.append(step_set)
        records.append(StepRecord(t, *step_set.counts(), elapsed, empty))
        if prune_empty and empty:
            break
    return BrsSequence(sets=sets, records=records)
