"""Command-line front end.

Subcommands:

* ``graph``    - controller graph set over the state set, with the count
                 formulas checked and reported PASS/FAIL;
* ``brs``      - backward reachable sequence for the scenario horizon;
* ``verify``   - per-step avoidance certification of the initial set
                 against the backward sets (exit 0 safe, 3 unsafe);
* ``project``  - 2D polygon extraction from a set file or a sequence file;
* ``simulate`` - seeded closed-loop rollouts from the initial set, tagging
                 trajectories that enter the target.

Exit codes: 0 success/safe, 1 I/O or input error, 2 interval-enclosure
violation, 3 unsafe, 4 solver node limit. All randomness is seeded (scenario
``seed`` field, overridable with --seed); outputs are schema-validated JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import hz as hzm
from . import milp
from .errors import (EnclosureError, HzReachError, LeafCapError,
                     NodeLimitError, SamplingError)
from .geometry import DEFAULT_ANGULAR_TOL, DEFAULT_LEAF_CAP, hz_to_polygons
from .network import auto_interval, saturate_network
from .reach import ClosedLoopSystem, expected_counts, simulate as rollout, t_step_brs
from .sampling import rejection_sample
from .scenario import Scenario, load_scenario, write_json

EXIT_OK = 0
EXIT_IO = 1
EXIT_ENCLOSURE = 2
EXIT_UNSAFE = 3
EXIT_SOLVER = 4


def _closed_loop(scenario: Scenario) -> ClosedLoopSystem:
    controller = scenario.controller
    if controller.saturation is not None:
        controller = saturate_network(controller, controller.saturation)
    return ClosedLoopSystem(scenario.plant, controller, scenario.state_set)


def _interval_pair(scenario: Scenario, system: ClosedLoopSystem) -> tuple[float, float]:
    auto_a, auto_b = auto_interval(system.controller, scenario.state_set)
    alpha = scenario.alpha if scenario.alpha is not None else auto_a
    beta = scenario.beta if scenario.beta is not None else auto_b
    return float(alpha), float(beta)


def cmd_graph(scenario: Scenario, out_dir: Path) -> int:
    system = _closed_loop(scenario)
    alpha, beta = _interval_pair(scenario, system)
    tic = time.perf_counter()
    graph = system.controller_graph(alpha, beta)
    elapsed = time.perf_counter() - tic
    domain = scenario.state_set
    n_hidden = system.controller.n_hidden
    expected = {
        "n_g": domain.n_g + 6 * n_hidden,
        "n_b": domain.n_b + n_hidden,
        "n_c": domain.n_c + 5 * n_hidden,
    }
    counts = {"n_g": graph.n_g, "n_b": graph.n_b, "n_c": graph.n_c}
    passed = counts == expected
    write_json(out_dir / "graph.json", hzm.hz_to_dict(graph), schema="hz")
    write_json(out_dir / "graph_report.json", {
        "counts": counts, "expected": expected, "formulas_pass": passed,
        "alpha": alpha, "beta": beta, "hidden_neurons": n_hidden,
        "wall_time": elapsed,
    }, schema="graph_report")
    print(f"graph set over state set: dim {graph.dim} "
          f"(hidden neurons {n_hidden}, alpha {alpha:g}, beta {beta:g})")
    print(f"{'':9}{'n_g':>8}{'n_b':>8}{'n_c':>8}")
    print(f"{'counts':9}{counts['n_g']:>8}{counts['n_b']:>8}{counts['n_c']:>8}")
    print(f"{'expected':9}{expected['n_g']:>8}{expected['n_b']:>8}{expected['n_c']:>8}")
    print(f"growth formulas: {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_IO


def cmd_brs(scenario: Scenario, out_dir: Path) -> int:
    system = _closed_loop(scenario)
    alpha, beta = _interval_pair(scenario, system)
    seq = t_step_brs(system, scenario.target, scenario.horizon, alpha, beta,
                     prune_empty=scenario.prune_empty,
                     node_limit=scenario.tolerances.node_limit)
    steps = []
    for rec, step_set in zip(seq.records, seq.sets):
        steps.append({"step": rec.step, "set": hzm.hz_to_dict(step_set),
                      "n_g": rec.n_g, "n_b": rec.n_b, "n_c": rec.n_c,
                      "wall_time": rec.wall_time, "empty": rec.empty})
        print(f"step {rec.step:3d}: n_g={rec.n_g:6d} n_b={rec.n_b:5d} "
              f"n_c={rec.n_c:6d} time={rec.wall_time:.4f}s"
              + ("" if rec.empty is None else f" empty={rec.empty}"))
    write_json(out_dir / "brs.json", {"horizon": seq.horizon, "steps": steps},
               schema="brs")
    return EXIT_OK


def cmd_verify(scenario: Scenario, out_dir: Path, relax: bool) -> int:
    if scenario.initial_set is None:
        print("verify requires an initial_set in the scenario", file=sys.stderr)
        return EXIT_IO
    system = _closed_loop(scenario)
    alpha, beta = _interval_pair(scenario, system)
    seq = t_step_brs(system, scenario.target, scenario.horizon, alpha, beta)
    report = milp.verify_horizon(seq, scenario.initial_set, relax=relax,
                                 tol_strict=scenario.tolerances.strict,
                                 node_limit=scenario.tolerances.node_limit)
    target_box = hzm.interval_enclosure(scenario.target)
    steps_payload = []
    print(f"{'step':>5} {'verdict':>8} {'objective':>12} {'nodes':>7} {'time':>9}")
    for rep in report.steps:
        payload = rep.to_dict()
        payload["witness_trajectory"] = None
        payload["witness_confirmed"] = None
        if not rep.safe and rep.witness_state is not None:
            traj = rollout(system, rep.witness_state, rep.step)
            payload["witness_trajectory"] = traj.tolist()
            if not relax:
                # Exact witnesses must land in the unsafe region; relaxed
                # ones may be false alarms, so they are reported unconfirmed.
                confirmed = bool(
                    target_box.contains(traj[-1], scenario.tolerances.membership)
                    and hzm.contains_point(scenario.target, traj[-1],
                                           scenario.tolerances.membership))
                if not confirmed:
                    raise HzReachError(
                        f"unsafe witness at step {rep.step} failed forward confirmation")
                payload["witness_confirmed"] = confirmed
        steps_payload.append(payload)
        obj = "-" if rep.objective is None else f"{rep.objective:.6f}"
        nodes = rep.solve.node_count if rep.solve else 0
        print(f"{rep.step:>5} {'safe' if rep.safe else 'UNSAFE':>8} {obj:>12} "
              f"{nodes:>7} {rep.wall_time:>8.3f}s")
    print(f"overall: {'SAFE' if report.safe else 'UNSAFE'} over {scenario.horizon} steps"
          + (" (convex relaxation)" if relax else ""))
    write_json(out_dir / "verify_report.json",
               {"safe": report.safe, "relaxed": relax, "steps": steps_payload},
               schema="verify_report")
    return EXIT_OK if report.safe else EXIT_UNSAFE


def cmd_project(set_file: Path, out_dir: Path, plane_spec: str,
                angular_tol: float, leaf_cap: int) -> int:
    with open(set_file, "r", encoding="utf-8") as fh:
        data = json.load(fh)

    def plane_for(dim: int) -> np.ndarray:
        if plane_spec:
            idx = [int(tok) for tok in plane_spec.split(",")]
        else:
            idx = [0, 1]
        plane = np.zeros((2, dim))
        plane[0, idx[0]] = 1.0
        plane[1, idx[1]] = 1.0
        return plane

    if "steps" in data:  # backward-sequence file: one polygon set per step
        steps_payload = []
        for entry in data["steps"]:
            z = hzm.hz_from_dict(entry["set"])
            ps = hz_to_polygons(z, plane_for(z.dim), angular_tol=angular_tol,
                               cap=leaf_cap)
            steps_payload.append({"step": entry["step"], "polygons": ps.to_dict()})
            print(f"step {entry['step']}: {len(ps.polygons)} polygons")
        write_json(out_dir / "polygons.json", {"steps": steps_payload},
                   schema="polygon_steps")
    else:
        z = hzm.hz_from_dict(data)
        ps = hz_to_polygons(z, plane_for(z.dim), angular_tol=angular_tol,
                            cap=leaf_cap)
        print(f"{len(ps.polygons)} polygons from {z.n_b} binary factors")
        write_json(out_dir / "polygons.json", ps.to_dict(), schema="polygons")
    return EXIT_OK


def cmd_simulate(scenario: Scenario, out_dir: Path, samples: int, seed: int) -> int:
    if scenario.initial_set is None:
        print("simulate requires an initial_set in the scenario", file=sys.stderr)
        return EXIT_IO
    system = _closed_loop(scenario)
    rng = np.random.default_rng(seed)
    tol = scenario.tolerances.membership
    initials = rejection_sample(scenario.initial_set, samples, rng, tol=tol)
    state_box = hzm.interval_enclosure(scenario.state_set)

    def entry_step(states: np.ndarray):
        for t in range(1, states.shape[0]):
            prev_ok = all(
                state_box.contains(states[k], tol)
                and hzm.contains_point(scenario.state_set, states[k], tol)
                for k in range(t))
            if not prev_ok:
                return None
            if hzm.contains_point(scenario.target, states[t], tol):
                return t
        return None

    records = []
    entered = 0
    for x0 in initials:
        states = rollout(system, x0, scenario.horizon)
        at = entry_step(states)
        entered += at is not None
        records.append({"initial": x0.tolist(), "states": states.tolist(),
                        "enters_target_at": at})
    print(f"simulated {samples} trajectories over {scenario.horizon} steps "
          f"(seed {seed}); {entered} enter the target")
    write_json(out_dir / "trajectories.json", {
        "seed": seed, "samples": samples, "horizon": scenario.horizon,
        "trajectories": records,
    }, schema="trajectories")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hzreach",
        description="Exact backward reachability and safety certification "
                    "of ReLU neural feedback systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario JSON path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--tol-membership", type=float, default=None)
        p.add_argument("--tol-strict", type=float, default=None)
        p.add_argument("--node-limit", type=int, default=None)

    add_common(sub.add_parser("graph", help="controller graph set + count report"))
    p_brs = sub.add_parser("brs", help="backward reachable sequence")
    add_common(p_brs)
    p_brs.add_argument("--prune-empty", action="store_true",
                       help="stop the iteration after a certified-empty step")
    p_ver = sub.add_parser("verify", help="avoidance certification per step")
    add_common(p_ver)
    p_ver.add_argument("--relax", action="store_true",
                       help="use the convex relaxation (pure LPs)")
    p_proj = sub.add_parser("project", help="2D polygons from a set/sequence file")
    p_proj.add_argument("--set-file", required=True, help="hz or brs JSON path")
    p_proj.add_argument("--out", default=".")
    p_proj.add_argument("--plane", default="", help="two state indices, e.g. 0,1")
    p_proj.add_argument("--angular-tol", type=float, default=DEFAULT_ANGULAR_TOL)
    p_proj.add_argument("--leaf-cap", type=int, default=DEFAULT_LEAF_CAP,
                        help="refuse to enumerate leaves beyond this many binaries")
    p_sim = sub.add_parser("simulate", help="seeded rollouts from the initial set")
    add_common(p_sim)
    p_sim.add_argument("--samples", type=int, default=100)
    p_sim.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "project":
            return cmd_project(Path(args.set_file), out_dir, args.plane,
                               args.angular_tol, args.leaf_cap)
        scenario = load_scenario(args.scenario)
        for name, attr in (("tol_membership", "membership"),
                           ("tol_strict", "strict"), ("node_limit", "node_limit")):
            value = getattr(args, name, None)
            if value is not None:
                setattr(scenario.tolerances, attr, value)
        if getattr(args, "prune_empty", False):
            scenario.prune_empty = True
        if args.command == "graph":
            return cmd_graph(scenario, out_dir)
        if args.command == "brs":
            return cmd_brs(scenario, out_dir)
        if args.command == "verify":
            return cmd_verify(scenario, out_dir,
                              relax=args.relax or scenario.relax)
        if args.command == "simulate":
            seed = args.seed if args.seed is not None else scenario.seed
            return cmd_simulate(scenario, out_dir, args.samples, seed)
        raise AssertionError(f"unknown command {args.command}")
    except EnclosureError as err:
        print(f"enclosure violation: {err}", file=sys.stderr)
        return EXIT_ENCLOSURE
    except NodeLimitError as err:
        print(f"solver limit: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError,
            SamplingError, LeafCapError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except HzReachError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
