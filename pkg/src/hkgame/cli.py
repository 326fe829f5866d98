"""Command-line front end.

    hkgame run --graph zachary --tf 10 --r 1 --mode all --out results/
    hkgame verify --graph k2 --x0 1,-1 --tf 1
    hkgame graph-info --graph path/to/edges.txt

Exit codes: 0 success, 1 configuration error, 2 singular boundary matrix,
3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import nash, social
from .dynamics import ConfigError, GameConfig, Trajectory, evaluate_social_cost, \
    two_cluster_opinions, uncontrolled_closed_form
from .graph import GraphError, SocialGraph, read_edge_list, zachary_karate_club
from .nash import SingularBoundaryError
from . import verification as vf

log = logging.getLogger("hkgame")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3
MODES = ("uncontrolled", "nash", "social", "all")
BUNDLED = {
    "zachary": zachary_karate_club,
    "k2": lambda: SocialGraph.from_edges([(0, 1)]),
}


@dataclass
class ExperimentSpec:
    graph: str = "zachary"
    tf: float = 10.0
    r: object = 1.0
    b: object = 1.0
    x0: object = "cluster"
    samples: int = 201
    seed: int = 0
    mode: str = "all"

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentSpec":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**data)

    def load_graph(self) -> SocialGraph:
        if self.graph in BUNDLED:
            return BUNDLED[self.graph]()
        if os.path.exists(self.graph):
            return read_edge_list(self.graph)
        raise ConfigError(f"unknown graph {self.graph!r}: not a bundled name or a file")

    def initial_opinions(self, n: int) -> np.ndarray:
        src = self.x0
        if isinstance(src, str):
            if src == "cluster":
                return two_cluster_opinions(n, int(self.seed))
            if src.startswith("cluster:"):
                return two_cluster_opinions(n, int(src.split(":", 1)[1]))
            src = _parse_list(src, "x0")
        return np.asarray(src, dtype=float)

    def config(self, **changes) -> GameConfig:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        g = self.load_graph()
        r = _parse_list(self.r, "r") if isinstance(self.r, str) else self.r
        b = _parse_list(self.b, "b") if isinstance(self.b, str) else self.b
        kw = dict(graph=g, t_f=float(self.tf), r=r, b=b, x0=self.initial_opinions(g.n),
                  samples=int(self.samples))
        kw.update(changes)
        return GameConfig(**kw)


def _parse_list(text, name):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected a number or comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{name} is empty")
    return vals[0] if len(vals) == 1 else vals


def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_matrix_csv(path, times, values, prefix):
    n = values.shape[1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["t"] + [f"{prefix}{j + 1}" for j in range(n)]) + "\n")
        for t, row in zip(times, values):
            fh.write(",".join([_fmt(t)] + [_fmt(v) for v in row]) + "\n")


def write_plot_data(path, trajectories: dict[str, Trajectory]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("mode,t,agent,x,u\n")
        for mode, traj in trajectories.items():
            U = traj.controls if traj.controls is not None else np.zeros_like(traj.opinions)
            for k, t in enumerate(traj.times):
                for j in range(traj.opinions.shape[1]):
                    fh.write(f"{mode},{_fmt(t)},{j + 1},{_fmt(traj.opinions[k, j])},{_fmt(U[k, j])}\n")


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _spread_record(traj: Trajectory) -> dict:
    first, last = traj.spread(0), traj.spread(-1)
    return {
        "initial_spread": first,
        "final_spread": last,
        "final_spread_ratio": last / first if first > 0 else 0.0,
        "final_opinions": traj.final.tolist(),
    }


def run(spec: ExperimentSpec, out_dir: str, checks: bool = False) -> dict:
    """Solve the requested modes and write CSV/JSON outputs into ``out_dir``."""
    cfg = spec.config()
    os.makedirs(out_dir, exist_ok=True)
    modes = ("uncontrolled", "nash", "social") if spec.mode == "all" else (spec.mode,)
    diag = {"spec": asdict(spec), "n": cfg.n, "t_f": cfg.t_f, "modes": {}}
    trajectories = {}
    for mode in modes:
        if mode == "uncontrolled":
            traj = uncontrolled_closed_form(cfg)
            rec = _spread_record(traj)
        elif mode == "nash":
            sol = nash.solve(cfg)
            traj = sol.trajectory
            rec = _spread_record(traj)
            rec.update(H_condition=sol.H_condition, agent_costs=sol.costs.tolist(),
                       social_cost=evaluate_social_cost(cfg, traj))
        else:
            sol = social.solve_social(cfg)
            traj = sol.trajectory
            rec = _spread_record(traj)
            rec.update(H_condition=sol.condition, social_cost=sol.social_cost)
        if checks and mode != "uncontrolled":
            rec["checks"] = [vf.check_trajectory_oracle(sol).to_dict(),
                             vf.check_pontryagin(sol).to_dict()]
        diag["modes"][mode] = rec
        trajectories[mode] = traj
        write_matrix_csv(os.path.join(out_dir, f"{mode}_trajectory.csv"), traj.times,
                         traj.opinions, "x")
        if mode != "uncontrolled":
            write_matrix_csv(os.path.join(out_dir, f"{mode}_controls.csv"), traj.times,
                             traj.controls, "u")
    write_plot_data(os.path.join(out_dir, "plot_data.csv"), trajectories)
    _write_json(os.path.join(out_dir, "diagnostics.json"), diag)
    return diag


def verify(spec: ExperimentSpec, out_dir: str) -> dict:
    """Run every check; the locality probe is recorded but never fails the run."""
    cfg = spec.config()
    os.makedirs(out_dir, exist_ok=True)
    seed = int(spec.seed)
    probes = vf.default_probe_agents(cfg.n)
    reports = []
    if spec.mode in ("nash", "all", "uncontrolled"):
        eq = nash.solve(cfg)
        reports += [vf.check_trajectory_oracle(eq), vf.check_pontryagin(eq),
                    vf.check_state_residual(eq),
                    vf.check_nash_deviation(eq, probes, seed=seed)]
    if spec.mode in ("social", "all", "uncontrolled"):
        opt = social.solve_social(cfg)
        reports += [vf.check_trajectory_oracle(opt), vf.check_pontryagin(opt),
                    vf.check_state_residual(opt), vf.check_social_minimum(opt, seed=seed)]
    locality = [vf.locality_probe(cfg, i).to_dict() for i in probes]
    summary = {
        "spec": asdict(spec),
        "checks": [r.to_dict() for r in reports],
        "all_passed": all(r.passed for r in reports),
        "locality_probe": locality,
    }
    _write_json(os.path.join(out_dir, "verification.json"), summary)
    return summary


def graph_info(spec: ExperimentSpec) -> dict:
    g = spec.load_graph()
    deg = g.degrees.astype(int)
    return {
        "n": g.n,
        "edges": len(g.edges),
        "degrees": deg.tolist(),
        "min_degree": int(deg.min()),
        "max_degree": int(deg.max()),
        "connected": True,
    }


def _build_parser():
    p = argparse.ArgumentParser(prog="hkgame", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "verify", "graph-info"):
        s = sub.add_parser(name)
        s.add_argument("--spec", help="JSON file with experiment settings")
        s.add_argument("--graph", help="bundled name (zachary, k2) or edge-list path")
        if name == "graph-info":
            continue
        s.add_argument("--tf", type=float)
        s.add_argument("--r", help="scalar or comma-separated per-agent weights")
        s.add_argument("--b", help="scalar or comma-separated per-agent gains")
        s.add_argument("--x0", help="comma-separated opinions or cluster:SEED")
        s.add_argument("--samples", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--mode", choices=MODES)
        s.add_argument("--out", default="out")
        if name == "run":
            s.add_argument("--check", action="store_true",
                           help="add oracle and Pontryagin summaries to diagnostics")
    return p


def _spec_from_args(args) -> ExperimentSpec:
    data = {}
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            data = json.load(fh)
    for key in ExperimentSpec.__dataclass_fields__:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    return ExperimentSpec.from_mapping(data)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        spec = _spec_from_args(args)
        if args.command == "graph-info":
            print(json.dumps(graph_info(spec), indent=2))
            return EXIT_OK
        if args.command == "run":
            diag = run(spec, args.out, checks=args.check)
            for mode, rec in diag["modes"].items():
                log.info("%-12s final spread %.6g (ratio %.4g)", mode, rec["final_spread"],
                         rec["final_spread_ratio"])
            return EXIT_OK
        summary = verify(spec, args.out)
        for rec in summary["checks"]:
            log.info("%-20s %s  residual %.3e  tol %.1e", rec["name"],
                     "PASS" if rec["passed"] else "FAIL", rec["max_residual"], rec["tolerance"])
        return EXIT_OK if summary["all_passed"] else EXIT_VERIFY
    except SingularBoundaryError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except (ConfigError, GraphError, ValueError, OSError, json.JSONDecodeError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
