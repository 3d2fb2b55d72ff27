"""Command-line interface: plan, simulate, theory, bench, batch."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import NoPlan, PlanningError
from .planner import PlannerConfig, PlanningSnapshot, candidate_tuples, plan
from .qp import CostWeights, SolverConfig, build_qp, dump_problem
from .scenario import load_scenario
from .simulate import PLANNER_FAILURE, POLICIES, evaluate_metrics, simulate, \
    trace_to_csv
from .svg import st_graph_svg


def _add_planner_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--td-mode", choices=("exact", "fixed"), default="exact")
    p.add_argument("--td-fixed", type=int, default=4, metavar="N")
    p.add_argument("--td-max", type=int, default=10_000, metavar="N")
    p.add_argument("--eps-abs", type=float, default=1e-8, metavar="X")
    p.add_argument("--eps-rel", type=float, default=1e-8, metavar="X")


def _config(args) -> PlannerConfig:
    return PlannerConfig(
        td_mode=args.td_mode, td_fixed_steps=args.td_fixed,
        td_max_steps=args.td_max,
        solver=SolverConfig(eps_abs=args.eps_abs, eps_rel=args.eps_rel))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfplan",
        description="Multi-future speed planning on the space-time graph")
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="run one planning cycle and dump it")
    p_plan.add_argument("--scenario", required=True, metavar="PATH")
    p_plan.add_argument("--out", metavar="PATH")
    p_plan.add_argument("--svg", metavar="PATH")
    p_plan.add_argument("--dump-qp", metavar="PATH")
    _add_planner_flags(p_plan)

    p_sim = sub.add_parser("simulate", help="closed-loop episode, trace CSV")
    p_sim.add_argument("--scenario", required=True, metavar="PATH")
    p_sim.add_argument("--policy", choices=POLICIES, default="delayed")
    p_sim.add_argument("--seed", type=int, default=0, metavar="N")
    p_sim.add_argument("--out", metavar="PATH")
    p_sim.add_argument("--svg", metavar="PATH")
    _add_planner_flags(p_sim)

    p_th = sub.add_parser("theory", help="late-decision dominance enumeration")
    p_th.add_argument("--out", metavar="PATH")

    p_bench = sub.add_parser("bench", help="approximate-profile latency CSV")
    p_bench.add_argument("--reps", type=int, default=300, metavar="N")
    p_bench.add_argument("--quick", action="store_true",
                         help="small sizes only (smoke test)")
    p_bench.add_argument("--out", metavar="PATH")

    p_batch = sub.add_parser("batch", help="sweep a directory of scenarios")
    p_batch.add_argument("--scenario", required=True, metavar="PATH",
                         help="directory holding scenario *.json files")
    p_batch.add_argument("--policy", choices=POLICIES, default="delayed")
    p_batch.add_argument("--seed", type=int, default=0, metavar="N")
    p_batch.add_argument("--out", metavar="PATH")
    _add_planner_flags(p_batch)
    return parser


def _write(path, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_plan(args) -> int:
    scenario = load_scenario(args.scenario)
    snapshot = PlanningSnapshot(
        ego=scenario.ego, limits=scenario.limits, dt=scenario.dt,
        horizon_steps=scenario.horizon_steps,
        futures=tuple(scenario.joint_futures()))
    config = _config(args)
    try:
        result = plan(snapshot, config)
    except NoPlan as e:
        print(f"planner failure: {e}", file=sys.stderr)
        return 1
    payload = {
        "t_d_steps": result.t_d_steps,
        "candidate_id": result.candidate_id,
        "objective": result.objective,
        "feasible": list(result.feasible),
        "prefix": result.prefix.tolist(),
        "suffixes": [s.tolist() for s in result.suffixes],
    }
    _write(args.out, json.dumps(payload, indent=2) + "\n")
    chosen = None
    if args.svg or args.dump_qp:
        tuples = candidate_tuples(snapshot)
        chosen = tuples[result.candidate_id]
    if args.svg:
        Path(args.svg).write_text(
            st_graph_svg(scenario, plan=result, corridors=chosen.corridors),
            encoding="utf-8")
    if args.dump_qp:
        problem = build_qp(chosen.corridors,
                           [f.probability for f in snapshot.futures],
                           result.t_d_steps, snapshot.ego, snapshot.limits,
                           snapshot.dt, config.weights,
                           eps_band=config.eps_band)
        dump_problem(problem, args.dump_qp)
    print(f"plan: t_d_steps={result.t_d_steps} candidate={result.candidate_id} "
          f"objective={result.objective:.6g}", file=sys.stderr)
    return 0


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    trace = simulate(scenario, args.policy, _config(args), seed=args.seed)
    _write(args.out, trace_to_csv(trace))
    if args.svg:
        Path(args.svg).write_text(st_graph_svg(scenario, trace=trace),
                                  encoding="utf-8")
    metrics = evaluate_metrics(trace, scenario)
    print(f"simulate: policy={args.policy} status={trace.status} "
          f"displacement={metrics.final_displacement:.2f}m "
          f"min_a={metrics.min_acceleration:.2f} "
          f"delay={metrics.decision_delay_s:.2f}s", file=sys.stderr)
    return 1 if trace.status == PLANNER_FAILURE else 0


def _cmd_theory(args) -> int:
    from .theory import AssertionFailure, theorem1_enumeration
    try:
        report = theorem1_enumeration()
    except AssertionFailure as e:
        print(f"dominance violated: {e}", file=sys.stderr)
        return 1
    lines = ["cells,case1,case2,case3,case4,violations,max_finite_regret",
             f"{report.cells},{report.case_counts[0]},{report.case_counts[1]},"
             f"{report.case_counts[2]},{report.case_counts[3]},"
             f"{len(report.violations)},{report.max_finite_regret:g}"]
    _write(args.out, "\n".join(lines) + "\n")
    print(f"theory: {report.cells} cells, zero violations, "
          f"case4={report.case4_count}", file=sys.stderr)
    return 0


def _cmd_bench(args) -> int:
    from .bench import bench_approx_profile
    if args.quick:
        report = bench_approx_profile(repetitions=min(args.reps, 50),
                                      staircase_T=(256, 512),
                                      kscale_k=(4, 8), kscale_T=120,
                                      staircase_reps=3)
    else:
        report = bench_approx_profile(repetitions=args.reps)
    _write(args.out, report.to_csv())
    return 0


def _cmd_batch(args) -> int:
    directory = Path(args.scenario)
    files = sorted(directory.glob("*.json"))
    if not files:
        print(f"no scenario files in {directory}", file=sys.stderr)
        return 2
    config = _config(args)
    lines = ["scenario,policy,seed,status,displacement_m,min_a,max_abs_j,"
             "decision_delay_s,median_cycle_s"]
    failed = False
    for path in files:
        scenario = load_scenario(path)
        trace = simulate(scenario, args.policy, config, seed=args.seed)
        m = evaluate_metrics(trace, scenario)
        med = sorted(m.cycle_times)[len(m.cycle_times) // 2] \
            if m.cycle_times else 0.0
        lines.append(f"{path.name},{args.policy},{args.seed},{trace.status},"
                     f"{m.final_displacement:.3f},{m.min_acceleration:.3f},"
                     f"{m.max_abs_jerk:.3f},{m.decision_delay_s:.3f},"
                     f"{med:.4f}")
        failed |= trace.status == PLANNER_FAILURE
    _write(args.out, "\n".join(lines) + "\n")
    return 1 if failed else 0


_COMMANDS = {
    "plan": _cmd_plan,
    "simulate": _cmd_simulate,
    "theory": _cmd_theory,
    "bench": _cmd_bench,
    "batch": _cmd_batch,
}


def run_cli(argv=None) -> int:
    """Dispatch a CLI invocation: 0 success, 1 planner failure, 2 usage."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except PlanningError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
