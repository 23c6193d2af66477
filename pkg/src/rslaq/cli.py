"""Command-line entry point: ``rslaq {train,eval,compare,suite,actions,validate-policy}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

from .actions import ActionSpace
from .harness.scenarios import SCENARIO_NAMES
from .policy import PolicyError, UnsupportedKpiError, UnsupportedKpiWarning, parse_a1_policy

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("rslaq")


class ValidationFailure(Exception):
    """Bad user input detected after argument parsing (exit code 1)."""


def _scenario(args):
    from .harness.scenarios import load_scenario

    source = args.config or args.scenario
    try:
        return load_scenario(source, seed=args.seed)
    except KeyError as exc:
        raise ValidationFailure(exc.args[0]) from None
    except (PolicyError, ValueError, TypeError) as exc:
        raise ValidationFailure(f"invalid scenario: {exc}") from None


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _agent_overrides(args) -> dict:
    return {"n_steps": getattr(args, "steps", None)}


def cmd_train(args) -> int:
    from .harness.evaluation import run_training

    scenario = _scenario(args)
    out = _out(args)
    aware = args.controller == "rslaq"
    result = run_training(scenario, seed=args.seed, sla_aware=aware, out_dir=out, prefix=args.controller,
                          **_agent_overrides(args))
    print(f"{args.controller} on {scenario.name}: {len(result.rewards)} steps, "
          f"last-50 mean reward {result.last_mean:.4f}, {len(result.alarms)} alarm(s)")
    print(f"checkpoint: {out / (args.controller + '.npz')}")
    if args.plot:
        from .plotting import plot_rewards

        plot_rewards(out / f"{args.controller}_reward.svg", {args.controller: result.rewards},
                     title=f"training reward, {scenario.name}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .harness.evaluation import EVAL_SEED_OFFSET, make_controller, run_eval, write_run_outputs

    scenario = _scenario(args)
    try:
        controller = make_controller(args.controller, args.checkpoint)
    except FileNotFoundError as exc:
        raise ValidationFailure(str(exc)) from None
    except ValueError as exc:
        raise ValidationFailure(str(exc)) from None
    report = run_eval(controller, scenario, args.frames, None if args.seed is None else args.seed + EVAL_SEED_OFFSET)
    out = _out(args)
    write_run_outputs(out, report)
    _print_reports([report])
    if args.plot:
        from .plotting import plot_reliability

        plot_reliability(out / f"{report.controller}_{scenario.name}_reliability.svg", [report])
    return EXIT_OK


def cmd_compare(args) -> int:
    from .harness.evaluation import compare

    scenario = _scenario(args)
    out = _out(args)
    checkpoints = {"rslaq": args.rslaq_checkpoint, "opt": args.opt_checkpoint}
    result = compare(scenario, frames=args.frames, seed=args.seed, out_dir=out, checkpoints=checkpoints,
                     **_agent_overrides(args))
    _print_reports(result.reports)
    alarms = result.report("rslaq").alarms
    for event in alarms:
        print(f"ALARM frame {event.frame}: slice {event.slice_name} cannot meet '{event.predicate}' at full "
              f"allocation {event.p_final:.4f}")
    if args.plot:
        from .plotting import plot_reliability, plot_rewards

        plot_reliability(out / "reliability.svg", result.reports)
        if result.training:
            plot_rewards(out / "reward.svg", {k: v.rewards for k, v in result.training.items()},
                         title=f"training reward, {scenario.name}")
    return EXIT_OK


def cmd_suite(args) -> int:
    """Every preset scenario, one ``compare`` each, plus a combined report."""
    from .harness.evaluation import REPORT_FIELDS, compare
    from .harness.scenarios import load_scenario

    out = _out(args)
    rows = []
    for name in args.scenarios or SCENARIO_NAMES:
        try:
            scenario = load_scenario(name, seed=args.seed)
        except KeyError as exc:
            raise ValidationFailure(exc.args[0]) from None
        result = compare(scenario, frames=args.frames, seed=args.seed, out_dir=out / name, **_agent_overrides(args))
        for report in result.reports:
            rows.extend(report.rows())
        summary = {k: round(v.last_mean, 4) for k, v in result.training.items()}
        n_alarms = len(result.report("rslaq").alarms)
        print(f"{name}: last-50 training reward {summary}, rslaq alarms {n_alarms}")
        if args.plot:
            from .plotting import plot_reliability, plot_rewards

            plot_reliability(out / name / "reliability.svg", result.reports)
            plot_rewards(out / name / "reward.svg", {k: v.rewards for k, v in result.training.items()},
                         title=f"training reward, {name}")
    with open(out / "report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_FIELDS)
        writer.writerows(rows)
    print(f"combined report: {out / 'report.csv'}")
    return EXIT_OK


def cmd_actions(args) -> int:
    if args.slices < 1:
        raise ValidationFailure("--slices must be >= 1")
    text = ActionSpace(args.slices).to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate_policy(args) -> int:
    path = Path(args.file)
    if not path.is_file():
        raise ValidationFailure(f"{path}: no such file")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnsupportedKpiWarning)
        try:
            policy = parse_a1_policy(path.read_text(encoding="utf-8"), strict=args.strict)
        except UnsupportedKpiError as exc:
            raise ValidationFailure(f"{path}: {exc}") from None
        except PolicyError as exc:
            raise ValidationFailure(f"{path}: {exc}") from None
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.json:
        from .policy import policy_to_dict

        print(json.dumps(policy_to_dict(policy), indent=2))
        return EXIT_OK
    print(f"{path}: valid A1 policy with {policy.n_slices} slice(s)")
    for s in policy.slices:
        kind = "policy" if s.sla else "no-policy"
        print(f"  {s.name}: weight {s.weight:.4f}, {kind}, optimise {s.optimization_kpi.value}")
        if s.sla:
            for p in s.sla.outage_kpis:
                print(f"    outage: {p.to_text()}")
            for p in s.sla.soft_kpis:
                print(f"    soft:   {p.to_text()}")
            if s.sla.reliability is not None:
                print(f"    reliability: {s.sla.reliability}")
    for item in policy.unsupported:
        print(f"  {item.slice_name}: ignored unsupported KPI '{item.text}'")
    return EXIT_OK


def _print_reports(reports):
    header = f"{'controller':<10} {'scenario':<24} {'slice':<8} {'thr Mbit/s':>10} {'bfs':>8} {'outage':>7} " \
             f"{'soft':>5} {'reliability':>11}"
    print(header)
    for r in reports:
        rel = r.reliability
        for j, name in enumerate(r.slice_names):
            rel_text = "undefined" if not r.reliability_defined else f"{rel[j]:.4f}"
            print(f"{r.controller:<10} {r.scenario:<24} {name:<8} {r.mean_thr[j] / 1e6:>10.3f} {r.mean_bfs[j]:>8.4f} "
                  f"{int(r.outage_frames[j]):>7d} {int(r.soft_frames[j]):>5d} {rel_text:>11}")


def _add_scenario_args(p, frames: bool = False):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", default="normal", choices=SCENARIO_NAMES, help="preset name (default: normal)")
    src.add_argument("--config", help="scenario JSON file")
    p.add_argument("--seed", type=int, default=None, help="training seed; evaluation uses seed + 1000")
    p.add_argument("--out", default="runs", help="output directory (default: runs)")
    p.add_argument("--plot", action="store_true", help="also write SVG charts")
    if frames:
        p.add_argument("--frames", type=int, default=500, help="evaluation frames (default: 500)")


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rslaq", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the SLA-aware agent (or the Opt baseline)")
    _add_scenario_args(p)
    p.add_argument("--controller", choices=("rslaq", "opt"), default="rslaq")
    p.add_argument("--steps", type=_nonneg, default=None, help="learning steps (overrides the scenario)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate one controller")
    _add_scenario_args(p, frames=True)
    p.add_argument("--controller", choices=("rslaq", "opt", "rr", "pf", "bcqi"), required=True)
    p.add_argument("--checkpoint", help="checkpoint written by train (rslaq/opt)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="train RSLAQ and Opt, then evaluate all controllers")
    _add_scenario_args(p, frames=True)
    p.add_argument("--steps", type=_nonneg, default=None)
    p.add_argument("--rslaq-checkpoint", help="reuse a trained RSLAQ checkpoint")
    p.add_argument("--opt-checkpoint", help="reuse a trained Opt checkpoint")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("suite", help="compare on every preset scenario")
    p.add_argument("--scenarios", nargs="*", choices=SCENARIO_NAMES, help="subset of presets")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--frames", type=int, default=500)
    p.add_argument("--steps", type=_nonneg, default=None)
    p.add_argument("--out", default="runs")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("actions", help="list the action space as CSV")
    p.add_argument("--slices", type=int, required=True)
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(func=cmd_actions)

    p = sub.add_parser("validate-policy", help="parse and check an A1 policy document")
    p.add_argument("file")
    p.add_argument("--strict", action="store_true", help="reject unsupported KPIs instead of ignoring them")
    p.add_argument("--json", action="store_true", help="print the normalised policy as JSON")
    p.set_defaults(func=cmd_validate_policy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "frames", 0) is not None and getattr(args, "frames", 0) < 0:
        parser.error("--frames must be >= 0")
    try:
        return args.func(args)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
