"""
trussforge.cli
==============
Command-line entry point::

    trussforge run <scenario> [--out DIR] [--remove-feature NAME] [...]
    trussforge force-curve --mass M [--start DEG] [--stop DEG] [--step DEG]
    trussforge gait check|fmt <file.gait>
    trussforge serve [--scenario NAME] [--port P] [--ui DIR]
    trussforge replay <recording.json> [--out DIR]

Exit codes: 0 success, 1 scenario predicate failed, 2 configuration or
binding errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import environments, gaitlang, mechanics, scenarios, teleop
from .core import TrussforgeError


def _default_out() -> str:
    return os.environ.get("TRUSSFORGE_OUT", "out")


def _cmd_run(args) -> int:
    try:
        if os.path.isfile(args.scenario):
            with open(args.scenario, "r", encoding="utf-8") as fh:
                spec = scenarios.spec_from_dict(json.load(fh))
        else:
            spec = scenarios.get_scenario(args.scenario)
    except (scenarios.UnknownScenario, KeyError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    try:
        import dataclasses
        if args.env:
            env = environments.load_environment(args.env)
            spec = dataclasses.replace(spec, env_override=env)
        if args.gait:
            program = gaitlang.load_gait(args.gait)
            spec = dataclasses.replace(
                spec, gait_text=gaitlang.serialize(program))
        if args.params:
            overrides = {}
            for item in args.params:
                key, _, value = item.partition("=")
                overrides[key] = float(value)
            spec = dataclasses.replace(
                spec, params=dataclasses.replace(spec.params, **overrides))
        if args.remove_feature:
            report = scenarios.negative_control(spec, args.remove_feature)
        else:
            report = scenarios.run(spec, out_dir=args.out)
    except (TrussforgeError, FileNotFoundError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.remove_feature and args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{report.scenario}.report.json"),
                  "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, default=str)
    printable = {k: v for k, v in report.metrics.items() if k != "shape_timeline"}
    print(f"{report.scenario}: {'success' if report.success else 'FAILED'}")
    for key in sorted(printable):
        print(f"  {key}: {printable[key]}")
    if report.cause:
        print(f"  cause: {report.cause}")
    return 0 if report.success else 1


def _cmd_force_curve(args) -> int:
    try:
        out = args.out or os.path.join(_default_out(), "force_curve.csv")
        os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
        mechanics.write_force_curve_csv(out, args.mass, args.start, args.stop,
                                        args.step)
    except (TrussforgeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


def _cmd_gait(args) -> int:
    try:
        with open(args.path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        program = gaitlang.parse(text)
    except gaitlang.ParseError as exc:
        print(f"{args.path}:{exc.line}:{exc.col}: expected {exc.expected}, "
              f"found {exc.found}", file=sys.stderr)
        return 2
    except gaitlang.BindError as exc:
        print(f"{args.path}: {exc}", file=sys.stderr)
        return 2
    if args.action == "fmt":
        with open(args.path, "w", encoding="utf-8") as fh:
            fh.write(gaitlang.serialize(program))
        print(f"formatted {args.path}")
    else:
        print(f"{args.path}: ok ({len(program.statements)} statements, "
              f"{program.phase_count()} phases)")
    return 0


def _cmd_serve(args) -> int:
    try:
        spec = scenarios.get_scenario(args.scenario)
        server = teleop.TeleopServer(
            spec, host=args.host, port=args.port, frame_rate=args.rate,
            ui_dir=args.ui)
        print(f"serving {spec.name} on ws://{args.host}:{args.port}/ws"
              + (f" (UI at http://{args.host}:{args.port}/)" if args.ui else ""))
        server.serve_forever()
    except (TrussforgeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_replay(args) -> int:
    try:
        recording = teleop.SessionRecording.load(args.recording)
        rows = teleop.replay(recording, extra_steps=args.extra_steps)
    except (TrussforgeError, FileNotFoundError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    out = args.out or _default_out()
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "replay.trajectory.csv")
    mechanics.write_trajectory_csv(path, rows)
    print(f"replayed {len(recording.commands)} commands; wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trussforge",
                                description="truss robot simulator")
    sub = p.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a scenario and write its report")
    runp.add_argument("scenario", help="builtin scenario name or spec JSON path")
    runp.add_argument("--out", default=None, help="output directory")
    runp.add_argument("--env", default=None,
                      help="environment name or JSON file override")
    runp.add_argument("--gait", default=None,
                      help="gait file or builtin:<name> override")
    runp.add_argument("--remove-feature", default=None,
                      help="run the negative control with this feature removed")
    runp.add_argument("--params", nargs="*", default=None, metavar="K=V",
                      help="solver parameter overrides, e.g. damping=80")
    runp.add_argument("--seed", type=int, default=0,
                      help="accepted for interface compatibility; runs are "
                           "deterministic")
    runp.set_defaults(func=_cmd_run)

    fc = sub.add_parser("force-curve", help="export the pop-up force curve")
    fc.add_argument("--mass", type=float, required=True, help="lifted mass, kg")
    fc.add_argument("--start", type=float, default=1.0, help="start angle, deg")
    fc.add_argument("--stop", type=float, default=90.0, help="stop angle, deg")
    fc.add_argument("--step", type=float, default=0.5, help="step, deg")
    fc.add_argument("--out", default=None, help="output CSV path")
    fc.set_defaults(func=_cmd_force_curve)

    g = sub.add_parser("gait", help="check or canonically format a gait file")
    g.add_argument("action", choices=["check", "fmt"])
    g.add_argument("path")
    g.set_defaults(func=_cmd_gait)

    s = sub.add_parser("serve", help="serve the teleoperation endpoint")
    s.add_argument("--scenario", default="crawl_flat")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8732)
    s.add_argument("--rate", type=float, default=30.0, help="frames per second")
    s.add_argument("--ui", default=None, help="static UI directory to host")
    s.set_defaults(func=_cmd_serve)

    r = sub.add_parser("replay", help="replay a recorded teleop session")
    r.add_argument("recording")
    r.add_argument("--out", default=None)
    r.add_argument("--extra-steps", type=int, default=0)
    r.set_defaults(func=_cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
