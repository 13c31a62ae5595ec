"""Command-line interface.

Every run writes into one output directory that holds a ``manifest.json``
(command, resolved arguments, seed, version, timestamps, outputs).  Output
files other than the manifest depend only on the arguments, so
``hlcompete replay --manifest DIR/manifest.json`` reproduces them byte for
byte.

Exit codes: 0 success, 1 runtime or numeric failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys

from . import __version__

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
OUT_ENV = "HLCOMPETE_OUT"


class UsageError(Exception):
    pass


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0.0):
        raise argparse.ArgumentTypeError(f"must be a positive finite number: {text!r}")
    return v


def _capacity(text):
    v = _positive_float(text)
    if v >= 1.0:
        raise argparse.ArgumentTypeError(f"capacity must lie in (0, 1): {text!r}")
    return v


def _nonneg_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v >= 0.0):
        raise argparse.ArgumentTypeError(f"must be a non-negative number: {text!r}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return v


def _add_common(p, seed=True):
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./hlcompete-out, one subdirectory per run)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads (results do not depend on it)")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _add_profile(p):
    p.add_argument("--profile", default="section4",
                   help="built-in profile (hl0, section4, ode-fixed-point) or 'custom'")
    p.add_argument("--s-plus", help="custom s+(x, c) expression")
    p.add_argument("--s-minus", help="custom s-(x, c) expression")
    p.add_argument("--rate", default="diffusive", choices=["diffusive", "ode", "custom"])
    p.add_argument("--rate-expr", help="custom r(c) expression")


def build_parser():
    parser = argparse.ArgumentParser(prog="hlcompete", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hlcompete {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one path of the competition process")
    _add_profile(p)
    p.add_argument("--c", type=_capacity, required=True)
    p.add_argument("--t-max", type=_nonneg_float, required=True)
    p.add_argument("--sample-dt", type=_positive_float, default=None,
                   help="grid spacing; every event is recorded if omitted")
    _add_common(p)

    p = sub.add_parser("cluster", help="grow and render a two-colour cluster")
    _add_profile(p)
    p.add_argument("--c", type=_capacity, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n-particles", type=_nonneg_int)
    g.add_argument("--t-max", type=_nonneg_float)
    p.add_argument("--samples", type=int, default=12, help="points per particle polyline")
    p.add_argument("--stroke", type=_positive_float, default=None)
    _add_common(p)

    p = sub.add_parser("render", help="render a stored cluster file")
    p.add_argument("--cluster", required=True, help="cluster.json written by 'cluster'")
    p.add_argument("--samples", type=int, default=12)
    p.add_argument("--stroke", type=_positive_float, default=None)
    _add_common(p, seed=False)

    p = sub.add_parser("analyze", help="scale/speed classification and Lyapunov check of a limit")
    p.add_argument("--profile", help="built-in profile whose limit is analysed")
    p.add_argument("--drift", help="drift expression b(x)")
    p.add_argument("--variance", help="variance expression a(x)")
    p.add_argument("--mode", default="full", choices=["ode", "driftless", "full"])
    _add_common(p, seed=False)

    p = sub.add_parser("experiment", help="run an experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")
    _add_common(p, seed=False)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="output directory for the replay (default: <original>-replay)")
    return parser


# -- helpers ---------------------------------------------------------------

def _out_dir(args, name):
    if args.out:
        path = args.out
    else:
        root = os.environ.get(OUT_ENV, "hlcompete-out")
        path = os.path.join(root, name)
    os.makedirs(path, exist_ok=True)
    return path


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _canonical_argv(args, skip=("out", "threads", "command", "func")):
    argv = [args.command]
    for key, val in sorted(vars(args).items()):
        if key in skip or val is None or val is False:
            continue
        flag = "--" + key.replace("_", "-")
        if val is True:
            argv.append(flag)
        else:
            argv += [flag, repr(val) if isinstance(val, float) else str(val)]
    return argv


def _write_manifest(out, args, outputs, started, extra=None):
    manifest = {
        "command": args.command,
        "argv": _canonical_argv(args),
        "config": {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)},
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": sorted(outputs),
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _profile(args):
    from .profiles import builtin_profile, from_expressions

    if args.profile == "custom":
        if not args.s_plus or not args.s_minus:
            raise UsageError("--profile custom needs --s-plus and --s-minus")
        return from_expressions(args.s_plus, args.s_minus, args.rate, rate_expr=args.rate_expr)
    if args.s_plus or args.s_minus:
        raise UsageError("--s-plus/--s-minus need --profile custom")
    return builtin_profile(args.profile)


# -- commands --------------------------------------------------------------

def cmd_simulate(args):
    from .jump import simulate

    started = _now()
    profile = _profile(args)
    out = _out_dir(args, f"simulate-{profile.name}-seed{args.seed}")
    traj = simulate(profile, args.c, args.t_max, seed=args.seed, sample_dt=args.sample_dt)
    traj.to_csv(os.path.join(out, "trajectory.csv"))
    traj.to_json(os.path.join(out, "trajectory.json"))
    _write_manifest(out, args, ["trajectory.csv", "trajectory.json"], started)
    print(os.path.join(out, "trajectory.csv"))
    return EXIT_OK


def _render_outputs(state, out, samples, stroke):
    from .cluster import render

    geom = render(state, samples)
    with open(os.path.join(out, "cluster.svg"), "w", newline="\n") as fh:
        fh.write(geom.to_svg(stroke_width=stroke))
    geom.to_csv(os.path.join(out, "geometry.csv"))
    return ["cluster.svg", "geometry.csv"]


def cmd_cluster(args):
    from .cluster import grow

    started = _now()
    profile = _profile(args)
    out = _out_dir(args, f"cluster-{profile.name}-seed{args.seed}")
    state = grow(profile, args.c, n_particles=args.n_particles, t_max=args.t_max, seed=args.seed)
    state.save(os.path.join(out, "cluster.json"))
    files = ["cluster.json"] + _render_outputs(state, out, args.samples, args.stroke)
    _write_manifest(out, args, files, started, {"particles": state.n})
    print(os.path.join(out, "cluster.svg"))
    return EXIT_OK


def cmd_render(args):
    from .cluster import ClusterState

    started = _now()
    if not os.path.exists(args.cluster):
        raise UsageError(f"no such cluster file: {args.cluster}")
    state = ClusterState.load(args.cluster)
    out = _out_dir(args, "render")
    files = _render_outputs(state, out, args.samples, args.stroke)
    _write_manifest(out, args, files, started)
    print(os.path.join(out, "cluster.svg"))
    return EXIT_OK


def cmd_analyze(args):
    from . import diffusion
    from .profiles import builtin_profile

    started = _now()
    if args.profile and (args.drift or args.variance):
        raise UsageError("give either --profile or --drift/--variance")
    if args.profile:
        spec = diffusion.limit_spec(builtin_profile(args.profile))
    elif args.drift is not None and args.variance is not None:
        from .expr import ExpressionError

        try:
            spec = diffusion.sde(args.drift, args.variance, mode=args.mode)
        except ExpressionError as exc:
            raise UsageError(str(exc)) from None
    else:
        raise UsageError("analyze needs --profile or both --drift and --variance")
    out = _out_dir(args, f"analyze-{spec.name}")
    if spec.mode == diffusion.MODE_ODE:
        result = {"name": spec.name, "mode": spec.mode, "fixed_points": diffusion.fixed_points(spec)}
        text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    else:
        report = diffusion.classify_boundary(spec)
        report.lyapunov = diffusion.lyapunov_check(spec).to_dict()
        text = report.to_json()
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(text)
    _write_manifest(out, args, ["report.json"], started)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args):
    from . import experiments

    started = _now()
    if not os.path.exists(args.config):
        raise UsageError(f"no such config file: {args.config}")
    config = experiments.ExperimentConfig.read(args.config)
    config.threads = args.threads
    if args.dry_run:
        sys.stdout.write(json.dumps(config.resolved(), indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    out = _out_dir(args, f"experiment-{config.id}")
    config.out = out
    report = experiments.run(config)
    files = sorted(f for f in os.listdir(out) if f != "manifest.json")
    _write_manifest(out, args, files, started, {"experiment": config.resolved(), "passed": report.passed})
    sys.stdout.write(report.to_json())
    if config.kind == "equivalence" and not report.passed:
        print("equivalence check failed", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_replay(args):
    if not os.path.exists(args.manifest):
        raise UsageError(f"no such manifest: {args.manifest}")
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    out = args.out or os.path.dirname(os.path.abspath(args.manifest)) + "-replay"
    return main(list(manifest["argv"]) + ["--out", out])


COMMANDS = {
    "simulate": cmd_simulate,
    "cluster": cmd_cluster,
    "render": cmd_render,
    "analyze": cmd_analyze,
    "experiment": cmd_experiment,
    "replay": cmd_replay,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    from .errors import DomainError, SpecificationError

    try:
        return COMMANDS[args.command](args)
    except (UsageError, SpecificationError) as exc:
        parser.print_usage(sys.stderr)
        print(f"hlcompete: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ArithmeticError, RuntimeError, ValueError, OSError) as exc:
        print(f"hlcompete: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
