"""Command-line front end: one subcommand per pipeline stage.

Every command writes its outputs plus a ``<output>.config`` sidecar holding
the fully resolved settings as ``key=value`` lines. The same file can be fed
back with ``--config`` to repeat a run.

Exit codes: 0 success, 1 numerical failure, 2 usage or invalid parameters.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import ENV_THREADS, resolve_threads
from .curvature import GridField, sample_manifold_grid
from .dynsys import MemristiveSystem, Variant, find_fixed_points
from .errors import ChaosKitError, ConvergenceFailure, NoEvent, NumericalFailure, SparseMap
from .integrate import IntegratorConfig, integrate
from .linkage import count_linking, predict_linking, template_for, validate_template
from .orbits import Itinerary, SymbolPartition, find_upos, missing_words, symbolic_completeness
from .section import bifurcation_sweep, build_return_map, compute_crossings

log = logging.getLogger("chaoskit")

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2

# flags that belong to the integrator; the rest are command settings
_INTEGRATOR_KEYS = ("step_size", "rel_tol", "abs_tol", "transient_time", "divergence_radius")


# -- key=value config -----------------------------------------------------------

def read_config(path) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def write_config(path, settings: dict) -> Path:
    path = Path(str(path) + ".config")
    lines = [f"# chaoskit {__version__}"]
    for k in sorted(settings):
        v = settings[k]
        if isinstance(v, (list, tuple)):
            v = ",".join(repr(float(x)) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{k}={v}")
    path.write_text("\n".join(lines) + "\n")
    return path


# -- argument types ---------------------------------------------------------------

def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}") from None
    return lo, hi


def _vector(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _box(text: str):
    try:
        parts = [_range(p) for p in text.split(",")]
    except argparse.ArgumentTypeError:
        raise argparse.ArgumentTypeError(f"expected xlo:xhi,ylo:yhi,zlo:zhi, got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"box needs three ranges, got {text!r}")
    return parts


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# -- parser ------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, *, alpha_default=None, out_default="out"):
    if alpha_default is None:
        p.add_argument("--alpha", type=float, required=True, help="memristor parameter")
    elif alpha_default is not False:
        p.add_argument("--alpha", type=float, default=alpha_default,
                       help=f"memristor parameter (default {alpha_default})")
    p.add_argument("--variant", choices=[v.value for v in Variant], default="plus",
                   help="sign of the memristor nonlinearity")
    p.add_argument("--out", default=out_default, help="output path")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default ${ENV_THREADS} or all cores)")
    p.add_argument("--config", default=None, help="key=value file with defaults for these flags")
    d = IntegratorConfig()
    p.add_argument("--step-size", dest="step_size", type=float, default=d.step_size)
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=d.rel_tol)
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=d.abs_tol)
    p.add_argument("--transient", dest="transient_time", type=float, default=d.transient_time,
                   help="discarded transient time")
    p.add_argument("--divergence-radius", dest="divergence_radius", type=float,
                   default=d.divergence_radius)
    p.add_argument("--seed", type=_vector, default=(0.1, 0.0, 0.0), help="initial state x,y,z")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chaoskit", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"chaoskit {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a trajectory and write t,x,y,z CSV")
    _common(p, out_default="trajectory.csv")
    p.add_argument("--time", type=float, default=500.0, help="recorded time after the transient")

    p = sub.add_parser("bifurcation", help="alpha sweep: diagram CSV and flags JSON")
    _common(p, alpha_default=False, out_default="bifurcation.csv")
    p.add_argument("--range", dest="alpha_range", type=_range, default=(0.1, 1.4))
    p.add_argument("--steps", type=int, default=1300)
    p.add_argument("--crossings", type=int, default=256, help="recorded crossings per alpha")
    p.add_argument("--continuation", type=_bool, default=True,
                   help="seed each alpha from the previous final state (default true)")
    p.add_argument("--chunk", type=int, default=25, help="continuation chunk length")

    p = sub.add_parser("returnmap", help="first-return map CSV and summary JSON")
    _common(p, alpha_default=0.98, out_default="returnmap.csv")
    p.add_argument("--crossings", type=int, default=5000)

    p = sub.add_parser("upo", help="extract unstable periodic orbits (JSON)")
    _common(p, alpha_default=0.98, out_default="upos.json")
    p.add_argument("--max-period", dest="max_period", type=int, default=4)
    p.add_argument("--crossings", type=int, default=10000)

    p = sub.add_parser("link", help="counted and predicted linking numbers (JSON)")
    _common(p, alpha_default=0.98, out_default="link.json")
    p.add_argument("--orbits", default=None,
                   help="comma-separated itineraries, e.g. 2,21 (default: all pairs)")
    p.add_argument("--max-period", dest="max_period", type=int, default=4)
    p.add_argument("--crossings", type=int, default=10000)
    p.add_argument("--projection", choices=["xy", "xz", "yz"], default="xy")

    p = sub.add_parser("manifold", help="flow curvature manifold on a regular grid")
    _common(p, alpha_default=0.533, out_default="manifold")
    p.add_argument("--field", choices=[f.value for f in GridField], default="phi")
    p.add_argument("--grid", type=int, default=40, help="points per axis")
    p.add_argument("--box", type=_box, default=[(-4.0, 4.0), (-4.0, 4.0), (-4.0, 4.0)],
                   help="xlo:xhi,ylo:yhi,zlo:zhi")
    p.add_argument("--format", dest="payload", choices=["csv", "bin"], default="csv")
    return ap


def _config_path(argv) -> tuple[str | None, str | None]:
    """(command, --config value) found by a plain scan of ``argv``."""
    command = next((a for a in argv if a in COMMANDS), None)
    for k, a in enumerate(argv):
        if a == "--config" and k + 1 < len(argv):
            return command, argv[k + 1]
        if a.startswith("--config="):
            return command, a.split("=", 1)[1]
    return command, None


def _parse(argv, ap: argparse.ArgumentParser) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    command, path = _config_path(argv)
    if command is None or path is None:
        return ap.parse_args(argv)
    # apply the file as defaults, then parse so explicit flags still win
    sub = ap._subparsers._group_actions[0].choices[command]
    try:
        values = read_config(path)
    except (OSError, ValueError) as e:
        ap.error(str(e))
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for k, v in values.items():
        if k in ("command", "threads_resolved"):
            continue
        if k not in known:
            ap.error(f"unknown config key {k!r} for {command}")
        act = known[k]
        conv = act.type or (lambda s: s)
        if k == "box":
            v = v.replace(";", ",")
        try:
            defaults[k] = None if v == "None" else conv(v)
        except (argparse.ArgumentTypeError, ValueError) as e:
            ap.error(f"config key {k}: {e}")
        act.required = False
    sub.set_defaults(**defaults)
    return ap.parse_args(argv)


# -- commands ----------------------------------------------------------------------

def _system(args) -> MemristiveSystem:
    return MemristiveSystem(args.alpha, Variant.parse(args.variant))


def _integrator(args, **extra) -> IntegratorConfig:
    return IntegratorConfig(**{k: getattr(args, k) for k in _INTEGRATOR_KEYS}, **extra)


def _settings(args, **extra) -> dict:
    s = {k: v for k, v in vars(args).items() if k not in ("config", "verbose")}
    s["threads_resolved"] = resolve_threads(args.threads)
    s.update(extra)
    return s


def cmd_simulate(args) -> dict:
    sys_ = _system(args)
    if sys_.alpha == 0:
        find_fixed_points(sys_)  # raises DegenerateParameter
    cfg = _integrator(args, max_time=args.time)
    traj = integrate(sys_, args.seed, cfg)
    traj.to_csv(args.out)
    return {"samples": len(traj)}


def cmd_bifurcation(args) -> dict:
    cfg = _integrator(args)
    diagram = bifurcation_sweep(args.alpha_range, args.steps, cfg, variant=args.variant,
                                n_crossings=args.crossings, seed=args.seed,
                                continuation=args.continuation, chunk=args.chunk,
                                threads=args.threads)
    diagram.to_csv(args.out)
    flags = Path(args.out).with_suffix(".flags.json")
    diagram.write_flags(flags)
    return {"flags": str(flags), "crisis_alphas": diagram.crisis_flags(),
            "period3_windows": diagram.windows(3)}


def cmd_returnmap(args) -> dict:
    cs = compute_crossings(_system(args), args.crossings, s0=args.seed,
                           cfg=_integrator(args, max_time=100.0 * args.crossings + 1000.0))
    rm = build_return_map(cs)
    rm.to_csv(args.out)
    summary = {**_system(args).describe(), **rm.summary()}
    Path(args.out).with_suffix(".json").write_text(json.dumps(summary, indent=2))
    return summary


def cmd_upo(args) -> dict:
    sys_ = _system(args)
    cs = compute_crossings(sys_, args.crossings, s0=args.seed)
    rm = build_return_map(cs)
    orbits = find_upos(sys_, args.max_period, n_crossings=args.crossings, seed=args.seed,
                       partition=SymbolPartition.from_return_map(rm), threads=args.threads)
    report = symbolic_completeness(rm, args.max_period)
    out = {
        **sys_.describe(),
        "alphabet": list(SymbolPartition.from_return_map(rm).alphabet),
        "orbits": [o.to_dict() for o in orbits],
        "completeness": report.to_dict(),
        "missing": missing_words(orbits, report, args.max_period),
    }
    Path(args.out).write_text(json.dumps(out, indent=2))
    return {"orbits": [o.name for o in orbits], "missing": out["missing"]}


def _select(orbits, words, alphabet):
    chosen = []
    for w in words:
        it = Itinerary.parse(w, alphabet)
        match = [o for o in orbits if o.itinerary.same_orbit(it)]
        if not match:
            found = ", ".join(o.name for o in orbits) or "none"
            raise ConvergenceFailure(f"no periodic orbit with itinerary ({it}) was found "
                                     f"(found: {found})")
        chosen.append(match[0])
    return chosen


def cmd_link(args) -> dict:
    sys_ = _system(args)
    words = [w.strip() for w in args.orbits.split(",")] if args.orbits else None
    max_period = max(args.max_period, max(len(w) for w in words)) if words else args.max_period
    cs = compute_crossings(sys_, args.crossings, s0=args.seed)
    part = SymbolPartition.from_return_map(build_return_map(cs))
    tmpl = template_for(part.alphabet)
    if words:
        for w in words:
            Itinerary.parse(w, part.alphabet)  # usage error before the expensive search
    orbits = find_upos(sys_, max_period, n_crossings=args.crossings, seed=args.seed,
                       partition=part, threads=args.threads)
    if words:
        chosen = _select(orbits, words, part.alphabet)
        pairs = []
        for i in range(len(chosen)):
            for j in range(i + 1, len(chosen)):
                a, b = chosen[i], chosen[j]
                lc = count_linking(a, b, args.projection)
                pred = predict_linking(tmpl, a, b)
                pairs.append({"a": a.name, "b": b.name, "counted": lc.lk, "predicted": pred,
                              "agree": lc.lk == pred, "crossings": lc.n_crossings,
                              "negative": lc.n_negative})
                lc.to_csv(Path(args.out).with_suffix(f".{a.name}-{b.name}.crossings.csv"))
        out = {**sys_.describe(), "template": tmpl.to_dict(), "projection": args.projection,
               "pairs": pairs, "passed": all(p["agree"] for p in pairs)}
    else:
        rep = validate_template(tmpl, orbits, args.projection, threads=args.threads)
        out = {**rep.to_dict(), "projection": args.projection}
    Path(args.out).write_text(json.dumps(out, indent=2))
    return {"passed": out["passed"], "pairs": len(out["pairs"])}


def cmd_manifold(args) -> dict:
    grid = sample_manifold_grid(_system(args), args.box, args.grid, args.field,
                                threads=args.threads)
    meta, data = grid.write(args.out, payload=args.payload)
    return {"header": str(meta), "payload": str(data)}


COMMANDS = {
    "simulate": cmd_simulate,
    "bifurcation": cmd_bifurcation,
    "returnmap": cmd_returnmap,
    "upo": cmd_upo,
    "link": cmd_link,
    "manifold": cmd_manifold,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = _parse(argv, ap)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if "box" in vars(args):
        args.box = [tuple(r) for r in args.box]
    try:
        resolve_threads(args.threads)
        result = COMMANDS[args.command](args)
    except (NumericalFailure, SparseMap, NoEvent) as e:
        print(f"chaoskit {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ChaosKitError, ValueError) as e:
        print(f"chaoskit {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    settings = _settings(args)
    if "box" in settings:
        settings["box"] = ";".join(f"{lo!r}:{hi!r}" for lo, hi in settings["box"])
    for k in ("alpha_range",):
        if k in settings:
            settings[k] = ":".join(repr(float(v)) for v in settings[k])
    write_config(args.out, settings)
    print(json.dumps({"command": args.command, "out": args.out, **result}, default=_jsonable))
    return EXIT_OK


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
