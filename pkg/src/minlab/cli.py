"""Command line front end.

Subcommands:
    validate    check a matrix spec file and summarize it
    transition  finite or truncated transition kernel P(t)
    minimal     certified bracket for one minimal-process quantity
    compare     generator and process dominance of two matrices
    monotone    self-comparability of one matrix
    regular     uniqueness/regularity verdict
    simulate    Monte Carlo jump paths
    scenario    built-in demonstration scenarios

All numeric results are emitted as JSON on stdout with sorted keys and
12-significant-digit floats, so identical inputs give byte-identical
output.  Per-level traces go to CSV files under --out.  Exit status: 0 on
success, 1 on a failed scenario or invalid input content, 2 on usage
errors.
"""

import argparse
import json
import sys
from pathlib import Path

from . import _jsonutil
from .dominance import is_monotone_process, kirstein_transfer
from .errors import MinlabError, WitnessNotFoundError
from .expressions import parse_rate
from .montecarlo import simulate
from .qmatrix import is_conservative, is_single_birth, validate
from .regularity import birth_death_series, deficiency_test, lyapunov_test
from .scenarios import SCENARIOS
from .semigroup import minimal_entry, minimal_mass, minimal_tail, transition
from .truncation import SCHEMES, geometric_levels, truncate


def _parse_floats(text):
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty float list")
    return vals


def _parse_levels(text):
    try:
        vals = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("levels must be positive integers")
    return vals


def _parse_levels_geom(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected start:factor:count, got {text!r}")
    try:
        start, count = int(parts[0]), int(parts[2])
        factor = float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected start:factor:count, got {text!r}")
    if start < 1 or count < 1 or factor <= 1:
        raise argparse.ArgumentTypeError(
            "need start >= 1, factor > 1, count >= 1")
    return tuple(geometric_levels(start, factor, count))


def _common(sub):
    sub.add_argument("--tol", type=float, default=None,
                     help="bracket / verdict tolerance")
    sub.add_argument("--seed", type=int, default=0, help="RNG seed")
    grp = sub.add_mutually_exclusive_group()
    grp.add_argument("--levels", type=_parse_levels, default=None,
                     metavar="N1,N2,...", help="truncation level schedule")
    grp.add_argument("--levels-geom", type=_parse_levels_geom, default=None,
                     dest="levels_geom", metavar="START:FACTOR:COUNT",
                     help="geometric level schedule")
    sub.add_argument("--out", type=Path, default=None,
                     help="directory for CSV traces")


def build_parser():
    p = argparse.ArgumentParser(
        prog="minlab",
        description="Minimal Q-process numerics: certified truncation "
                    "brackets, comparability, regularity.")
    subs = p.add_subparsers(dest="command", required=True)

    s = subs.add_parser("validate", help="check a matrix spec file")
    s.add_argument("--spec", required=True, type=Path)
    _common(s)

    s = subs.add_parser("transition", help="transition kernel P(t)")
    s.add_argument("--spec", required=True, type=Path)
    s.add_argument("--t", required=True, type=float)
    s.add_argument("--i", type=int, default=None, help="emit one row only")
    s.add_argument("--level", type=int, default=None,
                   help="truncation level (required for infinite families)")
    s.add_argument("--scheme", choices=sorted(SCHEMES), default="zero")
    s.add_argument("--mask-mode", choices=("rate", "index"), default="rate",
                   dest="mask_mode")
    _common(s)

    s = subs.add_parser("minimal", help="bracket a minimal-process quantity")
    s.add_argument("--spec", required=True, type=Path)
    s.add_argument("--i", required=True, type=int)
    s.add_argument("--t", required=True, type=float)
    what = s.add_mutually_exclusive_group(required=True)
    what.add_argument("--j", type=int, default=None,
                      help="entry P[i,j](t)")
    what.add_argument("--mass", action="store_true",
                      help="total row mass")
    what.add_argument("--k", type=int, default=None,
                      help="tail mass beyond k")
    _common(s)

    s = subs.add_parser("compare", help="dominance of two matrices")
    s.add_argument("--spec1", required=True, type=Path)
    s.add_argument("--spec2", required=True, type=Path)
    s.add_argument("--mmax", type=int, default=10,
                   help="process start/threshold range")
    s.add_argument("--kmax", type=int, default=15, help="tail cut range")
    s.add_argument("--gen-mmax", type=int, default=50, dest="gen_mmax",
                   help="generator check range")
    s.add_argument("--t", type=_parse_floats, default=(0.5, 1.0, 2.0))
    _common(s)

    s = subs.add_parser("monotone", help="self-comparability of one matrix")
    s.add_argument("--spec", required=True, type=Path)
    s.add_argument("--mmax", type=int, default=5)
    s.add_argument("--kmax", type=int, default=10)
    s.add_argument("--t", type=_parse_floats, default=(0.5, 1.0))
    _common(s)

    s = subs.add_parser("regular", help="uniqueness/regularity verdict")
    s.add_argument("--spec", required=True, type=Path)
    s.add_argument("--method", default="auto",
                   choices=("deficiency", "lyapunov", "series", "auto"))
    s.add_argument("--phi", default="i",
                   help="Lyapunov function as a rate expression in i")
    s.add_argument("--c", type=float, default=0.0,
                   help="Lyapunov drift constant")
    s.add_argument("--lam", type=float, default=1.0,
                   help="resolvent parameter for the deficiency test")
    _common(s)

    s = subs.add_parser("simulate", help="Monte Carlo jump paths")
    s.add_argument("--spec", required=True, type=Path)
    s.add_argument("--i", required=True, type=int)
    s.add_argument("--t", required=True, type=float)
    s.add_argument("--paths", type=int, default=100_000)
    s.add_argument("--max-jumps", type=int, default=1_000_000,
                   dest="max_jumps")
    _common(s)

    s = subs.add_parser("scenario", help="built-in demonstration scenarios")
    s.add_argument("name", choices=sorted(SCENARIOS))
    s.add_argument("--alpha", type=float, default=2.0)
    s.add_argument("--paths", type=int, default=100_000)
    s.add_argument("--max-jumps", type=int, default=100_000,
                   dest="max_jumps")
    _common(s)

    return p


def _schedule_of(args):
    return args.levels or args.levels_geom


def _read_spec(parser, path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        parser.error(f"cannot read spec file {path}: {e.strerror or e}")
    except json.JSONDecodeError as e:
        parser.error(f"spec file {path} is not valid JSON: {e}")


def _matrix_or_die(spec):
    try:
        return validate(spec)
    except MinlabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        raise SystemExit(1)


def _emit(payload):
    payload.setdefault("report_version", 1)
    sys.stdout.write(_jsonutil.dumps(payload))


def _out_dir(args):
    if args.out is None:
        return None
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _history_rows(payload, i, t, j_or_k=None):
    return [{"level": lvl, "t": t, "i": i, "j_or_k": j_or_k,
             "value": lo, "lo": lo, "hi": hi}
            for lvl, lo, hi in payload["history"]]


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------


def _cmd_validate(parser, args):
    spec = _read_spec(parser, args.spec)
    try:
        Q = validate(spec)
    except MinlabError as e:
        _emit({"ok": False, "error": type(e).__name__, "message": str(e)})
        return 1
    _emit({
        "ok": True,
        "matrix": Q.describe(),
        "family": Q.family_tag,
        "conservative": is_conservative(Q),
        "single_birth": is_single_birth(Q),
    })
    return 0


def _explicit_top_state(spec):
    top = 0
    for row in spec.get("rows", []):
        top = max(top, int(row["i"]))
        for j, _r in row.get("entries", []):
            top = max(top, int(j))
    return top


def _cmd_transition(parser, args):
    spec = _read_spec(parser, args.spec)
    Q = _matrix_or_die(spec)
    if args.level is not None:
        level = args.level
    elif isinstance(spec, dict) and "rows" in spec:
        level = _explicit_top_state(spec)
    else:
        parser.error("infinite family specs need --level")
    try:
        Qf = truncate(Q, args.scheme, level, mask_mode=args.mask_mode)
        kern = transition(Qf, args.t)
    except MinlabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    payload = {
        "t": args.t, "scheme": args.scheme, "level": level,
        "size": kern.size, "method": kern.method,
        "row_sums": kern.row_sums.tolist(),
        "killed": kern.killed.tolist(),
        "cut": kern.cut.tolist(),
    }
    if args.i is not None:
        if not (0 <= args.i < kern.size):
            parser.error(f"--i {args.i} outside window of size {kern.size}")
        payload["i"] = args.i
        payload["row"] = kern.matrix[args.i].tolist()
    else:
        payload["matrix"] = kern.matrix.tolist()
    _emit(payload)
    return 0


def _cmd_minimal(parser, args):
    spec = _read_spec(parser, args.spec)
    Q = _matrix_or_die(spec)
    tol = args.tol if args.tol is not None else 1e-6
    kwargs = {"tol": tol}
    schedule = _schedule_of(args)
    if schedule:
        kwargs["schedule"] = schedule
    try:
        if args.mass:
            b = minimal_mass(Q, args.i, args.t, **kwargs)
            j_or_k = None
        elif args.j is not None:
            b = minimal_entry(Q, args.i, args.j, args.t, **kwargs)
            j_or_k = args.j
        else:
            b = minimal_tail(Q, args.i, args.k, args.t, **kwargs)
            j_or_k = args.k
    except MinlabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    payload = {
        "quantity": b.quantity, "i": args.i, "t": args.t,
        "lo": b.lo, "hi": b.hi, "numeric_hi": b.numeric_hi,
        "best_hi": b.best_hi(), "level": b.level,
        "flags": sorted(b.flags),
        "history": [[int(n), lo, hi] for n, lo, hi in b.history],
    }
    out = _out_dir(args)
    if out is not None:
        rows = _history_rows(payload, args.i, args.t, j_or_k)
        _jsonutil.write_trace(out / "minimal_trace.csv", rows)
        payload["csv"] = str(out / "minimal_trace.csv")
    _emit(payload)
    return 0


def _cmd_compare(parser, args):
    from .scenarios import _transfer_payload

    Q1 = _matrix_or_die(_read_spec(parser, args.spec1))
    Q2 = _matrix_or_die(_read_spec(parser, args.spec2))
    tol = args.tol if args.tol is not None else 1e-6
    kwargs = {"M_max": args.mmax, "K_max": args.kmax, "t_grid": args.t,
              "tol": tol, "gen_M_max": args.gen_mmax}
    schedule = _schedule_of(args)
    if schedule:
        kwargs["schedule"] = schedule
    try:
        rep = kirstein_transfer(Q1, Q2, **kwargs)
    except MinlabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    _emit(_transfer_payload(rep))
    return 0


def _cmd_monotone(parser, args):
    from .scenarios import _dominance_payload

    Q = _matrix_or_die(_read_spec(parser, args.spec))
    tol = args.tol if args.tol is not None else 1e-6
    kwargs = {"M_max": args.mmax, "K_max": args.kmax, "t_grid": args.t,
              "tol": tol}
    schedule = _schedule_of(args)
    if schedule:
        kwargs["schedule"] = schedule
    try:
        rep = is_monotone_process(Q, **kwargs)
    except MinlabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    _emit(_dominance_payload(rep))
    return 0


def _cmd_regular(parser, args):
    from .scenarios import _regularity_payload

    Q = _matrix_or_die(_read_spec(parser, args.spec))
    tol = args.tol if args.tol is not None else 1e-6
    schedule = _schedule_of(args)
    def_kwargs = {"lam": args.lam, "tol": tol}
    if schedule:
        def_kwargs["schedule"] = schedule

    def run_series():
        return _regularity_payload(birth_death_series(Q))

    def run_deficiency():
        return _regularity_payload(deficiency_test(Q, **def_kwargs))

    def run_lyapunov():
        phi = parse_rate(args.phi)
        v, _cert = lyapunov_test(Q, phi, args.c)
        return _regularity_payload(v)

    try:
        if args.method == "series":
            _emit(run_series())
        elif args.method == "deficiency":
            _emit(run_deficiency())
        elif args.method == "lyapunov":
            _emit(run_lyapunov())
        else:
            attempts = []
            final = None
            if Q.birth_death is not None:
                try:
                    final = run_series()
                except MinlabError as e:
                    attempts.append({"method": "birth-death-series",
                                     "error": type(e).__name__,
                                     "message": str(e)})
                else:
                    if final["verdict"] == "indeterminate":
                        attempts.append(final)
                        final = None
            if final is None:
                final = run_deficiency()
            _emit({"method_requested": "auto", "attempts": attempts,
                   **final})
    except MinlabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


def _cmd_simulate(parser, args):
    Q = _matrix_or_die(_read_spec(parser, args.spec))
    try:
        r = simulate(Q, args.i, args.t, n_paths=args.paths,
                     max_jumps=args.max_jumps, seed=args.seed)
    except MinlabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    payload = r.to_dict()
    payload["se_explosion"] = r.se(r.explosion_frequency)
    payload["budget_exhausted"] = r.budget_exhausted
    _emit(payload)
    return 0


def _scenario_kwargs(args):
    kwargs = {}
    if args.name == "counterexample":
        kwargs.update(alpha=args.alpha, seed=args.seed, n_paths=args.paths,
                      max_jumps=args.max_jumps)
        if args.tol is not None:
            kwargs["tol"] = args.tol
    elif args.name == "footnote":
        kwargs.update(alpha=args.alpha)
        if args.tol is not None:
            kwargs["mass_tol"] = args.tol
    else:
        kwargs.update(alpha=args.alpha)
        if args.tol is not None:
            kwargs["tol"] = args.tol
    return kwargs


def _scenario_traces(out, report):
    f = report.findings
    traces = []
    if report.scenario == "counterexample":
        traces = [("counterexample_mass_q1.csv", f["mass_q1"]),
                  ("counterexample_mass_q2.csv", f["mass_q2"])]
    elif report.scenario == "footnote":
        traces = [("footnote_mass.csv", f["mass"])]
    written = []
    for name, payload in traces:
        rows = _history_rows(payload, 0, 1.0)
        _jsonutil.write_trace(out / name, rows)
        written.append(str(out / name))
    return written


def _cmd_scenario(parser, args):
    runner = SCENARIOS[args.name]
    try:
        report = runner(**_scenario_kwargs(args))
    except WitnessNotFoundError as e:
        payload = e.report.to_dict() if e.report is not None else {}
        payload["flags"] = sorted(set(payload.get("flags", []))
                                  | {"witness-grid-exhausted"})
        payload["error"] = str(e)
        _emit(payload)
        print(e.report.summary() if e.report else f"error: {e}",
              file=sys.stderr)
        return 1
    except MinlabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    payload = report.to_dict()
    out = _out_dir(args)
    if out is not None:
        payload["csv"] = _scenario_traces(out, report)
    _emit(payload)
    print(report.summary(), file=sys.stderr)
    return 0 if report.passed() else 1


_COMMANDS = {
    "validate": _cmd_validate,
    "transition": _cmd_transition,
    "minimal": _cmd_minimal,
    "compare": _cmd_compare,
    "monotone": _cmd_monotone,
    "regular": _cmd_regular,
    "simulate": _cmd_simulate,
    "scenario": _cmd_scenario,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return _COMMANDS[args.command](parser, args)


if __name__ == "__main__":
    sys.exit(main())
