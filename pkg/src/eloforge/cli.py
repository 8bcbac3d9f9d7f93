"""Command-line entry point.

Exit codes: 0 success, 1 usage or input error, 2 a checked inequality failed.
CSV outputs start with one ``# config: {...}`` line so every file records the
run that produced it.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from . import __version__
from .bounds import bound_report, table_row
from .dynamics import Transcript
from .path_engine import RewriteLimitError, make_upset_free
from .potfn import BUILTINS, parse_sigma, validate_pot
from .search import MAX_GAMES, MAX_PLAYERS, SearchProblem, compare, solve
from .strategies import ladder, repeat_win
from .tails import TailIntegrals

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- argument types ------------------------------------------------------------------

def _count(text: str) -> int:
    """Non-negative integer; scientific notation such as 1e6 is accepted."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v) or v < 0 or v != int(v):
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(v)


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _sigma(text: str):
    try:
        return parse_sigma(text)
    except (ValueError, OSError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _sigma_unchecked(text: str):
    try:
        return parse_sigma(text, validate=False)
    except (ValueError, OSError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _transcript(path: str) -> Transcript:
    try:
        return Transcript.load(path)
    except OSError as exc:
        raise UsageError(f"argument --in: cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(f"argument --in: {path}: {exc}") from None


def _floats(text: str) -> list:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(not math.isfinite(v) or v < 0 for v in vals):
        raise argparse.ArgumentTypeError("expected non-negative finite numbers")
    return vals


SIGMA_HELP = ("pot function: logistic, erf, alg:p=<p> with p >= 1, "
              "or csv:<file> with columns z,sigma(z)")


# --- output helpers ----------------------------------------------------------------------

def _config(args) -> dict:
    skip = {"func", "out"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if hasattr(v, "name") and hasattr(v, "kind"):
            v = v.name
        out[k] = v
    out["version"] = __version__
    return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(args, header, rows) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_config(args), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row.get(h)) for h in header])
    return buf.getvalue()


def _json(args, payload: dict) -> str:
    payload = dict(payload)
    payload["config"] = _config(args)
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def _write(args, text: str):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _tails(args, sigma) -> TailIntegrals:
    return TailIntegrals(sigma, quad_tol=args.quad_tol)


# --- subcommands -------------------------------------------------------------------------

def cmd_validate_pot(args) -> int:
    rep = validate_pot(args.sigma, z_max=args.z_max, points=args.points)
    rows = [dict(r) for r in rep.rows()]
    rows.append({"assumption": "symmetry_error", "passed": rep.passed.get("symmetric", False),
                 "witness": rep.symmetry_error})
    _write(args, _csv(args, ["assumption", "passed", "witness"], rows))
    return EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_simulate(args) -> int:
    tails = _tails(args, args.sigma)
    k = args.n2_wins
    r, tr = repeat_win(args.sigma, k, record=args.emit is not None)
    mid = 0.5 * tails.cumulative_inv(2.0 * k)
    row = {"k": k, "rating": r, "estimate": mid, "low": mid - 3.0, "high": mid + 3.0,
           "inside": mid - 3.0 <= r <= mid + 3.0}
    if args.emit:
        tr.save(args.emit)
    _write(args, _csv(args, list(row), [row]))
    return EXIT_OK if row["inside"] else EXIT_VIOLATION


def cmd_ladder(args) -> int:
    sigma = args.sigma
    if sigma.threshold is None and args.threshold is None:
        # no finite threshold: two players repeating the same win is the strategy
        print(f"note: {sigma.name} has no ladder threshold; using repeated wins",
              file=sys.stderr)
        args.n2_wins = args.games
        return cmd_simulate(args)
    run = ladder(sigma, args.games, threshold=args.threshold, stop_early=args.stop_early)
    if args.emit:
        run.transcript(sigma.name).save(args.emit)
    if args.certify:
        rows = run.certificate()
        text = _csv(args, ["name", "lhs", "rhs", "margin", "holds"], rows)
        _write(args, text)
        return EXIT_OK if all(r["holds"] for r in rows) else EXIT_VIOLATION
    check = run.player_check()
    row = {"k": run.k, "r1": run.r1, "guarantee": run.guarantee, "threshold": run.threshold,
           "ladder_rate": run.rate, "players_used": run.players_used,
           "players_at_stop": run.players_at_stop, "player_bound": run.player_bound,
           "phi_k": run.phi_k, "stopped_early": run.stopped_early}
    _write(args, _csv(args, list(row), [row]))
    ok = run.r1 >= run.guarantee and (check is None or check["holds"])
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_search(args) -> int:
    try:
        problem = SearchProblem(args.sigma, args.n, args.k)
    except ValueError as exc:
        raise UsageError(f"argument -n/-k: {exc}") from None
    result = solve(problem, symmetry=not args.no_symmetry)
    comp = compare(problem, _tails(args, args.sigma), result)
    if args.emit:
        result.best_transcript.save(args.emit)
    rows = [{"quantity": q, "value": v} for q, v in comp.rows()]
    rows += [{"quantity": "nodes_expanded", "value": result.nodes_expanded},
             {"quantity": "pruned", "value": result.pruned},
             {"quantity": "violations", "value": len(comp.violations)}]
    _write(args, _csv(args, ["quantity", "value"], rows))
    for v in comp.violations:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_VIOLATION if comp.violations else EXIT_OK


def cmd_bounds(args) -> int:
    tails = _tails(args, args.sigma)
    if args.tails is not None:
        rows = []
        for x in args.tails:
            row = {"x": x}
            for name, fn in (("cumulative", tails.cumulative), ("moment", tails.moment),
                             ("cumulative_inv", tails.cumulative_inv),
                             ("moment_inv", tails.moment_inv)):
                try:
                    row[name] = float(fn(x))
                except ValueError:
                    row[name] = None
            rows.append(row)
        _write(args, _csv(args, ["x", "cumulative", "moment", "cumulative_inv", "moment_inv"], rows))
        return EXIT_OK
    if args.games is None and args.rating is None:
        raise UsageError("one of --games, --rating or --tails is required")
    try:
        rep = bound_report(tails, k=args.games, R=args.rating)
    except ValueError as exc:
        raise UsageError(f"argument --sigma: {exc}") from None
    row = rep.row(with_constants=args.constants)
    _write(args, _csv(args, list(row), [row]))
    lg, cap = rep.ladder_guarantee, rep.rating_cap
    return EXIT_VIOLATION if (lg is not None and cap is not None and lg > cap) else EXIT_OK


def cmd_certify_path(args) -> int:
    transcript = _transcript(args.input)
    sigma = args.sigma
    if sigma is None:
        if not transcript.sigma:
            raise UsageError("argument --sigma: transcript names no pot function")
        try:
            sigma = parse_sigma(transcript.sigma)
        except ValueError as exc:
            raise UsageError(f"argument --in: {exc}") from None
    try:
        path, rep = make_upset_free(transcript, args.rating, sigma, _tails(args, sigma))
    except RewriteLimitError as exc:
        print(f"eloforge: rewrite did not terminate: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except ValueError as exc:
        raise UsageError(f"argument --rating: {exc}") from None
    if args.emit:
        path.to_transcript(sigma.name).save(args.emit)
    _write(args, _json(args, rep.to_dict()))
    return EXIT_OK if rep.certified else EXIT_VIOLATION


def cmd_table1(args) -> int:
    rows = []
    bad = False
    for spec in BUILTINS:
        sigma = parse_sigma(spec)
        row = table_row(TailIntegrals(sigma, quad_tol=args.quad_tol), args.k)
        lg = row["ladder_guarantee"]
        bad |= lg is not None and lg > row["rating_cap"]
        rows.append(row)
    header = ["sigma", "k", "n2_estimate", "n2_closed_form", "ladder_guarantee",
              "many_player_form", "rating_cap"]
    _write(args, _csv(args, header, rows))
    return EXIT_VIOLATION if bad else EXIT_OK


# --- parser --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    env_tol = os.environ.get("ELOFORGE_QUAD_TOL")
    try:
        default_tol = float(env_tol) if env_tol else 1e-10
    except ValueError:
        default_tol = None

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--seed", type=int, default=0,
                        help="seed recorded in the output header (default 0)")
    common.add_argument("--quad-tol", type=_positive, default=default_tol,
                        help="relative tolerance of the tail quadrature "
                             "(default 1e-10, or $ELOFORGE_QUAD_TOL)")

    p = _Parser(prog="eloforge",
                description="Rating inflation under zero-sum Elo-style updates: strategies, "
                            "exact search, bounds and path certificates.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate-pot", parents=[common],
                       help="check a pot function against the four standing assumptions")
    s.add_argument("--sigma", type=_sigma_unchecked, required=True, help=SIGMA_HELP)
    s.add_argument("--z-max", type=_positive, default=50.0,
                   help="half-width of the sample grid (>= 50)")
    s.add_argument("--points", type=_count, default=20001, help="grid size (>= 10000)")
    s.set_defaults(func=cmd_validate_pot)

    s = sub.add_parser("simulate", parents=[common],
                       help="two players, one beats the other repeatedly")
    s.add_argument("--sigma", type=_sigma, required=True, help=SIGMA_HELP)
    s.add_argument("--n2-wins", type=_count, required=True,
                   help="number of games k; reports the winner's rating and the interval "
                        "half the inverse cumulative tail integral at 2k, plus or minus 3")
    s.add_argument("--emit", help="write the transcript as JSON")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("ladder", parents=[common],
                       help="many-player ladder strategy with its certificate")
    s.add_argument("--sigma", type=_sigma, required=True, help=SIGMA_HELP)
    s.add_argument("--games", type=_count, required=True, help="number of games k")
    s.add_argument("--threshold", type=_positive,
                   help="lead a player must hold over the next before moving on "
                        "(default: the maximiser of sigma(-z) z^2)")
    s.add_argument("--stop-early", action="store_true",
                   help="stop climbing once the top rating beats the guarantee; "
                        "spend the rest on repeated wins")
    s.add_argument("--certify", action="store_true",
                   help="print the four ladder inequalities with their margins")
    s.add_argument("--emit", help="write the transcript as JSON")
    s.set_defaults(func=cmd_ladder)

    s = sub.add_parser("search", parents=[common],
                       help="exact optimum for tiny n and k by branch and bound")
    s.add_argument("--sigma", type=_sigma, default=parse_sigma("logistic"), help=SIGMA_HELP)
    s.add_argument("-n", type=_count, required=True, help=f"players, 2..{MAX_PLAYERS}")
    s.add_argument("-k", type=_count, required=True, help=f"unit games, 0..{MAX_GAMES}")
    s.add_argument("--no-symmetry", action="store_true",
                   help="explore every labelled move instead of sorted states")
    s.add_argument("--emit", help="write the best transcript as JSON")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("bounds", parents=[common],
                       help="closed-form bounds at a game count or a rating")
    s.add_argument("--sigma", type=_sigma, required=True, help=SIGMA_HELP)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--games", type=_count,
                   help="game count k: two-player interval, ladder guarantee and rating cap")
    g.add_argument("--rating", type=_positive,
                   help="rating R: potential lower bound and games needed to reach R")
    g.add_argument("--tails", type=_floats,
                   help="comma-separated x values: tail integrals and their inverses")
    s.add_argument("--constants", action="store_true",
                   help="append the constants behind each bound")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("certify-path", parents=[common],
                       help="rewrite a transcript into an upset-free one and certify it")
    s.add_argument("--in", dest="input", required=True,
                   help="transcript JSON from the origin")
    s.add_argument("--rating", type=_positive, required=True,
                   help="target R: the transcript must end with some rating >= R")
    s.add_argument("--sigma", type=_sigma, help="overrides the transcript's pot function")
    s.add_argument("--emit", help="write the rewritten transcript as JSON")
    s.set_defaults(func=cmd_certify_path)

    s = sub.add_parser("table1", parents=[common],
                       help="largest-rating table for every built-in pot at one k")
    s.add_argument("--k", type=_count, required=True, help="game count, e.g. 1e6")
    s.set_defaults(func=cmd_table1)
    p.set_defaults(_default_tol=default_tol, _env_tol=env_tol)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.quad_tol is None:
        parser.error(f"ELOFORGE_QUAD_TOL is not a number: {args._env_tol!r}")
    del args._default_tol, args._env_tol
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        parser.exit(EXIT_USAGE, f"eloforge {args.command}: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
