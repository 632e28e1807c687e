"""Command line front end.

    rotlab rep --pair 1/3 --mult 2 -o out/
    rotlab rep --torus3 1/2,1/3,1/5 -o out/
    rotlab obstruct --theta 1/2,1/3,1/5 --matrices out/ -o report/
    rotlab exel-suite --cases 200 -o suite/
    rotlab repair --theta 1/3 --matrices noisy/ -o fixed/
    rotlab counterexample --n-min 2 --n-max 50 -o sweep/

Exit codes: 0 success; 1 usage, parse or I/O failure (and a failing exel-suite);
obstruct additionally returns 2 (obstructed) or 3 (indeterminate).
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

from . import __version__
from .config import DEFAULT_TOL, Tolerances
from .errors import ParseError, RotlabError
from .experiments import (
    COUNTEREXAMPLE_COLUMNS,
    EXEL_COLUMNS,
    ExelGrid,
    as_rows,
    counterexample_sweep,
    exel_suite,
)
from .io import read_phase_matrix, read_tuple, write_csv, write_json_report, write_tuple, write_phase_matrix
from .obstruction import (
    CSV_COLUMNS,
    INDETERMINATE,
    OBSTRUCTED,
    defect,
    obstruction_report,
    report_csv_rows,
)
from .reps import PhaseMatrix, RationalPhase, rational_pair_rep, rational_torus3_rep
from .search import SearchConfig, repair

log = logging.getLogger("rotlab")

EXIT_OK, EXIT_FAIL, EXIT_OBSTRUCTED, EXIT_INDETERMINATE = 0, 1, 2, 3

REPAIR_TRACE_COLUMNS = ["iteration", "objective"]


def parse_theta(text: str) -> PhaseMatrix:
    """A PhaseMatrix JSON path, or comma-separated upper-triangle entries."""
    path = Path(text)
    if path.suffix == ".json" or path.is_file():
        return read_phase_matrix(path)
    parts = [p.strip() for p in text.split(",") if p.strip()]
    m = len(parts)
    n = 2
    while n * (n - 1) // 2 < m:
        n += 1
    if n * (n - 1) // 2 != m:
        raise ParseError(f"{m} entries do not fill the upper triangle of any n x n matrix")
    # "p/q" and integer entries are exact; decimals are plain floats
    try:
        if all(re.fullmatch(r"-?\d+(/\d+)?", p) for p in parts):
            return PhaseMatrix.rational(n, [Fraction(p) for p in parts])
        return PhaseMatrix.from_upper(n, [float(p) for p in parts])
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"cannot parse phases {text!r}: {exc}") from exc


def _global_flags() -> argparse.ArgumentParser:
    sup = argparse.SUPPRESS
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--tol-config", default=sup, help="JSON file with tolerance overrides")
    g.add_argument("--seed", type=int, default=sup, help="base RNG seed (default 0)")
    g.add_argument("--out", "-o", default=sup, help="output directory (default .)")
    g.add_argument("--format", choices=["json", "csv", "both"], default=sup)
    g.add_argument("-v", "--verbose", action="store_true", default=sup)
    return p


GLOBAL_DEFAULTS = {"tol_config": None, "seed": 0, "out": ".", "format": "both", "verbose": False}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotlab",
        description="Obstructions and repair for almost rotation-commuting unitary tuples.",
        parents=[_global_flags()],
    )
    parser.add_argument("--version", action="version", version=f"rotlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_global_flags()]

    p = sub.add_parser("rep", parents=common, help="write exact rational representations")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--pair", help="rotation angle p/q")
    grp.add_argument("--torus3", help="theta12,theta13,theta23 as fractions")
    p.add_argument("--mult", type=int, default=1, help="multiplicity (default 1)")

    p = sub.add_parser("obstruct", parents=common, help="obstruction report for a tuple")
    p.add_argument("--theta", required=True, help="PhaseMatrix JSON or upper entries, e.g. 1/2,1/3,1/5")
    p.add_argument("--matrices", nargs="+", required=True, help="Matrix JSON files or a rep directory")
    p.add_argument("--n-monomial", type=int, default=3)
    p.add_argument("--delta-cert", type=float, default=1e-6)

    p = sub.add_parser("exel-suite", parents=common, help="validate the trace formula on a random grid")
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--q-min", type=int, default=2)
    p.add_argument("--q-max", type=int, default=12)
    p.add_argument("--mult-max", type=int, default=4)
    p.add_argument("--noise-max", type=float, default=1e-2)

    p = sub.add_parser("repair", parents=common, help="search for a nearby exact tuple")
    p.add_argument("--theta", required=True)
    p.add_argument("--matrices", nargs="+", required=True)
    d = SearchConfig()
    p.add_argument("--mu", type=float, default=d.mu)
    p.add_argument("--mu-decay", type=float, default=d.mu_decay)
    p.add_argument("--max-iters", type=int, default=d.max_iters)
    p.add_argument("--step-init", type=float, default=d.step_init)
    p.add_argument("--armijo-c", type=float, default=d.armijo_c)
    p.add_argument("--defect-target", type=float, default=d.defect_target)
    p.add_argument("--trace-csv", action="store_true", help="also write the objective trace as CSV")
    p.add_argument("--save-matrices", action="store_true", help="write the repaired tuple")

    p = sub.add_parser("counterexample", parents=common, help="spin-triple sweep")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=50)
    return parser


def _outputs(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out, args.format in ("json", "both"), args.format in ("csv", "both")


def cmd_rep(args, tol) -> int:
    if args.pair:
        th = RationalPhase.parse(args.pair)
        Theta = PhaseMatrix.rational(2, [th.as_fraction()])
        mats = rational_pair_rep(th, args.mult)
    else:
        Theta = parse_theta(args.torus3)
        if Theta.n != 3:
            raise ParseError("--torus3 takes exactly three entries")
        mats = rational_torus3_rep(Theta, args.mult)
    out = Path(args.out)
    d = defect(Theta, mats, tol)
    write_tuple(out, mats, extra={
        "n": Theta.n,
        "multiplicity": args.mult,
        "theta_upper": [Theta[j, k] for j, k in Theta.pairs()],
        "defect": d.max,
    })
    write_phase_matrix(out / "theta.json", Theta)
    print(f"wrote {len(mats)} matrices of dimension {mats[0].shape[0]} to {out}; defect {d.max:.3e}")
    return EXIT_OK


def cmd_obstruct(args, tol) -> int:
    Theta = parse_theta(args.theta)
    mats = read_tuple(args.matrices)
    rep = obstruction_report(Theta, mats, args.n_monomial, args.delta_cert, tol)
    out, js, cs = _outputs(args)
    if js:
        write_json_report(out / "obstruction.json", {"report": rep.to_dict()}, tol, command="obstruct")
    if cs:
        write_csv(out / "obstruction.csv", report_csv_rows(rep), CSV_COLUMNS)
    print(f"verdict: {rep.verdict} (defect {rep.defect_max:.3e})")
    for p in rep.pairs:
        res = "n/a" if p.trace_condition_residual is None else f"{p.trace_condition_residual:.6g}"
        print(f"  pair ({p.j + 1},{p.k + 1}): theta={p.theta:.6g} rhs={p.exel_rhs} residual={res} {' '.join(p.flags)}")
    return {OBSTRUCTED: EXIT_OBSTRUCTED, INDETERMINATE: EXIT_INDETERMINATE}.get(rep.verdict, EXIT_OK)


def cmd_exel_suite(args, tol) -> int:
    grid = ExelGrid(cases=args.cases, q_min=args.q_min, q_max=args.q_max,
                    mult_max=args.mult_max, noise_max=args.noise_max, seed=args.seed)
    results = exel_suite(grid, tol)
    ok = [r for r in results if r.status == "ok"]
    failed = [r for r in results if r.status == "failed"]
    skipped = len(results) - len(ok) - len(failed)
    out, js, cs = _outputs(args)
    summary = {
        "grid": asdict(grid),
        "passed": len(ok),
        "failed": len(failed),
        "skipped": skipped,
        "max_abs_diff": max((r.abs_diff for r in ok + failed), default=None),
        "max_quantization_residue": max((r.quantization_residue for r in ok + failed), default=None),
    }
    if js:
        write_json_report(out / "exel_suite.json", {"summary": summary, "cases": as_rows(results)}, tol,
                          command="exel-suite")
    if cs:
        write_csv(out / "exel_suite.csv", as_rows(results), EXEL_COLUMNS)
    print(f"exel suite: {len(ok)} passed, {len(failed)} failed, {skipped} skipped; "
          f"max |lhs-rhs| = {summary['max_abs_diff']}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_repair(args, tol) -> int:
    Theta = parse_theta(args.theta)
    mats = read_tuple(args.matrices)
    cfg = SearchConfig(mu=args.mu, max_iters=args.max_iters, step_init=args.step_init,
                       armijo_c=args.armijo_c, defect_target=args.defect_target,
                       seed=args.seed, mu_decay=args.mu_decay)
    res = repair(Theta, mats, cfg, tol)
    out, js, cs = _outputs(args)
    body = {"config": asdict(cfg), "result": res.to_dict()}
    if js:
        write_json_report(out / "repair.json", body, tol, command="repair")
    if args.trace_csv or cs:
        write_csv(out / "repair_trace.csv",
                  [{"iteration": i, "objective": v} for i, v in enumerate(res.objective_trace)],
                  REPAIR_TRACE_COLUMNS)
    if args.save_matrices:
        write_tuple(out / "repaired", res.repaired, extra={"final_defect": res.final_defect})
    print(f"repair: converged={res.converged} status={res.status} iterations={res.iterations} "
          f"defect={res.final_defect:.3e} moved={res.distance_moved:.3e}")
    return EXIT_OK


def cmd_counterexample(args, tol) -> int:
    rows = counterexample_sweep(args.n_min, args.n_max, tol)
    out, js, cs = _outputs(args)
    if js:
        write_json_report(out / "counterexample.json", {"rows": as_rows(rows)}, tol, command="counterexample")
    if cs:
        write_csv(out / "counterexample.csv", as_rows(rows), COUNTEREXAMPLE_COLUMNS)
    indices = sorted({r.bott_index_triple for r in rows if r.bott_index_triple is not None})
    print(f"counterexample: n={args.n_min}..{args.n_max}, bott indices {indices}")
    return EXIT_OK


COMMANDS = {
    "rep": cmd_rep,
    "obstruct": cmd_obstruct,
    "exel-suite": cmd_exel_suite,
    "repair": cmd_repair,
    "counterexample": cmd_counterexample,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        tol = Tolerances.load(args.tol_config) if args.tol_config else DEFAULT_TOL
        return COMMANDS[args.command](args, tol)
    except (RotlabError, OSError, ValueError) as exc:
        print(f"rotlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
