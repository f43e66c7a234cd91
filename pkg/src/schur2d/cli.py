"""Command-line interface: ``schur2d <command> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 budget
exhausted.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import blocks as blk
from .cnf import DecodeError, ModelError, decode_model, encode, parse_model, write_dimacs
from .core import Enumeration, StructuralError, coloring_from_document, find_witness, is_valid_coloring
from .db import DbError, IntegrityError, ResultRecord, append_db, best_known, load_db
from .solver import Budget, BudgetExceeded, SchurNumberResult, parallel_compute

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
DEFAULT_MAX_N = 64


def default_max_n(r: int, k: int, known: dict) -> int:
    """3x the largest exact value known for smaller parameters, else 64."""
    smaller = [v for (rr, kk), v in known.items() if rr <= r and kk <= k and (rr, kk) != (r, k)]
    return 3 * max(smaller) if smaller else DEFAULT_MAX_N


def _known(db):
    return best_known(load_db(db)) if db else {}


def _budget(args) -> Budget:
    return Budget(max_nodes=args.max_nodes, max_seconds=args.max_seconds)


def _solve(r, k, max_n, workers, budget, db):
    """Run the solver; on budget exhaustion fall back to a lower-bound result."""
    try:
        res = parallel_compute(r, k, max_n, Enumeration.natural(), workers, budget)
        exhausted = None
    except BudgetExceeded as exc:
        cert = exc.certificate
        res = SchurNumberResult(r, k, "lower_bound", len(cert) if cert else 0, cert, exc.stats)
        exhausted = exc
    if db and res.certificate is not None and res.status in ("exact", "lower_bound") and res.value > 0:
        append_db(db, ResultRecord.from_result(res))
    return res, exhausted


def cmd_compute(args) -> int:
    max_n = args.max_n or default_max_n(args.r, args.k, _known(args.db))
    res, exhausted = _solve(args.r, args.k, max_n, args.workers, _budget(args), args.db)
    print(res.summary())
    if exhausted is not None:
        print(f"budget exhausted: {exhausted}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_encode(args) -> int:
    inst = encode(args.r, args.k, args.n, Enumeration.natural())
    with open(args.out, "wb") as fh:
        write_dimacs(inst, fh)
    print(f"wrote {args.out}: {inst.num_vars} variables, {len(inst.clauses)} clauses")
    return EXIT_OK


def cmd_check_model(args) -> int:
    inst = encode(args.r, args.k, args.n, Enumeration.natural())
    try:
        model = parse_model(Path(args.model).read_text())
        coloring = decode_model(inst, model)
    except (ModelError, DecodeError, ValueError) as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_FAIL
    prefix = Enumeration.natural().prefix(args.n)
    if not is_valid_coloring(prefix, coloring, args.k):
        print(f"decoded coloring has a witness: {find_witness(prefix, coloring, args.k)}", file=sys.stderr)
        return EXIT_FAIL
    print("valid: " + " ".join(map(str, coloring.colors)))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        doc = json.loads(Path(args.coloring).read_text())
        prefix, coloring, k = coloring_from_document(doc)
    except (OSError, json.JSONDecodeError, StructuralError) as exc:
        print(f"cannot read coloring: {exc}", file=sys.stderr)
        return EXIT_USAGE
    k = args.k if args.k is not None else k
    witness = find_witness(prefix, coloring, k)
    if witness is None:
        print(f"valid: no monochromatic configuration with |B| = {k} among {prefix.n} elements")
        return EXIT_OK
    print(f"witness: {witness}")
    return EXIT_FAIL


def _parse_surrogates(items) -> dict:
    out = dict(blk.DEFAULT_SURROGATES)
    for item in items or ():
        try:
            lhs, value = item.split("=")
            r, k = (int(x) for x in lhs.split(","))
            out[(r, k)] = int(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad surrogate {item!r}, expected R,K=VALUE") from None
    return out


def cmd_blocks(args) -> int:
    provider = blk.SchurNumberProvider(_parse_surrogates(args.surrogate),
                                       Budget(max_seconds=args.level_seconds))
    family = blk.construct_block_family(args.depth, blk.SchurSetHandle.naturals(), provider)
    for j, b in enumerate(family.blocks, start=1):
        tag = " (surrogate)" if b.surrogate else ""
        print(f"B_{j}: modulus {b.modulus}, {b.prefix_length} elements{tag}, "
              f"{b.elements[0]} .. {b.elements[-1]}")
    if args.out:
        Path(args.out).write_text(json.dumps(family.as_document(), indent=1) + "\n")
    status = EXIT_OK
    if not family.complete:
        print(f"stopped early: {family.failure}", file=sys.stderr)
        status = EXIT_BUDGET
    if args.verify:
        report = blk.verify_disjoint_sums(family)
        print(f"disjoint sums: {'pass' if report else 'FAIL'}")
        locality = blk.verify_sum_partner_locality(family)
        print(f"sum-partner locality: {'pass' if locality else 'FAIL'}")
        ok, undecided = bool(report) and locality, False
        for j in range(1, family.depth + 1):
            try:
                forced = blk.verify_forcing(family, j, Budget(max_seconds=args.forcing_seconds))
            except BudgetExceeded as exc:
                print(f"forcing j={j}: undecided ({exc})")
                undecided = True
                continue
            print(f"forcing j={j}: {'pass' if forced else 'FAIL'}")
            ok = ok and forced
        if not ok:
            return EXIT_FAIL
        if undecided:
            return EXIT_BUDGET
    return status


def cmd_table(args) -> int:
    budget = _budget(args)
    known = _known(args.db)
    cells, exhausted = {}, False
    for r in range(1, args.r_max + 1):
        for k in range(1, args.k_max + 1):
            max_n = args.max_n or default_max_n(r, k, known)
            res, ex = _solve(r, k, max_n, args.workers, budget, args.db)
            exhausted |= ex is not None
            cells[(r, k)] = res
            if res.is_exact:
                known[(r, k)] = res.value
    width = max(6, *(len(_cell(c)) for c in cells.values()))
    print("r\\k " + "".join(f"{k:>{width + 1}}" for k in range(1, args.k_max + 1)))
    for r in range(1, args.r_max + 1):
        print(f"{r:<4}" + "".join(f"{_cell(cells[(r, k)]):>{width + 1}}" for k in range(1, args.k_max + 1)))
    print("(>=n: lower bound, budget or max-n reached)")
    return EXIT_BUDGET if exhausted else EXIT_OK


def _cell(res: SchurNumberResult) -> str:
    return str(res.value) if res.is_exact else f">={res.value + 1}"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="schur2d", description="Exact two-dimensional Schur numbers S(r,k).")
    sub = p.add_subparsers(dest="command", required=True)

    def budget_flags(sp):
        sp.add_argument("--max-seconds", type=float, default=None, help="wall-clock budget per value")
        sp.add_argument("--max-nodes", type=int, default=None, help="node budget per decision search")

    max_n_help = f"largest n to try (default: 3x the largest exact value in --db for smaller r,k, else {DEFAULT_MAX_N})"
    c = sub.add_parser("compute", help="compute S(r,k) over the natural numbers")
    c.add_argument("--r", type=int, required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--max-n", type=int, default=None, help=max_n_help)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--db", default=None, help="append the certified result to this JSON-lines file")
    budget_flags(c)
    c.set_defaults(func=cmd_compute)

    e = sub.add_parser("encode", help="write the DIMACS CNF for prefix length n")
    for name in ("--r", "--k", "--n"):
        e.add_argument(name, type=int, required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_encode)

    m = sub.add_parser("check-model", help="decode and verify a SAT solver model")
    for name in ("--r", "--k", "--n"):
        m.add_argument(name, type=int, required=True)
    m.add_argument("--model", required=True)
    m.set_defaults(func=cmd_check_model)

    v = sub.add_parser("verify", help="check a coloring file for monochromatic configurations")
    v.add_argument("--coloring", required=True)
    v.add_argument("--k", type=int, default=None, help="defaults to the file's k")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("blocks", help="construct a block family over the naturals")
    b.add_argument("--depth", type=int, required=True)
    b.add_argument("--verify", action="store_true")
    b.add_argument("--out", default=None)
    b.add_argument("--surrogate", action="append", metavar="R,K=VALUE",
                   help="upper surrogate for S(R,K) when the solver runs out of budget")
    b.add_argument("--level-seconds", type=float, default=30.0, help="solver budget per level")
    b.add_argument("--forcing-seconds", type=float, default=60.0, help="solver budget per forcing check")
    b.set_defaults(func=cmd_blocks)

    t = sub.add_parser("table", help="sweep S(r,k) for r <= R, k <= K")
    t.add_argument("--r-max", type=int, required=True)
    t.add_argument("--k-max", type=int, required=True)
    t.add_argument("--max-n", type=int, default=None, help=max_n_help)
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--db", default=None)
    budget_flags(t)
    t.set_defaults(func=cmd_table)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for name in ("r", "k", "n", "depth", "r_max", "k_max", "workers"):
        val = getattr(args, name, None)
        if val is not None and val < 1:
            print(f"--{name.replace('_', '-')} must be positive", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except StructuralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DbError, IntegrityError) as exc:
        print(f"database error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
