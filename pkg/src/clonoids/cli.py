"""Command-line driver.

Reports go to standard output as plain lines; ``--out`` additionally writes
JSON.  Exit codes: 0 success, 1 verification failure, 2 proven infeasible,
3 invalid input or budget.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .clonoid import closure_level, member
from .comprep import ClonoidCoords, InvalidCoords, comprep_solve, coords_from_level, lattice_count
from .funcspace import FuncTable, ModuleSpec
from .linalg import BudgetExceeded, DEFAULT_BUDGET
from .scalars import NotCoprime, NotPrime, UnsupportedOrder, check_coprime, field_make
from .theta import certificate_delta, verify_identity
from .unifgen import (
    Certificate,
    arity_certificate,
    build_level_certificate,
    fixes_points,
    lower_bound,
    solve_certificate_direct,
)

EXIT_OK, EXIT_FAIL, EXIT_INFEASIBLE, EXIT_INVALID = 0, 1, 2, 3


class InvalidInput(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=int, help="field characteristic")
    p.add_argument("--e", type=int, default=1, help="field degree")
    p.add_argument("--k", type=int, help="dimension of the source module F^k")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--mod", type=int, help="cyclic target Z/N")
    g.add_argument("--module", type=str, help="target factors d1,d2,...")
    p.add_argument("--arity", type=int)
    p.add_argument("--rank-bound", type=int)
    p.add_argument("--in", dest="inp", type=str)
    p.add_argument("--out", type=str)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--samples", type=int, default=0, help="0 means exhaustive")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clonoids", description="Clonoids from F^k to B: certificates, closures, CompRep.")
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, text in [
        ("theta-verify", "check the θ-space identity for δ_{X0}"),
        ("certify", "build and verify a uniform-generation certificate"),
        ("check-cert", "re-verify a certificate file"),
        ("closure", "m-ary part of a generated clonoid"),
        ("member", "membership of a function in a generated clonoid"),
        ("comprep", "image of a clonoid on a list of inputs"),
        ("lattice", "count clonoids via invariant submodules"),
        ("bounds", "lower bound on the generating arity"),
    ]:
        p = sub.add_parser(name, help=text)
        _common(p)
        if name == "certify":
            p.add_argument("--solver", action="store_true", help="use the direct linear solver")
        if name == "comprep":
            p.add_argument("--coords", type=str, help="coordinates JSON (overrides the instance)")
        if name == "bounds":
            p.add_argument("--size-a", type=int, required=True)
            p.add_argument("--size-r", type=int, required=True)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _field(args):
    if args.p is None:
        raise InvalidInput("--p is required")
    return field_make(args.p, args.e)


def _module(args) -> ModuleSpec:
    if args.module:
        return ModuleSpec.parse(args.module)
    if args.mod:
        return ModuleSpec((args.mod,))
    raise InvalidInput("--mod or --module is required")


def _k(args) -> int:
    if args.k is None or args.k < 0:
        raise InvalidInput("--k must be a non-negative integer")
    return args.k


def _load(path: str | None):
    if not path:
        raise InvalidInput("--in is required")
    with open(path) as fh:
        return json.load(fh)


def _emit(args, obj) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(obj, fh, indent=1, sort_keys=True)
            fh.write("\n")


def _fmt(xs) -> str:
    return " ".join(str(int(x)) for x in xs)


def _generators(obj):
    gens = obj["generators"] if isinstance(obj, dict) else obj
    return [FuncTable.from_json(g) for g in gens]


def _basis_lines(basis) -> None:
    for row in basis:
        print("  " + _fmt(row))


# ---------------------------------------------------------------------------
# subcommands


def cmd_theta_verify(args) -> int:
    F, k, module = _field(args), _k(args), _module(args)
    N = module.N
    check_coprime(F.q, N)
    rep = verify_identity(F.q, k, N, threads=args.threads)
    print(f"q={F.q} k={k} N={N}")
    print(f"type counts: {_fmt(rep.type_counts)}")
    print(f"theta counts: {_fmt(rep.theta_counts)}")
    print(f"alpha: {_fmt(rep.alpha)}")
    print(f"untyped: {rep.untyped} (full rank {rep.untyped_full_rank})")
    print(f"incidence: {'pass' if rep.incidence_ok else 'fail'}")
    print(f"identity: {'pass' if rep.identity_ok else 'fail'}")
    if args.out:
        _emit(args, certificate_delta(F.q, k, N).to_json())
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_certify(args) -> int:
    F, k, module = _field(args), _k(args), _module(args)
    N = module.N
    check_coprime(F.q, N)
    n = k if args.rank_bound is None else args.rank_bound
    m = k + 1 if args.arity is None else args.arity
    if n < 0 or m < 1:
        raise InvalidInput("rank bound and arity must be positive")
    if args.solver or n < k:
        if m != k + 1:
            raise InvalidInput("the solver handles arity k+1 only")
        cert = solve_certificate_direct(F, k, N, n, budget=args.budget)
        if cert is None:
            print(f"infeasible: no rank<={n} formula for {k + 1}-ary operations, q={F.q} k={k} N={N}")
            return EXIT_INFEASIBLE
    elif n > k:
        raise InvalidInput("rank bound above k is never needed")
    elif m == k + 1:
        cert = build_level_certificate(F, k, N)
    else:
        cert = arity_certificate(F, k, N, m, budget=args.budget)
    ok = cert.verify(threads=args.threads)
    print(f"q={F.q} k={k} N={N} arity={cert.op.m} rank<={cert.op.rank_bound}")
    print(f"provenance: {cert.provenance}")
    print(f"terms: {len(cert.op)}")
    print(f"verified: {'yes' if ok else 'no'}")
    obj = cert.to_json()
    if args.out:
        _emit(args, obj)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_cert(args) -> int:
    obj = _load(args.inp)
    try:
        cert = Certificate.from_json(obj)
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"malformed certificate: {exc}") from exc
    check_coprime(cert.field.q, cert.op.N)
    if args.samples > 0 and cert.scope == "full-level":
        rng = np.random.default_rng(args.seed)
        total = cert.field.q ** (cert.op.m * cert.k)
        xs = np.unique(rng.integers(0, total, size=args.samples))
        ok = cert.op.rank_sound() and fixes_points(cert.op, cert.k, xs, args.threads)
        mode = f"sampled ({len(xs)} points)"
    else:
        ok = cert.verify(threads=args.threads)
        mode = "exhaustive"
    print(f"scope: {cert.scope} arity={cert.op.m} rank<={cert.op.rank_bound} terms={len(cert.op)}")
    print(f"mode: {mode}")
    print(f"verified: {'yes' if ok else 'no'}")
    return EXIT_OK if ok else EXIT_FAIL


def _closure_from(args, obj):
    gens = _generators(obj)
    if not gens:
        raise InvalidInput("at least one generator is required")
    m = args.arity if args.arity is not None else (obj.get("arity") if isinstance(obj, dict) else None)
    if m is None:
        m = max(g.m for g in gens)
    gens[0].module.check_coprime(gens[0].field.q)
    return closure_level(gens, int(m), budget=args.budget)


def cmd_closure(args) -> int:
    L = _closure_from(args, _load(args.inp))
    print(f"arity: {L.m}")
    print(f"cardinality: {L.cardinality()}")
    print(f"basis ({L.basis.shape[0]} rows):")
    _basis_lines(L.basis)
    _emit(args, {"arity": L.m, "N": L.module.N, "cardinality": L.cardinality(), "basis": L.basis.tolist()})
    return EXIT_OK


def cmd_member(args) -> int:
    obj = _load(args.inp)
    f = FuncTable.from_json(obj["function"])
    if args.arity is None:
        args.arity = f.m
    L = _closure_from(args, obj)
    verdict = member(f, L)
    print("yes" if verdict else "no")
    _emit(args, {"member": bool(verdict)})
    return EXIT_OK


def _coords(args, obj) -> ClonoidCoords:
    if args.coords:
        with open(args.coords) as fh:
            return ClonoidCoords.from_json(json.load(fh))
    if "coords" in obj:
        return ClonoidCoords.from_json(obj["coords"])
    if "generators" in obj:
        gens = _generators(obj)
        k = gens[0].k
        return coords_from_level(closure_level(gens, k, budget=args.budget))
    raise InvalidInput("instance needs coords or generators")


def cmd_comprep(args) -> int:
    obj = _load(args.inp)
    coords = _coords(args, obj)
    inputs = [np.asarray(X, dtype=np.int64) for X in obj["inputs"]]
    for X in inputs:
        if X.ndim != 2 or (X < 0).any() or (X >= coords.field.q).any():
            raise InvalidInput("inputs must be matrices over the field")
    S = comprep_solve(coords, inputs)
    print(f"inputs: {len(inputs)}")
    print(f"cardinality: {S.cardinality()}")
    print(f"basis ({S.basis.shape[0]} rows):")
    _basis_lines(S.basis)
    _emit(args, {"N": S.N, "basis": S.basis.tolist()})
    return EXIT_OK


def cmd_lattice(args) -> int:
    F, k, module = _field(args), _k(args), _module(args)
    check_coprime(F.q, module.order)
    per = []
    total = lattice_count(F, k, module, per)
    for i, c in enumerate(per):
        print(f"i={i}: {c}")
    print(total)
    _emit(args, {"q": F.q, "k": k, "module": list(module.factors), "per_level": per, "count": total})
    return EXIT_OK


def cmd_bounds(args) -> int:
    b = lower_bound(args.size_a, args.size_r)
    print(b)
    _emit(args, {"size_a": args.size_a, "size_r": args.size_r, "bound": b})
    return EXIT_OK


COMMANDS = {
    "theta-verify": cmd_theta_verify,
    "certify": cmd_certify,
    "check-cert": cmd_check_cert,
    "closure": cmd_closure,
    "member": cmd_member,
    "comprep": cmd_comprep,
    "lattice": cmd_lattice,
    "bounds": cmd_bounds,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except (InvalidInput, InvalidCoords, NotCoprime, NotPrime, UnsupportedOrder, BudgetExceeded,
            OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
