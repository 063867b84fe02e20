"""Command-line front end.

    h10sim solve --eq "x - 3" --seed 42 --out r.json
    h10sim boost --q 0.6 --target 0.99

Every subcommand emits one JSON document (to --out when given, otherwise to
standard output). Exit status: 0 on a result or verdict, 2 when ``solve`` is
INCONCLUSIVE, 1 on usage or configuration errors, which are reported as a
JSON object with an "error" key.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import boost, decide, fock, gapest, hamiltonians, oracle, poly
from .evolve import Schedule, evolve_product_formula, evolve_reference
from .report import SCHEMA, dumps


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _ints(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("cutoffs must be positive")
    return vals


def _complexes(text: str) -> list[complex]:
    try:
        vals = [complex(v.strip().replace("i", "j")) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    return [v.real if v.imag == 0 else v for v in vals]


def _time(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("T must be a number or 'auto'")


def _broadcast(vals, K: int, name: str) -> list:
    vals = list(vals)
    if len(vals) == 1:
        vals = vals * K
    if len(vals) != K:
        raise ValueError(f"{name} needs 1 or {K} entries, got {len(vals)}")
    return vals


def _equation(args) -> poly.Polynomial:
    return poly.parse(args.eq)


def _space_args(p, args, default_cutoff=8):
    cutoffs = _broadcast(args.cutoffs or [default_cutoff], p.K, "cutoffs")
    alphas = _broadcast(args.alpha or [1.0], p.K, "alpha")
    return cutoffs, alphas


def cmd_solve(args) -> tuple[dict, int]:
    p = _equation(args)
    cfg = decide.SolveConfig(
        epsilon=args.epsilon, p=args.p, cutoffs=args.cutoffs, ref_cutoffs=args.ref_cutoffs,
        alphas=args.alpha, T=args.T, seed=args.seed, max_iterations=args.max_iterations,
        L=args.L, margin=args.margin, grid=args.grid)
    cfg = cfg.resolved(p.K)
    verdict = decide.solve(p, cfg)
    rep = {"command": "solve", "equation": args.eq, "polynomial": str(p),
           "variables": list(p.var_names), "config": cfg.to_dict(), "seed": cfg.seed,
           **verdict.report}
    if verdict.witness is not None:
        rep["witness_check"] = {"D": poly.evaluate(p, verdict.witness)}
    return rep, (2 if verdict.kind is decide.Kind.INCONCLUSIVE else 0)


def _schedule(args, hs_loop) -> tuple[Schedule, float]:
    d = hamiltonians.diagnostics(hs_loop, args.grid)
    T = d.T_bound if args.T == "auto" else float(args.T)
    if not math.isfinite(T):
        raise ValueError("no finite adiabatic time bound; pass --T")
    return Schedule.default(T, d.norm_HI_minus_HP, d.energy_scale, args.N, args.m), d.norm_HI_minus_HP


def cmd_evolve(args) -> tuple[dict, int]:
    p = _equation(args)
    cutoffs, alphas = _space_args(p, args, 16)
    space = fock.FockSpace(cutoffs)
    hs = hamiltonians.build(p, space, alphas)
    sched, norm = _schedule(args, hs)
    psi0 = fock.coherent_state(space, alphas)
    trace: list = []
    if args.integrator == "product":
        psi = evolve_product_formula(hs, psi0, sched, norm=norm, trace=trace)
    else:
        psi = evolve_reference(hs, psi0, sched.T, args.steps, trace=trace)
    probs = np.abs(psi) ** 2
    order = np.argsort(-probs, kind="stable")[: args.top]
    return {"command": "evolve", "equation": args.eq, "cutoffs": cutoffs, "alphas": alphas,
            "integrator": args.integrator, "schedule": sched.to_dict(), "norm_HI_minus_HP": norm,
            "max_norm_deviation": max(trace, default=0.0),
            "boundary_mass": float(probs[space.boundary_mask()].sum()),
            "top": [{"n": list(space.occupation(int(i))), "p": float(probs[i])} for i in order]}, 0


def cmd_gap(args) -> tuple[dict, int]:
    p = _equation(args)
    cutoffs, alphas = _space_args(p, args)
    hs = hamiltonians.build(p, fock.FockSpace(cutoffs), alphas)
    out = {"command": "gap", "equation": args.eq, "cutoffs": cutoffs, "alphas": alphas}
    if args.method in ("exact", "both"):
        out["gap_diagnostics"] = hamiltonians.diagnostics(hs, args.grid).to_dict()
    if args.method in ("bogoliubov", "both"):
        out["gap_estimate"] = gapest.estimate_gap_and_T(hs, args.grid, args.mode).to_dict()
    return out, 0


def cmd_boost(args) -> tuple[dict, int]:
    if args.target is not None:
        eps = boost._as_fraction(args.target)
        eps = 1 - eps
    else:
        eps = boost._as_fraction(args.epsilon_prime)
    l = boost.min_width(args.q, eps)
    out = {"command": "boost", "q": args.q, "epsilon_prime": str(eps), "l": l,
           "success": str(boost.majority_success_exact(args.q, l)),
           "success_float": boost.majority_success(args.q, l),
           "ratio_log": boost.amplitude_ratio_log(args.q, (l + 1) // 2, l // 2)}
    if args.fit:
        out["fit"] = boost.fit_log_constant(args.q)
    return out, 0


def cmd_oracle(args) -> tuple[dict, int]:
    p = _equation(args)
    cutoffs, alphas = _space_args(p, args, 16)
    hs = hamiltonians.build(p, fock.FockSpace(cutoffs), alphas)
    sched, norm = _schedule(args, hs)
    plan = oracle.SamplingPlan(args.epsilon, args.p, args.seed, args.L)
    res = oracle.run_apparatus(p, alphas, cutoffs, sched, plan, norm=norm)
    return {"command": "oracle", "equation": args.eq, "cutoffs": cutoffs, "alphas": alphas,
            "schedule": sched.to_dict(), "sampling": plan.to_dict(),
            "histogram": res.histogram.to_dict(), "candidate": list(res.candidate),
            "candidate_energy": res.candidate_energy, "boundary_mass": res.boundary_mass,
            "max_norm_deviation": max(res.norm_trace, default=0.0)}, 0


def cmd_bruteforce(args) -> tuple[dict, int]:
    p = _equation(args)
    cutoffs = _broadcast(args.cutoffs or [8], p.K, "cutoffs")
    best, argmins = poly.brute_force_min(p, cutoffs, args.budget)
    return {"command": "bruteforce", "equation": args.eq, "polynomial": str(p),
            "cutoffs": cutoffs, "min": best, "argmin": [list(a) for a in argmins],
            "has_solution": best == 0}, 0


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="h10sim", description="Adiabatic ground-state Diophantine simulator")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, cutoffs_help="number-basis cutoffs, one value or one per variable"):
        sp.add_argument("--eq", required=True, help="polynomial D, e.g. 'x^2 + y^2 - z^2'")
        sp.add_argument("--cutoffs", type=_ints, help=cutoffs_help)
        sp.add_argument("--alpha", type=_complexes, help="coherent amplitudes (default 1.0)")
        sp.add_argument("--out", type=Path, help="write the JSON report here")

    def timing(sp):
        sp.add_argument("--T", type=_time, default="auto")
        sp.add_argument("--N", type=int, help="outer product-formula steps")
        sp.add_argument("--m", type=int, help="inner subdivisions per step")
        sp.add_argument("--grid", type=int, default=hamiltonians.DEFAULT_GRID)

    sp = sub.add_parser("solve", help="run the decision loop")
    common(sp, "loop truncation (default 8 per variable)")
    sp.add_argument("--ref-cutoffs", type=_ints, help="apparatus truncation (default 2x cutoffs)")
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--p", type=float, default=0.8)
    sp.add_argument("--T", type=_time, default="auto")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-iterations", type=int, default=12)
    sp.add_argument("--L", type=int, help="override the number of measurements")
    sp.add_argument("--margin", type=float, default=hamiltonians.DEFAULT_MARGIN)
    sp.add_argument("--grid", type=int, default=hamiltonians.DEFAULT_GRID)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("evolve", help="evolve the coherent state and report the distribution")
    common(sp)
    timing(sp)
    sp.add_argument("--integrator", choices=("product", "reference"), default="product")
    sp.add_argument("--steps", type=int, default=400, help="initial reference-integrator steps")
    sp.add_argument("--top", type=int, default=10)
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("gap", help="gap and adiabatic time diagnostics")
    common(sp)
    sp.add_argument("--grid", type=int, default=hamiltonians.DEFAULT_GRID)
    sp.add_argument("--method", choices=("exact", "bogoliubov", "both"), default="both")
    sp.add_argument("--mode", choices=("root", "minimize"), default="root")
    sp.set_defaults(func=cmd_gap)

    sp = sub.add_parser("boost", help="majority-vote concatenation width")
    sp.add_argument("--q", type=float, required=True, help="single-run success probability")
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--target", type=float, help="required success probability")
    grp.add_argument("--epsilon-prime", type=float, help="allowed failure probability")
    sp.add_argument("--fit", action="store_true", help="also fit l ~ -C log(epsilon')")
    sp.add_argument("--out", type=Path)
    sp.set_defaults(func=cmd_boost)

    sp = sub.add_parser("oracle", help="simulate the measurement apparatus once")
    common(sp)
    timing(sp)
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--p", type=float, default=0.8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--L", type=int)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("bruteforce", help="exhaustive minimum of D^2 over the cutoff box")
    sp.add_argument("--eq", required=True)
    sp.add_argument("--cutoffs", type=_ints)
    sp.add_argument("--budget", type=int, default=poly.DEFAULT_BRUTE_FORCE_BUDGET)
    sp.add_argument("--out", type=Path)
    sp.set_defaults(func=cmd_bruteforce)
    return ap


def _summary(rep: dict) -> str:
    cmd = rep.get("command")
    if cmd == "solve":
        text = f"{rep['verdict']}"
        if rep.get("witness") is not None:
            text += f" witness={rep['witness']}"
        if rep.get("E_g_estimate") is not None:
            text += f" E_g~{rep['E_g_estimate']:.6g}"
        return text + f" ({len(rep['iterations'])} iteration(s); {rep['qualification']})"
    if cmd == "boost":
        return f"l={rep['l']} success={rep['success_float']:.6g}"
    if cmd == "bruteforce":
        return f"min D^2={rep['min']} at {rep['argmin'][:5]}"
    return cmd


def main(argv=None) -> int:
    ap = build_parser()
    out_path = None
    try:
        args = ap.parse_args(argv)
        out_path = getattr(args, "out", None)
        rep, code = args.func(args)
    except (UsageError, poly.PolynomialSyntaxError, poly.BudgetExceededError, fock.CutoffError,
            ValueError, ArithmeticError, RuntimeError) as exc:
        err = {"schema": SCHEMA, "error": {"type": type(exc).__name__, "message": str(exc)}}
        if isinstance(exc, poly.PolynomialSyntaxError):
            err["error"]["position"] = exc.position
        sys.stdout.write(dumps(err))
        return 1
    rep = {"schema": SCHEMA, **rep}
    text = dumps(rep)
    if out_path is not None:
        out_path.write_text(text)
        print(_summary(rep))
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
