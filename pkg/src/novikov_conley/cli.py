"""Command-line front end: ``novikov-conley <command> ...``.

Every command produces a report document (text or JSON).  The exit status
is 0 when all verifications pass, 1 when one fails and 2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

from . import fixtures
from .complexes import CellComplex, ComplexError, euler_characteristic, homology
from .flows import (CombinatorialFlow, FlowError, carries_cocycle, classify_gradient_like,
                    find_carry_parameters, morse_decomposition, path_weight)
from .gluing import (GluingData, GluingError, GluingMismatch, build_deformation_complex,
                     cone_isomorphism_check, reconstruct_and_crosscheck, stage_independence,
                     verify_gluing_identities, zero_evaluation_complex)
from .inequalities import (InequalityError, MorseData, check_alpha_morse_smale, check_novikov_morse,
                           novikov_morse_pipeline, vanishing_check)
from .linalg import is_prime
from .mapping_torus import mapping_torus, suspension_flow
from .twisted import (CellularCocycle, CocycleError, MonodromyRep, NovikovDisagreement, TwistError,
                      novikov_numbers)

SCHEMA = 1

INPUT_ERRORS = (ComplexError, FlowError, GluingError, InequalityError, CocycleError, TwistError)


class InputError(Exception):
    pass


class VerificationError(Exception):
    pass


@dataclass
class PipelineConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    seed: int = 0
    prime: int = 2
    trials: int = 3
    format: str = "text"
    options: dict = field(default_factory=dict)


# -- input ---------------------------------------------------------------------

def read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _parse(path, loader: Callable):
    data = read_json(path)
    try:
        return loader(data)
    except INPUT_ERRORS as exc:
        raise InputError(f"{path}: {exc}") from exc


def _ints(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise InputError(f"expected comma-separated integers, got {text!r}") from exc


# -- commands ------------------------------------------------------------------

def homology_report(X: CellComplex, coeffs="Z") -> dict:
    rep = X.report
    out = {"complex": X.name, "validation": rep.as_dict(), "ok": rep.ok}
    if rep.ok:
        out["counts"] = list(X.counts())
        out["euler_characteristic"] = euler_characteristic(X)
        out["homology"] = homology(X, coeffs).as_dict()
    return out


def novikov_report(X: CellComplex, alpha: CellularCocycle, E: MonodromyRep | None, cfg: PipelineConfig) -> dict:
    nov = novikov_numbers(X, alpha, E, seed=cfg.seed, trials=cfg.trials)
    return {"complex": X.name, "cocycle": alpha.to_json(), "novikov": nov.as_dict(), "ok": nov.agree}


def classify_report(flow: CombinatorialFlow, require_carry: bool = True) -> dict:
    try:
        cls = classify_gradient_like(flow, require_carry=require_carry)
    except FlowError as exc:
        raise VerificationError(str(exc)) from exc
    checks = []
    if cls.cycle is not None:
        w = path_weight(flow, cls.cycle.edges)
        checks.append({"check": "cycle reintegrates to its weight", "ok": w == cls.cycle.weight})
        if cls.caveat is None:
            checks.append({"check": "cycle weight is nonzero", "ok": any(w)})
        else:
            # unverified carrying: the witness only shows recurrence off the Morse sets
            checks.append({"check": "cycle is closed", "ok": cls.cycle.nodes[0] == cls.cycle.nodes[-1]})
    if cls.potential is not None:
        g = cls.potential
        classes = {n: i for i, c in enumerate(flow.sets) for n in c}
        bad = [f"{e.src}->{e.dst}" for e in flow.edges
               if not (e.src in classes and classes.get(e.dst) == classes[e.src]) and g[e.src] <= g[e.dst]]
        checks.append({"check": "potential decreases along edges between classes", "ok": not bad, "offending": bad})
    return {"flow": flow.name, "morse_decomposition": morse_decomposition(flow).as_dict(),
            "classification": cls.as_dict(), "witness_checks": checks, "ok": all(c["ok"] for c in checks)}


def carries_report(flow: CombinatorialFlow, rho=None, lam=None) -> dict:
    if rho is None:
        rep = find_carry_parameters(flow)
    else:
        try:
            rep = carries_cocycle(flow, Fraction(rho), Fraction(lam or 0))
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(str(exc)) from exc
    return {"flow": flow.name, "carry": rep.as_dict(), "ok": rep.verdict}


def glue_report(G: GluingData, cfg: PipelineConfig, at: Sequence[int] | None = None) -> dict:
    if G.report:
        return {"gluing": G.name, "validation": G.report, "ok": False}
    s = G.s
    out: dict = {"gluing": G.name, "validation": [], "cuts": s}
    ok = True
    stages = []
    for k in range(1, s + 1):
        D = build_deformation_complex(G, k)
        ids = verify_gluing_identities(G, k)
        cone = cone_isomorphism_check(G, k)
        sq = not D.square_zero_failures()
        ok &= ids.ok and cone.ok and sq
        stages.append({"k": k, "square_zero": sq, "identities": ids.as_dict(), "cone": cone.as_dict()})
    out["stages"] = stages
    st = stage_independence(G)
    out["stage_independence"] = st.as_dict()
    ok &= st.ok
    try:
        z = zero_evaluation_complex(G, cfg.prime)
        out["zero_evaluation"] = z.as_dict()
    except GluingMismatch as exc:
        out["zero_evaluation"] = {"agree": False, "error": str(exc)}
        ok = False
    cross = []
    points = [tuple(at) if at else (2,) * s, (1,) * s]
    for a in points:
        try:
            cross.append(reconstruct_and_crosscheck(G, a).as_dict())
        except GluingMismatch as exc:
            cross.append({"point": [str(x) for x in a], "agree": False, "error": str(exc)})
            ok = False
    out["crosscheck"] = cross
    out["ok"] = bool(ok)
    return out


def inequality_report(data: MorseData, cfg: PipelineConfig, b=None, X=None, alpha=None, E=None) -> dict:
    if b is not None:
        rep = check_novikov_morse(data, b)
    elif X is not None:
        alpha = alpha or CellularCocycle.zero(X)
        rep = novikov_morse_pipeline(data, X, alpha, E, p=cfg.prime, seed=cfg.seed)
    else:
        raise InputError("give either --b or --complex")
    out = {"inequality": rep.as_dict(), "Q": None if rep.Q is None else list(rep.Q),
           "ok": rep.verdict and rep.euler_ok}
    return out


def morse_smale_report(c, a, b) -> dict:
    rep = check_alpha_morse_smale(c, a, b)
    data = MorseData.morse_smale(c, a)
    poly = check_novikov_morse(data, b)
    return {"alpha_morse_smale": rep.as_dict(), "polynomial_form": poly.as_dict(),
            "ok": rep.verdict and poly.verdict and poly.euler_ok}


def mapping_torus_report(X: CellComplex, f: dict, cfg: PipelineConfig) -> dict:
    try:
        T, alpha = mapping_torus(X, f)
    except ComplexError as exc:
        raise InputError(str(exc)) from exc
    flow = suspension_flow(X, f)
    van = vanishing_check(flow, T, alpha, seed=cfg.seed, trials=cfg.trials)
    chi = euler_characteristic(T)
    return {"mapping_torus": T.to_json(), "counts": list(T.counts()), "euler_characteristic": chi,
            "cocycle": alpha.to_json(), "flow": flow.to_json(), "vanishing": van.as_dict(),
            "ok": van.ok and chi == 0}


# -- example gallery -------------------------------------------------------------

def _ex_circle_novikov(cfg):
    return novikov_report(fixtures.circle(), fixtures.circle_class(), None, cfg)


def _ex_torus_novikov(cfg):
    return novikov_report(fixtures.torus(), fixtures.torus_fiber_class(), None, cfg)


def _ex_torus_gluing(cfg):
    return glue_report(fixtures.torus_gluing(), cfg, (3, 5))


def _ex_sphere(cfg):
    c, a = (1, 0, 1), (0, 1, 0)
    X = fixtures.sphere()
    rep = morse_smale_report(c, a, homology(X, "Q").ranks)
    pipe = novikov_morse_pipeline(MorseData.morse_smale(c, a), X, CellularCocycle.zero(X), p=cfg.prime, seed=cfg.seed)
    rep["pipeline"] = pipe.as_dict()
    rep["ok"] = rep["ok"] and pipe.verdict
    return rep


EXAMPLES: dict[str, Callable[[PipelineConfig], dict]] = {
    "circle-novikov": _ex_circle_novikov,
    "torus-novikov": _ex_torus_novikov,
    "torus-gluing": _ex_torus_gluing,
    "ex31-flow": lambda cfg: classify_report(fixtures.ex31_flow()),
    "ex32-flow": lambda cfg: classify_report(fixtures.ex32_flow()),
    "sphere-morse-smale": _ex_sphere,
    "mapping-torus-id": lambda cfg: mapping_torus_report(fixtures.circle(), {}, cfg),
    "mapping-torus-swap": lambda cfg: mapping_torus_report(fixtures.two_points(), {"a": "b", "b": "a"}, cfg),
}


# -- dispatch --------------------------------------------------------------------

def run(cfg: PipelineConfig) -> dict:
    cmd, inp, opt = cfg.command, cfg.inputs, cfg.options
    if cmd == "homology":
        X = _parse(inp["complex"], CellComplex.from_json)
        result = homology_report(X, opt.get("coeffs", "Z"))
    elif cmd == "novikov":
        X = _parse(inp["complex"], CellComplex.from_json)
        alpha = _parse(inp["cocycle"], lambda d: CellularCocycle.from_json(X, d).check())
        E = _parse(inp["monodromy"], MonodromyRep.from_json) if inp.get("monodromy") else None
        result = novikov_report(X, alpha, E, cfg)
    elif cmd == "classify-flow":
        result = classify_report(_parse(inp["flow"], CombinatorialFlow.from_json), opt.get("require_carry", True))
    elif cmd == "carries":
        result = carries_report(_parse(inp["flow"], CombinatorialFlow.from_json), opt.get("rho"), opt.get("lam"))
    elif cmd == "glue-verify":
        result = glue_report(_parse(inp["gluing"], GluingData.from_json), cfg, opt.get("at"))
    elif cmd == "verify-inequalities":
        data = _parse(inp["morse"], MorseData.from_json)
        X = alpha = E = None
        if inp.get("complex"):
            X = _parse(inp["complex"], CellComplex.from_json)
            if inp.get("cocycle"):
                alpha = _parse(inp["cocycle"], lambda d: CellularCocycle.from_json(X, d).check())
            if inp.get("monodromy"):
                E = _parse(inp["monodromy"], MonodromyRep.from_json)
        result = inequality_report(data, cfg, opt.get("b"), X, alpha, E)
    elif cmd == "mapping-torus":
        X = _parse(inp["complex"], CellComplex.from_json)
        f = read_json(inp["map"]) if inp.get("map") else {}
        result = mapping_torus_report(X, f, cfg)
    elif cmd == "example":
        name = opt["name"]
        if name not in EXAMPLES:
            raise InputError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
        result = EXAMPLES[name](cfg)
    else:
        raise InputError(f"unknown command {cmd!r}")
    ok = bool(result.pop("ok"))
    return {"schema": SCHEMA, "command": cmd, "ok": ok,
            "provenance": {"seed": cfg.seed, "prime": cfg.prime, "trials": cfg.trials,
                           "inputs": {k: str(v) for k, v in sorted(inp.items()) if v},
                           "options": {k: v if isinstance(v, (int, str, bool)) or v is None else list(v)
                                       for k, v in sorted(opt.items())}},
            "result": result}


def _text_lines(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and any(isinstance(x, (dict, list)) for x in
                                                        (v.values() if isinstance(v, dict) else v)):
                lines.append(f"{pad}{k}:")
                lines += _text_lines(v, indent + 1)
            else:
                lines.append(f"{pad}{k}: {_scalar_text(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}-")
                lines += _text_lines(v, indent + 1)
            else:
                lines.append(f"{pad}- {_scalar_text(v)}")
    else:
        lines.append(pad + _scalar_text(obj))
    return lines


def _scalar_text(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, list):
        return "(" + ", ".join(_scalar_text(x) for x in v) + ")"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_scalar_text(x)}" for k, x in v.items()) + "}"
    return "-" if v is None else str(v)


def emit_report(report: dict, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    head = f"{report['command']}: {'PASS' if report['ok'] else 'FAIL'}"
    return "\n".join([head] + _text_lines({"provenance": report["provenance"], **report["result"]})) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prime", type=int, default=2, help="prime p for Z_p computations (default 2)")
    common.add_argument("--trials", type=int, default=3, help="random evaluation trials (default 3)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out", help="write the report here instead of stdout")
    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=0)
    required_seed = argparse.ArgumentParser(add_help=False)
    required_seed.add_argument("--seed", type=int, required=True)

    p = argparse.ArgumentParser(prog="novikov-conley", description="Novikov homology and Conley index checks")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("homology", parents=[common, seeded], help="cellular homology of a complex")
    s.add_argument("complex")
    s.add_argument("--coeffs", default="Z", help="Z, Q or a prime (default Z)")

    s = sub.add_parser("novikov", parents=[common, required_seed], help="Novikov numbers of a class")
    s.add_argument("complex")
    s.add_argument("cocycle")
    s.add_argument("--monodromy")

    s = sub.add_parser("classify-flow", parents=[common, seeded], help="gradient-like or not, with a witness")
    s.add_argument("flow")
    s.add_argument("--no-require-carry", action="store_true",
                   help="classify even when the carrying condition cannot be certified")

    s = sub.add_parser("carries", parents=[common, seeded], help="check the carrying conditions")
    s.add_argument("flow")
    s.add_argument("--rho", help="positive rational; searched for when omitted")
    s.add_argument("--lam", default="0", help="rational in [0, 1)")

    s = sub.add_parser("glue-verify", parents=[common, seeded], help="check gluing data end to end")
    s.add_argument("gluing")
    s.add_argument("--at", help="comma-separated nonzero evaluation point for the cross-check")

    s = sub.add_parser("verify-inequalities", parents=[common, required_seed], help="Morse-Novikov inequalities")
    s.add_argument("morse")
    s.add_argument("--b", help="comma-separated Novikov numbers")
    s.add_argument("--complex")
    s.add_argument("--cocycle")
    s.add_argument("--monodromy")

    s = sub.add_parser("mapping-torus", parents=[common, required_seed], help="mapping torus and vanishing check")
    s.add_argument("complex")
    s.add_argument("--map", help="JSON object sending each cell id to its image")

    s = sub.add_parser("example", parents=[common, seeded], help="run a built-in example")
    s.add_argument("name", choices=sorted(EXAMPLES))
    return p


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    cmd = args.command
    if not is_prime(args.prime):
        raise InputError(f"--prime {args.prime} is not prime")
    if args.trials < 1:
        raise InputError("--trials must be positive")
    inputs, options = {}, {}
    if cmd in ("homology", "mapping-torus"):
        inputs["complex"] = args.complex
        if cmd == "homology":
            options["coeffs"] = args.coeffs
        else:
            inputs["map"] = args.map
    elif cmd == "novikov":
        inputs.update(complex=args.complex, cocycle=args.cocycle, monodromy=args.monodromy)
    elif cmd == "classify-flow":
        inputs["flow"] = args.flow
        options["require_carry"] = not args.no_require_carry
    elif cmd == "carries":
        inputs["flow"] = args.flow
        options.update(rho=args.rho, lam=args.lam)
    elif cmd == "glue-verify":
        inputs["gluing"] = args.gluing
        options["at"] = _ints(args.at)
    elif cmd == "verify-inequalities":
        inputs.update(morse=args.morse, complex=args.complex, cocycle=args.cocycle, monodromy=args.monodromy)
        options["b"] = _ints(args.b)
    elif cmd == "example":
        options["name"] = args.name
    return PipelineConfig(cmd, inputs, args.seed, args.prime, args.trials, args.format, options)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run(cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (VerificationError, NovikovDisagreement, GluingMismatch) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = emit_report(report, cfg.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if report["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
