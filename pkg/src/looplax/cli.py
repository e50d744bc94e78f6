"""Command-line interface: batch derivation, residual checking, solving,
verification, and sub-hierarchy reduction with JSON I/O.

Exit codes: 0 success, 2 validation error, 3 factorization outside the big
cell, 4 resource caps exceeded.  Identical config and seed produce
byte-identical JSON output.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from . import errors
from .hierarchy import (
    CommutativeFrame,
    HierarchyKind,
    akns_reduce,
    cutoff_lax_derivative,
    deform,
    make_frame,
    zc_residual,
)
from .linearize import ExponentVector, FlowRecord
from .loops import LoopSeries
from .scalars import GaussianRational
from .solver import (
    AnnulusLoop,
    SolverParams,
    build_wave_pair,
    extract_solution,
    fd_verify,
    provenance_hash,
    random_loop,
    reduce_subhierarchy,
)

VALIDATION_ERRORS = (
    errors.UnboundDerivative,
    errors.WindowUnderflow,
    errors.NotStrictlyNegative,
    errors.NotUnipotent,
    errors.SingularLeading,
    errors.NotCommuting,
    errors.NotTraceless,
    errors.DependentBasis,
    errors.ShapeViolation,
    errors.IndexOutOfRange,
    errors.SideMismatch,
    errors.AliasingDetected,
    errors.FlowSupportViolation,
    ValueError,
    KeyError,
    TypeError,
)


def _emit(obj, fmt: str, render_text):
    if fmt == "json":
        print(json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=1))
    else:
        print(render_text(obj))


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def load_frame(desc) -> CommutativeFrame:
    desc = desc or {"kind": "diagonal"}
    kind = desc.get("kind", "diagonal")
    n = desc.get("n")
    if kind == "custom":
        basis = [
            [[GaussianRational.from_obj(x) for x in row] for row in mat]
            for mat in desc["basis"]
        ]
        return make_frame("custom", n or len(basis[0]), basis=basis)
    scalars = desc.get("scalars")
    if scalars is not None:
        scalars = [GaussianRational.from_obj(s) for s in scalars]
    return make_frame(kind, n, scalars=scalars)


def load_loop(desc, n: int, N: int, seed: int | None) -> AnnulusLoop:
    if desc in (None, "identity"):
        return AnnulusLoop.identity(n, 0)
    if isinstance(desc, dict) and "random" in desc:
        eps = float(desc["random"].get("eps", 0.1))
        if seed is None:
            raise ValueError("random loops need --seed (or config 'seed')")
        return random_loop(n, N, eps, seed=seed)
    return AnnulusLoop.from_obj(n, desc)


def parse_checks(items):
    checks = []
    for item in items:
        head, _, rest = item.partition(":")
        if head == "lax":
            m, a = rest.split(",")
            checks.append(("lax", int(m), int(a)))
        elif head == "zc":
            first, second = rest.split(":")
            m1, a1 = first.split(",")
            m2, a2 = second.split(",")
            checks.append(("zc", int(m1), int(a1), int(m2), int(a2)))
        else:
            raise ValueError(f"unknown check {item!r} (use lax:m,a or zc:m1,a1:m2,a2)")
    return checks


def _solver_setup(cfg, args):
    n = int(args.n or cfg.get("n", 2))
    frame_cfg = dict(cfg.get("frame") or {})
    if args.frame:
        frame_cfg["kind"] = args.frame
    frame_cfg.setdefault("n", n)
    frame = load_frame(frame_cfg)
    tolerances = cfg.get("tolerances", {})
    params = SolverParams(
        N=int(args.depth_N or cfg.get("N", 16)),
        M=int(args.depth_M or cfg.get("M", 12)),
        grid=int(cfg.get("grid", 128)),
        fact_tol=float(args.tol_fact or tolerances.get("fact_tol", 1e-10)),
        cond_max=float(tolerances.get("cond_max", 1e10)),
        tail_tol=float(tolerances.get("tail_tol", 1e-8)),
    )
    seed = args.seed if args.seed is not None else cfg.get("seed")
    g = load_loop(cfg.get("g"), n, params.N, seed)
    l = ExponentVector(cfg.get("l", [0] * n))
    flows = FlowRecord(cfg.get("flows", {}))
    prov = provenance_hash(
        {
            "n": n,
            "frame": frame.to_obj(),
            "params": params.to_obj(),
            "g": g.to_obj(),
            "l": list(l),
            "flows": flows.to_obj(),
            "seed": seed,
        }
    )
    return n, frame, params, g, l, flows, prov


# ---------------------------------------------------------------------------
# text renderers
# ---------------------------------------------------------------------------

_AKNS_SUBSCRIPTS = {"(1,1)": "x", "(2,1)": "t"}


def _poly_text(p) -> str:
    """Render a differential polynomial with x/t subscripts for the two
    AKNS flows."""
    s = str(p)
    for inner in ("q", "r", "beta1", "gamma1", "u12", "u21"):
        s = s.replace(f"d(1,1)^2[{inner}]", f"{inner}_xx")
        s = s.replace(f"d(1,1)[{inner}]", f"{inner}_x")
        s = s.replace(f"d(2,1)[{inner}]", f"{inner}_t")
    return s


def _akns_text(obj) -> str:
    rep = obj["report"]
    lines = [
        f"q   = {rep['q']}",
        f"r   = {rep['r']}",
        f"u11 = {rep['u11']}",
        f"u12 = {rep['u12']}",
        f"u21 = {rep['u21']}",
        f"u22 = {rep['u22']}",
        f"{rep['pde_q'][0]} = {rep['pde_q'][1]}",
        f"{rep['pde_r'][0]} = {rep['pde_r'][1]}",
    ]
    return "\n".join(lines)


def _fmt_complex(x) -> str:
    re, im = x
    return f"{re:+.6g}{im:+.6g}i"


def _series_text(obj) -> str:
    lines = []
    for k in sorted(obj["coeffs"], key=int):
        rows = [
            " ".join(f"{_fmt_complex(x):>22}" for x in row) for row in obj["coeffs"][k]
        ]
        lines.append(f"z^{k}:")
        lines.extend("    " + r for r in rows)
    return "\n".join(lines) or "0"


def _solution_text(obj) -> str:
    lines = [f"kind: {obj['kind']}", f"window: {obj['window']}"]
    for label, key in (("U", "u_series"), ("W", "w_series")):
        if obj.get(key):
            for idx, s in enumerate(obj[key], start=1):
                lines.append(f"{label}_{idx}:")
                lines.append(_series_text(s))
    return "\n".join(lines)


def _verify_text(obj) -> str:
    lines = [f"{k}: {v:.3e}" for k, v in sorted(obj["residuals"].items())]
    for k in obj["inconclusive"]:
        lines.append(f"{k}: inconclusive (big cell violated at a perturbed point)")
    return "\n".join(lines) or "no checks requested"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_derive_akns(args) -> int:
    rep = akns_reduce()
    if args.format == "json":
        _emit({"report": rep.to_obj()}, "json", None)
        return 0
    obj = {
        "report": {
            "q": _poly_text(rep.q),
            "r": _poly_text(rep.r),
            "u11": _poly_text(rep.u11),
            "u12": _poly_text(rep.u12),
            "u21": _poly_text(rep.u21),
            "u22": _poly_text(rep.u22),
            "pde_q": ("i*q_t", _poly_text(rep.pde_q[1])),
            "pde_r": ("i*r_t", _poly_text(rep.pde_r[1])),
        }
    }
    print(_akns_text(obj))
    return 0


def cmd_solve(args) -> int:
    cfg = _read_config(args)
    n, frame, params, g, l, flows, prov = _solver_setup(cfg, args)
    pair = build_wave_pair(g, l, flows, frame, params)
    sol = extract_solution(pair, frame)
    obj = sol.to_obj()
    obj["provenance"]["config_hash"] = prov
    _emit(obj, args.format, _solution_text)
    return 0


def cmd_verify(args) -> int:
    cfg = _read_config(args)
    n, frame, params, g, l, flows, prov = _solver_setup(cfg, args)
    checks = parse_checks(args.checks or cfg.get("checks", []))
    if not checks:
        raise ValueError("verify needs --checks (e.g. lax:1,1 zc:-1,1:1,1)")
    report = fd_verify(g, l, frame, flows, checks, h=float(args.fd_step), params=params)
    obj = report.to_obj()
    obj["provenance"] = {"config_hash": prov}
    _emit(obj, args.format, _verify_text)
    return 0


def cmd_reduce(args) -> int:
    cfg = _read_config(args)
    n, frame, params, g, l, flows, prov = _solver_setup(cfg, args)
    pair = build_wave_pair(g, l, flows, frame, params)
    sol = reduce_subhierarchy(pair, HierarchyKind(args.target))
    obj = sol.to_obj()
    obj["provenance"]["config_hash"] = prov
    _emit(obj, args.format, _solution_text)
    return 0


def cmd_zc_check(args) -> int:
    cfg = _read_config(args)
    mode = cfg.get("mode", "symbolic")
    pairs = cfg.get("pairs") or [
        c[1:] for c in parse_checks(args.checks or []) if c[0] == "zc"
    ]
    if not pairs:
        raise ValueError("zc-check needs flow pairs (config 'pairs' or --checks zc:...)")
    if mode == "numeric":
        n, frame, params, g, l, flows, prov = _solver_setup(cfg, args)
        checks = [("zc", *p) for p in pairs]
        report = fd_verify(g, l, frame, flows, checks, h=float(args.fd_step), params=params)
        obj = report.to_obj()
        obj["provenance"] = {"config_hash": prov}
        _emit(obj, args.format, _verify_text)
        return 0
    # symbolic mode: seeded exact dressing, Lax-substituted derivatives
    n = int(args.n or cfg.get("n", 2))
    depth = int(cfg.get("depth", 4))
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    kind = HierarchyKind(cfg.get("kind", "standard"))
    frame_cfg = dict(cfg.get("frame") or {})
    frame_cfg.setdefault("n", n)
    frame = load_frame(frame_cfg)
    d = _random_exact_dressing(kind, frame, depth, seed)
    results = {}
    for m1, a1, m2, a2 in pairs:
        d1 = cutoff_lax_derivative(d, m1, a1, m2, a2)
        d2 = cutoff_lax_derivative(d, m2, a2, m1, a1)
        res = zc_residual(d, m1, a1, m2, a2, d1, d2)
        results[f"zc:{m1},{a1}:{m2},{a2}"] = bool(res.is_zero())
    obj = {"mode": "symbolic", "kind": kind.value, "seed": seed, "zero": results}
    _emit(obj, args.format, lambda o: "\n".join(f"{k}: {'zero' if v else 'NONZERO'}" for k, v in sorted(o["zero"].items())))
    return 0 if all(results.values()) else 1


def _random_exact_dressing(kind, frame, depth, seed):
    rng = random.Random(seed)

    def entry():
        return GaussianRational(
            Fraction(rng.randint(-2, 2), rng.randint(1, 2)),
            Fraction(rng.randint(-2, 2), rng.randint(1, 2)),
        )

    def mat():
        return tuple(tuple(entry() for _ in range(frame.n)) for _ in range(frame.n))

    eye = tuple(
        tuple(GaussianRational(1 if i == j else 0) for j in range(frame.n))
        for i in range(frame.n)
    )
    wit = LoopSeries(
        frame.n, {0: eye, **{k: mat() for k in range(-depth, 0)}}, (-depth, 0)
    )
    if kind is HierarchyKind.STRICT:
        while True:
            head = mat()
            try:
                wit_k = LoopSeries(
                    frame.n,
                    {0: head, **{k: mat() for k in range(-depth, 0)}},
                    (-depth, 0),
                )
                return deform(kind, frame, wit_k)
            except (errors.ShapeViolation, errors.SingularLeading):
                continue
    if kind is HierarchyKind.STANDARD:
        return deform(kind, frame, wit)
    while True:
        try:
            wit_w = LoopSeries(
                frame.n,
                {0: mat(), **{k: mat() for k in range(1, depth + 1)}},
                (0, depth),
                direction="zinv",
            )
            return deform(kind, frame, wit, wit_w)
        except (errors.ShapeViolation, errors.SingularLeading):
            continue


def _read_config(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    with open(args.config) as fh:
        return json.load(fh)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="looplax",
        description="loop-series hierarchies: derivation, residuals, and Birkhoff solving",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--format", choices=["json", "text"], default="json")
        sp.add_argument("--seed", type=int, default=None, help="seed for random inputs")
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--frame", choices=["diagonal", "unipotent", "custom"], default=None)
        sp.add_argument("--depth-N", dest="depth_N", type=int, default=None)
        sp.add_argument("--depth-M", dest="depth_M", type=int, default=None)
        sp.add_argument("--tol-fact", dest="tol_fact", type=float, default=None)
        sp.add_argument("--fd-step", dest="fd_step", type=float, default=1e-4)
        sp.add_argument("--checks", nargs="*", default=None)

    for name, fn in (
        ("derive-akns", cmd_derive_akns),
        ("zc-check", cmd_zc_check),
        ("solve", cmd_solve),
        ("verify", cmd_verify),
        ("reduce", cmd_reduce),
    ):
        sp = sub.add_parser(name)
        common(sp)
        if name == "reduce":
            sp.add_argument("--target", choices=["standard", "strict"], required=True)
        sp.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except errors.BigCellViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except errors.ResourceExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
