"""Acceptance gate: every criterion at its stated tolerance, one PASS/FAIL
line each (run with -s to see them live; pytest -v lists the verdicts)."""

import random
import time
from fractions import Fraction

import numpy as np

from looplax.errors import BigCellViolation
from looplax.hierarchy import (
    HierarchyKind,
    akns_frame,
    akns_reduce,
    corollary_lax_derivative,
    corollary_residual,
    cutoff,
    cutoff_lax_derivative,
    deform,
    lax_residual,
    make_frame,
    zc_residual,
)
from looplax.linearize import FlowRecord
from looplax.loops import LoopSeries, Region, exp_neg, log_unip
from looplax.scalars import DerivationSymbol, DiffPoly, GaussianRational, I
from looplax.solver import (
    AnnulusLoop,
    SolverParams,
    birkhoff_factorize,
    build_wave_pair,
    extract_solution,
    fd_verify,
    random_loop,
)

from conftest import gr_eye, rand_mat

FRAME = akns_frame()


def report(name: str, ok: bool, detail: str = ""):
    tag = "PASS" if ok else "FAIL"
    suffix = f"  [{detail}]" if detail else ""
    print(f"{tag}  {name}{suffix}")
    assert ok, f"{name}{suffix}"


def neg_witness(rng, n, depth):
    return LoopSeries(
        n, {0: gr_eye(n), **{k: rand_mat(rng, n) for k in range(-depth, 0)}}, (-depth, 0)
    )


def leq_witness(rng, n, depth):
    while True:
        try:
            s = LoopSeries(
                n, {k: rand_mat(rng, n) for k in range(-depth, 1)}, (-depth, 0)
            )
            s.invert()
            return s
        except Exception:
            continue


def geq_witness(rng, n, depth):
    while True:
        try:
            s = LoopSeries(
                n,
                {k: rand_mat(rng, n) for k in range(0, depth + 1)},
                (0, depth),
                direction="zinv",
            )
            s.invert()
            return s
        except Exception:
            continue


def test_criterion_1_akns_exactness():
    t0 = time.time()
    rep = akns_reduce()
    x, t = DerivationSymbol(1, 1), DerivationSymbol(2, 1)
    q = DiffPoly.indeterminate("q")
    r = DiffPoly.indeterminate("r")
    b1 = DiffPoly.indeterminate("beta1")
    g1 = DiffPoly.indeterminate("gamma1")
    half = Fraction(1, 2)
    half_i = GaussianRational(0, half)
    ok = (
        rep.q == (2 * I) * b1
        and rep.r == (-2 * I) * g1
        and rep.u11 == -(half_i * q * r)
        and rep.u22 == half_i * q * r
        and rep.u12 == half_i * q.derive(x)
        and rep.u21 == -(half_i * r.derive(x))
        and rep.pde_q == (I * q.derive(t), -half * q.derive(x).derive(x) + q * q * r)
        and rep.pde_r == (I * r.derive(t), half * r.derive(x).derive(x) - q * r * r)
    )
    elapsed = time.time() - t0
    report("criterion 1: AKNS exact reduction", ok and elapsed <= 1.0, f"{elapsed:.2f}s")


def test_criterion_2_lax_implies_zc():
    t0 = time.time()
    rng = random.Random(271828)
    failures = []
    for trial in range(20):
        n = 2 if trial < 10 else 3
        frame = (
            make_frame("diagonal", n)
            if trial % 2 == 0
            else make_frame("unipotent", n)
        )
        r = frame.r
        a_hi = r  # exercise the top frame index too
        kind = (HierarchyKind.STANDARD, HierarchyKind.STRICT, HierarchyKind.COMBINED)[
            trial % 3
        ]
        depth = 4
        if kind is HierarchyKind.STANDARD:
            d = deform(kind, frame, neg_witness(rng, n, depth))
            zc_pairs = [(0, 1, 1, a_hi), (1, 1, 2, a_hi), (2, a_hi, 1, 1)]
            cor_pairs = [(0, 1, 1, a_hi), (1, 1, 1, 1)]
        elif kind is HierarchyKind.STRICT:
            d = deform(kind, frame, leq_witness(rng, n, depth))
            zc_pairs = [(1, 1, 2, a_hi), (2, 1, 2, a_hi)]
            cor_pairs = [(1, 1, 1, a_hi), (1, 1, 2, 1)]
        else:
            d = deform(
                kind, frame, neg_witness(rng, n, depth), geq_witness(rng, n, depth)
            )
            zc_pairs = [(-1, 1, 1, a_hi), (-2, 1, 2, 1), (-1, a_hi, 0, 1), (-1, 1, -2, a_hi)]
            cor_pairs = [(0, 1, 1, a_hi), (-1, 1, -2, 1)]
        for m1, a1, m2, a2 in zc_pairs:
            d1 = cutoff_lax_derivative(d, m1, a1, m2, a2)
            d2 = cutoff_lax_derivative(d, m2, a2, m1, a1)
            if not zc_residual(d, m1, a1, m2, a2, d1, d2).is_zero():
                failures.append((trial, "zc", m1, a1, m2, a2))
        for m1, a1, m2, a2 in cor_pairs:
            d1 = corollary_lax_derivative(d, m1, a1, m2, a2)
            d2 = corollary_lax_derivative(d, m2, a2, m1, a1)
            if not corollary_residual(d, m1, a1, m2, a2, d1, d2).is_zero():
                failures.append((trial, "corollary", m1, a1, m2, a2))
    elapsed = time.time() - t0
    report(
        "criterion 2: Lax => zero-curvature (20 symbolic dressings, exact)",
        not failures and elapsed <= 60.0,
        f"{elapsed:.1f}s, failures={failures[:3]}",
    )


def test_criterion_3_zc_faithfulness():
    params = SolverParams()
    g = random_loop(2, 16, 0.4, seed=5)
    flows = FlowRecord({"1,1": 0.1, "-1,1": 0.05})

    def solution_at(fl):
        return extract_solution(build_wave_pair(g, [0, 0], fl, FRAME, params))

    base = solution_at(flows)
    d = base.as_deformation()
    h = 1e-4

    def deriv(family, idx, m, a):
        def pick(sol):
            return sol.u_series[idx - 1] if family == "u" else sol.w_series[idx - 1]

        def central(step):
            fp = flows.with_value(m, a, flows.get((m, a), 0.0) + step)
            fm = flows.with_value(m, a, flows.get((m, a), 0.0) - step)
            return (pick(solution_at(fp)) - pick(solution_at(fm))).smul(1.0 / (2 * step))

        d1, d2 = central(h), central(h / 2)
        return d2.smul(4.0 / 3.0) - d1.smul(1.0 / 3.0)

    unperturbed_ok = True
    sensitivity_ok = True
    worst_base, worst_min = 0.0, float("inf")
    for m in (0, 1, 2):
        b = cutoff(d, m, 1)
        ders = {fam: deriv(fam, 1, m, 1) for fam in ("u", "w")}
        base_res = max(
            lax_residual(d, m, 1, 1, ders[fam], family=fam).max_abs() for fam in ("u", "w")
        )
        worst_base = max(worst_base, base_res)
        if base_res > 1e-6:
            unperturbed_ok = False
        # perturb every stored coefficient slot of the cut-off by 1e-3
        for p in range(0, m + 1):
            for i in range(2):
                for j in range(2):
                    mats = {k: [list(row) for row in mat] for k, mat in b.coeffs.items()}
                    mat = mats.setdefault(p, [[0j, 0j], [0j, 0j]])
                    mat[i][j] += 1e-3
                    perturbed = LoopSeries(2, mats, (min(b.lo, p), max(b.hi, p)))
                    got = max(
                        lax_residual(
                            d, m, 1, 1, ders[fam], family=fam, cutoff_series=perturbed
                        ).max_abs()
                        for fam in ("u", "w")
                    )
                    worst_min = min(worst_min, got)
                    if got <= 1e-4:
                        sensitivity_ok = False
    report(
        "criterion 3: zero-curvature faithfulness under cut-off perturbation",
        unperturbed_ok and sensitivity_ok,
        f"base<= {worst_base:.1e}, perturbed>= {worst_min:.1e}",
    )


def test_criterion_4_solutions_verify():
    params = SolverParams(N=16, M=12, grid=128)
    checks = [("lax", 0, 1), ("lax", 1, 1), ("lax", 2, 1), ("zc", -1, 1, 1, 1)]
    worst, slowest = 0.0, 0.0
    ok = True
    for seed in range(10):
        g = random_loop(2, 16, 0.1, seed=100 + seed)
        t0 = time.time()
        rep = fd_verify(
            g,
            [0, 0],
            FRAME,
            {"1,1": 0.1, "-1,1": 0.05},
            checks=checks,
            h=1e-4,
            params=params,
        )
        elapsed = time.time() - t0
        slowest = max(slowest, elapsed)
        if rep.inconclusive or set(rep.residuals) != {
            "lax:0,1",
            "lax:1,1",
            "lax:2,1",
            "zc:-1,1:1,1",
        }:
            ok = False
        worst = max(worst, rep.max_residual())
        if rep.max_residual() > 1e-6 or elapsed > 60.0:
            ok = False
    report(
        "criterion 4: factorization solutions pass finite-difference checks",
        ok,
        f"worst residual {worst:.1e}, slowest loop {slowest:.1f}s",
    )


def test_criterion_5_factorization_soundness():
    recon_ok = True
    worst = 0.0
    for seed in range(10):
        g = random_loop(2, 16, 0.1, seed=200 + seed)
        u, p = birkhoff_factorize(g, 12)
        err = float(
            np.max(np.abs(u.grid_values(256) @ g.grid_values(256) - p.grid_values(256)))
        )
        worst = max(worst, err)
        if err > 1e-9:
            recon_ok = False
    detect_ok = True
    bad = AnnulusLoop.from_coeff_dict(2, {1: [[1, 0], [0, 0]], -1: [[0, 0], [0, 1]]})
    for _ in range(3):
        try:
            birkhoff_factorize(bad, 12)
            detect_ok = False
        except BigCellViolation:
            pass
    report(
        "criterion 5: factorization soundness and big-cell detection",
        recon_ok and detect_ok,
        f"worst reconstruction {worst:.1e}",
    )


def test_criterion_6_structural_invariants():
    rng = random.Random(314159)
    cases = 100
    params = SolverParams()

    def rand_series(lo=-4, hi=3):
        return LoopSeries(2, {k: rand_mat(rng, 2) for k in range(lo, hi + 1)}, (lo, hi))

    partition_ok = all(
        (x.project(Region.GEQ0) + x.project(Region.LT0)).equals(x)
        and (x.project(Region.GT0) + x.project(Region.LEQ0)).equals(x)
        and all(x.project(reg).project(reg).equals(x.project(reg)) for reg in Region)
        for x in (rand_series() for _ in range(cases))
    )

    closure_ok = True
    for _ in range(cases):
        reg = rng.choice(list(Region))
        br = rand_series().project(reg).bracket(rand_series().project(reg))
        if not all(reg.contains(k) for k in br.support()):
            closure_ok = False

    explog_ok = True
    for _ in range(cases):
        x = LoopSeries(2, {k: rand_mat(rng, 2) for k in (-3, -2, -1)}, (-6, -1))
        if not log_unip(exp_neg(x)).equals(x):
            explog_ok = False

    traceless_ok = True
    for _ in range(cases):
        g = LoopSeries(
            2, {0: gr_eye(2), **{k: rand_mat(rng, 2) for k in range(-3, 0)}}, (-3, 0)
        )
        y = LoopSeries(
            2, {k: rand_mat(rng, 2, traceless=True) for k in range(-2, 1)}, (-3, 0)
        )
        if not g.conjugate(y).is_traceless():
            traceless_ok = False

    commute_ok = True
    f3 = make_frame("diagonal", 3)
    for _ in range(cases):
        d = deform(HierarchyKind.STANDARD, f3, neg_witness(rng, 3, 3))
        if not d.series[0].bracket(d.series[1]).is_zero():
            commute_ok = False

    shift_ok = True
    worst_shift = 0.0
    for case in range(cases):
        g = random_loop(2, params.N, 0.1, seed=5000 + case)
        flows = {"1,1": 0.1, "-1,1": 0.03}
        k = rng.randint(1, 3)
        s0 = extract_solution(build_wave_pair(g, [0, 0], flows, FRAME, params))
        s1 = extract_solution(build_wave_pair(g, [k, k], flows, FRAME, params))
        delta = max(
            max((a - b).max_abs() for a, b in zip(s0.u_series, s1.u_series)),
            max((a - b).max_abs() for a, b in zip(s0.w_series, s1.w_series)),
        )
        worst_shift = max(worst_shift, delta)
        if delta > 10 * params.fact_tol:
            shift_ok = False

    ok = partition_ok and closure_ok and explog_ok and traceless_ok and commute_ok and shift_ok
    report(
        "criterion 6: structural invariant property suites (>=100 cases each)",
        ok,
        f"partition={partition_ok} closure={closure_ok} explog={explog_ok} "
        f"traceless={traceless_ok} commute={commute_ok} shift={shift_ok}",
    )


def test_criterion_7_trivial_fixture():
    params = SolverParams()
    e1c = tuple(tuple(complex(x) for x in row) for row in FRAME.generator(1))
    w = build_wave_pair(
        AnnulusLoop.identity(2, 2), [0, 0], {"1,1": 0.3, "-1,1": 0.1}, FRAME, params
    )
    sol = extract_solution(w)
    u1, w1 = sol.u_series[0], sol.w_series[0]
    series_ok = (
        u1.support() == [0]
        and u1.coeff(0) == e1c
        and w1.support() == [-1]
        and w1.coeff(-1) == e1c
    )
    rep = fd_verify(
        AnnulusLoop.identity(2, 2),
        [0, 0],
        FRAME,
        {"1,1": 0.3, "-1,1": 0.1},
        checks=[("lax", 0, 1), ("lax", 1, 1), ("lax", 2, 1), ("zc", -1, 1, 1, 1)],
        params=params,
    )
    residuals_ok = bool(rep.residuals) and all(v == 0.0 for v in rep.residuals.values())
    report(
        "criterion 7: trivial fixture reproduces undeformed generators exactly",
        series_ok and residuals_ok,
        f"max residual {rep.max_residual():.1e}",
    )
