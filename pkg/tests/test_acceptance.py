"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py``.
"""

import math
import sys
from pathlib import Path

import numpy as np

from opconvex.decompose import decomposition_range, extremal_decomposition
from opconvex.faces import (
    E,
    F,
    face_contains,
    is_maximal,
    is_simplicial,
    member,
    non_simplicial_witness,
    smallest_closed_face,
    tau_face,
)
from opconvex.interval import (
    IDENTITY_GRID,
    WITNESS_IDENTITY,
    affine_transport,
    boundary_rep_i,
    combination_i,
    evaluate_rep_i,
    identity_check_i,
    identity_gap_i,
    make_extreme_i,
)
from opconvex.matcalc import (
    ScalarFunction,
    convexity_witness_search,
    log_convexity_spot_check,
    monotone_decreasing_check,
    monotone_psd_check,
)
from opconvex.measure import INF, ClosedSet, FiniteMeasure
from opconvex.ocfun import (
    OcFunction,
    boundary,
    classify_extreme,
    combination,
    linear,
    make_extreme,
    reanchor,
    tau_transform,
)
from opconvex.recover import SampleSet, fit_measure
from opconvex.specfile import parse_spec_text

sys.path.insert(0, str(Path(__file__).parent))
from conftest import random_members  # noqa: E402

# tolerances; pointwise gaps are absolute below |f| = 1 and relative above it
SUM_GAP = 1e-12
DECOMP_TOL = 1e-10
RANGE_TOL = 1e-10
WITNESS_GAP = 1e-12
ANCHOR_TOL = 1e-10
TAU_TOL = 1e-12
RECOVERY_RMS = 1e-7
RECOVERY_MIN_PASS = 19
IDENTITY_GAP = 1e-12
BOUNDARY_REP_TOL = 1e-12
TRANSPORT_TOL = 1e-10

RESULTS = {}


def report(n, ok, detail):
    """Record and print the outcome line of criterion ``n``."""
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def criterion_1():
    f = parse_spec_text(
        "kind: sum\nchildren:\n  - {kind: linear, p: 0, q: 1}\n  - {kind: extreme, alpha: inf, lambda: 1}\n").function
    g = parse_spec_text(
        "kind: sum\nchildren:\n  - {kind: linear, p: 1, q: 0}\n  - {kind: extreme, alpha: 0, lambda: 1}\n").function
    x = np.geomspace(1e-3, 1e3, 1000)
    gap = float(np.max(np.abs(f(x) - g(x))))
    # both specs against the closed form itself
    direct = x + 1.0 / (x + 1.0)
    closed = float(np.max(np.maximum(np.abs(f(x) - direct), np.abs(g(x) - direct)) / np.maximum(direct, 1.0)))
    return report(1, gap <= SUM_GAP and closed <= SUM_GAP,
                  f"x + 1/(x+1) vs 1 + x^2/(x+1): max gap {gap:.3g} on 1000 points, {closed:.3g} to the closed form")


def criterion_2():
    f = make_extreme(INF, 1.0) + linear(0.0, 1.0)
    rng = decomposition_range(f)
    ok = rng.alpha0 == 0.0 and rng.alpha1 == INF
    x = np.geomspace(1e-3, 1e3, 200)
    coef_err = point_err = 0.0
    for alpha in np.linspace(0.0, 20.0, 32):
        d = extremal_decomposition(f, alpha)
        s = (alpha + 1.0) ** 2
        # remainder weight is over (x-alpha)^2 (2+alpha)/(x+1), so its coefficient of (x-alpha)^2/(x+1) is w (2+alpha)
        w = d.remainder.weights.mass_at(1.0) * (2.0 + alpha)
        coef_err = max(coef_err, abs(d.a - (2 * alpha + 1) / s), abs(d.c - (alpha**2 + 2 * alpha) / s), abs(w - 1 / s))
        ok = ok and len(d.remainder.weights.atoms) == 1
        closed = (2 * alpha + 1) / s + (alpha**2 + 2 * alpha) / s * x + (x - alpha) ** 2 / (s * (x + 1))
        point_err = max(point_err, float(np.max(np.abs(d(x) - f(x)))), float(np.max(np.abs(closed - f(x)))))
    ok = ok and coef_err <= DECOMP_TOL and point_err <= DECOMP_TOL
    return report(2, ok, f"range [{rng.alpha0:g}, {rng.alpha1:g}]; 32 alphas: coefficient error {coef_err:.3g}, "
                         f"reconstruction error {point_err:.3g}")


def criterion_3():
    f = 2.0 * make_extreme(0.5, INF) + linear(0.5, 0.0)
    rng = decomposition_range(f)
    d0, d1 = abs(rng.alpha0 - 0.5), abs(rng.alpha1 - 1 / math.sqrt(2))
    x = np.geomspace(1e-3, 1e3, 200)
    err = 0.0
    for alpha in np.linspace(rng.alpha0, rng.alpha1, 16):
        d = extremal_decomposition(f, alpha)
        closed = 2 * (x - alpha) ** 2 + 2 * (2 * alpha - 1) * x + (1 - 2 * alpha**2)
        err = max(err, float(np.max(np.abs(d(x) - closed) / np.maximum(closed, 1.0))),
                  abs(d.a - (1 - 2 * alpha**2)), abs(d.c - 2 * (2 * alpha - 1)),
                  abs(d.remainder.boundary_coefficient - 2.0))
    ok = d0 <= RANGE_TOL and d1 <= RANGE_TOL and err <= DECOMP_TOL
    return report(3, ok, f"range ends off by {d0:.3g}, {d1:.3g}; decomposition error {err:.3g} on 16 alphas")


def criterion_4():
    x = np.geomspace(0.1, 10.0, 128)
    gaps = {lam: non_simplicial_witness(lam).gap(x) for lam in (INF, 0.0, 1.0, 4.0)}
    not_simp = all(not is_simplicial(E(ClosedSet.points(lam)))[0] for lam in gaps)
    not_simp = not_simp and not is_simplicial(E(ClosedSet.full()))[0]
    fixtures = [F(a, s) for a in (0.0, 1.0, 1.5, INF) for s in ("{0}", "{1, 4}", "0..2", "0..inf", "{inf}")]
    simp = all(is_simplicial(face)[0] for face in fixtures)
    worst = max(gaps.values())
    ok = worst <= WITNESS_GAP and not_simp and simp
    return report(4, ok, f"witness gap {worst:.3g} at lambda in {{inf, 0, 1, 4}}; E non-simplicial: {not_simp}; "
                         f"{len(fixtures)} F fixtures simplicial: {simp}")


def criterion_5():
    dev = recon = 0.0
    x = np.geomspace(1e-2, 1e2, 25)
    for f in random_members(20, 2024):
        base = reanchor(f, 0.5)
        for alpha in (0.5, 1.0, 3.0):
            other = reanchor(f, alpha)
            # the anchored data must reproduce f, so mu really is the measure at this anchor
            fx = f(x)
            recon = max(recon, max(abs(other.evaluate(float(t)) - v) / max(abs(v), 1.0) for t, v in zip(x, fx)))
            dev = max(dev, abs(other.gamma - base.gamma))
            if len(other.mu_atoms.atoms) != len(base.mu_atoms.atoms):
                dev = INF
                continue
            for (p, m), (q, n) in zip(base.mu_atoms.atoms, other.mu_atoms.atoms):
                dev = max(dev, abs(p - q), abs(m - n))
    return report(5, dev <= ANCHOR_TOL and recon <= ANCHOR_TOL,
                  f"20 members at anchors 0.5, 1, 3: max (gamma, mu) deviation {dev:.3g}, reconstruction {recon:.3g}")


def criterion_6():
    x = np.geomspace(1e-3, 1e3, 257)
    err = 0.0
    for f in random_members(20, 99):
        ff = tau_transform(tau_transform(f))
        err = max(err, float(np.max(np.abs(ff(x) - f(x)) / np.maximum(np.abs(f(x)), 1.0))))
    classes_ok = True
    for lam in (0.1, 1.0, 10.0):
        phi = (1.0 + lam) * make_extreme(INF, lam)
        ray = classify_extreme(tau_transform(phi))
        psi = x**2 * (1 + 1 / lam) / (x + 1 / lam)
        classes_ok = classes_ok and ray is not None and ray.alpha == 0.0
        classes_ok = classes_ok and math.isclose(ray.lam, 1 / lam, rel_tol=1e-12)
        gap = np.abs(tau_transform(phi)(x) - psi) / np.maximum(psi, 1.0)
        classes_ok = classes_ok and float(np.max(gap)) <= TAU_TOL
    alphas = (0.0, 0.5, 1.0, 3.0, INF)
    lam_sets = ("{0}", "{1}", "{0.5, 4}", "1..2", "{0.25, inf}")
    dual_ok, checked = True, 0
    for alpha in alphas:
        for text in lam_sets:
            face = F(alpha, text)
            pts = [lo for lo, _ in face.lam_set.intervals]
            tests = [combination([(1.0, alpha, p) for p in pts]), make_extreme(alpha, 7.0),
                     make_extreme(2.0 if alpha != 2.0 else 5.0, pts[0])]
            for g in tests:
                if g.is_zero():
                    continue
                dual_ok = dual_ok and member(g, face) == member(tau_transform(g), tau_face(face))
                checked += 1
            dual_ok = dual_ok and member(tests[0], face)
    ok = err <= TAU_TOL and classes_ok and dual_ok
    return report(6, ok, f"tau(tau(f)) error {err:.3g}; phi_lambda -> psi_(1/lambda): {classes_ok}; "
                         f"membership duality on 5x5 grid ({checked} checks): {dual_ok}")


def criterion_7():
    grid = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, INF)
    found = []
    for alpha in grid:
        for lam in grid:
            g = make_extreme(alpha, lam)
            for n in (2, 4, 8):
                if convexity_witness_search(g, n, 200, seed=0) is not None:
                    found.append((alpha, lam, n))
    cube = ScalarFunction(lambda x: x**3, name="x^3")
    w = convexity_witness_search(cube, 2, 1000, seed=0)
    square = ScalarFunction(lambda x: x**2, lambda x: 2 * x, name="x^2")
    m, psd = monotone_psd_check(square, [1.0, 2.0, 3.0])
    ok = not found and w is not None and not psd
    return report(7, ok, f"49 extreme rays x n in {{2,4,8}}: {len(found)} witnesses; x^3 witness at trial "
                         f"{None if w is None else w.trial}; x^2 Loewner min eigenvalue {m:.3g}")


def criterion_8():
    fs = {"1/x": make_extreme(INF, 0.0), "1/(x+1)": make_extreme(INF, 1.0),
          "1 + 1/x": linear(1.0, 0.0) + make_extreme(INF, 0.0)}
    parts = []
    ok = True
    for name, f in fs.items():
        slope = boundary(f).slope_at_inf
        mono = monotone_decreasing_check(f, 6, 200, seed=1)
        logc = log_convexity_spot_check(f, 4, 100, seed=2)
        dual = member(tau_transform(f), F(0.0, ClosedSet.full()))
        good = slope == 0.0 and mono is None and logc is None and dual
        ok = ok and good
        parts.append(f"{name} {'ok' if good else 'bad'}")
    # control: a function outside F_inf has tau(f) outside F_0
    g = make_extreme(INF, 1.0) + linear(0.0, 1.0)
    ok = ok and not member(tau_transform(g), F(0.0, ClosedSet.full()))
    return report(8, ok, "; ".join(parts))


def criterion_9():
    rng = np.random.default_rng(7)
    train = np.geomspace(1e-2, 1e2, 50)
    held = np.geomspace(1.1e-2, 0.9e2, 97)
    passed, worst = 0, 0.0
    for _ in range(20):
        terms = []
        for _ in range(int(rng.integers(1, 6))):
            alpha = float(rng.choice([0.0, rng.uniform(0.0, 4.0), INF]))
            lam = INF if rng.random() < 0.15 else float(10 ** rng.uniform(-2, 2))
            terms.append((float(rng.uniform(0.2, 2.0)), alpha, lam))
        truth = combination(terms)
        try:
            fit = fit_measure(SampleSet.from_function(truth, train)).f
            rms = float(np.sqrt(np.mean((fit(held) - truth(held)) ** 2)))
        except Exception:
            rms = INF
        worst = max(worst, rms)
        passed += rms <= RECOVERY_RMS
    return report(9, passed >= RECOVERY_MIN_PASS, f"{passed}/20 fits with held-out RMS <= {RECOVERY_RMS:g} "
                                                 f"(worst {worst:.3g})")


def criterion_10():
    lams = np.linspace(-1.0, 1.0, 16)
    stated = [identity_check_i(lam) for lam in lams]
    witness = [identity_gap_i(lam, WITNESS_IDENTITY) for lam in lams]
    x = IDENTITY_GRID
    reps = {
        "(x+1)^2": (make_extreme_i(-1.0, 0.0), (x + 1) ** 2),
        "(x+1)^2/(1-x/2)": (make_extreme_i(-1.0, 0.5), (x + 1) ** 2 / (1 - x / 2)),
        "x+1": (make_extreme_i(-1.0, -1.0), x + 1),
    }
    rep_err = max(float(np.max(np.abs(evaluate_rep_i(-1.0, boundary_rep_i(f, -1.0), x) - ref)))
                  for f, ref in reps.values())
    transport_err = 0.0
    h = combination([(1.0, 2.0, 0.5), (0.5, INF, 3.0), (0.2, 1.0, INF)])
    for a, b in ((0.0, 2.0), (1.0, 5.0)):
        s, c = 0.5 * (b - a), 0.5 * (b + a)
        transport_err = max(transport_err, float(np.max(np.abs(affine_transport(h, a, b)(x) / h(s * x + c) - 1))))
    k = combination_i([(1.0, 0.2, 0.6), (2.0, -0.4, -0.3)])
    for a, b in ((-1.0, 1.0), (-0.5, 0.25)):
        s, c = 0.5 * (b - a), 0.5 * (b + a)
        transport_err = max(transport_err, float(np.max(np.abs(affine_transport(k, a, b)(x) / k(s * x + c) - 1))))
    ok = (max(stated) <= IDENTITY_GAP and rep_err <= BOUNDARY_REP_TOL and transport_err <= TRANSPORT_TOL)
    return report(10, ok, f"stated identity gap {min(stated):.4g}..{max(stated):.4g} over 16 lambdas "
                          f"(corrected 2 -> 6 coefficient: {max(witness):.3g}); boundary representations "
                          f"{rep_err:.3g}; transport {transport_err:.3g}")


def face_fixtures():
    seg = OcFunction(2.0, 0.5, FiniteMeasure(segments=((0.5, 3.0, 0.2),)))
    g = {
        "g(2,3)": make_extreme(2.0, 3.0),
        "x": make_extreme(0.0, 0.0),
        "1": make_extreme(INF, INF),
        "1+2x": linear(1.0, 2.0),
        "x+1/(x+1)": make_extreme(INF, 1.0) + linear(0.0, 1.0),
        "F1 pair": combination([(1.0, 1.0, 0.5), (2.0, 1.0, INF)]),
        "1/x+1/(x+2)": combination([(1.0, INF, 0.0), (1.0, INF, 2.0)]),
        "segment": seg,
    }
    d = {
        "g(2,3)": [F(2.0, "{3}"), F(2.0, "1..5"), F(2.0, "0..inf"), E("{3}"), F(3.0, "{3}")],
        "x": [F(0.0, "{0}"), F(0.0, "0..inf"), E(), F(1.0, "0..inf"), E("{0..1}")],
        "1": [F(INF, "{inf}"), E(), F(INF, "0..inf"), F(0.0, "{0}"), E("{5}")],
        "1+2x": [E(), E("{1}"), F(0.0, "0..inf"), F(INF, "0..inf"), F(1.0, "{0}")],
        "x+1/(x+1)": [E("{1}"), E("0..2"), E(), F(INF, "0..inf"), F(0.0, "0..inf")],
        "F1 pair": [F(1.0, "{0.5, inf}"), F(1.0, "0..1"), E("{0.5, inf}"), E("{0.5}"), F(1.0, "0..inf")],
        "1/x+1/(x+2)": [F(INF, "{0, 2}"), F(INF, "0..inf"), E("{0, 2}"), F(INF, "{2}"), E("0..1")],
        "segment": [E("{0.5..3}"), E("0..4"), E("{1..3}"), F(1.0, "0..inf"), E("0..inf")],
    }
    return [(name, g[name], face) for name in g for face in d[name]]


def criterion_11():
    pairs = face_fixtures()
    bad = []
    kinds = set()
    for name, f, face in pairs:
        small = smallest_closed_face(f)
        kinds.add(face.kind + (":max" if is_maximal(face) else ""))
        inside = member(f, face)
        if inside != face_contains(small, face):
            bad.append(f"{name} in {face}")
        if not member(f, small):
            bad.append(f"{name} not in its smallest face {small}")
        want_max = face.kind == "F" and face.lam_set.is_equal(ClosedSet.full())
        if is_maximal(face) != want_max:
            bad.append(f"maximality of {face}")
    members = sum(member(f, face) for _, f, face in pairs)
    ok = not bad and len(pairs) == 40 and {"F", "E", "F:max"} <= kinds and 0 < members < len(pairs)
    detail = f"{len(pairs)} pairs, {members} memberships, {len(bad)} inconsistencies"
    return report(11, ok, detail + (": " + "; ".join(bad[:3]) if bad else ""))


def test_criterion_01_sum_identity():
    assert criterion_1()


def test_criterion_02_decomposition_family_x_plus_resolvent():
    assert criterion_2()


def test_criterion_03_decomposition_family_quadratic():
    assert criterion_3()


def test_criterion_04_non_simplicial_witnesses():
    assert criterion_4()


def test_criterion_05_anchor_invariance():
    assert criterion_5()


def test_criterion_06_tau_duality():
    assert criterion_6()


def test_criterion_07_extreme_ray_matrix_verification():
    assert criterion_7()


def test_criterion_08_decreasing_face_equivalences():
    assert criterion_8()


def test_criterion_09_measure_recovery():
    assert criterion_9()


def test_criterion_10_interval_suite():
    assert criterion_10()


def test_criterion_11_face_lattice_consistency():
    assert criterion_11()


if __name__ == "__main__":
    outcomes = [fn() for fn in (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
                                criterion_7, criterion_8, criterion_9, criterion_10, criterion_11)]
    sys.exit(0 if all(outcomes) else 1)
