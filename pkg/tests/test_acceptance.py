"""Acceptance criteria, one test each at the stated tolerance.

Each test records a one-line PASS/FAIL summary; the lines are printed in the
pytest terminal summary (see conftest.py).  Run alone with
``pytest tests/test_acceptance.py``.
"""

import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from symentropy.catalg import (
    PlumbingTree,
    TwistWord,
    compact_model_entropy,
    hom_growth_entropy,
    spectral_lower_bound_check,
    spectral_radius,
    word_homology_action,
)
from symentropy.crofton import TargetPair, build_tomograph, crofton_check
from symentropy.dynamics import (
    AnnulusTwist,
    Curve,
    Horseshoe,
    OrbitGraphSpec,
    TorusAutomorphism,
    capacity_entropy,
    curve_volume_growth,
    iterate_curve,
    symbolic_horseshoe_oracle,
)
from symentropy.errors import ValidationError
from symentropy.floer_curves import (
    GraphPair,
    TrigPoly,
    barcode_entropy_experiment,
    graph_pair_complex,
    support_avoiding_generator,
)
from symentropy.harness import ExperimentConfig, compare_entropies
from symentropy.persistence import barcode, check_stability, count_b_epsilon

from helpers import ACCEPTANCE, oracle_barcode, random_complex

H_CAT = math.log((3 + math.sqrt(5)) / 2)
A2 = PlumbingTree.path(2, "even")
WORD = TwistWord.parse("A+ B-")


def record(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def schedule(pairs, ks):
    return [OrbitGraphSpec(k, e, g) for e, g in pairs for k in ks]


def test_criterion_01_a2_homology_matrix():
    m = word_homology_action(A2, WORD, "even")
    moduli = np.abs(np.linalg.eigvals(m.astype(float)))
    log_rad = math.log(spectral_radius(m))
    ok = (m.tolist() == [[0, -1], [1, -1]] and bool(np.all(np.abs(moduli - 1) <= 1e-9))
          and abs(log_rad) <= 1e-9)
    record(1, ok, f"matrix {m.tolist()}, |eigenvalues| {moduli.round(12).tolist()}, ln Rad {log_rad:.3g}")


def test_criterion_02_categorical_model():
    t0 = time.perf_counter()
    h = hom_growth_entropy(A2, WORD, n_max=30)
    c = compact_model_entropy(A2, WORD, n_max=30)
    check = spectral_lower_bound_check(A2, WORD, "even")
    dt = time.perf_counter() - t0
    target = (3 + math.sqrt(5)) / 2
    ok = (abs(h.growth_factor - target) <= 1e-6 and abs(c.value - h.value) <= 1e-6
          and check.holds and dt < 1.0)
    record(2, ok, f"growth factor {h.growth_factor:.10f} (target {target:.10f}), "
                  f"compact {c.value:.10f}, spectral check {'PASS' if check.holds else 'FAIL'}, {dt:.3f} s")


def test_criterion_03_oracle_equivalence():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(500):
        cx, known = random_complex(rng, n_max=12)
        got = sorted(math.inf if b == math.inf else b for b in barcode(cx).bars)
        mismatches += got != oracle_barcode(cx) or got != known
    dt = time.perf_counter() - t0
    record(3, mismatches == 0 and dt < 10, f"500 complexes, {mismatches} mismatches, {dt:.2f} s")


def test_criterion_04_b_eps_bounds():
    rng = np.random.default_rng(4)
    violations = cases = 0
    eps_values = [F(0), F(1, 2), F(1), F(3), F(100)]
    while cases < 10_000:
        cx, _ = random_complex(rng, n_max=12)
        bc = barcode(cx)
        b0 = count_b_epsilon(bc, 0)
        violations += not all(count_b_epsilon(bc, eps) <= b0 <= len(cx) for eps in eps_values)
        cases += 1
    record(4, violations == 0, f"{cases} complexes x {len(eps_values)} eps, {violations} violations")


def test_criterion_05_stability():
    rng = np.random.default_rng(5)
    trials = violations = 0
    while trials < 1000:
        cx, _ = random_complex(rng, n_max=12)
        delta = F(int(rng.integers(1, 8)), 4)
        eps = delta + F(int(rng.integers(1, 9)), 4)
        # uniform shifts in [-delta/2, delta/2] on a 1/16 lattice of delta
        shifts = {g: F(int(rng.integers(-8, 9)), 16) * delta for g in cx.ids}
        try:
            moved = cx.shifted(shifts)
        except ValidationError:  # the shift broke the strict action drop of d
            continue
        violations += not check_stability(cx, moved, delta, eps).holds
        trials += 1
    record(5, violations == 0, f"{trials} trials, {violations} violations")


@pytest.mark.slow
def test_criterion_06_cat_map_topological_entropy():
    cat = TorusAutomorphism(((2, 1), (1, 1)))
    plan = schedule([(1 / 32, 4096), (1 / 64, 8192)], (5, 6, 7, 8))
    assert max(s.k for s in plan) <= 8 and min(s.eps for s in plan) == 1 / 64
    assert min(min(s.grid_shape) for s in plan) >= 1024
    t0 = time.perf_counter()
    cap = capacity_entropy(cat, plan)
    dt = time.perf_counter() - t0
    vol = curve_volume_growth(cat, Curve.segment((0, 0), (1, 0)), n_max=20)
    cap_err = abs(cap.value - H_CAT) / H_CAT
    vol_err = abs(vol.value - H_CAT) / H_CAT
    ok = cap_err <= 0.10 and dt < 60 and vol_err <= 0.05
    record(6, ok, f"capacity {cap.value:.4f} ({cap_err:.1%} off, {dt:.1f} s), "
                  f"curve volume {vol.value:.5f} ({vol_err:.2%} off), target {H_CAT:.5f}")


def test_criterion_07_horseshoe():
    ks = (5, 6, 7, 8)
    oracle = [math.log(symbolic_horseshoe_oracle(k)) / k for k in ks]
    plain = capacity_entropy(Horseshoe(), schedule([(1 / 9, 3**7), (1 / 27, 3**7)], ks))
    padded = capacity_entropy(Horseshoe(pad=1 / 9), schedule([(1 / 9, 11 * 3**5), (1 / 27, 11 * 3**5)], ks))
    err = abs(plain.value - math.log(2)) / math.log(2)
    gap = abs(padded.value - plain.value)
    ok = all(abs(o - math.log(2)) < 1e-12 for o in oracle) and err <= 0.10 and gap <= 0.05
    record(7, ok, f"capacity {plain.value:.4f} vs ln 2 = {math.log(2):.4f} ({err:.1%}), "
                  f"padded domain {padded.value:.4f} (difference {gap:.4f})")


@pytest.mark.slow
def test_criterion_08_inequality_chain():
    cfg = ExperimentConfig.from_text("map = torus\nmatrix = 2 1 1 1\ntree = A2\nparity = even\nword = A+ B-\n")
    rep = compare_entropies(cfg)
    est = {k: e.value for k, e in rep.estimates().items()}
    spread = max(est.values()) - min(est.values())
    have_all = {"h_cat_model", "h_bar"} <= set(est) and any(k.startswith("h_top") for k in est)
    ok = have_all and spread <= 0.05 and rep.all_pass and len(rep.verdicts) == 5
    vals = ", ".join(f"{k} {v:.4f}" for k, v in sorted(est.items()))
    record(8, ok, f"{vals}; spread {spread:.4f}; verdicts "
                  + " ".join(v.to_dict()["verdict"] for v in rep.verdicts))


@pytest.mark.slow
def test_criterion_09_crofton_boundedness():
    tw = AnnulusTwist(amplitude=0.5, support=(-0.3, 0.7))
    curves = iterate_curve(tw, Curve.segment((0.3, -0.9), (0.3, 0.9), 1000, tol=1e-4), 10)
    tomo = build_tomograph(3, 0.2, TargetPair(curves[1]))
    ratios = [crofton_check(tomo, curves[n], 10_000, seed=n).ratio for n in range(1, 11)]
    bounded = max(ratios) <= 2 * ratios[0]
    scaling = []
    for n in (1, 10):
        se = [crofton_check(tomo, curves[n], m, seed=100 + m).stderr for m in (10_000, 20_000, 40_000)]
        scaling += [se[1] / se[0], se[2] / se[1]]
    target = 1 / math.sqrt(2)
    scale_ok = all(abs(s - target) <= 0.2 * target for s in scaling)
    record(9, bounded and scale_ok,
           f"ratio(1) {ratios[0]:.3e}, max ratio {max(ratios):.3e} ({max(ratios) / ratios[0]:.2f}x); "
           f"stderr per doubling {', '.join(f'{s:.3f}' for s in scaling)} (target {target:.3f})")


def test_criterion_10_graph_pair_barcode():
    bc = barcode(graph_pair_complex(GraphPair(TrigPoly(), TrigPoly((0, 0, 1)))))
    finite = [float(b) for b in bc.finite]
    cos4_ok = bc.n_infinite == 2 and len(finite) == 1 and abs(finite[0] - 2) <= 1e-6
    pair = GraphPair(TrigPoly((0, 0.05)), TrigPoly((0, 0, 0.02), (0.03,)))
    table = barcode_entropy_experiment(support_avoiding_generator(pair, (0.5, 0.9)),
                                       [1, F(1, 10), F(1, 100)], 10)
    ok = cos4_ok and table.h_bar == 0.0
    record(10, ok, f"cos(4 pi q): {bc.n_infinite} infinite bars, finite {finite}; "
                   f"support-avoiding pair h_bar = {table.h_bar}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
