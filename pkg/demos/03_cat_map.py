"""
Three entropies of the cat map
==============================

For A = [[2, 1], [1, 1]] on the torus, the categorical model, the barcode
entropy of a pair of geodesics and the topological entropy estimators all
sit near ln((3 + sqrt 5) / 2).  This demo runs each estimator separately and
then the full comparison.  A reduced capacity schedule keeps it quick; the
acceptance suite runs the full one.
"""

import math
import time

from symentropy.dynamics import (
    Curve,
    OrbitGraphSpec,
    TorusAutomorphism,
    capacity_entropy,
    curve_volume_growth,
    graph_volume_growth,
)
from symentropy.floer_curves import barcode_entropy_experiment, geodesic_generator
from symentropy.harness import ExperimentConfig, compare_entropies

cat = TorusAutomorphism(((2, 1), (1, 1)))
target = math.log((3 + math.sqrt(5)) / 2)
print(f"target ln lambda = {target:.5f}")

# lengths of iterates of a short segment grow like lambda^n
vol = curve_volume_growth(cat, Curve.segment((0, 0), (1, 0)), n_max=20)
print(f"curve volume growth   {vol.value:.5f}  lengths {[round(x, 1) for x in vol.diagnostics['lengths'][:6]]} ...")

# the graph of the k-string map grows at the same rate
g = graph_volume_growth(cat, Curve.segment((0, 0), (0.2, 0.7)), k_max=12)
print(f"graph volume growth   {g.value:.5f}")

# occupied eps-boxes of orbit strings; eps and grid kept small here
t0 = time.perf_counter()
plan = [OrbitGraphSpec(k, e, n) for e, n in ((1 / 8, 1024), (1 / 16, 2048)) for k in (5, 6, 7, 8)]
cap = capacity_entropy(cat, plan)
print(f"capacity (eps 1/16)   {cap.value:.5f}  per eps {cap.diagnostics['per_eps']}  {time.perf_counter() - t0:.1f} s")

# geodesics of slopes (1, 0) and (0, 1): intersection counts are Fibonacci numbers
table = barcode_entropy_experiment(geodesic_generator((1, 0), (0, 1)), [1, 0.5, 0.25], 20)
print(f"barcode entropy       {table.h_bar:.5f}  b_eps(n) = {table.counts[1][:10]} ...")

# full chain with verdicts, capacity skipped for speed
cfg = ExperimentConfig.from_text("map = torus\ntree = A2\nword = A+ B-\n")
rep = compare_entropies(cfg, estimators=("h_cat_model", "h_bar", "h_top_volume"))
for v in rep.verdicts:
    d = v.to_dict()
    print(f"{d['verdict']}: {d['lhs']} {d['lhs_value']:.5f} <= {d['rhs']} {d['rhs_value']:.5f} + {d['tol']}")
