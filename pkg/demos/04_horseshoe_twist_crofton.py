"""
Horseshoe, annulus twist and the Crofton check
==============================================

The linear horseshoe has exactly 2^k admissible itineraries of length k, so
its entropy is ln 2, and box counting on a triadic grid sees exactly that.
An annulus twist has zero entropy: curve lengths grow linearly.  The Crofton
check integrates intersection numbers over a ball of perturbations of the
zero section; with a twist the ratio to curve length stays bounded.
"""

import math

from symentropy.crofton import TargetPair, build_tomograph, crofton_check
from symentropy.dynamics import (
    AnnulusTwist,
    Curve,
    Horseshoe,
    OrbitGraphSpec,
    capacity_entropy,
    curve_volume_growth,
    iterate_curve,
    symbolic_horseshoe_oracle,
)

print("itineraries:", [symbolic_horseshoe_oracle(k) for k in range(1, 9)])
plan = [OrbitGraphSpec(k, e, 3**7) for e in (1 / 9, 1 / 27) for k in (5, 6, 7, 8)]
cap = capacity_entropy(Horseshoe(), plan)
print(f"horseshoe capacity {cap.value:.5f}  vs ln 2 = {math.log(2):.5f}")
for row in cap.diagnostics["counts"][-4:]:
    print(f"  eps {row['eps']:.4f} k {row['k']}: {row['count']} boxes")

# a compactly supported version on a bigger domain gives the same answer
padded = [OrbitGraphSpec(k, e, 11 * 3**5) for e in (1 / 9, 1 / 27) for k in (5, 6, 7, 8)]
print(f"padded domain      {capacity_entropy(Horseshoe(pad=1 / 9), padded).value:.5f}")

tw = AnnulusTwist(amplitude=0.5, support=(-0.3, 0.7))
fibre = Curve.segment((0.3, -0.9), (0.3, 0.9), 1000, tol=1e-4)
vol = curve_volume_growth(tw, fibre, n_max=20)
print(f"\ntwist curve volume growth {vol.value:.4f}; lengths {[round(x, 2) for x in vol.diagnostics['lengths'][:6]]}")

# one tomograph around f(fibre), reused for every iterate
curves = iterate_curve(tw, fibre, 10)
tomo = build_tomograph(3, 0.2, TargetPair(curves[1]))
print(f"tomograph: d = {tomo.d}, radius {tomo.radius:.4g}, spanning margin {tomo.diagnostics['spanning_margin']:.3f}")
for n in (1, 2, 5, 10):
    r = crofton_check(tomo, curves[n], 5000, seed=n)
    print(f"  n={n:2d}  length {r.volume:7.3f}  integral {r.integral:.3e} +- {r.stderr:.1e}  ratio {r.ratio:.3e}")
