"""
Barcodes of filtered complexes and of graph pairs on the circle
===============================================================

A filtered complex over GF(2) assigns an action to every generator; the
differential strictly lowers action.  Reduction to a singular basis splits it
into infinite bars (homology) and finite bars (pairs).  b_eps counts bars of
length at least eps.
"""

from fractions import Fraction as F

import numpy as np

from symentropy.floer_curves import GraphPair, TrigPoly, graph_pair_complex
from symentropy.persistence import (
    FilteredComplex,
    barcode,
    check_stability,
    count_b_epsilon,
    format_fcx,
)

# a circle with two minima and two maxima, written by hand
cx = FilteredComplex(
    [("min0", 0, F(-1)), ("min1", 0, F(-1, 2)), ("max0", 1, F(1)), ("max1", 1, F(3, 2))],
    [("max0", "min0"), ("max0", "min1"), ("max1", "min0"), ("max1", "min1")],
)
bc = barcode(cx)
print("barcode:", bc)
for eps in (0, F(1, 2), 2, 3):
    print(f"  b_{eps} = {count_b_epsilon(bc, eps)}")

# the same complex in the text format the CLI reads (symentropy persist)
print("\n" + format_fcx(cx))

# moving every action by at most delta/2 moves bar ends by at most delta/2
delta, eps = F(1, 4), F(1, 2)
rng = np.random.default_rng(0)
shifts = {g: F(int(rng.integers(-4, 5)), 32) for g in cx.ids}
print("stability:", check_stability(cx, cx.shifted(shifts), delta, eps))

# Floer complex of two graphs in T*S^1: critical points of h = f2 - f1
pair = GraphPair(TrigPoly(), TrigPoly((0, 0, 1)))  # h = cos(4 pi q)
gx = graph_pair_complex(pair)
print("\ngenerators of the graph pair:", [(g, float(gx.action(g))) for g in gx.ids])
print("barcode:", barcode(gx))
print("two infinite bars (the circle's homology) and one bar of length max - min = 2")
