#!/usr/bin/env python3
"""Residue, weight filtration, sl2 triple and the local model metric.

Near a puncture of weight 3/10 the graded residue keeps only the two tau
entries; its 2x2 blocks generate the filtration whose ln|z| exponents feed
the model-metric diagonal.
"""

from fractions import Fraction

import numpy as np

from cyclichiggs import modelmetric as mm
from cyclichiggs.bundle import POSITIVE_FLAG, CoeffSpec, CyclicHiggsData, PunctureData

data = CyclicHiggsData(
    genus=1,
    deg_L1=0,
    punctures=(PunctureData(1, Fraction(3, 10), POSITIVE_FLAG),),
    beta_coeff=CoeffSpec(1.0, 1),
    gamma_coeff=CoeffSpec(1.0, 0),
)

print("== residue and graded residue ==")
print("residue matrix:")
print(np.round(mm.residue_matrix_cyclic(data, 1).real, 3))
gr = mm.graded_residue_cyclic(data, 1)
print(f"graded weights: {gr.weights}, block sizes {gr.block_sizes()}")
print(f"delta block over {gr.block_labels[0.3]}:")
print(gr.blocks[0.3])

print("\n== weight filtration of the delta block ==")
wf = mm.weight_filtration(gr.blocks[0.3])
for r in range(wf.r_min, wf.r_max + 1):
    print(f"dim W_{r:+d} = {wf.subspace(r).shape[1]}")
print(f"H = diag{tuple(np.round(np.linalg.eigvals(wf.H).real, 6))} in the chain basis")

print("\n== sl2 completion ==")
triple = mm.sl2_complete(wf.H, gr.blocks[0.3])
print(f"X = {triple.X.round(6).tolist()}, bracket defects {triple.bracket_defects()}")

print("\n== model metric diagonal ==")
local = mm.model_metric_local(data, 1)
print("line   (delta, r)    coefficient at |z| = e^-2")
for i in (-2, -1, 0, 1, 2):
    print(f"L_{i:+d}   {local.exponents[i]!s:12s} {local.coefficient(i, np.exp(-2.0)):.6f}")
diag = local.diagonal(np.exp(-2.0))
print(f"duality products: {diag[0] * diag[4]:.12f}, {diag[1] * diag[3]:.12f}")
print(f"L2/L1 frame ratio 1/|ln r|: {np.sqrt(diag[4] / diag[3]):.6f} (= 1/2 at r = e^-2)")
