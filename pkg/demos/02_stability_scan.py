#!/usr/bin/env python3
"""Parabolic degrees and the stability classification of cyclic bundles.

With gamma = 0 the only invariant isotropic subbundles are L_2 and
L_1 + L_2, so stability reduces to comparing pardeg(L_1) with half the
degree of the twisted canonical bundle.  The scan below walks deg(L_1) for
a compact genus-2 surface and for a punctured torus with weight 3/10.
"""

from fractions import Fraction

from cyclichiggs import bundle as bd

print("== compact genus 2 (deg K = 2), gamma = 0 ==")
for deg in range(-3, 4):
    data = bd.CyclicHiggsData(genus=2, deg_L1=deg)
    verdict = bd.check_stability(data, gamma_is_zero=True)
    mw = bd.milnor_wood_check(data)
    print(f"deg L1 = {deg:+d}: {verdict.classification:22s} witnesses={list(verdict.witnesses)} "
          f"Milnor-Wood={mw}")

print("\n== punctured torus, one puncture of weight 3/10 ==")
for flag in (bd.POSITIVE_FLAG, bd.NEGATIVE_FLAG):
    data = bd.CyclicHiggsData(
        genus=1, deg_L1=0,
        punctures=(bd.PunctureData(1, Fraction(3, 10), flag),),
    )
    p1 = bd.parabolic_degree_line(1, data)
    verdict = bd.check_stability(data, gamma_is_zero=True)
    print(f"{flag}: pardeg(L1) = {p1} -> {verdict.classification}")

print("\n== gamma != 0 forces stability ==")
data = bd.CyclicHiggsData(genus=2, deg_L1=1)
print(f"deg L1 = 1, gamma != 0: {bd.check_stability(data, False).classification}")

print("\n== pointwise spectral data ==")
b, c = 1.0, -0.5
print(f"char poly coefficients at (b, c) = ({b}, {c}): "
      f"{bd.char_poly_at_point(b, c).real.round(6)}")
print(f"eigenvector family non-isotropic at (1, 1): "
      f"{bd.eigenvector_isotropy_check(1.0, 1.0)}")
