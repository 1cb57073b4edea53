"""Algebraic data of cyclic parabolic SO0(2,3)-Higgs bundles.

The bundle is a chain of line summands L_{-2}, L_{-1}, L_0, L_1, L_2 with
dual pairs L_{-i} = L_i^dual, an isomorphism tau: L_1 -> L_2 (x) K(D), a map
beta: L_0 -> L_1 (x) K(D) and gamma: L_2 -> L_{-1} (x) K(D).  Puncture
weights follow the signed pattern (-z, -z, 0, z, z): the "positive" flag
variant puts weight +zeta on L_1 and L_2, the "negative" variant -zeta.

Degrees are integers and weights exact rationals, so parabolic degrees and
the semistable equality case are computed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .liegroup import InvalidInputError

__all__ = [
    "POSITIVE_FLAG",
    "NEGATIVE_FLAG",
    "TRIVIAL_FLAG",
    "CoeffSpec",
    "PunctureData",
    "CyclicHiggsData",
    "StabilityVerdict",
    "line_weight_at_puncture",
    "parabolic_degree_line",
    "check_assumption_A",
    "milnor_wood_check",
    "check_stability",
    "char_poly_at_point",
    "eigenvector_isotropy_check",
]

POSITIVE_FLAG = "positive_flag"
NEGATIVE_FLAG = "negative_flag"
TRIVIAL_FLAG = "trivial_flag"
_FLAGS = (POSITIVE_FLAG, NEGATIVE_FLAG, TRIVIAL_FLAG)

LINE_INDICES = (-2, -1, 0, 1, 2)


@dataclass(frozen=True)
class CoeffSpec:
    """Coefficient function const * z^power (against dz/z or dz per chart)."""

    const: complex = 0.0
    power: int = 0

    def __post_init__(self):
        if self.power < 0:
            raise InvalidInputError("coefficient power must be >= 0")

    def __call__(self, z: complex) -> complex:
        return self.const * z**self.power

    def abs_at(self, r) -> np.ndarray:
        return np.abs(self.const) * np.asarray(r, dtype=float) ** self.power

    @property
    def is_zero(self) -> bool:
        return self.const == 0


def _as_weight(zeta) -> Fraction | float:
    if isinstance(zeta, Rational):
        return Fraction(zeta)
    if isinstance(zeta, str):
        return Fraction(zeta)
    return float(zeta)


@dataclass(frozen=True)
class PunctureData:
    """One marked point: normalized weight zeta in [0, 1/2) and a flag variant.

    The sign of the weight pattern lives in flag_variant, so zeta itself is
    stored non-negative.
    """

    id: int
    zeta: Fraction | float
    flag_variant: str

    def __post_init__(self):
        # zeta is stored non-negative; the sign of the pattern lives in the
        # flag variant.  Range and flag consistency are the business of
        # check_assumption_A, which reports them clause by clause.
        object.__setattr__(self, "zeta", _as_weight(self.zeta))
        if self.flag_variant not in _FLAGS:
            raise InvalidInputError(f"unknown flag variant {self.flag_variant!r}")
        if self.zeta < 0:
            raise InvalidInputError(
                f"puncture {self.id}: store |zeta| and put the sign in the flag"
            )

    @property
    def delta(self) -> Fraction | float:
        """Signed weight of L_1 and L_2 at this puncture."""
        if self.flag_variant == POSITIVE_FLAG:
            return self.zeta
        if self.flag_variant == NEGATIVE_FLAG:
            return -self.zeta
        return Fraction(0)


@dataclass(frozen=True)
class CyclicHiggsData:
    """Degrees, puncture data and local coefficients of the cyclic bundle."""

    genus: int
    deg_L1: int
    punctures: tuple[PunctureData, ...] = ()
    beta_coeff: CoeffSpec = CoeffSpec(1.0, 0)
    gamma_coeff: CoeffSpec = CoeffSpec(0.0, 0)
    tau_normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "punctures", tuple(self.punctures))
        if self.genus < 0:
            raise InvalidInputError("genus must be non-negative")
        if self.deg_canonical <= 0:
            raise InvalidInputError(
                "need 2*genus - 2 + #punctures > 0 (negative Euler characteristic)"
            )
        ids = [p.id for p in self.punctures]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("puncture ids must be distinct")

    @property
    def deg_canonical(self) -> int:
        """deg K(D) = 2 genus - 2 + #punctures."""
        return 2 * self.genus - 2 + len(self.punctures)

    @property
    def deg_L2(self) -> int:
        # forced by tau: L_1 -> L_2 (x) K(D) being an isomorphism
        return self.deg_L1 - self.deg_canonical

    def deg_line(self, i: int) -> int:
        if i not in LINE_INDICES:
            raise InvalidInputError(f"line index {i} outside -2..2")
        if i == 0:
            return 0
        mag = self.deg_L1 if abs(i) == 1 else self.deg_L2
        return mag if i > 0 else -mag

    def puncture(self, puncture_id: int) -> PunctureData:
        for p in self.punctures:
            if p.id == puncture_id:
                return p
        raise InvalidInputError(f"no puncture with id {puncture_id}")


def line_weight_at_puncture(i: int, puncture: PunctureData) -> Fraction | float:
    """Signed parabolic weight of L_i at one puncture."""
    if i not in LINE_INDICES:
        raise InvalidInputError(f"line index {i} outside -2..2")
    if i == 0:
        return Fraction(0)
    d = puncture.delta
    return d if i > 0 else -d


def parabolic_degree_line(i: int, data: CyclicHiggsData) -> Fraction | float:
    """pardeg(L_i) = deg(L_i) - sum of the weights of L_i over the punctures."""
    total = sum((line_weight_at_puncture(i, p) for p in data.punctures), Fraction(0))
    return data.deg_line(i) - total


def check_assumption_A(data: CyclicHiggsData):
    """Weight pattern, flag and tau-isomorphism clauses, with diagnostics.

    The PunctureData/CyclicHiggsData constructors already normalize most of
    this; the check re-validates so raw scenario input can be diagnosed
    clause by clause.
    """
    problems = []
    for p in data.punctures:
        if not 0 <= p.zeta < Fraction(1, 2):
            problems.append(f"puncture {p.id}: weight {p.zeta} outside [0, 1/2)")
        elif p.zeta != 0 and p.flag_variant == TRIVIAL_FLAG:
            problems.append(
                f"puncture {p.id}: nonzero weight needs a signed isotropic flag"
            )
        elif p.zeta == 0 and p.flag_variant != TRIVIAL_FLAG:
            problems.append(f"puncture {p.id}: zero weight needs the trivial flag")
    if not data.tau_normalized:
        problems.append("tau is not a normalized global isomorphism")
    return len(problems) == 0, problems


def milnor_wood_check(data: CyclicHiggsData) -> bool:
    """|pardeg(L_1)| <= deg K(D)."""
    return abs(parabolic_degree_line(1, data)) <= data.deg_canonical


def beta_realizable(data: CyclicHiggsData) -> bool:
    """Necessary degree bound for a nonzero beta: pardeg(L_1) >= -deg K(D).

    Data violating it cannot carry the required nonzero map L_0 -> L_1 (x)
    K(D), hence is not cyclic in the first place; the Milnor-Wood
    implication from stability is only meaningful on realizable data.
    """
    return parabolic_degree_line(1, data) >= -data.deg_canonical


@dataclass(frozen=True)
class StabilityVerdict:
    classification: str  # stable | strictly_semistable | unstable
    witnesses: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if (self.classification != "stable") != bool(self.witnesses):
            raise InvalidInputError("witness list must be nonempty iff not stable")


def check_stability(data: CyclicHiggsData, gamma_is_zero: bool) -> StabilityVerdict:
    """Stability of the cyclic bundle.

    With gamma nonzero there are no invariant isotropic subbundles of split
    form and the bundle is stable.  With gamma = 0 the invariant isotropic
    subbundles are exactly L_2 and L_1 + L_2; the verdict compares their
    parabolic degrees with 0 (exact arithmetic when the weights are rational).
    """
    ok, problems = check_assumption_A(data)
    if not ok:
        raise InvalidInputError("assumption A fails: " + "; ".join(problems))
    if not gamma_is_zero:
        return StabilityVerdict("stable")
    p1 = parabolic_degree_line(1, data)
    p2 = parabolic_degree_line(2, data)
    candidates = {"L2": p2, "L1+L2": p1 + p2}
    violating = tuple(name for name, v in candidates.items() if v > 0)
    if violating:
        return StabilityVerdict("unstable", violating)
    equal = tuple(name for name, v in candidates.items() if v == 0)
    if equal:
        return StabilityVerdict("strictly_semistable", equal)
    return StabilityVerdict("stable")


def char_poly_at_point(b: complex, c: complex) -> np.ndarray:
    """Coefficients (descending) of det(t - Phi/dz) = t(t^4 + 2 b^2 c)."""
    return np.array([1.0, 0.0, 0.0, 0.0, 2.0 * b * b * c, 0.0], dtype=complex)


def _q_value(v: np.ndarray) -> complex:
    # complex-bilinear Q on components (v_-2, v_-1, v_0, v_1, v_2)
    return -2.0 * v[0] * v[4] + 2.0 * v[1] * v[3] - v[2] ** 2


def eigenvector_isotropy_check(b: complex, c: complex, tol: float = 1e-12) -> bool:
    """Q-values of the explicit eigenvector family are all nonzero.

    Checks the kernel vector -c e_{-2} + e_2 and the four vectors
    (b^2 c, w^3, w^2 b, w b^2, b^2) with w^4 = -2 b^2 c; each has
    Q(v, v) = -4 b^4 c up to the kernel value 2c, nonzero whenever b, c != 0.
    """
    if b == 0 or c == 0:
        raise InvalidInputError("isotropy check requires b != 0 and c != 0")
    vecs = [np.array([-c, 0.0, 0.0, 0.0, 1.0], dtype=complex)]
    w0 = complex(-2.0 * b * b * c) ** 0.25
    for k in range(4):
        w = w0 * np.exp(0.5j * np.pi * k)
        vecs.append(np.array([b * b * c, w**3, w**2 * b, w * b**2, b * b], dtype=complex))
    scale = max(abs(b), abs(c)) ** 4
    return all(abs(_q_value(v)) > tol * max(scale, 1.0) for v in vecs)
