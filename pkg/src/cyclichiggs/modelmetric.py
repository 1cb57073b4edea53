"""Residues, weight filtrations, sl2 triples and the local model metric.

Near a puncture of weight delta != 0 the graded residue of the cyclic Higgs
field is the pair of 2x2 nilpotent blocks coming from the tau chain; its
weight filtration fixes the |ln|z|| exponents of the model metric, whose
diagonal over (L_-2, L_-1, L_0, L_1, L_2) is

    |z|^{2d} |ln|z||,  |z|^{2d} |ln|z||^{-1},  1,
    |z|^{-2d} |ln|z||, |z|^{-2d} |ln|z||^{-1},

with d the common weight of L_1 and L_2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import CyclicHiggsData, PunctureData
from .liegroup import InvalidInputError

__all__ = [
    "GradedResidue",
    "WeightFiltration",
    "Sl2Triple",
    "ModelMetricLocal",
    "UnsupportedWeightError",
    "residue_matrix_cyclic",
    "graded_residue_cyclic",
    "weight_filtration",
    "sl2_complete",
    "model_metric_local",
]

LINE_LABELS = ("L-2", "L-1", "L0", "L+1", "L+2")


class UnsupportedWeightError(InvalidInputError):
    """Zero-weight punctures are outside the solver's scope."""


def _nonzero_weight(puncture: PunctureData) -> float:
    if puncture.zeta == 0:
        raise UnsupportedWeightError(
            f"puncture {puncture.id} has zero weight; the local model requires "
            "non-zero weights"
        )
    return float(puncture.delta)


def residue_matrix_cyclic(data: CyclicHiggsData, puncture_id: int) -> np.ndarray:
    """Residue of Phi at the puncture in the frame (L_-2, ..., L_2).

    The tau chain contributes the two 1 entries; beta and gamma contribute
    the z^0 coefficients of their local expansions against dz/z.  Signs
    follow the so(Q) convention of transport.higgs_matrix_coefficients.
    """
    data.puncture(puncture_id)
    res_b = data.beta_coeff.const if data.beta_coeff.power == 0 else 0.0
    res_c = data.gamma_coeff.const if data.gamma_coeff.power == 0 else 0.0
    m = np.zeros((5, 5), dtype=complex)
    m[1, 0] = 1.0
    m[4, 3] = 1.0
    m[2, 1] = res_b
    m[3, 2] = res_b
    m[1, 4] = -res_c
    m[0, 3] = -res_c
    return m


@dataclass(frozen=True)
class GradedResidue:
    """Induced endomorphism on the weight-graded pieces at one puncture.

    weights are sorted ascending; blocks[w] acts on the graded piece with
    the basis recorded in block_labels[w].
    """

    weights: tuple[float, ...]
    blocks: dict
    block_labels: dict

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(self.blocks[w].shape[0] for w in self.weights)


def graded_residue_cyclic(data: CyclicHiggsData, puncture_id: int) -> GradedResidue:
    """Graded residue at a puncture of non-zero weight.

    Only the two tau entries preserve the grading, so every block is either
    the 2x2 lower shift or the 1x1 zero; there is no semisimple part.
    """
    p = data.puncture(puncture_id)
    delta = _nonzero_weight(p)
    shift = np.array([[0.0, 0.0], [1.0, 0.0]])
    weights = tuple(sorted((-delta, 0.0, delta)))
    blocks = {
        delta: shift.copy(),
        -delta: shift.copy(),
        0.0: np.zeros((1, 1)),
    }
    labels = {
        delta: ("L+1", "L+2"),
        -delta: ("L-2", "L-1"),
        0.0: ("L0",),
    }
    return GradedResidue(weights, blocks, labels)


def _null_space(m: np.ndarray, tol: float) -> np.ndarray:
    u, s, vh = np.linalg.svd(m)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
    return vh[rank:].conj().T


def _complement_in(space: np.ndarray, inside: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of the part of `inside` transverse to `space`."""
    if space.shape[1] == 0:
        return inside
    proj = inside - space @ (space.conj().T @ inside)
    u, s, _ = np.linalg.svd(proj, full_matrices=False)
    keep = s > tol
    return u[:, keep]


def _jordan_chains(y: np.ndarray, tol: float) -> list[list[np.ndarray]]:
    """Jordan chains [v, Yv, ..., Y^{k-1}v] of a nilpotent matrix."""
    n = y.shape[0]
    kernels = [np.zeros((n, 0))]
    power = np.eye(n)
    m = 0
    while True:
        power = power @ y
        m += 1
        kernels.append(_null_space(power, tol))
        if kernels[-1].shape[1] == n:
            break
        if m > n:
            raise InvalidInputError("matrix is not nilpotent")
    chains: list[list[np.ndarray]] = []
    for j in range(m, 0, -1):
        # vectors already occupying level j: Y^{len-j} applied to longer tops
        occupied = [ch[len(ch) - j] for ch in chains if len(ch) >= j]
        blocked = np.column_stack([kernels[j - 1]] + [v[:, None] for v in occupied]) \
            if occupied or kernels[j - 1].shape[1] else np.zeros((n, 0))
        new_tops = _complement_in(
            np.linalg.qr(blocked)[0] if blocked.shape[1] else blocked,
            kernels[j],
            tol,
        )
        for idx in range(new_tops.shape[1]):
            v = new_tops[:, idx]
            chain = [v]
            for _ in range(j - 1):
                chain.append(y @ chain[-1])
            chains.append(chain)
    return chains


@dataclass(frozen=True)
class WeightFiltration:
    """Monodromy weight filtration of a nilpotent endomorphism.

    levels maps the integer r to an orthonormal basis (columns) of W_r; H is
    diagonalizable with integer spectrum, acting as r on Gr_r, and satisfies
    [H, Y] = -2 Y for the generating nilpotent.
    """

    levels: dict
    H: np.ndarray
    chain_lengths: tuple[int, ...]

    @property
    def r_min(self) -> int:
        return min(self.levels)

    @property
    def r_max(self) -> int:
        return max(self.levels)

    def subspace(self, r: int) -> np.ndarray:
        if r < self.r_min:
            n = self.H.shape[0]
            return np.zeros((n, 0))
        return self.levels[min(r, self.r_max)]


def weight_filtration(y: np.ndarray, tol: float = 1e-10) -> WeightFiltration:
    """Unique filtration with Y W_r in W_{r-2} and Y^r: Gr_r ~ Gr_{-r}.

    Built from Jordan chains: a chain of length k carries the weights
    k-1, k-3, ..., -(k-1), and H is multiplication by the weight in the
    chain basis.
    """
    y = np.asarray(y, dtype=float if np.isrealobj(y) else complex)
    n = y.shape[0]
    if y.shape != (n, n):
        raise InvalidInputError("weight filtration needs a square matrix")
    chains = _jordan_chains(y, tol)
    basis_cols = []
    weights = []
    for chain in chains:
        k = len(chain)
        for pos, v in enumerate(chain):
            # per-vector scaling keeps H diagonal in the chain basis while
            # conditioning the basis inversion
            basis_cols.append(v / np.linalg.norm(v))
            weights.append(k - 1 - 2 * pos)
    basis = np.column_stack(basis_cols)
    diag = np.diag(np.asarray(weights, dtype=float))
    h = basis @ diag @ np.linalg.inv(basis)
    levels = {}
    rmax = max(weights)
    rmin = min(weights)
    for r in range(rmin, rmax + 1):
        cols = [c for c, w in zip(basis_cols, weights) if w <= r]
        if cols:
            q, _ = np.linalg.qr(np.column_stack(cols))
            levels[r] = q
        else:
            levels[r] = np.zeros((n, 0))
    return WeightFiltration(
        levels, h, tuple(sorted((len(c) for c in chains), reverse=True))
    )


@dataclass(frozen=True)
class Sl2Triple:
    H: np.ndarray
    X: np.ndarray
    Y: np.ndarray

    def bracket_defects(self) -> tuple[float, float, float]:
        def br(a, b):
            return a @ b - b @ a

        return (
            float(np.abs(br(self.H, self.Y) + 2.0 * self.Y).max()),
            float(np.abs(br(self.H, self.X) - 2.0 * self.X).max()),
            float(np.abs(br(self.X, self.Y) - self.H).max()),
        )


def sl2_complete(h: np.ndarray, y: np.ndarray, tol: float = 1e-10) -> Sl2Triple:
    """Solve [H,X] = 2X and [X,Y] = H for X (linear least squares).

    Requires [H,Y] = -2Y; the bracket equations are linear in X and, on each
    H-eigenspace ladder, determined, so lstsq recovers the exact completion.
    """
    h = np.asarray(h, dtype=float)
    y = np.asarray(y, dtype=float)
    n = h.shape[0]
    if np.abs(h @ y - y @ h + 2.0 * y).max() > 1e-8 * max(1.0, np.abs(y).max()):
        raise InvalidInputError("[H, Y] != -2Y: inconsistent input pair")
    eye = np.eye(n)
    ad_h = np.kron(eye, h) - np.kron(h.T, eye)  # X -> HX - XH on vec(X)
    ad_y = np.kron(y.T, eye) - np.kron(eye, y)  # X -> XY - YX on vec(X)
    lhs = np.vstack([ad_h - 2.0 * np.eye(n * n), ad_y])
    rhs = np.concatenate([np.zeros(n * n), h.reshape(-1, order="F")])
    x_vec, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    # one pass of iterative refinement on the same normal system
    corr, *_ = np.linalg.lstsq(lhs, rhs - lhs @ x_vec, rcond=None)
    x_vec = x_vec + corr
    x = x_vec.reshape((n, n), order="F")
    triple = Sl2Triple(h, x, y)
    if max(triple.bracket_defects()) > tol:
        raise InvalidInputError(
            f"no sl2 completion within tolerance: defects {triple.bracket_defects()}"
        )
    return triple


@dataclass(frozen=True)
class ModelMetricLocal:
    """Diagonal model metric exponents per line summand at one puncture.

    exponents[i] = (delta, r) for line i in (-2, ..., 2), meaning the metric
    coefficient |z|^{-2 delta} |ln|z||^r.
    """

    exponents: dict
    chart: int

    def coefficient(self, i: int, z: complex) -> float:
        r_abs = abs(complex(z))
        if not 0.0 < r_abs < 1.0:
            raise InvalidInputError("model metric lives on 0 < |z| < 1")
        delta, r = self.exponents[i]
        return float(r_abs ** (-2.0 * delta) * np.abs(np.log(r_abs)) ** r)

    def diagonal(self, z: complex) -> np.ndarray:
        return np.array([self.coefficient(i, z) for i in (-2, -1, 0, 1, 2)])


def model_metric_local(data: CyclicHiggsData, puncture_id: int) -> ModelMetricLocal:
    """Model metric of the cyclic bundle near a non-zero-weight puncture."""
    p = data.puncture(puncture_id)
    delta = _nonzero_weight(p)
    exponents = {
        -2: (-delta, 1),
        -1: (-delta, -1),
        0: (0.0, 0),
        1: (delta, 1),
        2: (delta, -1),
    }
    return ModelMetricLocal(exponents, puncture_id)
