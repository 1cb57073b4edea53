"""Linear algebra for the split orthogonal group SO0(2,3).

Matrices act on R^5 in the ordered basis (e1, e2, f2, f1, f3), in which the
invariant quadratic form is I_{2,3} = diag(1, 1, -1, -1, -1) and the chamber
subspace consists of the symmetric anti-diagonal matrices A(mu1, mu2) with
A[0,3] = A[3,0] = mu1 and A[1,2] = A[2,1] = mu2.  The maximal compact
subgroup K = SO(2) x SO(3) sits block-diagonally (2x2 upper-left, 3x3
lower-right).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_TOL",
    "I23",
    "ChamberPoint",
    "KAKTriple",
    "WeightBasis",
    "InvalidInputError",
    "NumericalError",
    "signature_form",
    "chamber_matrix",
    "chamber_exp",
    "membership_check",
    "require_member",
    "cartan_projection",
    "kak_decompose",
    "simple_roots",
    "weight_basis",
    "random_compact",
    "random_group_element",
]

DEFAULT_TOL = 1e-9

I23 = np.diag([1.0, 1.0, -1.0, -1.0, -1.0])


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class NumericalError(RuntimeError):
    """Raised when a linear-algebra kernel fails or loses too much accuracy."""


def signature_form(p: int, q: int) -> np.ndarray:
    """Gram matrix diag(+1 x p, -1 x q) of the standard signature-(p,q) form."""
    if p < 1 or q < 1 or p >= q:
        raise InvalidInputError(f"need 1 <= p < q, got p={p}, q={q}")
    return np.diag(np.concatenate([np.ones(p), -np.ones(q)]))


@dataclass(frozen=True)
class ChamberPoint:
    """Point (mu1, mu2) of the closed positive chamber, mu1 >= mu2 >= 0."""

    mu1: float
    mu2: float

    def __post_init__(self):
        if not (np.isfinite(self.mu1) and np.isfinite(self.mu2)):
            raise InvalidInputError("chamber coordinates must be finite")
        if self.mu1 < -1e-12 or self.mu2 < -1e-12 or self.mu1 < self.mu2 - 1e-12:
            raise InvalidInputError(
                f"not in closed chamber: mu1={self.mu1}, mu2={self.mu2}"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.mu1, self.mu2])


@dataclass(frozen=True)
class KAKTriple:
    """Factors of g = k_minus @ exp(A(mu)) @ k_plus with k's in SO(2) x SO(3)."""

    k_minus: np.ndarray
    mu: ChamberPoint
    k_plus: np.ndarray

    def compose(self) -> np.ndarray:
        return self.k_minus @ chamber_exp(self.mu) @ self.k_plus


def chamber_matrix(mu: ChamberPoint | tuple[float, float]) -> np.ndarray:
    """Anti-diagonal chamber element A(mu) of the Lie algebra so(2,3)."""
    mu1, mu2 = (mu.mu1, mu.mu2) if isinstance(mu, ChamberPoint) else mu
    a = np.zeros((5, 5))
    a[0, 3] = a[3, 0] = mu1
    a[1, 2] = a[2, 1] = mu2
    return a


def chamber_exp(mu: ChamberPoint | tuple[float, float]) -> np.ndarray:
    """exp(A(mu)) in closed form: cosh/sinh on the (e_i, f_i) planes."""
    mu1, mu2 = (mu.mu1, mu.mu2) if isinstance(mu, ChamberPoint) else mu
    m = np.eye(5)
    m[0, 0] = m[3, 3] = np.cosh(mu1)
    m[0, 3] = m[3, 0] = np.sinh(mu1)
    m[1, 1] = m[2, 2] = np.cosh(mu2)
    m[1, 2] = m[2, 1] = np.sinh(mu2)
    return m


def _polar_orthogonal(m: np.ndarray) -> np.ndarray:
    """Orthogonal factor o of the Euclidean polar decomposition m = o s."""
    u, _, vt = np.linalg.svd(m)
    return u @ vt


def membership_check(m: np.ndarray, tol: float = DEFAULT_TOL):
    """Test membership in SO0(2,3).

    Returns (ok, diagnostics) where diagnostics reports the Gram defect
    ||m^T I m - I||_inf, the determinant defect, and the sign of the
    SO(2)-block of the orthogonal polar factor (positive on the identity
    component).
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (5, 5):
        raise InvalidInputError(f"expected a 5x5 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix has non-finite entries")
    gram_defect = float(np.abs(m.T @ I23 @ m - I23).max())
    det_defect = float(abs(np.linalg.det(m) - 1.0))
    o = _polar_orthogonal(m)
    block_det = float(np.linalg.det(o[:2, :2]))
    ok = gram_defect <= tol and det_defect <= tol and block_det > 0.0
    diagnostics = {
        "gram_defect": gram_defect,
        "det_defect": det_defect,
        "compact_block_det": block_det,
    }
    return ok, diagnostics


def require_member(m: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Validate membership and return the matrix as a float array."""
    ok, diag = membership_check(m, tol)
    if not ok:
        raise InvalidInputError(f"matrix is not in SO0(2,3) at tol={tol}: {diag}")
    return np.asarray(m, dtype=float)


def cartan_projection(g: np.ndarray, tol: float = DEFAULT_TOL) -> ChamberPoint:
    """Chamber coordinates (mu1, mu2) with singular values e^{+-mu_i}, 1.

    The log singular values of g in SO(2,3) come in the symmetric pattern
    (mu1, mu2, 0, -mu2, -mu1); pairing them controls floating point drift.
    """
    g = np.asarray(g, dtype=float)
    try:
        sv = np.linalg.svd(g, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"SVD failed: {exc}") from None
    lam = np.log(np.sort(sv)[::-1])
    mu1 = 0.5 * (lam[0] - lam[4])
    mu2 = 0.5 * (lam[1] - lam[3])
    mu1, mu2 = max(mu1, mu2, 0.0), max(min(mu1, mu2), 0.0)
    return ChamberPoint(mu1, mu2)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Deterministic sign: first entry larger than 1e-8 * max is made positive."""
    cut = 1e-8 * np.abs(v).max()
    for x in v:
        if abs(x) > cut:
            return v if x > 0 else -v
    return v


def _block_project(k: np.ndarray) -> np.ndarray:
    """Project onto block-diagonal SO(2) x SO(3) via per-block polar factors."""
    out = np.zeros((5, 5))
    out[:2, :2] = _polar_orthogonal(k[:2, :2])
    out[2:, 2:] = _polar_orthogonal(k[2:, 2:])
    if np.linalg.det(out[:2, :2]) < 0 or np.linalg.det(out[2:, 2:]) < 0:
        raise NumericalError("projection left a compact factor outside SO(2)xSO(3)")
    return out


def kak_decompose(g: np.ndarray, tol: float = DEFAULT_TOL) -> KAKTriple:
    """KAK factors g = k_minus exp(A(mu)) k_plus.

    Only exp(A(mu)) is canonical: when mu has repeated values the compact
    factors are fixed by the deterministic eigenvector sign convention.
    The eigenvectors p of g^T g pair under J = I_{2,3} (J p is the eigenvector
    with reciprocal eigenvalue), so k_plus is assembled from the J-components
    of the top eigenvectors, which keeps it block-diagonal by construction.
    """
    g = np.asarray(g, dtype=float)
    mu = cartan_projection(g, tol)
    degraded = 1e-7

    if mu.mu1 <= degraded:
        # already compact: exp factor is the identity
        k_plus = _block_project(g)
        return KAKTriple(np.eye(5), ChamberPoint(0.0, 0.0), k_plus)

    # paired singular vectors of g (g p_i = sigma_i q_i, backward stable);
    # using them directly avoids both squaring the dynamic range and
    # re-multiplying vector errors by e^{mu_1}
    u_svd, _, vt = np.linalg.svd(g)
    v_svd = vt.T

    def signed_pair(p, q):
        s = _fix_sign(p)
        return (s, q) if float(np.dot(s, p)) > 0 else (s, -q)

    p1, q1 = signed_pair(v_svd[:, 0], u_svd[:, 0])
    if mu.mu2 > degraded:
        p2, q2 = signed_pair(v_svd[:, 1], u_svd[:, 1])
        p0, q0 = signed_pair(v_svd[:, 2], u_svd[:, 2])
    else:
        # singular value 1 has a 3-dimensional space; split it by J to
        # recover the (e2, f2) plane and the J-negative unit vector.  Since
        # g preserves the form, the same combination coefficients serve both
        # the right and the left cluster.
        v_cl, u_cl = v_svd[:, 1:4], u_svd[:, 1:4]
        _, ju = np.linalg.eigh(v_cl.T @ I23 @ v_cl)
        # eigenvalues of J restricted here are (-1, -1, +1)
        c2 = (ju[:, 2] + ju[:, 1]) / np.sqrt(2.0)
        p2, q2 = signed_pair(v_cl @ c2, u_cl @ c2)
        p0, q0 = signed_pair(v_cl @ ju[:, 0], u_cl @ ju[:, 0])

    def builder(w1, w2, w0):
        def plus_part(p):
            out = np.zeros(5)
            out[:2] = p[:2]
            return out

        def minus_part(p):
            out = np.zeros(5)
            out[2:] = p[2:]
            return out

        k = np.zeros((5, 5))
        k[:, 0] = np.sqrt(2.0) * plus_part(w1)
        k[:, 1] = np.sqrt(2.0) * plus_part(w2)
        k[:, 2] = np.sqrt(2.0) * minus_part(w2)
        k[:, 3] = np.sqrt(2.0) * minus_part(w1)
        k[:, 4] = w0
        return k

    # sign fixes are applied to (p, q) pairs: diag(1,-1,-1,1,1) and
    # diag(1,1,1,1,-1) both commute with exp(A(mu)), so the product survives
    if np.linalg.det(builder(p1, p2, p0)[:2, :2]) < 0:
        p2, q2 = -p2, -q2
    if np.linalg.det(builder(p1, p2, p0)[2:, 2:]) < 0:
        p0, q0 = -p0, -q0
    k_plus = _block_project(builder(p1, p2, p0).T)
    k_minus = _block_project(builder(q1, q2, q0))

    resid = np.abs(k_minus @ chamber_exp(mu) @ k_plus - g).max()
    # the smallest singular value of g is representable only to an absolute
    # eps * ||g||, so the symmetrized mu1 floats by ~ eps * exp(2 mu1); the
    # reconstruction check must allow that conditioning floor
    floor = 10.0 * np.finfo(float).eps * np.exp(2.0 * mu.mu1)
    if resid > max(1e-9, floor) * max(1.0, np.abs(g).max()):
        raise NumericalError(f"KAK reconstruction residual too large: {resid}")
    return KAKTriple(k_minus, mu, k_plus)


def simple_roots(mu: ChamberPoint | tuple[float, float]) -> tuple[float, float]:
    """Values (alpha1, alpha2) = (mu1 - mu2, mu2) of the simple roots."""
    mu1, mu2 = (mu.mu1, mu.mu2) if isinstance(mu, ChamberPoint) else mu
    return mu1 - mu2, mu2


@dataclass(frozen=True)
class WeightBasis:
    """Ordered basis (e1, e2, f2, f1, f3) with its weight-space data.

    ``vectors`` maps each label to its coordinate vector; change_of_basis is
    the matrix whose columns are those vectors (the identity: the package
    works in this basis throughout).  The chamber matrix A(mu) has weight
    vectors e_i + f_i (weight +mu_i), e_i - f_i (weight -mu_i) and f3
    (weight 0); the basis is orthonormal for I_{2,3} with the e's positive.
    """

    labels: tuple[str, ...]
    change_of_basis: np.ndarray

    @property
    def vectors(self) -> dict[str, np.ndarray]:
        return {lab: self.change_of_basis[:, i] for i, lab in enumerate(self.labels)}


def weight_basis() -> WeightBasis:
    return WeightBasis(("e1", "e2", "f2", "f1", "f3"), np.eye(5))


def random_compact(rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random element of SO(2) x SO(3) (block QR with det fix)."""
    k = np.zeros((5, 5))
    q2, _ = np.linalg.qr(rng.standard_normal((2, 2)))
    if np.linalg.det(q2) < 0:
        q2[:, 0] *= -1.0
    q3, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(q3) < 0:
        q3[:, 0] *= -1.0
    k[:2, :2] = q2
    k[2:, 2:] = q3
    return k


def random_group_element(
    rng: np.random.Generator, mu_max: float = 3.0
) -> tuple[np.ndarray, KAKTriple]:
    """Random g = k_minus exp(A(mu)) k_plus; the construction is the oracle."""
    mu1 = rng.uniform(0.0, mu_max)
    mu2 = rng.uniform(0.0, mu1)
    triple = KAKTriple(
        random_compact(rng), ChamberPoint(mu1, mu2), random_compact(rng)
    )
    return triple.compose(), triple
