"""Dense real matrix algebra: Jacobi eigensolver, joint diagonalization,
spectral norms, and the closed-form 2x2 Schur test.

Everything here works on plain numpy arrays and is pure; dimensions stay
small (a few hundred at most), so a cyclic Jacobi sweep is both fast enough
and bit-reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYM_TOL = 1e-10


class NotSymmetricError(ValueError):
    """Input matrix is not symmetric within tolerance."""


class NotCommutingError(ValueError):
    """Matrix pair does not commute within tolerance."""


class NegativeEntryError(ValueError):
    """A nonnegative matrix was required but a negative entry was found."""


def _as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def kron(a, b) -> np.ndarray:
    """Kronecker product of two dense matrices."""
    return np.kron(_as_matrix(a), _as_matrix(b))


@dataclass(frozen=True)
class SymEigResult:
    """Orthogonal eigendecomposition S = V diag(values) V^T.

    values are ascending; column i of vectors pairs with values[i].
    """

    values: np.ndarray
    vectors: np.ndarray


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations on a symmetric matrix.

    Deterministic sweep order (row-major over the upper triangle); returns
    (diagonal, accumulated rotation V) with a = V diag V^T.
    """
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    if n == 1:
        return np.array([a[0, 0]]), v
    scale = np.linalg.norm(a) or 1.0
    for _ in range(100):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= 1e-15 * scale:
            break
        thresh = max(off / (n * n), 1e-300)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < thresh * 1e-2:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) if theta != 0 else 1.0
                t = t / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v


def sym_eig(s, tol: float = SYM_TOL) -> SymEigResult:
    """Eigendecomposition of a symmetric matrix via cyclic Jacobi sweeps.

    Raises NotSymmetricError if the asymmetry exceeds ``tol`` (relative to
    the magnitude of the matrix).
    """
    s = _as_matrix(s)
    if s.shape[0] != s.shape[1]:
        raise ValueError("sym_eig needs a square matrix")
    scale = max(1.0, float(np.max(np.abs(s))))
    asym = float(np.max(np.abs(s - s.T)))
    if asym > tol * scale:
        raise NotSymmetricError(f"asymmetry {asym:.3e} exceeds tolerance {tol:.1e}")
    s = 0.5 * (s + s.T)
    vals, vecs = _jacobi(s)
    order = np.argsort(vals, kind="stable")
    return SymEigResult(values=vals[order], vectors=vecs[:, order])


def induced_norm2(m) -> float:
    """Spectral norm: sqrt of the largest eigenvalue of M^T M."""
    m = _as_matrix(m)
    gram = m.T @ m
    vals = sym_eig(0.5 * (gram + gram.T)).values
    return float(np.sqrt(max(vals[-1], 0.0)))


def commute_defect(p1, p2) -> float:
    """Spectral norm of the commutator P1 P2 - P2 P1."""
    p1 = _as_matrix(p1)
    p2 = _as_matrix(p2)
    if p1.shape != p2.shape or p1.shape[0] != p1.shape[1]:
        raise ValueError("commute_defect needs two square matrices of equal size")
    return induced_norm2(p1 @ p2 - p2 @ p1)


def default_commute_tol(p1, p2) -> float:
    """Commutation tolerance relative to the product of the two norms."""
    scale = induced_norm2(p1) * induced_norm2(p2)
    return 1e-8 * max(scale, 1.0)


@dataclass(frozen=True)
class SimDiagResult:
    """Joint diagonalization U^T P_j U = diag(lambda_j), j = 1, 2.

    Columns are ordered ascending by lambda1, ties broken ascending by
    lambda2. ``theta`` records the randomized-combination fallback weight
    when the deterministic two-stage method did not reach tolerance.
    """

    u: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    theta: float | None = None


def _offdiag_norm(m: np.ndarray) -> float:
    return induced_norm2(m - np.diag(np.diag(m)))


def simultaneous_diagonalize(p1, p2, tol: float | None = None) -> SimDiagResult:
    """Orthogonal basis diagonalizing a commuting symmetric pair.

    Two-stage method: diagonalize P1, then diagonalize the restriction of
    P2 inside each eigenspace of P1. Falls back to diagonalizing
    P1 + theta P2 for a randomized theta only if the residual is too large.
    """
    p1 = _as_matrix(p1)
    p2 = _as_matrix(p2)
    if tol is None:
        tol = default_commute_tol(p1, p2)
    defect = commute_defect(p1, p2)
    if defect > tol:
        raise NotCommutingError(f"commutation defect {defect:.3e} exceeds {tol:.1e}")

    eig1 = sym_eig(p1)
    u = eig1.vectors.copy()
    lam1 = eig1.values.copy()
    scale1 = max(1.0, float(np.max(np.abs(lam1))))
    # group eigenvalues of P1 into (near-)degenerate clusters
    start = 0
    n = len(lam1)
    for i in range(1, n + 1):
        if i == n or lam1[i] - lam1[i - 1] > 1e-8 * scale1:
            if i - start > 1:
                block = u[:, start:i]
                restriction = block.T @ p2 @ block
                sub = sym_eig(0.5 * (restriction + restriction.T))
                u[:, start:i] = block @ sub.vectors
            start = i

    theta = None
    if max(_offdiag_norm(u.T @ p1 @ u), _offdiag_norm(u.T @ p2 @ u)) > tol:
        rng = np.random.default_rng(0)
        for _ in range(8):
            theta = float(rng.uniform(0.25, 4.0))
            mix = sym_eig(p1 + theta * p2)
            u = mix.vectors
            if max(_offdiag_norm(u.T @ p1 @ u), _offdiag_norm(u.T @ p2 @ u)) <= tol:
                break
        else:
            raise NotCommutingError("joint diagonalization residual above tolerance")

    lam1 = np.diag(u.T @ p1 @ u).copy()
    lam2 = np.diag(u.T @ p2 @ u).copy()
    order = np.lexsort((lam2, lam1))
    return SimDiagResult(u=u[:, order], lambda1=lam1[order], lambda2=lam2[order],
                         theta=theta)


def schur_2x2_nonneg(m) -> tuple[bool, float]:
    """Closed-form Schur test for a nonnegative 2x2 matrix.

    Nonnegative 2x2 matrices have real eigenvalues; the spectral radius is
    (trace + sqrt(trace^2 - 4 det)) / 2.
    """
    m = _as_matrix(m)
    if m.shape != (2, 2):
        raise ValueError("schur_2x2_nonneg needs a 2x2 matrix")
    if np.any(m < 0):
        raise NegativeEntryError("matrix must be entrywise nonnegative")
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr - 4.0 * det
    radius = 0.5 * (tr + np.sqrt(max(disc, 0.0)))
    return bool(radius < 1.0), float(radius)
