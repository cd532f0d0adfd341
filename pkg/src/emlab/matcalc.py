"""Small dense matrix algebra for 2x2 and 3x3 real matrices.

Matrices are plain ``numpy`` float arrays of shape ``(n, n)`` with ``n`` in
``{2, 3}``.  Besides the basic algebra (determinant, adjugate, inverse,
Frobenius inner product) the module hosts closed-form gradients of the
matrix functions used by the energy densities, and a central-difference
gradient that serves as the independent oracle for all of them.

Symmetric eigenproblems and the SVD are computed with Jacobi rotations
instead of LAPACK so results are reproducible bit for bit across
platforms.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BadGrade, BadShape, NotPsd, SingularMatrix

TOL_SING = 1e-10
TOL_PSD = 1e-10
FD_STEP = 1e-5

_JACOBI_SWEEPS = 60


def as_matrix(X) -> np.ndarray:
    """Validate and convert ``X`` to a float ``(n, n)`` array, n in {2, 3}."""
    A = np.array(X, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] not in (2, 3):
        raise BadShape(f"expected a 2x2 or 3x3 matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise BadShape("matrix entries must be finite")
    return A


def frob(X) -> float:
    return float(np.sqrt(np.sum(np.asarray(X) ** 2)))


def inner(X, Y) -> float:
    """Frobenius inner product tr(X* Y)."""
    return float(np.sum(np.asarray(X) * np.asarray(Y)))


def outer(a, b) -> np.ndarray:
    return np.outer(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def _det_small(A: np.ndarray) -> float:
    k = A.shape[0]
    if k == 0:
        return 1.0
    if k == 1:
        return float(A[0, 0])
    if k == 2:
        return float(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
    if k == 3:
        return float(
            A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
            - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
            + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0])
        )
    raise BadShape(f"minor of size {k} not supported")


def det(X) -> float:
    return _det_small(as_matrix(X))


def adjugate(X) -> np.ndarray:
    """Transpose of the cofactor matrix, so that adj(X) @ X == det(X) I."""
    A = as_matrix(X)
    n = A.shape[0]
    if n == 2:
        return np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]])
    cof = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            rows = [r for r in range(3) if r != i]
            cols = [c for c in range(3) if c != j]
            cof[i, j] = (-1) ** (i + j) * _det_small(A[np.ix_(rows, cols)])
    return cof.T


def require_nonsingular(X, tol: float = TOL_SING) -> float:
    d = det(X)
    if abs(d) <= tol:
        raise SingularMatrix(f"|det X| = {abs(d):.3e} <= {tol:g}")
    return d


def inv(X) -> np.ndarray:
    d = require_nonsingular(X)
    return adjugate(X) / d


# ---------------------------------------------------------------------------
# gradients of matrix functions
# ---------------------------------------------------------------------------

def grad_det(X) -> np.ndarray:
    """Gradient of det at X, i.e. adj(X)*; valid for singular X too."""
    return adjugate(X).T


def grad_inv_norm(X, p: float) -> np.ndarray:
    """Gradient of |X^-1|^p: -p |X^-1|^(p-2) X^-* X^-1 X^-*."""
    if p < 1:
        raise ValueError("p must be >= 1")
    Xi = inv(X)
    nrm2 = float(np.sum(Xi * Xi))
    return -p * nrm2 ** ((p - 2) / 2) * (Xi.T @ Xi @ Xi.T)


def grad_adj_norm_sq(X) -> np.ndarray:
    """Gradient of |adj X|^2 for nonsingular X."""
    A = as_matrix(X)
    d = require_nonsingular(A)
    adj = adjugate(A)
    adj_n2 = float(np.sum(adj * adj))
    return (-2.0 / d) * adjugate(A.T @ A @ A.T) + (2.0 / d) * adj_n2 * adj.T


@dataclass(frozen=True)
class CompositeGradient:
    """DW of a composite density together with the pulled-back X* DW."""

    dw: np.ndarray
    pulled_back: np.ndarray


def grad_composite(X, which: str, dphi: Callable[[float], float]) -> CompositeGradient:
    """Gradients of W = phi(tr X*X), phi(|adj X|^2) or phi(det X*X).

    ``which`` selects the inner invariant (``"trace_power"``, ``"adj_power"``
    or ``"det_power"``) and ``dphi`` is the derivative of the outer scalar
    function.
    """
    A = as_matrix(X)
    n = A.shape[0]
    I = np.eye(n)
    Y = A.T @ A
    if which == "trace_power":
        g = dphi(float(np.trace(Y)))
        return CompositeGradient(2.0 * g * A, 2.0 * g * Y)
    if which == "adj_power":
        adj = adjugate(A)
        s = float(np.sum(adj * adj))
        g = dphi(s)
        dw = g * grad_adj_norm_sq(A)
        return CompositeGradient(dw, 2.0 * g * (-adjugate(Y) + s * I))
    if which == "det_power":
        dY = _det_small(Y)
        if abs(det(A)) <= TOL_SING:
            raise SingularMatrix("det branch needs det X != 0")
        g = dphi(dY)
        return CompositeGradient(2.0 * g * (A @ adjugate(Y)), 2.0 * g * dY * I)
    raise ValueError(f"unknown composite branch {which!r}")


def fd_gradient(W: Callable[[np.ndarray], float], X, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar matrix function."""
    A = np.array(X, dtype=float)
    G = np.empty_like(A)
    for idx in np.ndindex(A.shape):
        E = np.zeros_like(A)
        E[idx] = h
        G[idx] = (W(A + E) - W(A - E)) / (2.0 * h)
    return G


# ---------------------------------------------------------------------------
# Jacobi eigen / singular value decompositions
# ---------------------------------------------------------------------------

def _rotation(app: float, aqq: float, apq: float) -> tuple[float, float]:
    """Jacobi rotation (c, s) that annihilates apq in a symmetric 2x2 block."""
    if apq == 0.0:
        return 1.0, 0.0
    theta = (aqq - app) / (2.0 * apq)
    t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(1.0, theta))
    c = 1.0 / np.hypot(1.0, t)
    return c, c * t


def sym_eig(Y) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of symmetric Y.

    A single rotation diagonalizes the 2x2 case exactly; 3x3 uses cyclic
    Jacobi sweeps.
    """
    A = as_matrix(Y)
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(_JACOBI_SWEEPS):
        off = sum(A[p, q] ** 2 for p in range(n) for q in range(p + 1, n))
        if off <= 1e-300 or off <= (1e-17 * np.sum(A * A)) ** 2:
            break
        for p, q in itertools.combinations(range(n), 2):
            if A[p, q] == 0.0:
                continue
            c, s = _rotation(A[p, p], A[q, q], A[p, q])
            J = np.eye(n)
            J[p, p] = c
            J[q, q] = c
            J[p, q] = s
            J[q, p] = -s
            A = J.T @ A @ J
            A[p, q] = A[q, p] = 0.0
            V = V @ J
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def _complete_basis(cols: list[np.ndarray], n: int) -> list[np.ndarray]:
    basis = list(cols)
    while len(basis) < n:
        # the coordinate axis least aligned with the span cancels least
        overlap = np.sum(np.array(basis) ** 2, axis=0) if basis else np.zeros(n)
        v = np.eye(n)[int(np.argmin(overlap))]
        for _ in range(2):
            for b in basis:
                v = v - np.dot(b, v) * b
        basis.append(v / np.linalg.norm(v))
    return basis


def svd(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-sided Jacobi SVD: X = U @ diag(s) @ V.T, s descending.

    One-sided rotations keep small singular values accurate to high
    relative precision, which the rank-one tests rely on.
    """
    A = as_matrix(X).copy()
    n = A.shape[0]
    # unit max entry keeps squared column norms clear of underflow and overflow
    amax = float(np.max(np.abs(A)))
    if amax > 0:
        A /= amax
    V = np.eye(n)
    for _ in range(_JACOBI_SWEEPS):
        rotated = False
        for p, q in itertools.combinations(range(n), 2):
            alpha = float(A[:, p] @ A[:, p])
            beta = float(A[:, q] @ A[:, q])
            gamma = float(A[:, p] @ A[:, q])
            if gamma == 0.0 or abs(gamma) <= 1e-16 * np.sqrt(alpha * beta):
                continue
            rotated = True
            c, s = _rotation(alpha, beta, gamma)
            ap, aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * ap - s * aq
            A[:, q] = s * ap + c * aq
            vp, vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * vp - s * vq
            V[:, q] = s * vp + c * vq
        if not rotated:
            break
    sv = np.sqrt(np.sum(A * A, axis=0))
    order = np.argsort(-sv, kind="stable")
    sv = sv[order]
    A = A[:, order]
    V = V[:, order]
    scale = sv[0] if sv[0] > 0 else 1.0
    cols = []
    for i in range(n):
        if sv[i] > 1e-14 * scale:
            cols.append(A[:, i] / sv[i])
        else:
            break
    cols = _complete_basis(cols, n)
    U = np.column_stack(cols)
    return U, sv * amax, V


def singular_values(X) -> np.ndarray:
    return svd(X)[1]


def sym_sqrt(Y, tol_psd: float = TOL_PSD) -> np.ndarray:
    """Unique positive semidefinite square root of a symmetric PSD matrix."""
    A = as_matrix(Y)
    scale = max(1.0, frob(A))
    if frob(A - A.T) > 1e-12 * scale:
        raise NotPsd("matrix is not symmetric")
    w, V = sym_eig(A)
    if w[0] < -tol_psd:
        raise NotPsd(f"minimum eigenvalue {w[0]:.3e} < -{tol_psd:g}")
    S = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return 0.5 * (S + S.T)


def polar_factor(X) -> tuple[np.ndarray, np.ndarray]:
    """Left polar factorization X = R @ S with R orthogonal, S = sqrt(X* X)."""
    A = as_matrix(X)
    require_nonsingular(A)
    U, sv, V = svd(A)
    R = U @ V.T
    S = (V * sv) @ V.T
    return R, 0.5 * (S + S.T)


def random_orthogonal(rng: np.random.Generator, n: int, det_sign: Optional[int] = None) -> np.ndarray:
    """Random orthogonal matrix via Gram-Schmidt of a Gaussian matrix."""
    while True:
        G = rng.standard_normal((n, n))
        if abs(_det_small(G)) > 1e-3:
            break
    Q = np.zeros((n, n))
    for j in range(n):
        v = G[:, j].copy()
        # two passes of modified Gram-Schmidt keep orthogonality at round-off
        for _ in range(2):
            for k in range(j):
                v -= (Q[:, k] @ v) * Q[:, k]
        Q[:, j] = v / np.linalg.norm(v)
    if det_sign is not None and np.sign(_det_small(Q)) != np.sign(det_sign):
        Q[:, 0] = -Q[:, 0]
    return Q


def random_matrix(
    rng: np.random.Generator,
    n: int,
    min_abs_det: float = 0.2,
    max_norm: float = 3.0,
    spread: float = 1.5,
) -> np.ndarray:
    """Rejection-sample X with |det X| >= min_abs_det and |X| <= max_norm."""
    while True:
        X = rng.uniform(-spread, spread, size=(n, n))
        if abs(_det_small(X)) >= min_abs_det and frob(X) <= max_norm:
            return X


# ---------------------------------------------------------------------------
# exterior powers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExteriorPower:
    """Matrix of k-minors of an n x n matrix in lexicographic index order."""

    k: int
    n: int
    entries: np.ndarray

    @property
    def index(self) -> list[tuple[int, ...]]:
        return list(itertools.combinations(range(self.n), self.k))


def exterior_power(X, k: int) -> ExteriorPower:
    A = as_matrix(X)
    n = A.shape[0]
    if not (isinstance(k, (int, np.integer)) and 0 <= k <= n):
        raise BadGrade(f"grade must be an integer in [0, {n}], got {k!r}")
    idx = list(itertools.combinations(range(n), k))
    E = np.empty((len(idx), len(idx)))
    for a, rows in enumerate(idx):
        for b, cols in enumerate(idx):
            E[a, b] = _det_small(A[np.ix_(rows, cols)]) if k else 1.0
    return ExteriorPower(k=int(k), n=n, entries=E)
