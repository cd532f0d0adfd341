"""Energy-momentum tensors T(X) = X* DW(X) - W(X) I and related checks.

Besides the tensor itself this module provides the reduced tensor as a
function of Y = X*X (closed forms for every registered family), the
level-set inversions that exhibit non-injectivity, and the quantities that
decide whether a laminate of orthogonal wells also solves the
Euler-Lagrange equations.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import matcalc as mc
from .errors import (
    BadParam,
    ConformalCase,
    DomainViolation,
    NotInImage,
    NotOrthogonal,
    NotPositiveDefinite,
    NotPsd,
    SingularMatrix,
)
from .lagrangians import Lagrangian

TOL_ORTH = 1e-12
TOL_VERDICT = 1e-10


def em_tensor(L: Lagrangian, X) -> np.ndarray:
    A = L.check_domain(X)
    return A.T @ L.DW(A) - L.W(A) * np.eye(A.shape[0])


# ---------------------------------------------------------------------------
# reduced tensor
# ---------------------------------------------------------------------------

def _as_psd(Y, n: int) -> np.ndarray:
    S = mc.as_matrix(Y)
    if S.shape[0] != n:
        raise NotPsd(f"expected a {n}x{n} matrix, got {S.shape}")
    if mc.frob(S - S.T) > 1e-12 * max(1.0, mc.frob(S)):
        raise NotPsd("reduced argument must be symmetric")
    S = 0.5 * (S + S.T)
    if mc.sym_eig(S)[0][0] < -mc.TOL_PSD:
        raise NotPsd("reduced argument must be positive semidefinite")
    return S


def _reduced_dirichlet(Y, p):
    n = Y.shape[0]
    tr = float(np.trace(Y))
    if tr <= 0.0:
        return np.zeros((n, n))
    return p * tr ** ((p - 2) / 2) * Y - tr ** (p / 2) * np.eye(n)


def _reduced_qmean(Y, n, q):
    tr = float(np.trace(Y))
    Wt = (tr ** (n / 2) / np.sqrt(mc.det(Y))) ** q
    return Wt * (q * n * Y - (q + 1) * tr * np.eye(n)) / tr


def _reduced_inv_power(Y, p):
    n = Y.shape[0]
    Yi = mc.inv(Y)
    tr = float(np.trace(Y))
    tri = float(np.trace(Yi))
    return (
        p * tr ** ((p - 2) / 2) * Y
        - p * np.sqrt(mc.det(Y)) * tri ** ((p - 2) / 2) * Yi
        - tr ** (p / 2) * np.eye(n)
    )


def _reduced_ball(Y, p, q):
    n = Y.shape[0]
    I = np.eye(n)
    adjY = mc.adjugate(Y)
    tr = float(np.trace(Y))
    tra = float(np.trace(adjY))
    Wt = tr ** (p / 2) + tra ** (q / 2)
    return p * tr ** ((p - 2) / 2) * Y + q * tra ** ((q - 2) / 2) * (tra * I - adjY) - Wt * I


def _reduced_quartic(Y):
    s = float(np.trace(Y)) - 4.0
    return 4.0 * s * Y - s**2 * np.eye(Y.shape[0])


def _reduced_sigma(Y, sigma, d1, d2):
    t = float(np.trace(Y))
    d = mc.det(Y)
    return 2.0 * d1(t, d) * Y + 2.0 * d2(t, d) * d * np.eye(2) - sigma(t, d) * np.eye(2)


def reduced_em(L: Lagrangian, Y, method: str = "closed") -> np.ndarray:
    """Reduced tensor as a function of the Cauchy-Green matrix Y = X*X.

    ``method="closed"`` uses the per-family closed form; ``"generic"``
    evaluates the tensor at the symmetric square root of Y.  Both agree
    because T is constant on O(n)-orbits.
    """
    S = _as_psd(Y, L.n)
    if L.domain != "all" and np.sqrt(max(mc.det(S), 0.0)) <= mc.TOL_SING:
        raise SingularMatrix(f"{L.spec} needs det Y > 0")
    if method == "generic":
        return em_tensor(L, mc.sym_sqrt(S))
    if method != "closed":
        raise BadParam(f"unknown method {method!r}")
    P = L.params
    if L.name == "dirichlet":
        return _reduced_dirichlet(S, P["p"])
    if L.name == "qmean":
        return _reduced_qmean(S, P["n"], P["q"])
    if L.name == "inv_power":
        return _reduced_inv_power(S, P["p"])
    if L.name == "ball":
        return _reduced_ball(S, P["p"], P["q"])
    if L.name == "quartic_shell":
        return _reduced_quartic(S)
    if "sigma" in P:
        return _reduced_sigma(S, P["sigma"], P["d1sigma"], P["d2sigma"])
    return em_tensor(L, mc.sym_sqrt(S))


# ---------------------------------------------------------------------------
# invariance and symmetry
# ---------------------------------------------------------------------------

class InvarianceDefect(NamedTuple):
    em: float
    equivariance: float


def require_orthogonal(R) -> np.ndarray:
    Q = mc.as_matrix(R)
    if mc.frob(Q.T @ Q - np.eye(Q.shape[0])) > TOL_ORTH:
        raise NotOrthogonal("R*R differs from I by more than 1e-12")
    return Q


def check_invariance(L: Lagrangian, X, R) -> InvarianceDefect:
    """Defects |T(RX) - T(X)| and |DW(RX) - R DW(X)| for orthogonal R."""
    Q = require_orthogonal(R)
    A = L.check_domain(X)
    em = mc.frob(em_tensor(L, Q @ A) - em_tensor(L, A))
    eq = mc.frob(L.DW(Q @ A) - Q @ L.DW(A))
    return InvarianceDefect(em, eq)


def check_symmetry(L: Lagrangian, X) -> float:
    T = em_tensor(L, X)
    return mc.frob(T - T.T)


# ---------------------------------------------------------------------------
# level-set inversions
# ---------------------------------------------------------------------------

def invert_reduced_dirichlet(Z, p: float, n: int) -> np.ndarray:
    """Solve reduced_em(dirichlet_p, Y) = Z for Y when p != n.

    Taking traces gives tr(Y)^(p/2) = tr(Z)/(p - n), after which Y is an
    explicit affine function of Z.
    """
    M = mc.as_matrix(Z)
    if M.shape[0] != n:
        raise BadParam(f"Z must be {n}x{n}")
    if p == n:
        raise ConformalCase("p == n: the trace of the reduced tensor vanishes identically")
    if mc.frob(M - M.T) > 1e-12 * max(1.0, mc.frob(M)):
        raise NotInImage("reduced tensors are symmetric")
    s = float(np.trace(M)) / (p - n)
    if not s > 0:
        raise NotInImage(f"tr(Z)/(p-n) = {s:g} must be positive")
    Y = (M + s * np.eye(n)) / (p * s ** (1 - 2 / p))
    Y = 0.5 * (Y + Y.T)
    if mc.sym_eig(Y)[0][0] < -mc.TOL_PSD:
        raise NotInImage("preimage is not positive semidefinite")
    return Y


def conformal_family_dirichlet(c: float, t: float) -> np.ndarray:
    """Member Y = diag(t, t - c) of the family sharing the image diag(c, -c) (p = n = 2)."""
    if not (0 <= c <= t):
        raise BadParam(f"need t >= c >= 0, got c={c}, t={t}")
    return np.diag([float(t), float(t - c)])


def invert_reduced_qmean2d(Z, t: float) -> np.ndarray:
    """Member Y(t) = -2t Z^-1 of the preimage family for the distortion (n = 2, q = 1).

    The image of the reduced tensor is the set of symmetric negative
    definite Z with det Z = 4; every t > 0 gives a preimage.
    """
    M = mc.as_matrix(Z)
    if M.shape[0] != 2:
        raise BadParam("Z must be 2x2")
    if not t > 0:
        raise BadParam(f"t must be positive, got {t}")
    Y = -2.0 * t * mc.inv(M)
    if mc.frob(Y - Y.T) > 1e-12 * mc.frob(Y):
        raise NotInImage("Z is not symmetric")
    Y = 0.5 * (Y + Y.T)
    if mc.sym_eig(Y)[0][0] <= mc.TOL_PSD:
        raise NotInImage("-2t Z^-1 is not positive definite")
    if abs(mc.det(M) - 4.0) > 1e-10 * 4.0:
        raise NotInImage(f"det Z = {mc.det(M):g}, but every reduced tensor has det 4")
    return Y


# ---------------------------------------------------------------------------
# Euler-Lagrange obstruction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObstructionReport:
    """Sign pattern of xi -> <xi, DW(I) xi> over the unit sphere."""

    Q_min: float
    Q_max: float
    trace_cond: float
    dw_identity: np.ndarray
    verdict: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dw_identity"] = self.dw_identity.tolist()
        return d


def el_obstruction(L: Lagrangian) -> ObstructionReport:
    n = L.n
    I = np.eye(n)
    D = L.DW(I)
    w, _ = mc.sym_eig(0.5 * (D + D.T))
    qmin, qmax = float(w[0]), float(w[-1])
    trace_cond = float(np.trace(em_tensor(L, I)) + n * L.W(I))
    if max(abs(qmin), abs(qmax)) <= TOL_VERDICT:
        verdict = "EL_compatible_all_xi"
    elif qmin > TOL_VERDICT or qmax < -TOL_VERDICT:
        verdict = "EL_incompatible_all_xi"
    else:
        verdict = "mixed"
    return ObstructionReport(qmin, qmax, trace_cond, D, verdict)


def scaling_derivative(L: Lagrangian, t: float) -> float:
    """d/dt W(tI) = <DW(tI), I>."""
    return float(np.trace(L.DW(t * np.eye(L.n))))


def jump_vector(L: Lagrangian, A, B, xi) -> np.ndarray:
    """(DW(B) - DW(A)) xi, the normal traction jump across an A|B interface."""
    return (L.DW(B) - L.DW(A)) @ np.asarray(xi, dtype=float)


class CoercivityReport(NamedTuple):
    lambda1: float
    defect_sym: float
    min_ratio: float


def coercive_right_multiplier(A, samples: int = 100, seed: int = 42) -> CoercivityReport:
    """Check that X -> XA is symmetric and coercive with constant min eig(A).

    ``min_ratio`` is the smallest sampled <X, XA>/|X|^2, which must not fall
    below ``lambda1``.
    """
    M = mc.as_matrix(A)
    if mc.frob(M - M.T) > 1e-12 * max(1.0, mc.frob(M)):
        raise NotPositiveDefinite("A must be symmetric")
    lam1 = float(mc.sym_eig(M)[0][0])
    if lam1 <= 0:
        raise NotPositiveDefinite(f"minimum eigenvalue {lam1:g} is not positive")
    rng = np.random.default_rng(seed)
    n = M.shape[0]
    defect = 0.0
    ratio = np.inf
    for _ in range(samples):
        X = rng.standard_normal((n, n))
        Y = rng.standard_normal((n, n))
        defect = max(defect, abs(mc.inner(Y, X @ M) - mc.inner(Y @ M, X)))
        ratio = min(ratio, mc.inner(X, X @ M) / mc.inner(X, X))
    return CoercivityReport(lam1, defect, float(ratio))


# ---------------------------------------------------------------------------
# divergence identity for smooth maps
# ---------------------------------------------------------------------------

class PolynomialMap:
    """Planar polynomial map u = (u1, u2), each component {(i, j): c} for c x^i y^j."""

    def __init__(self, components: Sequence[dict]):
        if len(components) != 2:
            raise BadParam("PolynomialMap needs two components")
        self.components = [dict(c) for c in components]

    def value(self, x, y) -> np.ndarray:
        x, y = np.asarray(x, float), np.asarray(y, float)
        return np.stack([sum(c * x**i * y**j for (i, j), c in comp.items()) + 0 * x for comp in self.components])

    def jacobian(self, x, y) -> np.ndarray:
        """Array of shape (..., 2, 2) with rows grad u1, grad u2."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        J = np.zeros(x.shape + (2, 2))
        for r, comp in enumerate(self.components):
            for (i, j), c in comp.items():
                if i:
                    J[..., r, 0] += c * i * x ** (i - 1) * y**j
                if j:
                    J[..., r, 1] += c * j * x**i * y ** (j - 1)
        return J


def _tensor_fields(u: PolynomialMap, L: Lagrangian, xs: np.ndarray):
    X, Yg = np.meshgrid(xs, xs, indexing="ij")
    J = u.jacobian(X, Yg)
    shape = X.shape
    T = np.empty(shape + (2, 2))
    D = np.empty(shape + (2, 2))
    for idx in np.ndindex(shape):
        G = J[idx]
        if not L.in_domain(G):
            raise DomainViolation(f"Du at grid point {idx} is outside the domain of {L.spec}")
        D[idx] = L.DW(G)
        T[idx] = G.T @ D[idx] - L.W(G) * np.eye(2)
    return J, T, D


def _central_div(F: np.ndarray, h: float) -> np.ndarray:
    """Row-wise divergence at interior grid points by central differences."""
    dx = (F[2:, 1:-1, :, 0] - F[:-2, 1:-1, :, 0]) / (2 * h)
    dy = (F[1:-1, 2:, :, 1] - F[1:-1, :-2, :, 1]) / (2 * h)
    return dx + dy


def tel_identity_check(
    u: PolynomialMap, L: Lagrangian, h: float, box: tuple[float, float] = (0.0, 1.0)
) -> float:
    """Max over interior grid points of |Div T(Du) - Du* Div DW(Du)|.

    Both divergences use central differences of step ``h`` on the uniform
    grid of the square ``box`` x ``box``.
    """
    if L.n != 2:
        raise BadParam("the divergence check is planar")
    a, b = box
    N = int(round((b - a) / h))
    if N < 2 or abs(N * h - (b - a)) > 1e-12:
        raise BadParam(f"h={h} must divide the box side")
    xs = a + h * np.arange(N + 1)
    J, T, D = _tensor_fields(u, L, xs)
    lhs = _central_div(T, h)
    rhs = np.einsum("...ki,...k->...i", J[1:-1, 1:-1], _central_div(D, h))
    return float(np.max(np.linalg.norm(lhs - rhs, axis=-1)))


def tel_scale(u: PolynomialMap, L: Lagrangian, box: tuple[float, float] = (0.0, 1.0), N: int = 20) -> float:
    """Magnitude max |T(Du)| over a coarse grid, used to normalize defects."""
    xs = np.linspace(box[0], box[1], N + 1)
    _, T, _ = _tensor_fields(u, L, xs)
    return float(max(1.0, np.max(np.linalg.norm(T, axis=(-2, -1)))))


def tel_convergence(
    u: PolynomialMap, L: Lagrangian, hs: Sequence[float], box: tuple[float, float] = (0.0, 1.0)
) -> tuple[list[float], list[float]]:
    """Defects on successively refined grids and their consecutive ratios."""
    defects = [tel_identity_check(u, L, h, box) for h in hs]
    ratios = [defects[i] / defects[i + 1] for i in range(len(defects) - 1)]
    return defects, ratios


def em_tensor_spread(L: Lagrangian, wells: Sequence, ref: Optional[np.ndarray] = None) -> float:
    """max |T(W_i) - T(W_0)| over a list of matrices."""
    Ts = [em_tensor(L, W) for W in wells]
    base = Ts[0] if ref is None else ref
    return max(mc.frob(T - base) for T in Ts)
