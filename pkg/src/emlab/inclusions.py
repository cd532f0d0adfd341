"""The differential inclusion Du in O(n): laminates and finite-stage approximations.

Contents:

* rank-one connections and reflections,
* membership in the convex hull of O(2) (all singular values <= 1),
* two-well laminates as exact piecewise-affine maps,
* a depth-two rank-one splitting of any hull element into four orthogonal
  matrices, and a staircase of piecewise-affine maps with fixed affine
  boundary data whose gradients lie in O(2) outside a shrinking set,
* the well-ordering hypothesis for two diagonal gradients and scans of the
  one-parameter families on which the reduced tensor is not injective,
* a sampled rank-one convexity test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import matcalc as mc
from . import weakform as wf
from .emtensor import conformal_family_dirichlet, invert_reduced_qmean2d
from .errors import (
    BadParam,
    BadShape,
    InvalidConnection,
    NotUnit,
    OutsideHull,
    StageLimit,
)
from .lagrangians import Lagrangian

TOL_HULL = 1e-9
TOL_RANK = 1e-10
EPS_INCL = 1e-6
MAX_STAGES = 12
TOL_SLAB = 1e-9


# ---------------------------------------------------------------------------
# rank-one geometry
# ---------------------------------------------------------------------------

def _unit(xi) -> np.ndarray:
    v = np.asarray(xi, dtype=float).reshape(-1)
    if abs(float(np.linalg.norm(v)) - 1.0) > 1e-12:
        raise NotUnit(f"|xi| = {np.linalg.norm(v):.15g} is not 1")
    return v


def _sign_normalize(a: np.ndarray, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    for c in xi:
        if c != 0.0:
            if c < 0:
                return -a, -xi
            break
    return a, xi


@dataclass(frozen=True)
class RankOneConnection:
    """Two matrices with B - A = a (x) xi, |xi| = 1."""

    A: np.ndarray
    B: np.ndarray
    a: np.ndarray
    xi: np.ndarray

    def defect(self) -> float:
        return mc.frob(self.B - self.A - np.outer(self.a, self.xi))

    def validate(self) -> "RankOneConnection":
        scale = max(1.0, mc.frob(self.B - self.A))
        if abs(float(np.linalg.norm(self.xi)) - 1.0) > 1e-12 or self.defect() > 1e-12 * scale:
            raise InvalidConnection("B - A is not a (x) xi for the stored data")
        return self


def rank_one_reflection(xi) -> np.ndarray:
    """R = I - 2 xi (x) xi."""
    v = _unit(xi)
    return np.eye(len(v)) - 2.0 * np.outer(v, v)


def find_rank_one_connection(A, B) -> Optional[RankOneConnection]:
    """Write B - A = a (x) xi when B - A has rank at most one, else None."""
    A = mc.as_matrix(A)
    B = mc.as_matrix(B)
    D = B - A
    n = D.shape[0]
    nrm = mc.frob(D)
    if nrm == 0.0:
        return RankOneConnection(A, B, np.zeros(n), np.eye(n)[0])
    U, s, V = mc.svd(D)
    if s[1] > TOL_RANK * nrm:
        return None
    a, xi = _sign_normalize(s[0] * U[:, 0], V[:, 0].copy())
    return RankOneConnection(A, B, a, xi)


def hull_membership(X) -> str:
    """'interior', 'boundary' or 'outside' relative to the convex hull of O(n)."""
    s = mc.singular_values(X)
    if np.all(s < 1.0 - TOL_HULL):
        return "interior"
    if s[0] <= 1.0 + TOL_HULL:
        return "boundary"
    return "outside"


# ---------------------------------------------------------------------------
# laminates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaminateSpec:
    """Periodic two-phase laminate: fraction ``fraction`` of each period carries A."""

    conn: RankOneConnection
    fraction: float = 0.5
    layers: int = 8
    domain: wf.Rect = field(default_factory=wf.Rect)

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise BadParam(f"fraction must be in [0, 1], got {self.fraction}")
        if int(self.layers) != self.layers or self.layers < 1:
            raise BadParam(f"layers must be a positive integer, got {self.layers}")

    @classmethod
    def from_wells(cls, A, B, fraction: float = 0.5, layers: int = 8, domain: wf.Rect = wf.Rect()) -> "LaminateSpec":
        conn = find_rank_one_connection(A, B)
        if conn is None:
            raise InvalidConnection("the wells are not rank-one connected")
        return cls(conn, fraction, layers, domain)


def _line_edge_point(P: np.ndarray, Q: np.ndarray, sP: float, sQ: float, s: float) -> tuple[float, float]:
    t = (s - sP) / (sQ - sP)
    return (float(P[0] + t * (Q[0] - P[0])), float(P[1] + t * (Q[1] - P[1])))


def _slab_polygon(corners: np.ndarray, sc: np.ndarray, lo: float, hi: float) -> list[tuple[float, float]]:
    """Vertices of {lo <= <x, xi> <= hi} inside the rectangle, counter-clockwise.

    Points on an edge are computed from the edge in a fixed orientation so
    neighbouring slabs produce bit-identical shared vertices.
    """
    pts = []
    for i in range(4):
        j = (i + 1) % 4
        P, Q = corners[i], corners[j]
        sP, sQ = sc[i], sc[j]
        if lo <= sP <= hi:
            pts.append((float(P[0]), float(P[1])))
        # canonical edge orientation: from the lower-index corner
        e0, e1 = (i, j) if i < j else (j, i)
        cuts = []
        for s in (lo, hi):
            if min(sP, sQ) < s < max(sP, sQ):
                pt = _line_edge_point(corners[e0], corners[e1], sc[e0], sc[e1], s)
                t = (s - sP) / (sQ - sP)
                cuts.append((t, pt))
        for _, pt in sorted(cuts):
            pts.append(pt)
    return pts


def laminate_build(spec: LaminateSpec, name: Optional[str] = None) -> wf.PiecewiseAffineMap:
    """Exact laminate u(x) = A x + a f(<x, xi>) with f' the B-phase indicator.

    The range of <x, xi> over the domain is cut into ``layers`` periods;
    each period starts with an A layer of relative width ``fraction``.
    """
    conn = spec.conn.validate()
    if conn.A.shape != (2, 2):
        raise BadShape("laminates are built on planar domains")
    A, B, a, xi = conn.A, conn.B, conn.a, conn.xi
    corners = spec.domain.corners()
    sc = corners @ xi
    smin, smax = float(sc.min()), float(sc.max())
    N = int(spec.layers)
    P = (smax - smin) / N
    lam = float(spec.fraction)

    # breakpoints with the phase on the segment that follows each
    cuts = [(smin, "A" if lam > 0 else "B")]
    for k in range(N):
        base = smin + k * P
        if 0 < lam < 1:
            cuts.append((base + lam * P, "B"))
        if k + 1 < N:
            cuts.append((smin + (k + 1) * P, "A" if lam > 0 else "B"))
    cuts.append((smax, None))
    # drop slivers narrower than round-off, then merge equal-phase neighbours
    tol = TOL_SLAB * (smax - smin)
    kept = [c for c, nxt in zip(cuts[:-1], cuts[1:]) if nxt[0] - c[0] > tol]
    if not kept:
        kept = [cuts[0]]
    kept[0] = (smin, kept[0][1])
    kept.append(cuts[-1])
    merged = [kept[0]]
    for s, ph in kept[1:]:
        if ph is not None and ph == merged[-1][1]:
            continue
        merged.append((s, ph))
    breaks = [s for s, _ in merged]
    phases = [ph for _, ph in merged[:-1]]

    # f(s) = measure of B phase in [smin, s]
    cum = [0.0]
    for k, ph in enumerate(phases):
        cum.append(cum[-1] + (breaks[k + 1] - breaks[k] if ph == "B" else 0.0))

    def f(s: float) -> float:
        k = int(np.searchsorted(breaks, s, side="right")) - 1
        k = min(max(k, 0), len(phases) - 1)
        return cum[k] + (s - breaks[k] if phases[k] == "B" else 0.0)

    index: dict = {}
    verts: list = []
    cells: list = []
    grads: list = []
    for k, ph in enumerate(phases):
        poly = _slab_polygon(corners, sc, breaks[k], breaks[k + 1])
        ids = []
        for pt in poly:
            if pt not in index:
                index[pt] = len(verts)
                verts.append(pt)
            vid = index[pt]
            if not ids or ids[-1] != vid:
                ids.append(vid)
        if len(ids) > 1 and ids[0] == ids[-1]:
            ids.pop()
        if len(ids) < 3:
            continue
        start = k % 2 if len(ids) == 4 else 0
        ids = ids[start:] + ids[:start]
        G = A if ph == "A" else B
        for j in range(1, len(ids) - 1):
            cells.append((ids[0], ids[j], ids[j + 1]))
            grads.append(G)

    V = np.array(verts, dtype=float)
    vals = V @ A.T + np.outer([f(float(s)) for s in V @ xi], a)
    interfaces = []
    for k in range(1, len(phases)):
        below = A if phases[k - 1] == "A" else B
        above = A if phases[k] == "A" else B
        interfaces.append(wf.Interface(breaks[k], below, above))
    info = wf.LaminateInfo(A, B, a, xi, lam, N, tuple(interfaces))
    return wf.PiecewiseAffineMap(
        spec.domain, V, vals, np.array(cells), np.array(grads), laminate=info,
        name=name or f"laminate(layers={N},fraction={lam:g})",
    )


def phase_fraction(u: wf.PiecewiseAffineMap) -> float:
    """Area fraction of cells carrying the A well of a laminate."""
    if u.laminate is None:
        raise BadParam("not a laminate")
    A = u.laminate.A
    mask = np.all(np.isclose(u.grads, A[None], rtol=0, atol=0), axis=(1, 2))
    ar = u.areas()
    return float(ar[mask].sum() / ar.sum())


def continuity_defect(u: wf.PiecewiseAffineMap) -> float:
    """max over shared edges of the disagreement of the two affine pieces at the endpoints."""
    P = u.triangles()
    U = u.values[u.cells]
    edges: dict = {}
    worst = 0.0
    for c, tri in enumerate(u.cells):
        for i in range(3):
            p, q = int(tri[i]), int(tri[(i + 1) % 3])
            key = (min(p, q), max(p, q))
            if key in edges:
                c2 = edges[key]
                for v in key:
                    x = u.vertices[v]
                    v1 = U[c, 0] + u.grads[c] @ (x - P[c, 0])
                    v2 = U[c2, 0] + u.grads[c2] @ (x - P[c2, 0])
                    worst = max(worst, float(np.max(np.abs(v1 - v2))))
            else:
                edges[key] = c
    return worst


# ---------------------------------------------------------------------------
# convex hull of O(2)
# ---------------------------------------------------------------------------

SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class HullDecomposition:
    """Second-order laminate tree M -> M_pm -> U diag(+-1, +-1) V*."""

    M: np.ndarray
    U: np.ndarray
    s: np.ndarray
    V: np.ndarray
    weights: tuple
    leaves: tuple

    def first_level(self) -> list[tuple[float, np.ndarray]]:
        s1, s2 = self.s
        return [
            ((1 + sg) / 2, self.U @ np.diag([sg, s2]) @ self.V.T) for sg in (1.0, -1.0)
        ]

    def edges(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """(parent, child) pairs of the split tree."""
        out = []
        for k, (_, Mk) in enumerate(self.first_level()):
            out.append((self.M, Mk))
            for j in range(2):
                out.append((Mk, self.leaves[2 * k + j]))
        return out

    def reconstruct(self) -> np.ndarray:
        return sum(w * R for w, R in zip(self.weights, self.leaves))


def hull_decompose(M) -> HullDecomposition:
    """Weights and orthogonal leaves of a depth-two rank-one splitting of M."""
    X = mc.as_matrix(M)
    if X.shape != (2, 2):
        raise BadShape("hull decomposition is planar")
    if hull_membership(X) == "outside":
        raise OutsideHull(f"singular values {mc.singular_values(X)} exceed 1")
    U, s, V = mc.svd(X)
    sc = np.clip(s, 0.0, 1.0)
    weights = []
    leaves = []
    for e1, e2 in SIGNS:
        weights.append(((1 + e1 * sc[0]) / 2) * ((1 + e2 * sc[1]) / 2))
        leaves.append(U @ np.diag([float(e1), float(e2)]) @ V.T)
    return HullDecomposition(X, U, s, V, tuple(weights), tuple(leaves))


# ---------------------------------------------------------------------------
# staircase approximation with fixed affine boundary data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RefinementTrace:
    stage: int
    bad_measure: float
    linf_defect: float
    boundary_error: float

    def row(self) -> list:
        return [self.stage, self.bad_measure, self.linf_defect, self.boundary_error]


TRACE_HEADER = ["stage", "bad_measure", "linf_defect", "boundary_error"]


@dataclass
class StaircaseResult:
    map: wf.PiecewiseAffineMap
    trace: list
    rho: float
    C: float
    band_factor: int
    max_hull_excess: float


def _column_frame(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """M = U diag(s) with U orthogonal, for M with orthogonal columns."""
    cols = [M[:, 0], M[:, 1]]
    s = np.array([np.linalg.norm(c) for c in cols])
    G = M.T @ M
    if abs(G[0, 1]) > 1e-12 * max(1.0, float(np.max(np.abs(G)))):
        raise BadParam("staircase needs M with orthogonal columns (M* M diagonal)")
    u = [None, None]
    for i in range(2):
        if s[i] > 0:
            u[i] = cols[i] / s[i]
    if u[0] is None and u[1] is None:
        u = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    elif u[0] is None:
        u[0] = np.array([u[1][1], -u[1][0]])
    elif u[1] is None:
        u[1] = np.array([-u[0][1], u[0][0]])
    return np.column_stack(u), s


def _band_factor(s: np.ndarray) -> int:
    """Smallest c >= 1 keeping the transition-band shears strictly inside the hull."""
    for c in range(1, 1000):
        S1 = np.array([[s[0], (1 - s[0] ** 2) / (2 * c)], [0.0, s[1]]])
        S2 = np.array([[s[0], 0.0], [(1 - s[1] ** 2) / (2 * c), s[1]]])
        if mc.singular_values(S1)[0] < 1 - TOL_HULL and mc.singular_values(S2)[0] < 1 - TOL_HULL:
            return c
    raise BadParam("no admissible transition band")


def _axis_profile(L: float, s: float, w: float, delta: float, K: int):
    """Grid lines and the oscillation h(x) along one axis.

    Inside the core [delta, L - delta] the function s x + h(x) is a zigzag
    with slopes +1 then -1 on each period of width w; h vanishes at period
    nodes and outside the core.
    """
    lam = (1 + s) / 2
    N = K - 2 * int(round(delta / w))
    lines = [0.0, delta]
    hvals = [0.0, 0.0]
    H = lam * w * (1 - s)
    for k in range(N):
        base = delta + k * w
        if 0 < lam < 1:
            lines.append(base + lam * w)
            hvals.append(H)
        lines.append(delta + (k + 1) * w if k + 1 < N else L - delta)
        hvals.append(0.0)
    lines.append(L)
    hvals.append(0.0)
    return np.array(lines), np.array(hvals)


def _ramp(x: np.ndarray, L: float, delta: float) -> np.ndarray:
    return np.clip(np.minimum(x, L - x) / delta, 0.0, 1.0)


def staircase_stage(M, k: int, domain: wf.Rect = wf.Rect(), b=(0.0, 0.0), base: int = 4) -> tuple[wf.PiecewiseAffineMap, int]:
    """Stage-k map with boundary data u = M x + b.

    Stage 0 is the affine map.  Stage k >= 1 uses oscillation width
    L / ((base + 2c) 2^(k-1)) in each direction; the core carries a
    second-order laminate with gradients U diag(+-1, +-1) and a band of c
    periods along the boundary interpolates back to the affine data.
    """
    M = mc.as_matrix(M)
    b = np.asarray(b, dtype=float)
    if k == 0:
        return wf.affine_map(M, domain, b, name="staircase(stage=0)"), 1
    U, s = _column_frame(M)
    c = _band_factor(s)
    Lx, Ly = domain.lengths
    K = (base + 2 * c) * 2 ** (k - 1)
    wx, wy = Lx / K, Ly / K
    dx, dy = c * wx, c * wy
    xl, hx = _axis_profile(Lx, s[0], wx, dx, K)
    yl, hy = _axis_profile(Ly, s[1], wy, dy, K)
    nx, ny = len(xl), len(yl)
    XI, ETA = np.meshgrid(xl, yl, indexing="ij")
    HX = np.broadcast_to(hx[:, None], XI.shape)
    HY = np.broadcast_to(hy[None, :], XI.shape)
    c1 = HX * _ramp(ETA, Ly, dy)
    c2 = HY * _ramp(XI, Lx, dx)
    V = np.stack([domain.x0 + XI, domain.y0 + ETA], axis=-1).reshape(-1, 2)
    corr = np.stack([c1, c2], axis=-1).reshape(-1, 2)
    vals = V @ M.T + b + corr @ U.T
    # boundary vertices carry the affine data verbatim
    on_b = domain.on_boundary(V)
    vals[on_b] = V[on_b] @ M.T + b

    # split each grid rectangle along the diagonal through its largest correction
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    i, j = i.reshape(-1), j.reshape(-1)
    v00 = i * ny + j
    v10 = (i + 1) * ny + j
    v11 = (i + 1) * ny + j + 1
    v01 = i * ny + j + 1
    mag = np.abs(corr).max(axis=1)
    m00, m10, m11, m01 = mag[v00], mag[v10], mag[v11], mag[v01]
    main = np.maximum(m00, m11) >= np.maximum(m10, m01)
    t1 = np.where(main[:, None], np.stack([v00, v10, v11], 1), np.stack([v00, v10, v01], 1))
    t2 = np.where(main[:, None], np.stack([v00, v11, v01], 1), np.stack([v10, v11, v01], 1))
    cells = np.empty((2 * len(v00), 3), dtype=np.int64)
    cells[0::2] = t1
    cells[1::2] = t2
    grads = wf.gradients_from_vertices(V, vals, cells)
    u = wf.PiecewiseAffineMap(domain, V, vals, cells, grads, name=f"staircase(stage={k})")
    return u, c


def staircase_refine(
    M, stages: int, domain: wf.Rect = wf.Rect(), b=(0.0, 0.0), eps: float = EPS_INCL
) -> StaircaseResult:
    """Stages 0..k of piecewise-affine maps with boundary data M x + b.

    Each stage records the area where dist(Du, O(2)) exceeds ``eps``, the
    largest such distance and the boundary mismatch.  ``rho`` is the largest
    measured ratio of consecutive bad measures and ``C`` the smallest
    constant with bad(k) <= C rho^k.
    """
    X = mc.as_matrix(M)
    if X.shape != (2, 2):
        raise BadShape("staircase is planar")
    if int(stages) != stages or stages < 0:
        raise BadParam(f"stages must be a non-negative integer, got {stages}")
    if stages > MAX_STAGES:
        raise StageLimit(f"at most {MAX_STAGES} stages are supported, got {stages}")
    sv = mc.singular_values(X)
    in_group = bool(np.all(np.abs(sv - 1.0) <= TOL_HULL))
    status = hull_membership(X)
    if status == "outside" or (status == "boundary" and not in_group):
        raise OutsideHull(f"M must lie in the interior of the hull (singular values {sv})")
    b = np.asarray(b, dtype=float)

    trace = []
    u = None
    c = 1
    excess = 0.0
    for k in range(stages + 1):
        if in_group:
            u, c = staircase_stage(X, 0, domain, b)
            u.name = f"staircase(stage={k})"
        else:
            u, c = staircase_stage(X, k, domain, b)
        dist = wf.gradient_distance_field(u)
        area = u.areas()
        bad = float(area[dist > eps].sum() / area.sum())
        bv, bu = u.boundary_values()
        berr = float(np.max(np.abs(bu - (bv @ X.T + b)))) if len(bv) else 0.0
        excess = max(excess, float(np.max(wf.singular_values_field(u)[:, 0])) - 1.0)
        trace.append(RefinementTrace(k, bad, float(dist.max()), berr))

    bads = [t.bad_measure for t in trace]
    ratios = [bads[i + 1] / bads[i] for i in range(len(bads) - 1) if bads[i] > 0]
    rho = max(ratios) if ratios else 0.0
    if rho > 0:
        C = max(bd / rho**i for i, bd in enumerate(bads))
    else:
        C = bads[0]
    return StaircaseResult(u, trace, float(rho), float(C), c, excess)


# ---------------------------------------------------------------------------
# well-ordering hypothesis and non-injectivity families
# ---------------------------------------------------------------------------

def diagonal_well_ordering(A, B) -> bool:
    """0 < b1 < a1 <= a2 < b2 and det A <= det B for diagonal A, B (entries sorted)."""
    A = mc.as_matrix(A)
    B = mc.as_matrix(B)
    for X in (A, B):
        if X.shape != (2, 2) or X[0, 1] != 0.0 or X[1, 0] != 0.0:
            raise BadShape("the hypothesis is stated for diagonal 2x2 matrices")
    a1, a2 = sorted(np.diag(A))
    b1, b2 = sorted(np.diag(B))
    return bool(0 < b1 < a1 <= a2 < b2 and a1 * a2 <= b1 * b2)


def _grid(lo: float, hi: float, step: float) -> list[float]:
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 12) for i in range(n + 1)]


DEFAULT_GRIDS = {
    "dirichlet_conformal": (1.0, 3.0, 0.1),
    "qmean": (0.5, 4.0, 0.5),
    "inv_power_scalar": (0.5, 4.0, 0.5),
}

FAMILY_ALIASES = {
    "dirichlet_conformal": "dirichlet_conformal",
    "dirichlet-conformal": "dirichlet_conformal",
    "qmean": "qmean",
    "inv_power_scalar": "inv_power_scalar",
    "inv-power-scalar": "inv_power_scalar",
    "inv_power": "inv_power_scalar",
}


def _diag_sqrt(Y: np.ndarray) -> np.ndarray:
    w, _ = mc.sym_eig(Y)
    return np.diag(np.sqrt(np.clip(w, 0.0, None)))


def family_member(family: str, t: float, c: float = 1.0, Z=None) -> np.ndarray:
    """Diagonalized square root of the family member Y(t)."""
    if family == "dirichlet_conformal":
        return _diag_sqrt(conformal_family_dirichlet(c, t))
    if family == "qmean":
        Zm = -2.0 * np.eye(2) if Z is None else np.asarray(Z, dtype=float)
        return _diag_sqrt(invert_reduced_qmean2d(Zm, t))
    if family == "inv_power_scalar":
        if not t > 0:
            raise BadParam("alpha must be positive")
        return _diag_sqrt((t * t) * np.eye(2))
    raise BadParam(f"unknown family {family!r}")


def scan_noninjectivity_families(
    family: str, grid: Optional[Sequence[float]] = None, c: float = 1.0, Z=None
) -> list[tuple[float, float]]:
    """Ordered pairs (t1, t2) for which the well-ordering hypothesis holds with A = A(t1), B = A(t2)."""
    fam = FAMILY_ALIASES.get(family)
    if fam is None:
        raise BadParam(f"unknown family {family!r}")
    if fam == "dirichlet_conformal" and c < 0:
        raise BadParam("c must be non-negative")
    ts = list(grid) if grid is not None else _grid(*DEFAULT_GRIDS[fam])
    mats = [family_member(fam, t, c, Z) for t in ts]
    hits = []
    for i, t1 in enumerate(ts):
        for j, t2 in enumerate(ts):
            if i != j and diagonal_well_ordering(mats[i], mats[j]):
                hits.append((t1, t2))
    return hits


# ---------------------------------------------------------------------------
# rank-one convexity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RankOneReport:
    passed: bool
    checked: int
    witness: Optional[dict]


def rank_one_convexity_sample(
    L: Lagrangian, samples: int = 10000, seed: int = 42, delta: float = 0.1, spread: float = 1.0
) -> RankOneReport:
    """Sample second differences of t -> W(X + t u (x) v) and report the first negative one."""
    if samples < 1:
        raise BadParam("samples must be >= 1")
    rng = np.random.default_rng(seed)
    n = L.n
    checked = 0
    for _ in range(samples):
        X = rng.uniform(-spread, spread, size=(n, n))
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        t = rng.uniform(-spread, spread)
        R = np.outer(u, v)
        pts = [X + (t - delta) * R, X + t * R, X + (t + delta) * R]
        if not all(L.in_domain(P) for P in pts):
            continue
        f = [L.W(P) for P in pts]
        checked += 1
        d2 = f[0] - 2.0 * f[1] + f[2]
        scale = 1.0 + abs(f[0]) + 2.0 * abs(f[1]) + abs(f[2])
        if d2 < -1e-10 * scale:
            witness = {"X": X.tolist(), "u": u.tolist(), "v": v.tolist(), "t": t, "delta": delta, "second_difference": d2}
            return RankOneReport(False, checked, witness)
    return RankOneReport(True, checked, None)


def second_difference(L: Lagrangian, X, u, v, t: float, delta: float) -> float:
    R = np.outer(u, v)
    X = np.asarray(X, dtype=float)
    return L.W(X + (t - delta) * R) - 2.0 * L.W(X + t * R) + L.W(X + (t + delta) * R)
