"""Piecewise-affine maps, polynomial bump test fields and weak residuals.

For a map u that is affine on each triangle, any tensor field C(Du) is
constant per cell, so

    integral <C(Du), D lambda> = sum_c <C_c, integral_c D lambda>.

With lambda = e * phi the cell integral is e (x) integral_c grad phi, a
polynomial integral that Gauss quadrature on the clipped triangle computes
exactly.  This turns the weak Euler-Lagrange and energy-momentum equations
into finite sums that can be checked to round-off.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import _kernels
from . import matcalc as mc
from .errors import BoxOutsideDomain, DomainViolation, NotALaminate
from .lagrangians import Lagrangian


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [x0, x1] x [y0, y1]."""

    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0

    @property
    def lengths(self) -> tuple[float, float]:
        return self.x1 - self.x0, self.y1 - self.y0

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def corners(self) -> np.ndarray:
        """Counter-clockwise corners starting at (x0, y0)."""
        return np.array([[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]])

    def strictly_contains(self, other: "Rect") -> bool:
        return self.x0 < other.x0 and other.x1 < self.x1 and self.y0 < other.y0 and other.y1 < self.y1

    def on_boundary(self, pts: np.ndarray, tol: float = 0.0) -> np.ndarray:
        x, y = pts[:, 0], pts[:, 1]
        return (
            (np.abs(x - self.x0) <= tol)
            | (np.abs(x - self.x1) <= tol)
            | (np.abs(y - self.y0) <= tol)
            | (np.abs(y - self.y1) <= tol)
        )


@dataclass(frozen=True)
class Interface:
    """Line {x : <x, xi> = s} separating gradient ``below`` (<x,xi> < s) from ``above``."""

    s: float
    below: np.ndarray
    above: np.ndarray


@dataclass(frozen=True)
class LaminateInfo:
    A: np.ndarray
    B: np.ndarray
    a: np.ndarray
    xi: np.ndarray
    fraction: float
    layers: int
    interfaces: tuple


@dataclass
class PiecewiseAffineMap:
    """Continuous map, affine on each triangle of a mesh of a rectangle.

    Vertex values are stored once, so continuity across shared edges holds
    by construction.  ``grads`` holds the per-cell gradient, row i being
    the gradient of component i.
    """

    domain: Rect
    vertices: np.ndarray
    values: np.ndarray
    cells: np.ndarray
    grads: np.ndarray
    laminate: Optional[LaminateInfo] = None
    name: str = "map"

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.cells = np.asarray(self.cells, dtype=np.int64)
        self.grads = np.asarray(self.grads, dtype=float)
        if not np.all(np.isfinite(self.grads)):
            raise ValueError("cell gradients must be finite")

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def triangles(self) -> np.ndarray:
        """Cell vertex coordinates, shape (cells, 3, 2)."""
        return self.vertices[self.cells]

    def areas(self) -> np.ndarray:
        P = self.triangles()
        e1 = P[:, 1] - P[:, 0]
        e2 = P[:, 2] - P[:, 0]
        return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def vertex_gradients(self) -> np.ndarray:
        """Per-cell gradients recomputed from vertex values."""
        return gradients_from_vertices(self.vertices, self.values, self.cells)

    def gradient_consistency(self) -> float:
        """max |stored gradient - gradient from vertex values|, relative to max |Du|."""
        G = self.vertex_gradients()
        scale = max(1.0, float(np.max(np.abs(self.grads))))
        return float(np.max(np.abs(G - self.grads))) / scale

    def average_gradient(self) -> np.ndarray:
        a = self.areas()
        return np.einsum("c,cij->ij", a, self.grads) / a.sum()

    def distinct_gradients(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique gradients and the per-cell index into them."""
        flat = self.grads.reshape(len(self.grads), -1)
        uniq, inv = np.unique(flat, axis=0, return_inverse=True)
        return uniq.reshape(-1, 2, 2), inv.reshape(-1)

    def cell_tensor(self, L: Lagrangian, which: str) -> np.ndarray:
        """T(Du) or DW(Du) per cell (``which`` in {"T", "DW"})."""
        uniq, inv = self.distinct_gradients()
        vals = np.empty_like(uniq)
        for k, G in enumerate(uniq):
            if not L.in_domain(G):
                raise DomainViolation(f"cell gradient {G.tolist()} is outside the domain of {L.spec}")
            D = L.DW(G)
            vals[k] = D if which == "DW" else G.T @ D - L.W(G) * np.eye(2)
        return vals[inv]

    def energy(self, L: Lagrangian) -> float:
        """Integral of W(Du) over the domain."""
        uniq, inv = self.distinct_gradients()
        w = np.empty(len(uniq))
        for k, G in enumerate(uniq):
            if not L.in_domain(G):
                raise DomainViolation(f"cell gradient {G.tolist()} is outside the domain of {L.spec}")
            w[k] = L.W(G)
        return float(np.sum(self.areas() * w[inv]))

    def boundary_values(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates and values at vertices on the domain boundary."""
        mask = self.domain.on_boundary(self.vertices)
        return self.vertices[mask], self.values[mask]

    def evaluate(self, pts, tol: float = 1e-12) -> np.ndarray:
        """Values at points of the domain, shape (points, 2).

        Each point uses the first cell whose barycentric coordinates are all
        >= -tol; continuity makes the choice immaterial on shared edges.
        """
        X = np.atleast_2d(np.asarray(pts, dtype=float))
        P = self.triangles()
        U = self.values[self.cells]
        e1 = P[:, 1] - P[:, 0]
        e2 = P[:, 2] - P[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        d = X[:, None, :] - P[None, :, 0, :]
        l1 = (d[..., 0] * e2[:, 1] - d[..., 1] * e2[:, 0]) / det
        l2 = (e1[:, 0] * d[..., 1] - e1[:, 1] * d[..., 0]) / det
        inside = (l1 >= -tol) & (l2 >= -tol) & (l1 + l2 <= 1 + tol)
        if not np.all(inside.any(axis=1)):
            raise DomainViolation("evaluation point outside the mesh")
        c = np.argmax(inside, axis=1)
        k = np.arange(len(X))
        a, b = l1[k, c], l2[k, c]
        return U[c, 0] + a[:, None] * (U[c, 1] - U[c, 0]) + b[:, None] * (U[c, 2] - U[c, 0])

    def csv_rows(self) -> list[list]:
        """One row per cell: id, 6 vertex coordinates, 6 values, 4 gradient entries."""
        rows = []
        P = self.triangles()
        U = self.values[self.cells]
        for c in range(self.n_cells):
            rows.append([c, *P[c].reshape(-1).tolist(), *U[c].reshape(-1).tolist(), *self.grads[c].reshape(-1).tolist()])
        return rows


CSV_HEADER = [
    "cell", "x0", "y0", "x1", "y1", "x2", "y2",
    "u0", "v0", "u1", "v1", "u2", "v2",
    "g11", "g12", "g21", "g22",
]


def gradients_from_vertices(vertices, values, cells) -> np.ndarray:
    P = np.asarray(vertices)[cells]
    U = np.asarray(values)[cells]
    E = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=-1)
    dU = np.stack([U[:, 1] - U[:, 0], U[:, 2] - U[:, 0]], axis=-1)
    det = E[:, 0, 0] * E[:, 1, 1] - E[:, 0, 1] * E[:, 1, 0]
    Einv = np.empty_like(E)
    Einv[:, 0, 0] = E[:, 1, 1] / det
    Einv[:, 0, 1] = -E[:, 0, 1] / det
    Einv[:, 1, 0] = -E[:, 1, 0] / det
    Einv[:, 1, 1] = E[:, 0, 0] / det
    return dU @ Einv


def affine_map(M, domain: Rect = Rect(), b=(0.0, 0.0), name: str = "affine") -> PiecewiseAffineMap:
    """u(x) = M x + b on two triangles."""
    M = np.asarray(M, dtype=float)
    V = domain.corners()
    vals = V @ M.T + np.asarray(b, dtype=float)
    cells = np.array([[0, 1, 2], [0, 2, 3]])
    return PiecewiseAffineMap(domain, V, vals, cells, np.stack([M, M]), name=name)


# ---------------------------------------------------------------------------
# test fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestField:
    """lambda(x) = direction * prod_i ((x_i - a_i)(b_i - x_i) / r_i^2)^degree on a box.

    The profile equals 1 at the box center and vanishes with its gradient
    on the box boundary for degree >= 2.
    """

    center: tuple
    radius: tuple
    direction: tuple
    degree: int = 3

    __test__ = False

    @property
    def box(self) -> tuple[float, float, float, float]:
        (cx, cy), (rx, ry) = self.center, self.radius
        return (cx - rx, cx + rx, cy - ry, cy + ry)

    def _factors(self, x, y):
        a1, b1, a2, b2 = self.box
        rx2, ry2 = self.radius[0] ** 2, self.radius[1] ** 2
        t1 = (x - a1) * (b1 - x) / rx2
        t2 = (y - a2) * (b2 - y) / ry2
        inside = (t1 > 0) & (t2 > 0)
        t1 = np.where(inside, t1, 0.0)
        t2 = np.where(inside, t2, 0.0)
        dt1 = (a1 + b1 - 2 * x) / rx2
        dt2 = (a2 + b2 - 2 * y) / ry2
        return t1, t2, dt1, dt2

    def profile(self, x, y):
        t1, t2, _, _ = self._factors(np.asarray(x, float), np.asarray(y, float))
        return t1**self.degree * t2**self.degree

    def profile_gradient(self, x, y) -> np.ndarray:
        d = self.degree
        t1, t2, dt1, dt2 = self._factors(np.asarray(x, float), np.asarray(y, float))
        return np.stack([d * t1 ** (d - 1) * dt1 * t2**d, t1**d * d * t2 ** (d - 1) * dt2], axis=-1)

    def value(self, x, y) -> np.ndarray:
        return np.multiply.outer(self.profile(x, y), np.asarray(self.direction, float))

    def gradient(self, x, y) -> np.ndarray:
        """D lambda = direction (x) grad phi, shape (..., 2, 2)."""
        g = self.profile_gradient(x, y)
        return np.asarray(self.direction, float)[:, None] * g[..., None, :]

    def to_dict(self) -> dict:
        return {"box": list(self.box), "direction": list(self.direction), "degree": self.degree}


def make_bump_field(box, direction, degree: int = 3, domain: Rect = Rect()) -> TestField:
    """Bump field on ``box = (a1, b1, a2, b2)``; the box must lie strictly inside ``domain``."""
    a1, b1, a2, b2 = (float(v) for v in box)
    if degree < 2:
        raise ValueError("degree must be at least 2 for a C^1 bump")
    if not (a1 < b1 and a2 < b2) or not domain.strictly_contains(Rect(a1, a2, b1, b2)):
        raise BoxOutsideDomain(f"support box {box} is not strictly inside {domain}")
    e = np.asarray(direction, dtype=float)
    nrm = float(np.linalg.norm(e))
    if nrm == 0:
        raise ValueError("direction must be nonzero")
    e = e / nrm
    return TestField(
        center=(0.5 * (a1 + b1), 0.5 * (a2 + b2)),
        radius=(0.5 * (b1 - a1), 0.5 * (b2 - a2)),
        direction=(float(e[0]), float(e[1])),
        degree=int(degree),
    )


BATTERY_CENTERS = (0.25, 0.5, 0.75)
BATTERY_SCALES = (0.2, 0.12, 0.06)


def default_battery(domain: Rect = Rect(), degree: int = 3) -> list[TestField]:
    """3 x 3 box centers, 3 half-widths, both coordinate directions: 54 fields."""
    Lx, Ly = domain.lengths
    fields = []
    for cx in BATTERY_CENTERS:
        for cy in BATTERY_CENTERS:
            for s in BATTERY_SCALES:
                box = (
                    domain.x0 + (cx - s) * Lx,
                    domain.x0 + (cx + s) * Lx,
                    domain.y0 + (cy - s) * Ly,
                    domain.y0 + (cy + s) * Ly,
                )
                for e in ((1.0, 0.0), (0.0, 1.0)):
                    fields.append(make_bump_field(box, e, degree, domain))
    return fields


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def triangle_rule_size(degree: int, refine: int = 1) -> int:
    """Gauss points per direction that integrate grad phi exactly on a collapsed triangle."""
    k = 4 * degree - 1
    return refine * math.ceil((k + 2) / 2)


def _unit_gauss(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def field_cell_integrals(u: PiecewiseAffineMap, lam: TestField, order: Optional[int] = None, backend=None) -> np.ndarray:
    """integral over each cell of grad phi, shape (cells, 2); zero off the support."""
    m = order if order is not None else triangle_rule_size(lam.degree)
    a1, b1, a2, b2 = lam.box
    P = u.triangles()
    lo = P.min(axis=1)
    hi = P.max(axis=1)
    hit = (hi[:, 0] > a1) & (lo[:, 0] < b1) & (hi[:, 1] > a2) & (lo[:, 1] < b2)
    out = np.zeros((len(P), 2))
    idx = np.nonzero(hit)[0]
    if len(idx):
        nodes, weights = _unit_gauss(m)
        out[idx] = _kernels.bump_gradient_integrals(P[idx], lam.box, lam.degree, nodes, weights, backend=backend)
    return out


def _pair_residual(C: np.ndarray, lam: TestField, g: np.ndarray) -> float:
    e = np.asarray(lam.direction, float)
    return float(np.sum(np.einsum("i,cij,cj->c", e, C, g)))


def tensor_weak_residual(u: PiecewiseAffineMap, C: np.ndarray, lam: TestField, order: Optional[int] = None) -> float:
    """sum_c <C_c, integral_c D lambda> for a per-cell tensor C of shape (cells, 2, 2)."""
    return _pair_residual(C, lam, field_cell_integrals(u, lam, order))


def em_weak_residual(u: PiecewiseAffineMap, L: Lagrangian, lam: TestField, order: Optional[int] = None) -> float:
    return tensor_weak_residual(u, u.cell_tensor(L, "T"), lam, order)


def el_weak_residual(u: PiecewiseAffineMap, L: Lagrangian, lam: TestField, order: Optional[int] = None) -> float:
    return tensor_weak_residual(u, u.cell_tensor(L, "DW"), lam, order)


def _segment_in_rect(xi: np.ndarray, s: float, rect: tuple[float, float, float, float]):
    """Endpoints of {<x, xi> = s} clipped to rect = (x0, x1, y0, y1), or None."""
    x0, x1, y0, y1 = rect
    p0 = s * xi
    t_dir = np.array([-xi[1], xi[0]])
    lo, hi = -np.inf, np.inf
    for k, (a, b) in enumerate(((x0, x1), (y0, y1))):
        if t_dir[k] == 0.0:
            if not (a <= p0[k] <= b):
                return None
            continue
        ta = (a - p0[k]) / t_dir[k]
        tb = (b - p0[k]) / t_dir[k]
        lo = max(lo, min(ta, tb))
        hi = min(hi, max(ta, tb))
    if hi <= lo:
        return None
    return p0 + lo * t_dir, p0 + hi * t_dir


def interface_jump(
    u: PiecewiseAffineMap, L: Lagrangian, lam: TestField, tensor: str = "DW", order: Optional[int] = None
) -> float:
    """sum over interfaces of integral <(C_below - C_above) xi, lambda> ds.

    By the divergence theorem on each layer this equals the weak residual
    of the per-cell tensor C (``"DW"`` or ``"T"``) for a laminate.
    """
    if u.laminate is None:
        raise NotALaminate(f"{u.name} carries no laminate structure")
    lamdata = u.laminate
    xi = np.asarray(lamdata.xi, float)
    m = order if order is not None else 2 * lam.degree + 1
    nodes, weights = _unit_gauss(m)
    a1, b1, a2, b2 = lam.box
    D = u.domain
    rect = (max(a1, D.x0), min(b1, D.x1), max(a2, D.y0), min(b2, D.y1))
    e = np.asarray(lam.direction, float)
    cache: dict = {}

    def tens(G):
        key = G.tobytes()
        if key not in cache:
            if not L.in_domain(G):
                raise DomainViolation(f"gradient {G.tolist()} is outside the domain of {L.spec}")
            Dv = L.DW(G)
            cache[key] = Dv if tensor == "DW" else G.T @ Dv - L.W(G) * np.eye(2)
        return cache[key]

    total = 0.0
    for itf in lamdata.interfaces:
        seg = _segment_in_rect(xi, itf.s, rect)
        if seg is None:
            continue
        p, q = seg
        pts = p[None, :] + nodes[:, None] * (q - p)[None, :]
        phi = lam.profile(pts[:, 0], pts[:, 1])
        jump = (tens(itf.below) - tens(itf.above)) @ xi
        total += float(np.linalg.norm(q - p) * np.dot(weights, phi) * np.dot(e, jump))
    return total


# ---------------------------------------------------------------------------
# gradient defects
# ---------------------------------------------------------------------------

def singular_values_field(u: PiecewiseAffineMap, backend=None) -> np.ndarray:
    return _kernels.singular_values_2x2(u.grads, backend=backend)


def gradient_distance_field(u: PiecewiseAffineMap, target: str = "O(n)", backend=None) -> np.ndarray:
    """Per-cell Euclidean distance |sigma(Du) - 1| from Du to the orthogonal group."""
    if target not in ("O(n)", "O(2)"):
        raise ValueError(f"unsupported target set {target!r}")
    s = singular_values_field(u, backend)
    return np.sqrt(np.sum((s - 1.0) ** 2, axis=1))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    lagrangian: str
    map: str
    energy: float
    fields: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.fields)

    def max_abs(self, key: str) -> float:
        return max(abs(f[key]) for f in self.fields)

    def max_normalized(self, key: str) -> float:
        return self.max_abs(key) / self.energy

    def to_dict(self) -> dict:
        return {"lagrangian": self.lagrangian, "map": self.map, "fields": self.fields, "energy": self.energy}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def residual_report(
    u: PiecewiseAffineMap, L: Lagrangian, fields: Optional[Sequence[TestField]] = None
) -> ResidualReport:
    """Weak EM and EL residuals of ``u`` over a battery of test fields."""
    fields = list(fields) if fields is not None else default_battery(u.domain)
    if not fields:
        raise ValueError("at least one test field is required")
    T = u.cell_tensor(L, "T")
    D = u.cell_tensor(L, "DW")
    rep = ResidualReport(L.spec, u.name, u.energy(L))
    for lam in fields:
        g = field_cell_integrals(u, lam)
        entry = lam.to_dict()
        entry["em_residual"] = _pair_residual(T, lam, g)
        entry["el_residual"] = _pair_residual(D, lam, g)
        rep.fields.append(entry)
    return rep


def fields_crossing_interfaces(u: PiecewiseAffineMap, fields: Iterable[TestField]) -> list[TestField]:
    """Fields whose support box meets at least one laminate interface."""
    if u.laminate is None:
        raise NotALaminate(f"{u.name} carries no laminate structure")
    xi = np.asarray(u.laminate.xi, float)
    out = []
    for lam in fields:
        a1, b1, a2, b2 = lam.box
        rect = (a1, b1, a2, b2)
        if any(_segment_in_rect(xi, itf.s, rect) is not None for itf in u.laminate.interfaces):
            out.append(lam)
    return out
