"""Registry of energy densities W with analytic gradients DW.

Each density is packaged as an immutable :class:`Lagrangian` that knows its
parameters, validity domain and symmetry flags.  Gradients are written out
by hand from the matrix calculus identities in :mod:`emlab.matcalc`; the
finite-difference gradient is the only oracle used to test them.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import matcalc as mc
from .errors import BadParam, BadShape, SingularMatrix

DOMAINS = ("all", "nonsingular", "positive_det")


@dataclass(frozen=True)
class Lagrangian:
    """A named energy density W together with its gradient DW.

    ``params`` holds the numeric parameters (always including ``n``).
    ``rank_one_convex`` is ``None`` when the density carries no claim.
    """

    name: str
    params: dict
    eval_W: Callable[[np.ndarray], float] = field(repr=False)
    eval_DW: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    domain: str = "all"
    frame_indifferent: bool = True
    right_invariant: bool = True
    rank_one_convex: Optional[bool] = None

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise BadParam(f"unknown domain {self.domain!r}")

    @property
    def n(self) -> int:
        return int(self.params["n"])

    @property
    def spec(self) -> str:
        """Canonical ``family:key=value,...`` identifier."""
        body = ",".join(f"{k}={_fmt(v)}" for k, v in self.params.items() if not callable(v))
        return f"{self.name}:{body}" if body else self.name

    def in_domain(self, X) -> bool:
        try:
            self.check_domain(X)
        except (SingularMatrix, BadShape):
            return False
        return True

    def check_domain(self, X) -> np.ndarray:
        A = mc.as_matrix(X)
        if A.shape[0] != self.n:
            raise BadShape(f"{self.spec} expects {self.n}x{self.n} input, got {A.shape}")
        if self.domain == "nonsingular":
            mc.require_nonsingular(A)
        elif self.domain == "positive_det" and mc.det(A) <= mc.TOL_SING:
            raise SingularMatrix(f"{self.spec} needs det X > 0")
        return A

    def W(self, X) -> float:
        return float(self.eval_W(self.check_domain(X)))

    def DW(self, X) -> np.ndarray:
        return np.asarray(self.eval_DW(self.check_domain(X)), dtype=float)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):g}"


def _check_n(n) -> int:
    if n not in (2, 3):
        raise BadParam(f"dimension n must be 2 or 3, got {n!r}")
    return int(n)


def _norm2(X: np.ndarray) -> float:
    return float(np.sum(X * X))


def _power_grad(X: np.ndarray, p: float) -> np.ndarray:
    """Gradient of |X|^p, with the continuous value 0 at X = 0 for p > 1."""
    s = _norm2(X)
    if s == 0.0:
        return np.zeros_like(X)
    return p * s ** ((p - 2) / 2) * X


def make_dirichlet(p: float = 2.0, n: int = 2) -> Lagrangian:
    """W(X) = |X|^p, the p-Dirichlet energy."""
    n = _check_n(n)
    if not p > 1:
        raise BadParam(f"dirichlet needs p > 1, got {p}")
    return Lagrangian(
        name="dirichlet",
        params={"p": p, "n": n},
        eval_W=lambda X: _norm2(X) ** (p / 2),
        eval_DW=lambda X: _power_grad(X, p),
        domain="all",
        rank_one_convex=True,
    )


def make_qmean(n: int = 2, q: float = 1.0) -> Lagrangian:
    """W(X) = (|X|^n / |det X|)^q, the q-th power of the distortion."""
    n = _check_n(n)
    if not q >= 1:
        raise BadParam(f"qmean needs q >= 1, got {q}")

    def W(X):
        return (_norm2(X) ** (n / 2) / abs(mc.det(X))) ** q

    def DW(X):
        d = mc.det(X)
        s = _norm2(X)
        K = s ** (n / 2) / abs(d)
        inner = n * s ** ((n - 2) / 2) * X / abs(d) - np.sign(d) * s ** (n / 2) / d**2 * mc.grad_det(X)
        return q * K ** (q - 1) * inner

    return Lagrangian("qmean", {"n": n, "q": q}, W, DW, domain="nonsingular")


def make_inv_power(p: float = 2.0, n: int = 2) -> Lagrangian:
    """W(X) = |X|^p + |X^-1|^p |det X|."""
    n = _check_n(n)
    if not p >= 1:
        raise BadParam(f"inv_power needs p >= 1, got {p}")

    def W(X):
        Xi = mc.inv(X)
        return _norm2(X) ** (p / 2) + _norm2(Xi) ** (p / 2) * abs(mc.det(X))

    def DW(X):
        d = mc.det(X)
        Xi = mc.inv(X)
        return (
            _power_grad(X, p)
            + abs(d) * mc.grad_inv_norm(X, p)
            + np.sign(d) * _norm2(Xi) ** (p / 2) * mc.grad_det(X)
        )

    return Lagrangian("inv_power", {"p": p, "n": n}, W, DW, domain="nonsingular")


def make_ball(p: float = 2.0, q: float = 2.0, n: int = 2) -> Lagrangian:
    """W(X) = |X|^p + |adj X|^q, a polyconvex stored energy."""
    n = _check_n(n)
    if not (p >= n - 1 and p > 1):
        raise BadParam(f"ball needs p >= n-1 and p > 1, got p={p}, n={n}")
    if not q >= p / (p - 1):
        raise BadParam(f"ball needs q >= p/(p-1) = {p / (p - 1):g}, got q={q}")

    def W(X):
        adj = mc.adjugate(X)
        return _norm2(X) ** (p / 2) + _norm2(adj) ** (q / 2)

    def DW(X):
        s = _norm2(mc.adjugate(X))
        return _power_grad(X, p) + (q / 2) * s ** ((q - 2) / 2) * mc.grad_adj_norm_sq(X)

    return Lagrangian("ball", {"p": p, "q": q, "n": n}, W, DW, domain="nonsingular", rank_one_convex=True)


def make_quartic_shell(n: int = 2) -> Lagrangian:
    """W(X) = (|X|^2 - 4)^2, frame indifferent but not rank-one convex."""
    n = _check_n(n)
    return Lagrangian(
        "quartic_shell",
        {"n": n},
        lambda X: (_norm2(X) - 4.0) ** 2,
        lambda X: 4.0 * (_norm2(X) - 4.0) * X,
        domain="all",
        rank_one_convex=False,
    )


def make_sigma_2d(
    sigma: Callable[[float, float], float],
    d1sigma: Callable[[float, float], float],
    d2sigma: Callable[[float, float], float],
    name: str = "sigma",
) -> Lagrangian:
    """W(X) = sigma(tr X*X, det X*X) for 2x2 matrices.

    The gradient is DW = 2 d1sigma X + 2 d2sigma X adj(X*X).
    """

    def invariants(X):
        Y = X.T @ X
        return float(np.trace(Y)), mc.det(Y)

    def W(X):
        return float(sigma(*invariants(X)))

    def DW(X):
        t, d = invariants(X)
        return 2.0 * d1sigma(t, d) * X + 2.0 * d2sigma(t, d) * (X @ mc.adjugate(X.T @ X))

    params = {"n": 2, "sigma": sigma, "d1sigma": d1sigma, "d2sigma": d2sigma}
    return Lagrangian(name, params, W, DW, domain="all")


_FACTORIES = {
    "dirichlet": (make_dirichlet, {"p": 2.0, "n": 2}),
    "qmean": (make_qmean, {"n": 2, "q": 1.0}),
    "inv_power": (make_inv_power, {"p": 2.0, "n": 2}),
    "ball": (make_ball, {"p": 2.0, "q": 2.0, "n": 2}),
    "quartic_shell": (make_quartic_shell, {"n": 2}),
}

FAMILIES = tuple(_FACTORIES)

_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*(?::(.*))?$")


def parse_lagrangian(spec: str) -> Lagrangian:
    """Build a Lagrangian from an identifier such as ``"dirichlet:p=2,n=2"``."""
    m = _SPEC_RE.match(spec or "")
    if not m or m.group(1) not in _FACTORIES:
        raise BadParam(f"unknown lagrangian {spec!r}; known families: {', '.join(FAMILIES)}")
    factory, defaults = _FACTORIES[m.group(1)]
    kwargs = dict(defaults)
    body = (m.group(2) or "").strip()
    if body:
        for item in body.split(","):
            key, sep, val = item.partition("=")
            key = key.strip()
            if not sep or key not in defaults:
                raise BadParam(f"bad parameter {item!r} for {m.group(1)}")
            try:
                num = float(val)
            except ValueError:
                raise BadParam(f"parameter {key} must be numeric, got {val!r}") from None
            if key == "n":
                if num != int(num):
                    raise BadParam(f"n must be an integer, got {val!r}")
                num = int(num)
            kwargs[key] = num
    return factory(**kwargs)


def example_lagrangians(n: int = 2) -> list[Lagrangian]:
    """The four families whose energy-momentum tensors are worked out in closed form."""
    return [
        make_dirichlet(2.0, n),
        make_qmean(n, 1.0),
        make_inv_power(2.0, n),
        make_ball(2.0, 2.0, n),
    ]
