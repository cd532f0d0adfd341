import numpy as np
import pytest
from numpy.testing import assert_allclose

from emlab import lagrangians as lg
from emlab import matcalc as mc
from emlab.errors import BadParam, SingularMatrix

REFLECT = np.diag([1.0, -1.0])


def all_lagrangians():
    out = []
    for n in (2, 3):
        out += lg.example_lagrangians(n)
        out += [lg.make_dirichlet(3.0, n), lg.make_qmean(n, 2.0), lg.make_inv_power(3.0, n), lg.make_quartic_shell(n)]
    out.append(lg.make_ball(3.0, 2.0, 3))
    out.append(lg.make_sigma_2d(lambda t, d: t * t + d, lambda t, d: 2 * t, lambda t, d: 1.0))
    return out


class TestDirichlet:
    def test_dw_identity(self):
        assert_allclose(lg.make_dirichlet(2, 2).DW(np.eye(2)), 2 * np.eye(2))

    def test_dw_identity_p4(self):
        L = lg.make_dirichlet(4, 2)
        assert_allclose(L.DW(np.eye(2)), 8 * np.eye(2))
        assert_allclose(mc.fd_gradient(L.W, np.eye(2)), 8 * np.eye(2), atol=1e-6)

    def test_value(self):
        assert lg.make_dirichlet(2, 2).W(np.diag([1.0, 2.0])) == pytest.approx(5.0)

    def test_zero_matrix(self):
        assert_allclose(lg.make_dirichlet(1.5, 2).DW(np.zeros((2, 2))), 0.0)

    def test_bad_param(self):
        with pytest.raises(BadParam):
            lg.make_dirichlet(1.0, 2)


class TestQmean:
    def test_dw_identity_vanishes(self):
        assert_allclose(lg.make_qmean(2, 1).DW(np.eye(2)), 0.0, atol=0)

    def test_dw_reflection_vanishes(self):
        assert_allclose(lg.make_qmean(2, 1).DW(REFLECT), 0.0, atol=0)

    def test_value(self):
        assert lg.make_qmean(2, 1).W(np.eye(2)) == 2.0

    def test_singular(self):
        with pytest.raises(SingularMatrix):
            lg.make_qmean(2, 1).W(np.diag([1.0, 0.0]))

    def test_bad_param(self):
        with pytest.raises(BadParam):
            lg.make_qmean(2, 0.5)


class TestInvPower:
    def test_identity(self):
        assert lg.make_inv_power(2, 2).W(np.eye(2)) == pytest.approx(4.0)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0])
    def test_scalar(self, alpha):
        assert lg.make_inv_power(2, 2).W(alpha * np.eye(2)) == pytest.approx(2 * alpha**2 + 2)

    def test_dw_identity_fd(self):
        L = lg.make_inv_power(2, 2)
        assert np.abs(L.DW(np.eye(2)) - mc.fd_gradient(L.W, np.eye(2))).max() <= 1e-6
        assert_allclose(L.DW(np.eye(2)), 2 * np.eye(2))


class TestBall:
    def test_value(self):
        assert lg.make_ball(2, 2, 2).W(np.eye(2)) == pytest.approx(4.0)

    def test_dw_identity(self):
        L = lg.make_ball(2, 2, 2)
        assert_allclose(L.DW(np.eye(2)), 4 * np.eye(2))
        assert_allclose(mc.fd_gradient(L.W, np.eye(2)), 4 * np.eye(2), atol=1e-8)

    def test_dw_identity_3d(self):
        L = lg.make_ball(2, 2, 3)
        assert_allclose(L.DW(np.eye(3)), 6 * np.eye(3))
        assert_allclose(mc.fd_gradient(L.W, np.eye(3)), 6 * np.eye(3), atol=1e-8)

    @pytest.mark.parametrize("p,q,n", [(1.5, 2.0, 3), (2.0, 1.5, 2), (1.0, 4.0, 2)])
    def test_bad_params(self, p, q, n):
        with pytest.raises(BadParam):
            lg.make_ball(p, q, n)


class TestQuarticShell:
    def test_identity(self):
        L = lg.make_quartic_shell()
        assert L.W(np.eye(2)) == 4.0
        assert_allclose(L.DW(np.eye(2)), -8 * np.eye(2))

    def test_zero_set(self):
        L = lg.make_quartic_shell()
        X = np.diag([2.0, 0.0])
        assert L.W(X) == 0.0
        assert_allclose(L.DW(X), 0.0)

    def test_not_rank_one_convex_flag(self):
        assert lg.make_quartic_shell().rank_one_convex is False


class TestSigma:
    def test_trace_reduces_to_dirichlet(self, rng):
        L = lg.make_sigma_2d(lambda t, d: t, lambda t, d: 1.0, lambda t, d: 0.0)
        X = rng.standard_normal((2, 2))
        assert_allclose(L.DW(X), 2 * X)

    def test_det(self):
        L = lg.make_sigma_2d(lambda t, d: d, lambda t, d: 0.0, lambda t, d: 1.0)
        assert_allclose(L.DW(np.eye(2)), 2 * np.eye(2))
        assert_allclose(mc.fd_gradient(L.W, np.eye(2)), 2 * np.eye(2), atol=1e-8)

    def test_sum(self):
        L = lg.make_sigma_2d(lambda t, d: t + d, lambda t, d: 1.0, lambda t, d: 1.0)
        assert_allclose(L.DW(np.eye(2)), 4 * np.eye(2))


class TestParse:
    @pytest.mark.parametrize(
        "spec,name,params",
        [
            ("dirichlet:p=2,n=2", "dirichlet", {"p": 2.0, "n": 2}),
            ("qmean:n=2,q=1", "qmean", {"n": 2, "q": 1.0}),
            ("inv_power:p=3,n=3", "inv_power", {"p": 3.0, "n": 3}),
            ("ball:p=2,q=2,n=2", "ball", {"p": 2.0, "q": 2.0, "n": 2}),
            ("quartic_shell", "quartic_shell", {"n": 2}),
        ],
    )
    def test_roundtrip(self, spec, name, params):
        L = lg.parse_lagrangian(spec)
        assert L.name == name
        assert L.params == params
        assert lg.parse_lagrangian(L.spec).params == params

    @pytest.mark.parametrize("spec", ["nope", "dirichlet:p=x", "dirichlet:r=2", "qmean:n=2.5", ""])
    def test_rejects(self, spec):
        with pytest.raises(BadParam):
            lg.parse_lagrangian(spec)


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("L", all_lagrangians(), ids=lambda L: L.spec)
def test_gradient_matches_fd(L):
    rng = np.random.default_rng(11)
    for _ in range(50):
        X = mc.random_matrix(rng, L.n)
        G = L.DW(X)
        assert np.abs(G - mc.fd_gradient(L.W, X)).max() <= 1e-6 * (1 + mc.frob(G))


@pytest.mark.parametrize("L", all_lagrangians(), ids=lambda L: L.spec)
def test_frame_indifference(L):
    rng = np.random.default_rng(12)
    assert L.frame_indifferent
    for k in range(20):
        X = mc.random_matrix(rng, L.n)
        R = mc.random_orthogonal(rng, L.n, det_sign=1 if k % 2 else -1)
        w = L.W(X)
        assert abs(L.W(R @ X) - w) <= 1e-12 * (1 + abs(w))


@pytest.mark.parametrize("L", lg.example_lagrangians(2) + lg.example_lagrangians(3), ids=lambda L: L.spec)
def test_isotropy(L):
    rng = np.random.default_rng(13)
    for k in range(20):
        X = mc.random_matrix(rng, L.n)
        R = mc.random_orthogonal(rng, L.n, det_sign=1 if k % 2 else -1)
        w = L.W(X)
        assert abs(L.W(X @ R) - w) <= 1e-12 * (1 + abs(w))
