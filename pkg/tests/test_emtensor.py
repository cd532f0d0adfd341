import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from emlab import emtensor as em
from emlab import lagrangians as lg
from emlab import matcalc as mc
from emlab.errors import (
    BadParam,
    ConformalCase,
    DomainViolation,
    NotInImage,
    NotOrthogonal,
    NotPositiveDefinite,
    NotPsd,
)

DIR2 = lg.make_dirichlet(2, 2)
QMEAN = lg.make_qmean(2, 1)
INVP = lg.make_inv_power(2, 2)
BALL = lg.make_ball(2, 2, 2)


def spd(rng, n):
    A = rng.uniform(-1.5, 1.5, (n, n))
    return A.T @ A + 0.2 * np.eye(n)


class TestEmTensor:
    def test_dirichlet_diag(self):
        assert_allclose(em.em_tensor(DIR2, np.diag([1.0, 2.0])), np.diag([-3.0, 3.0]))

    def test_qmean_identity(self):
        assert_allclose(em.em_tensor(QMEAN, np.eye(2)), -2 * np.eye(2))

    def test_ball_identity(self):
        # X*DW(X) - W(X) I at X = I is 4I - 4I; checked against a finite-difference DW
        T = em.em_tensor(BALL, np.eye(2))
        T_fd = mc.fd_gradient(BALL.W, np.eye(2)) - BALL.W(np.eye(2)) * np.eye(2)
        assert_allclose(T, 0.0, atol=1e-15)
        assert_allclose(T_fd, 0.0, atol=1e-8)


class TestReducedEm:
    def test_dirichlet_p4(self):
        L = lg.make_dirichlet(4, 2)
        assert_allclose(em.reduced_em(L, np.eye(2)), 4 * np.eye(2))
        assert_allclose(em.em_tensor(L, np.eye(2)), 4 * np.eye(2))

    def test_qmean_identity(self):
        assert_allclose(em.reduced_em(QMEAN, np.eye(2)), -2 * np.eye(2))

    @pytest.mark.parametrize("alpha", [0.25, 1.0, 2.5, 4.0])
    def test_inv_power_scalar(self, alpha):
        assert_allclose(em.reduced_em(INVP, alpha * np.eye(2)), -2 * np.eye(2), rtol=1e-12, atol=1e-12)

    def test_ball_closed_form(self):
        Y = np.diag([1.0, 3.0])
        assert_allclose(em.reduced_em(BALL, Y), 4 * Y - 2 * np.trace(Y) * np.eye(2))

    def test_rejects_non_psd(self):
        with pytest.raises(NotPsd):
            em.reduced_em(DIR2, np.diag([1.0, -1.0]))
        with pytest.raises(NotPsd):
            em.reduced_em(DIR2, np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_generic_path(self, rng):
        Y = spd(rng, 2)
        assert_allclose(em.reduced_em(QMEAN, Y, "generic"), em.reduced_em(QMEAN, Y), rtol=1e-10, atol=1e-10)

    def test_bad_method(self):
        with pytest.raises(BadParam):
            em.reduced_em(DIR2, np.eye(2), "nope")


class TestInvariance:
    def test_identity_rotation(self, rng):
        X = mc.random_matrix(rng, 2)
        for L in lg.example_lagrangians():
            d = em.check_invariance(L, X, np.eye(2))
            assert d.em == 0.0 and d.equivariance == 0.0

    def test_qmean_rotation(self, rng):
        X = np.array([[1.3, 0.2], [-0.4, 0.9]])
        R = mc.random_orthogonal(rng, 2, det_sign=1)
        d = em.check_invariance(QMEAN, X, R)
        assert d.em <= 1e-12 * (1 + mc.frob(em.em_tensor(QMEAN, X)))

    def test_dirichlet_p3_reflection(self, rng):
        L = lg.make_dirichlet(3, 2)
        X = rng.standard_normal((2, 2))
        d = em.check_invariance(L, X, np.diag([1.0, -1.0]))
        assert max(d) <= 1e-12 * (1 + mc.frob(em.em_tensor(L, X)))

    def test_not_orthogonal(self):
        with pytest.raises(NotOrthogonal):
            em.check_invariance(DIR2, np.eye(2), np.diag([1.0, 1.0 + 1e-9]))


class TestSymmetry:
    def test_dirichlet_exact(self, rng):
        assert em.check_symmetry(DIR2, rng.standard_normal((2, 2))) <= 1e-15

    @pytest.mark.parametrize("L", [BALL, QMEAN, INVP], ids=lambda L: L.name)
    def test_isotropic(self, L):
        rng = np.random.default_rng(3)
        for _ in range(30):
            X = mc.random_matrix(rng, 2)
            assert em.check_symmetry(L, X) <= 1e-12 * (1 + mc.frob(em.em_tensor(L, X)))


class TestInversions:
    def test_dirichlet_p4(self):
        assert_allclose(em.invert_reduced_dirichlet(4 * np.eye(2), 4, 2), np.eye(2))

    def test_conformal(self):
        with pytest.raises(ConformalCase):
            em.invert_reduced_dirichlet(np.eye(2), 2, 2)

    def test_dirichlet_p2_n3(self):
        Z = -np.eye(3)
        Y = em.invert_reduced_dirichlet(Z, 2, 3)
        assert np.abs(em.reduced_em(lg.make_dirichlet(2, 3), Y) - Z).max() <= 1e-10

    def test_dirichlet_not_in_image(self):
        with pytest.raises(NotInImage):
            em.invert_reduced_dirichlet(-np.eye(2), 4, 2)
        with pytest.raises(NotInImage):
            em.invert_reduced_dirichlet(np.diag([10.0, -9.0]), 4, 2)

    def test_conformal_family(self):
        for t in (1.0, 2.0):
            assert_allclose(em.reduced_em(DIR2, em.conformal_family_dirichlet(1, t)), np.diag([1.0, -1.0]), atol=1e-12)
        for t in (0.5, 3.0):
            assert_allclose(em.reduced_em(DIR2, em.conformal_family_dirichlet(0, t)), 0.0, atol=1e-12)
        assert_allclose(em.conformal_family_dirichlet(1, 1), np.diag([1.0, 0.0]))
        with pytest.raises(BadParam):
            em.conformal_family_dirichlet(2, 1)

    def test_qmean_family(self):
        Z = -2 * np.eye(2)
        assert_allclose(em.invert_reduced_qmean2d(Z, 1), np.eye(2))
        Y3 = em.invert_reduced_qmean2d(Z, 3)
        assert_allclose(Y3, 3 * np.eye(2))
        assert_allclose(em.reduced_em(QMEAN, Y3), Z, atol=1e-12)

    def test_qmean_not_in_image(self):
        with pytest.raises(NotInImage):
            em.invert_reduced_qmean2d(np.eye(2), 1)
        with pytest.raises(NotInImage):
            em.invert_reduced_qmean2d(-np.eye(2), 1)

    def test_qmean_generic_z(self, rng):
        Q = mc.random_orthogonal(rng, 2)
        Z = Q @ np.diag([-1.0, -4.0]) @ Q.T
        for t in (0.3, 1.0, 7.0):
            assert np.abs(em.reduced_em(QMEAN, em.invert_reduced_qmean2d(Z, t)) - Z).max() <= 1e-10


class TestObstruction:
    def test_qmean(self):
        r = em.el_obstruction(QMEAN)
        assert r.verdict == "EL_compatible_all_xi"
        assert r.trace_cond == 0.0
        assert_allclose(r.dw_identity, 0.0)

    def test_dirichlet(self):
        r = em.el_obstruction(DIR2)
        assert (r.Q_min, r.Q_max) == (2.0, 2.0)
        assert r.verdict == "EL_incompatible_all_xi"
        assert r.trace_cond == pytest.approx(4.0)

    def test_ball(self):
        r = em.el_obstruction(BALL)
        assert_allclose(r.dw_identity, 4 * np.eye(2))
        assert r.verdict == "EL_incompatible_all_xi"
        assert r.trace_cond == pytest.approx(8.0)

    def test_quartic_negative(self):
        r = em.el_obstruction(lg.make_quartic_shell())
        assert r.Q_max == pytest.approx(-8.0)
        assert r.verdict == "EL_incompatible_all_xi"

    def test_sigma_vanishing_dw(self):
        L = lg.make_sigma_2d(lambda t, d: t - d, lambda t, d: 1.0, lambda t, d: -1.0)
        assert em.el_obstruction(L).verdict == "EL_compatible_all_xi"

    def test_mixed_sign(self):
        L = lg.Lagrangian(
            "saddle", {"n": 2},
            lambda X: X[0, 0] ** 2 - X[1, 1] ** 2,
            lambda X: np.diag([2 * X[0, 0], -2 * X[1, 1]]),
            frame_indifferent=False, right_invariant=False,
        )
        r = em.el_obstruction(L)
        assert (r.Q_min, r.Q_max) == (-2.0, 2.0)
        assert r.verdict == "mixed"

    def test_scaling_derivative(self):
        for t in (0.5, 1.0, 2.0):
            fd = (DIR2.W((t + 1e-6) * np.eye(2)) - DIR2.W((t - 1e-6) * np.eye(2))) / 2e-6
            assert em.scaling_derivative(DIR2, t) == pytest.approx(fd, rel=1e-8)

    def test_jump_vector(self):
        j = em.jump_vector(DIR2, np.eye(2), np.diag([1.0, -1.0]), [0.0, 1.0])
        assert_allclose(j, [0.0, -4.0])
        xi = np.array([0.0, 1.0])
        # (DW(B) - DW(A)) xi = -2 xi <xi, DW(I) xi> for B = I - 2 xi (x) xi
        assert_allclose(j, -2 * xi * (xi @ DIR2.DW(np.eye(2)) @ xi))
        assert_allclose(em.jump_vector(QMEAN, np.eye(2), np.diag([1.0, -1.0]), xi), 0.0)


class TestCoercivity:
    def test_dirichlet(self):
        r = em.coercive_right_multiplier(2 * np.eye(2))
        assert r.lambda1 == 2.0
        assert r.defect_sym <= 1e-12
        assert r.min_ratio >= r.lambda1 - 1e-12

    def test_diag(self):
        r = em.coercive_right_multiplier(np.diag([1.0, 3.0]))
        assert r.lambda1 == pytest.approx(1.0)
        assert r.min_ratio >= 1.0 - 1e-12

    def test_identity(self):
        assert em.coercive_right_multiplier(np.eye(2)).lambda1 == 1.0

    def test_rejects(self):
        with pytest.raises(NotPositiveDefinite):
            em.coercive_right_multiplier(np.diag([1.0, -1.0]))
        with pytest.raises(NotPositiveDefinite):
            em.coercive_right_multiplier(np.array([[1.0, 1.0], [0.0, 1.0]]))


class TestTel:
    def test_affine_map(self):
        u = em.PolynomialMap([{(1, 0): 1.2, (0, 1): 0.3, (0, 0): 1.0}, {(1, 0): -0.1, (0, 1): 0.8}])
        for L in (DIR2, QMEAN, BALL):
            assert em.tel_identity_check(u, L, 0.1) <= 1e-12

    def test_quadratic_map_is_exact_for_dirichlet(self):
        u = em.PolynomialMap([{(1, 0): 1.0, (2, 0): 0.1}, {(0, 1): 1.0}])
        assert em.tel_identity_check(u, DIR2, 1 / 40) <= 1e-12

    def test_second_order(self):
        u = em.PolynomialMap([{(1, 0): 1.0, (1, 1): 0.05}, {(0, 1): 1.0, (2, 0): -0.05}])
        d, r = em.tel_convergence(u, QMEAN, [1 / 20, 1 / 40])
        assert 3.2 <= r[0] <= 4.8

    def test_domain_violation(self):
        u = em.PolynomialMap([{(2, 0): 1.0}, {(0, 1): 1.0}])
        with pytest.raises(DomainViolation):
            em.tel_identity_check(u, QMEAN, 0.1)

    def test_jacobian(self):
        u = em.PolynomialMap([{(2, 1): 1.0}, {(0, 3): 2.0, (1, 0): 1.0}])
        J = u.jacobian(np.array(2.0), np.array(3.0))
        assert_allclose(J, [[12.0, 4.0], [1.0, 54.0]])


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3])
def test_reduced_consistency(n):
    rng = np.random.default_rng(21)
    Ls = lg.example_lagrangians(n) + [lg.make_quartic_shell(n), lg.make_dirichlet(3, n), lg.make_qmean(n, 2)]
    for L in Ls:
        for _ in range(20):
            X = mc.random_matrix(rng, n)
            T = em.em_tensor(L, X)
            assert np.abs(em.reduced_em(L, X.T @ X) - T).max() <= 1e-10 * (1 + mc.frob(T))


@settings(max_examples=50, deadline=None)
@given(
    st.sampled_from([2.0, 3.0, 4.0]),
    st.sampled_from([2, 3]),
    st.lists(st.floats(0.05, 3.0), min_size=3, max_size=3),
    st.integers(0, 2**32 - 1),
)
def test_dirichlet_trace_law(p, n, eigs, seed):
    Q = mc.random_orthogonal(np.random.default_rng(seed), n)
    Y = Q @ np.diag(eigs[:n]) @ Q.T
    Y = 0.5 * (Y + Y.T)
    expected = (p - n) * np.trace(Y) ** (p / 2)
    got = np.trace(em.reduced_em(lg.make_dirichlet(p, n), Y))
    assert abs(got - expected) <= 1e-10 * max(1.0, abs(expected), np.trace(Y) ** (p / 2))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 4.0), st.floats(0.05, 4.0), st.floats(-np.pi, np.pi))
def test_qmean_det_law(a, b, th):
    Q = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    Y = Q @ np.diag([a, b]) @ Q.T
    Y = 0.5 * (Y + Y.T)
    assert abs(mc.det(em.reduced_em(QMEAN, Y)) - 4.0) <= 1e-10 * 4.0
