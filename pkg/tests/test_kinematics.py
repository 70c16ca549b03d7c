import numpy as np
import pytest

from formtrack import (
    AgentState,
    FrameRotation,
    local_displacement,
    random_rotation,
    sgn_alpha,
    sgn_elementwise,
)


def rot2(theta: float) -> FrameRotation:
    c, s = np.cos(theta), np.sin(theta)
    return FrameRotation(np.array([[c, -s], [s, c]]))


class TestFrameRotation:
    def test_rejects_non_orthogonal(self):
        with pytest.raises(ValueError):
            FrameRotation(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_rejects_reflection(self):
        with pytest.raises(ValueError):
            FrameRotation(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_round_trip(self):
        r = rot2(0.7)
        v = np.array([1.3, -0.4])
        assert np.allclose(r.to_global(r.to_local(v)), v)


class TestAgentState:
    def test_leader_keeps_identity_frame(self):
        st = AgentState(id=1, position=np.zeros(2), role="leader")
        assert np.allclose(st.frame.matrix, np.eye(2))

    def test_leader_rejects_rotated_frame(self):
        with pytest.raises(ValueError):
            AgentState(id=1, position=np.zeros(2), role="leader", frame=rot2(0.3))

    def test_bad_role(self):
        with pytest.raises(ValueError):
            AgentState(id=1, position=np.zeros(2), role="boss")


class TestLocalDisplacement:
    def test_identity_frame(self):
        out = local_displacement(np.array([1.0, 0.0]), np.zeros(2), rot2(0.0))
        assert np.allclose(out, [1.0, 0.0])

    def test_quarter_turn(self):
        # R^T rotates the measurement the other way
        out = local_displacement(np.array([1.0, 0.0]), np.zeros(2), rot2(np.pi / 2))
        assert np.allclose(out, [0.0, -1.0], atol=1e-15)

    def test_coincident_points(self):
        p = np.array([0.3, -0.7])
        assert np.allclose(local_displacement(p, p, rot2(1.1)), 0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            local_displacement(np.zeros(3), np.zeros(2), rot2(0.0))

    def test_isometry_under_any_frame(self):
        rng = np.random.default_rng(7)
        for seed in range(20):
            d = 2 if seed % 2 == 0 else 3
            r = random_rotation(seed, d)
            pj, pi = rng.normal(size=d), rng.normal(size=d)
            out = local_displacement(pj, pi, r)
            assert np.isclose(np.linalg.norm(out), np.linalg.norm(pj - pi))


class TestSgnAlpha:
    def test_three_four_half(self):
        out = sgn_alpha(np.array([3.0, 4.0]), 0.5)
        assert np.allclose(out, [3.0 / np.sqrt(5), 4.0 / np.sqrt(5)])
        assert np.allclose(out, [1.3416407864998738, 1.7888543819998317])

    def test_zero_vector(self):
        assert np.all(sgn_alpha(np.zeros(3), 0.7) == 0.0)

    def test_unit_vector_fixed_point(self):
        u = np.array([1.0, 0.0])
        assert np.allclose(sgn_alpha(u, 0.25), u)

    def test_norm_is_power_of_norm(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            u = rng.normal(size=3) * rng.uniform(0.01, 10)
            alpha = rng.uniform(0.05, 1.0)
            assert np.isclose(np.linalg.norm(sgn_alpha(u, alpha)),
                              np.linalg.norm(u) ** alpha)

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(5)
        for seed in range(20):
            r = random_rotation(seed, 3)
            u = rng.normal(size=3)
            alpha = rng.uniform(0.1, 1.0)
            assert np.allclose(sgn_alpha(r.matrix @ u, alpha),
                               r.matrix @ sgn_alpha(u, alpha))

    def test_beta_range_accepted(self):
        u = np.array([3.0, 4.0])
        out = sgn_alpha(u, 1.5)  # fixed-time exponent
        assert np.allclose(out, u * np.sqrt(5))

    def test_invalid_exponent(self):
        for bad in (0.0, -0.3, 2.5):
            with pytest.raises(ValueError):
                sgn_alpha(np.ones(2), bad)


class TestSgnElementwise:
    def test_exact(self):
        assert np.allclose(sgn_elementwise(np.array([-2.0, 0.0, 5.0])), [-1, 0, 1])
        assert np.allclose(sgn_elementwise(np.array([-7.0])), [-1.0])

    def test_boundary_layer_midpoint(self):
        assert np.allclose(sgn_elementwise(np.array([1e-3]), eps=1e-3), [0.5])

    def test_bounded_by_one(self):
        rng = np.random.default_rng(11)
        u = rng.normal(size=100) * 10
        assert np.all(np.abs(sgn_elementwise(u, eps=1e-3)) < 1.0)

    def test_converges_to_exact_signum(self):
        u = np.array([0.4, -2.0, 0.03])
        for eps in (1e-2, 1e-4, 1e-8):
            err = np.abs(sgn_elementwise(u, eps) - np.sign(u)).max()
            assert err < eps / np.abs(u).min() + 1e-12

    def test_negative_eps_rejected(self):
        with pytest.raises(ValueError):
            sgn_elementwise(np.ones(2), eps=-1.0)


class TestRandomRotation:
    def test_deterministic_per_seed(self):
        a = random_rotation(0, 2)
        b = random_rotation(0, 2)
        assert np.array_equal(a.matrix, b.matrix)

    def test_orthonormal_and_proper(self):
        for seed in range(25):
            for d in (2, 3):
                m = random_rotation(seed, d).matrix
                assert np.allclose(m.T @ m, np.eye(d), atol=1e-12)
                assert abs(np.linalg.det(m) - 1.0) < 1e-12

    def test_column_directions_average_out(self):
        cols = np.array([random_rotation(seed, 3).matrix[:, 0] for seed in range(1000)])
        assert np.abs(cols.mean(axis=0)).max() < 0.1

    def test_invalid_dimension(self):
        with pytest.raises(ValueError):
            random_rotation(0, 4)
