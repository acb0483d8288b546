import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskdeconv.errors import ArgumentError, DimensionError, NormalizationError
from maskdeconv.signal import (
    TangentProjector,
    apply_circulant,
    circular_convolve,
    circular_convolve_2d,
    circular_correlate,
    circulant_matrix,
    coherence_mu,
    cyclic_shift,
    dft,
    dft_matrix,
    idft,
    mutual_coherence_mu_h,
    optimal_phase,
    phase_dist,
    project_tangent,
)


def cgauss(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def unit(v):
    return v / np.linalg.norm(v)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def e(n, k=0):
    v = np.zeros(n, complex)
    v[k] = 1
    return v


class TestDft:
    def test_delta_is_flat(self):
        assert np.allclose(dft(e(5)), np.ones(5), atol=0)

    def test_constant_is_scaled_delta(self):
        assert np.allclose(dft(np.ones(4)), [4, 0, 0, 0], atol=1e-15)

    def test_against_kernel_sum(self):
        rng = np.random.default_rng(0)
        z = cgauss(rng, 8)
        direct = np.array([sum(z[k] * np.exp(-2j * np.pi * j * k / 8) for k in range(8)) for j in range(8)])
        assert rel(dft(z), direct) <= 1e-12

    def test_matrix_matches_transform_and_is_read_only(self):
        rng = np.random.default_rng(1)
        z = cgauss(rng, 7)
        F = dft_matrix(7)
        assert rel(F @ z, dft(z)) <= 1e-12
        with pytest.raises(ValueError):
            F[0, 0] = 2

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(2)
        z = cgauss(rng, 9)
        assert rel(idft(dft(z)), z) <= 1e-14

    def test_rejects_wrong_shapes(self):
        with pytest.raises(DimensionError):
            dft(np.ones((2, 2)))
        with pytest.raises(DimensionError):
            dft(np.ones(3), n=4)
        with pytest.raises(ArgumentError):
            dft([1.0, np.nan])


class TestConvolution:
    def test_delta_kernel_is_identity(self):
        rng = np.random.default_rng(3)
        x = cgauss(rng, 6)
        assert rel(circular_convolve(e(6), x), x) <= 1e-15

    def test_all_ones_kernel_sums(self):
        x = np.array([1.0, -2.0, 0.5, 3.0])
        assert np.allclose(circular_convolve(np.ones(4), x), x.sum())

    def test_small_hand_case(self):
        h, x = np.array([1, 2, 0, 0.0]), np.array([1, 0, 1, 0.0])
        direct = np.array([sum(h[j] * x[(i - j) % 4] for j in range(4)) for i in range(4)])
        assert np.allclose(direct, [1, 2, 1, 2])
        assert rel(circular_convolve(h, x), direct) <= 1e-12

    def test_correlate_is_adjoint(self):
        rng = np.random.default_rng(4)
        h, x, v = cgauss(rng, 11), cgauss(rng, 11), cgauss(rng, 11)
        lhs = np.vdot(circular_convolve(h, x), v)
        rhs = np.vdot(x, circular_correlate(h, v))
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)

    def test_2d_against_quadruple_loop(self):
        rng = np.random.default_rng(5)
        h, x = rng.standard_normal((8, 8)), rng.standard_normal((8, 8))
        direct = np.zeros((8, 8))
        for i in range(8):
            for j in range(8):
                direct[i, j] = sum(h[a, b] * x[(i - a) % 8, (j - b) % 8] for a in range(8) for b in range(8))
        assert rel(circular_convolve_2d(h, x).real, direct) <= 1e-10

    def test_2d_shape_mismatch(self):
        with pytest.raises(DimensionError):
            circular_convolve_2d(np.ones((2, 2)), np.ones((2, 3)))

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            circular_convolve(np.ones(3), np.ones(4))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 40), st.integers(0, 2**32 - 1))
    def test_commutative_and_matches_matrix(self, n, seed):
        rng = np.random.default_rng(seed)
        h, x = cgauss(rng, n), cgauss(rng, n)
        a = circular_convolve(h, x)
        assert np.allclose(a, circular_convolve(x, h), rtol=1e-10, atol=1e-10)
        assert np.allclose(a, circulant_matrix(h) @ x, rtol=1e-10, atol=1e-10)


class TestShiftAndCirculant:
    def test_shift_identity_cases(self):
        z = np.arange(5.0)
        assert np.array_equal(cyclic_shift(z, 0), z)
        assert np.array_equal(cyclic_shift(z, 5), z)

    def test_shift_by_one(self):
        a, b, c, d = 1, 2, 3, 4
        assert np.array_equal(cyclic_shift([a, b, c, d], 1), [d, a, b, c])

    def test_shift_range_checked(self):
        with pytest.raises(ArgumentError):
            cyclic_shift([1, 2, 3], 4)
        with pytest.raises(ArgumentError):
            cyclic_shift([1, 2, 3], 1.5)

    def test_first_columns(self):
        rng = np.random.default_rng(6)
        z = cgauss(rng, 6)
        assert rel(apply_circulant(z, e(6)), z) <= 1e-14
        assert rel(apply_circulant(z, e(6), "check"), z) <= 1e-14

    def test_both_variants_match_dense(self):
        rng = np.random.default_rng(7)
        z, v = cgauss(rng, 4), cgauss(rng, 4)
        for variant in ("standard", "check"):
            dense = circulant_matrix(z, variant) @ v
            assert rel(apply_circulant(z, v, variant), dense) <= 1e-12

    def test_check_layout(self):
        z = np.array([1, 2, 3, 4.0])
        C = circulant_matrix(z, "check").real
        assert np.array_equal(C[0], z) and np.array_equal(C[1], [2, 3, 4, 1])
        C = circulant_matrix(z).real
        assert np.array_equal(C[:, 0], z) and np.array_equal(C[0], [1, 4, 3, 2])

    def test_unknown_variant(self):
        with pytest.raises(ArgumentError):
            apply_circulant([1, 2], [1, 2], "toeplitz")


class TestTangentSpace:
    def setup_method(self):
        rng = np.random.default_rng(8)
        self.n = 6
        self.h, self.x = unit(cgauss(rng, 6)), unit(cgauss(rng, 6))
        self.proj = TangentProjector(self.h, self.x)
        self.X = cgauss(rng, 6, 6)

    def test_generator_lies_in_T(self):
        M = np.outer(self.h, self.x)
        assert np.linalg.norm(project_tangent(M, self.proj, "Tperp")) <= 1e-12

    def test_projectors_complement(self):
        T = project_tangent(self.X, self.proj)
        P = project_tangent(self.X, self.proj, "Tperp")
        assert rel(T + P, self.X) <= 1e-14

    def test_against_basis_oracle(self):
        # T is spanned by ĥ e_kᵀ and e_k xᵀ; project onto it by least squares
        n, h, x = self.n, self.h, self.x
        basis = []
        for k in range(n):
            basis.append(np.outer(h, e(n, k)).ravel())
            basis.append(np.outer(e(n, k), x).ravel())
        B = np.array(basis).T
        coef, *_ = np.linalg.lstsq(B, self.X.ravel(), rcond=None)
        oracle = (B @ coef).reshape(n, n)
        assert rel(self.proj.tangent(self.X), oracle) <= 1e-10

    def test_requires_unit_generators(self):
        with pytest.raises(NormalizationError):
            TangentProjector(2 * self.h, self.x)
        with pytest.raises(ArgumentError):
            project_tangent(self.X, self.proj, "U")
        with pytest.raises(DimensionError):
            self.proj.tangent(np.ones((3, 3)))


class TestCoherence:
    def test_delta_and_constant(self):
        assert coherence_mu(e(8)) == pytest.approx(1.0, abs=1e-14)
        assert coherence_mu(np.ones(8) / np.sqrt(8)) == pytest.approx(8.0, rel=1e-14)

    def test_against_dense_dft(self):
        rng = np.random.default_rng(9)
        h = cgauss(rng, 16)
        F = np.exp(-2j * np.pi * np.outer(np.arange(16), np.arange(16)) / 16)
        oracle = np.max(np.abs(F @ h)) ** 2 / np.linalg.norm(h) ** 2
        assert coherence_mu(h) == pytest.approx(oracle, rel=1e-12)

    def test_mutual_single_index(self):
        assert mutual_coherence_mu_h(np.ones(5), [2]) == 0.0

    def test_mutual_separated_support_is_zero(self):
        rng = np.random.default_rng(10)
        h = np.zeros(40, complex)
        h[:5] = cgauss(rng, 5)
        assert mutual_coherence_mu_h(h, [0, 5, 17, 30]) == 0.0

    def test_mutual_against_shift_oracle(self):
        rng = np.random.default_rng(11)
        h = cgauss(rng, 8)
        s1, s3 = np.roll(h, 1), np.roll(h, 3)
        oracle = abs(np.vdot(s1, s3)) / np.linalg.norm(h) ** 2
        assert mutual_coherence_mu_h(h, [1, 3]) == pytest.approx(oracle, rel=1e-12)

    def test_mutual_empty_support(self):
        with pytest.raises(ArgumentError):
            mutual_coherence_mu_h(np.ones(4), [])


class TestPhaseDistance:
    def test_zero_cases(self):
        rng = np.random.default_rng(12)
        x = cgauss(rng, 5)
        assert phase_dist(x, x) == 0.0
        assert phase_dist(x, 1j * x) <= 1e-15

    def test_against_grid_search(self):
        rng = np.random.default_rng(13)
        x, y = cgauss(rng, 8), cgauss(rng, 8)
        thetas = np.linspace(0, 2 * np.pi, 100_000, endpoint=False)
        c = np.vdot(y, x)
        # ‖x - e^{iθ}y‖² = ‖x‖² + ‖y‖² - 2 Re(e^{-iθ}<y, x>)
        sq = np.vdot(x, x).real + np.vdot(y, y).real - 2 * np.real(np.exp(-1j * thetas) * c)
        assert abs(phase_dist(x, y) - np.sqrt(sq.min())) <= 1e-4

    def test_optimal_phase_attains_minimum(self):
        rng = np.random.default_rng(14)
        x, y = cgauss(rng, 6), cgauss(rng, 6)
        p = optimal_phase(x, y)
        assert abs(abs(p) - 1) <= 1e-15
        assert np.linalg.norm(x - p * y) == pytest.approx(phase_dist(x, y), rel=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 20), st.floats(0, 2 * np.pi), st.integers(0, 2**32 - 1))
    def test_phase_invariance(self, n, theta, seed):
        rng = np.random.default_rng(seed)
        x, y = cgauss(rng, n), cgauss(rng, n)
        assert phase_dist(x, np.exp(1j * theta) * y) == pytest.approx(phase_dist(x, y), rel=1e-9, abs=1e-12)
