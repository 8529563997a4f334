import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn
from spectral_cnn import fourier as F
from spectral_cnn.tensor import l2_norm_sq, real_inner


def brute_circular_conv(x, f):
    M, N = x.shape
    out = np.zeros((M, N))
    for m in range(M):
        for n in range(N):
            for i in range(M):
                for j in range(N):
                    out[m, n] += x[i, j] * f[(m - i) % M, (n - j) % N]
    return out


class TestDft:
    def test_delta(self):
        x = np.zeros((2, 2))
        x[0, 0] = 1.0
        y = F.dft2(x)
        assert y.frame is F.Frame.NATURAL
        np.testing.assert_allclose(y.spectrum, np.full((2, 2), 0.5), atol=1e-15)

    def test_constant(self):
        y = F.dft2(np.ones((3, 5))).spectrum
        assert y[0, 0] == pytest.approx(np.sqrt(15))
        y[0, 0] = 0
        assert np.max(np.abs(y)) < 1e-14

    def test_matches_reference(self, rng):
        x = rng.standard_normal((8, 8))
        assert np.max(np.abs(F.dft2(x).spectrum - F.dft2_reference(x))) < 1e-10

    def test_batched_per_slice(self, rng):
        x = rng.standard_normal((2, 3, 5, 4))
        y = F.dft2(x).spectrum
        assert np.max(np.abs(y[1, 2] - F.dft2_reference(x[1, 2]))) < 1e-10


class TestInverse:
    def test_round_trip(self, rng):
        x = rng.standard_normal((6, 6))
        back = F.idft2(F.dft2(x))
        assert np.max(np.abs(back.real - x)) < 1e-12
        assert np.max(np.abs(back.imag)) < 1e-12

    def test_dc_bin(self):
        y = np.zeros((4, 6), dtype=complex)
        y[0, 0] = np.sqrt(24)
        np.testing.assert_allclose(F.idft2(F.FrequencyMap(y)), np.ones((4, 6)), atol=1e-14)

    def test_matches_reference(self, rng):
        y = crandn(rng, 5, 5)
        ref = F.dft2_reference(y, inverse=True)
        assert np.max(np.abs(F.idft2(F.FrequencyMap(y)) - ref)) < 1e-10

    def test_conjugate_identity(self, rng):
        # inverse transform equals the conjugate of the forward transform of the conjugate
        y = crandn(rng, 4, 7)
        lhs = F.idft2(F.FrequencyMap(y))
        rhs = np.conj(F.dft2(np.conj(y)).spectrum)
        assert np.max(np.abs(lhs - rhs)) < 1e-13

    def test_rejects_shifted(self, rng):
        shifted = F.fftshift(F.dft2(rng.standard_normal((4, 4))))
        with pytest.raises(F.FrameError):
            F.idft2(shifted)


class TestShift:
    def test_even_roll(self):
        y = F.FrequencyMap(np.arange(4.0).reshape(4, 1) + 0j)
        out = F.fftshift(y).spectrum[:, 0].real
        # index 0 -> 2, 1 -> 3, 2 -> 0, 3 -> 1
        assert list(out) == [2.0, 3.0, 0.0, 1.0]

    def test_odd_roll(self):
        y = F.FrequencyMap(np.arange(5.0).reshape(5, 1) + 0j)
        out = F.fftshift(y).spectrum[:, 0].real
        assert out[2] == 0.0

    def test_round_trip(self, rng):
        y = F.dft2(rng.standard_normal((5, 4)))
        assert np.array_equal(F.ifftshift(F.fftshift(y)).spectrum, y.spectrum)

    def test_frame_mismatch(self, rng):
        y = F.dft2(rng.standard_normal((3, 3)))
        with pytest.raises(F.FrameError):
            F.ifftshift(y)
        with pytest.raises(F.FrameError):
            F.fftshift(F.fftshift(y))


class TestHermitian:
    def test_real_input_unchanged(self, rng):
        for shape in [(6, 6), (5, 7), (4, 5)]:
            y = F.dft2(rng.standard_normal(shape))
            assert np.max(np.abs(F.hermitian_project(y).spectrum - y.spectrum)) < 1e-14

    def test_imaginary_dc_vanishes(self):
        y = np.zeros((4, 4), dtype=complex)
        y[0, 0] = 3j
        assert F.hermitian_project(F.FrequencyMap(y)).spectrum[0, 0] == 0

    @pytest.mark.parametrize("n", [4, 5])
    def test_idempotent_self_adjoint(self, rng, n):
        a, b = crandn(rng, n, n), crandn(rng, n, n)
        pa = F.hermitian_part(a)
        assert np.max(np.abs(F.hermitian_part(pa) - pa)) < 1e-13
        assert abs(real_inner(pa, b) - real_inner(a, F.hermitian_part(b))) < 1e-13

    def test_special_bins_become_real(self, rng):
        y = F.hermitian_part(crandn(rng, 6, 8))
        for m, n in [(0, 0), (3, 0), (0, 4), (3, 4)]:
            assert y[m, n].imag == 0.0

    def test_is_conjugate_symmetric(self, rng):
        assert F.is_conjugate_symmetric(F.dft2(rng.standard_normal((6, 7))), 1e-12)
        assert not F.is_conjugate_symmetric(F.FrequencyMap(crandn(rng, 6, 7)), 1e-6)
        proj = F.hermitian_project(F.FrequencyMap(crandn(rng, 6, 7)))
        assert F.is_conjugate_symmetric(proj, 1e-13)
        assert F.is_conjugate_symmetric(F.fftshift(proj), 1e-13)

    def test_projected_inverse_is_real(self, rng):
        for shape in [(4, 4), (5, 6), (7, 7)]:
            z = F.hermitian_project(F.FrequencyMap(crandn(rng, *shape)))
            assert np.max(np.abs(F.idft2(z).imag)) < 1e-12


class TestConvolution:
    def test_delta_identity(self, rng):
        x = rng.standard_normal((5, 6))
        d = np.zeros((5, 6))
        d[0, 0] = 1.0
        for path in ("fft", "direct"):
            np.testing.assert_allclose(F.circular_conv(x, d, path), x, atol=1e-12)

    def test_constant(self, rng):
        f = rng.standard_normal((4, 4))
        for path in ("fft", "direct"):
            np.testing.assert_allclose(F.circular_conv(np.ones((4, 4)), f, path),
                                       np.full((4, 4), f.sum()), atol=1e-12)

    def test_paths_agree_with_quadruple_loop(self, rng):
        x, f = rng.standard_normal((5, 5)), rng.standard_normal((5, 5))
        ref = brute_circular_conv(x, f)
        assert np.max(np.abs(F.circular_conv(x, f, "fft") - ref)) < 1e-10
        assert np.max(np.abs(F.circular_conv(x, f, "direct") - ref)) < 1e-10

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            F.circular_conv(np.ones((3, 3)), np.ones((3, 4)))

    def test_duality(self, rng):
        x, f = rng.standard_normal((6, 5)), rng.standard_normal((6, 5))
        lhs = F.dft2(F.circular_conv(x, f, "direct")).spectrum
        rhs = np.sqrt(30) * F.dft2(x).spectrum * F.dft2(f).spectrum
        assert np.max(np.abs(lhs - rhs)) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 16), st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_fft_matches_reference_property(M, N, seed):
    x = crandn(np.random.default_rng(seed), M, N)
    assert np.max(np.abs(F.fft2u(x) - F.dft2_reference(x))) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 64), st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_parseval_property(M, N, seed):
    x = np.random.default_rng(seed).standard_normal((M, N))
    e = l2_norm_sq(x)
    assert abs(e - l2_norm_sq(F.dft2(x).spectrum)) <= 1e-12 * e


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.floats(-3, 3), st.floats(-3, 3),
       st.integers(0, 2**32 - 1))
def test_linearity_property(M, N, a, b, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((M, N)), rng.standard_normal((M, N))
    lhs = F.dft2(a * x + b * y).spectrum
    rhs = a * F.dft2(x).spectrum + b * F.dft2(y).spectrum
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, np.max(np.abs(lhs)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 17), st.integers(1, 17), st.integers(0, 2**32 - 1))
def test_real_inputs_conjugate_symmetric(M, N, seed):
    x = np.random.default_rng(seed).standard_normal((M, N))
    assert F.is_conjugate_symmetric(F.dft2(x), 1e-12)
