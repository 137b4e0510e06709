import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phsar.pst import apply_pst, build_kernel, pst_feature, radial_frequency

from oracles import phase_profile, pst_direct


class TestKernel:
    def test_zero_strength_is_zero_phase(self):
        k = build_kernel(9, 6, strength=0.0)
        assert np.all(k.phase == 0.0)

    @pytest.mark.parametrize("w, h", [(1, 1), (8, 8), (7, 10)])
    def test_dc_terms(self, w, h):
        k = build_kernel(w, h, 0.8, 3.0, 0.2)
        assert k.phase[0, 0] == 0.0
        assert k.lp_gain[0, 0] == 1.0

    def test_profile_value_8x8(self):
        k = build_kernel(8, 8, 0.5, 12.5, 0.3)
        # (u, v) = (0.25, 0) sits at column 2, row 0 of the FFT-ordered grid
        expected = 0.5 * phase_profile(0.25, 12.5) / phase_profile(math.hypot(0.5, 0.5), 12.5)
        assert k.phase[0, 2] == pytest.approx(expected, abs=1e-14)
        assert k.phase[0, 2] == pytest.approx(0.1285998058047412, abs=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(1, 17), st.integers(1, 17),
        st.floats(0, 3), st.floats(0.1, 50), st.floats(0.05, 2),
    )
    def test_kernel_invariants(self, w, h, s, warp, sigma):
        k = build_kernel(w, h, s, warp, sigma)
        phi = k.phase
        assert np.all(np.isfinite(phi))
        assert phi[0, 0] == 0.0 and k.lp_gain[0, 0] == 1.0
        flipped = np.roll(phi[::-1, ::-1], (1, 1), axis=(0, 1))
        np.testing.assert_allclose(phi, flipped, atol=1e-15)
        r = radial_frequency(w, h)
        order = np.argsort(r, axis=None, kind="stable")
        assert np.all(np.diff(phi.ravel()[order]) >= -1e-12)
        if r.max() > 0:
            assert phi.max() == pytest.approx(s, abs=1e-12)

    @pytest.mark.parametrize("kw", [{"warp": 0}, {"lp_sigma": -1}, {"strength": -0.1}])
    def test_bad_params(self, kw):
        with pytest.raises(ValueError):
            build_kernel(4, 4, **kw)


class TestApply:
    def test_impulse_matches_direct_dft(self):
        img = np.zeros((8, 8))
        img[0, 0] = 1.0
        k = build_kernel(8, 8, 0.5, 12.5, 0.3)
        expected = pst_direct(img.tolist(), 0.5, 12.5, 0.3)
        np.testing.assert_allclose(apply_pst(img, k), expected, rtol=0, atol=1e-9)

    @pytest.mark.parametrize("c", [0.7, 1.0, 1e-3])
    def test_constant_image(self, c):
        out = apply_pst(np.full((12, 9), c), build_kernel(9, 12))
        assert np.abs(out).max() <= 1e-9

    def test_zero_strength_any_image(self, rng):
        img = rng.uniform(0.05, 1.0, (16, 11))
        out = apply_pst(img, build_kernel(11, 16, strength=0.0))
        assert np.abs(out).max() <= 1e-9

    def test_range(self, rng):
        img = rng.random((20, 20))
        out = apply_pst(img, build_kernel(20, 20, 2.5, 5.0, 0.5))
        assert np.all(np.abs(out) <= np.pi)

    def test_shift_covariance(self, rng):
        img = rng.random((16, 12))
        k = build_kernel(12, 16)
        shifted = np.roll(img, (3, -5), axis=(0, 1))
        np.testing.assert_allclose(
            apply_pst(shifted, k), np.roll(apply_pst(img, k), (3, -5), axis=(0, 1)), atol=1e-9
        )

    def test_edge_response(self):
        img = np.zeros((32, 32))
        img[:, 16:] = 1.0
        out = np.abs(apply_pst(img, build_kernel(32, 32)))
        # phase concentrates at the step, not in the flat interior of the bright half
        assert out[:, 15:17].mean() > 10 * out[:, 22:26].mean()

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            apply_pst(np.zeros((4, 5)), build_kernel(4, 4))


class TestFeature:
    def test_zero(self):
        assert pst_feature(np.zeros(9)) == 0.0

    def test_symmetric(self):
        assert pst_feature([np.pi / 2, -np.pi / 2]) == np.pi / 2

    def test_direct_sum(self, rng):
        v = rng.uniform(-np.pi, np.pi, 9)
        assert pst_feature(v) == pytest.approx(sum(abs(x) for x in v) / 9, abs=1e-15)

    def test_empty(self):
        with pytest.raises(ValueError):
            pst_feature([])
