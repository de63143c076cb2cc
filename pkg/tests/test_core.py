import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn
from gfdmrx.core import (
    GfdmParams,
    PulseKind,
    WindowMatrix,
    WindowRole,
    compute_tx_window,
    dft,
    dft_matrix,
    equal_amplitude_columns,
    idft,
    make_pulse,
    raised_cosine_fd,
    reshape_v,
    unreshape_v,
    unvec,
    vec,
    zf_rx_window,
)
from gfdmrx.errors import ConfigError, SingularWindowError


class TestParams:
    def test_block_length(self):
        p = GfdmParams(8, 4)
        assert p.N == 32
        assert p.shape == (8, 4)

    @pytest.mark.parametrize("K,M,cp", [(0, 4, 0), (4, 0, 0), (4, 4, -1), (2.5, 4, 0)])
    def test_rejects_bad_geometry(self, K, M, cp):
        with pytest.raises(ConfigError):
            GfdmParams(K, M, cp)


class TestDft:
    def test_impulse(self):
        np.testing.assert_allclose(dft(np.array([1, 0, 0, 0])), np.ones(4))

    def test_dc(self):
        np.testing.assert_allclose(dft(np.array([1.0, 1.0])), [2.0, 0.0], atol=1e-15)

    def test_inverse_pair(self, rng):
        x = crandn(rng, 8)
        assert np.abs(idft(dft(x)) - x).max() < 1e-12

    @pytest.mark.parametrize("Q", [1, 2, 3, 8, 16, 31])
    def test_matrix_convention(self, Q):
        F = dft_matrix(Q)
        assert np.abs(F.conj().T @ F - Q * np.eye(Q)).max() < 1e-10
        x = np.arange(Q) + 1j
        np.testing.assert_allclose(F @ x, dft(x), atol=1e-10)


class TestReshape:
    def test_row_major(self):
        X = reshape_v(np.array([1, 2, 3, 4]), GfdmParams(2, 2))
        np.testing.assert_array_equal(X, [[1, 2], [3, 4]])

    def test_single_subsymbol_is_column(self):
        X = reshape_v(np.array(["a", "b", "c"]), GfdmParams(3, 1))
        assert X.shape == (3, 1)
        assert list(X[:, 0]) == ["a", "b", "c"]

    def test_inverse_n24(self, rng):
        x = crandn(rng, 24)
        np.testing.assert_array_equal(unreshape_v(reshape_v(x, GfdmParams(4, 6))), x)

    def test_batched(self, rng):
        p = GfdmParams(3, 4)
        x = crandn(rng, (5, 12))
        X = reshape_v(x, p)
        assert X.shape == (5, 3, 4)
        np.testing.assert_array_equal(X[2], reshape_v(x[2], p))

    def test_wrong_length(self):
        with pytest.raises(ConfigError):
            reshape_v(np.zeros(7), GfdmParams(2, 4))

    def test_vec_is_column_major(self):
        D = np.array([[1, 2, 3], [4, 5, 6]])
        np.testing.assert_array_equal(vec(D), [1, 4, 2, 5, 3, 6])
        np.testing.assert_array_equal(unvec(vec(D), GfdmParams(2, 3)), D)

    @settings(max_examples=60, deadline=None)
    @given(K=st.integers(1, 9), M=st.integers(1, 9), seed=st.integers(0, 2**32 - 1))
    def test_roundtrips(self, K, M, seed):
        p = GfdmParams(K, M)
        x = crandn(np.random.default_rng(seed), p.N)
        np.testing.assert_array_equal(unreshape_v(reshape_v(x, p)), x)
        np.testing.assert_array_equal(vec(unvec(x, p)), x)


class TestPulses:
    def test_rect_td(self):
        p = make_pulse("rect-td", GfdmParams(4, 2))
        np.testing.assert_allclose(p.g, np.full(8, 1 / np.sqrt(8)), atol=1e-15)
        expected = np.zeros(8)
        expected[0] = np.sqrt(8)
        np.testing.assert_allclose(p.g_fd, expected, atol=1e-12)

    def test_rect_fd(self):
        p = make_pulse("rect-fd", GfdmParams(1, 8))
        expected = np.zeros(8)
        expected[0] = 1.0
        np.testing.assert_array_equal(p.g, expected)

    def test_rc_alpha0_support(self):
        p = make_pulse("rc", GfdmParams(4, 4), 0.0)
        mag = np.abs(p.g_fd)
        support = mag > 1e-9
        assert support.sum() == 4
        np.testing.assert_allclose(mag[support], mag[support][0], rtol=1e-12)

    @pytest.mark.parametrize("M", [3, 4, 5, 16])
    def test_rc_alpha0_support_is_m_bins(self, M):
        assert np.count_nonzero(raised_cosine_fd(GfdmParams(8, M), 0.0)) == M

    def test_chirp_samples(self):
        K = 4
        p = make_pulse("chirp", GfdmParams(K, 3))
        n = np.arange(K)
        np.testing.assert_allclose(p.g[:K], np.exp(1j * np.pi * n**2 / K) / 2.0, atol=1e-15)
        assert np.all(p.g[K:] == 0)

    @pytest.mark.parametrize("kind", list(PulseKind))
    @pytest.mark.parametrize("K,M", [(2, 2), (4, 3), (8, 4), (32, 16)])
    def test_unit_energy(self, kind, K, M):
        p = make_pulse(kind, GfdmParams(K, M), 0.8 if kind is PulseKind.PERIODIC_RC else 0.0)
        assert abs(np.linalg.norm(p.g) ** 2 - 1) < 1e-12
        np.testing.assert_allclose(p.g_fd, dft(p.g), atol=1e-12)

    @pytest.mark.parametrize("M", [3, 5, 7])
    def test_rc_odd_m_real_even(self, M):
        g = make_pulse("rc", GfdmParams(6, M), 0.6).g
        assert np.abs(g.imag).max() < 1e-12
        np.testing.assert_allclose(g, np.roll(g[::-1], 1), atol=1e-12)

    @pytest.mark.parametrize("M", [2, 4, 8])
    def test_rc_even_m_symmetric_about_half_sample(self, M):
        # Spectrum centred half a bin up: g[l] e^{-j pi l/N} is real and even.
        p = GfdmParams(6, M)
        g = make_pulse("rc", p, 0.0 if M == 2 else 0.6).g
        l = np.arange(p.N)
        signed = np.where(l > p.N // 2, l - p.N, l)
        r = g * np.exp(-1j * np.pi * signed / p.N)
        # The wrapped grid is only symmetric away from the Nyquist sample.
        keep = l != p.N // 2
        assert np.abs(r.imag[keep]).max() < 1e-12
        lookup = dict(zip(signed, r.real))
        assert max(abs(lookup[s] - lookup[-s]) for s in signed if abs(s) < p.N // 2) < 1e-12

    @pytest.mark.parametrize("alpha", [-0.1, 1.0, 1.5])
    def test_rc_alpha_range(self, alpha):
        with pytest.raises(ConfigError):
            make_pulse("rc", GfdmParams(4, 4), alpha)

    def test_rc_rolloff_must_cover_a_bin(self):
        with pytest.raises(ConfigError):
            make_pulse("rc", GfdmParams(4, 4), 0.2)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_pulse("sinc", GfdmParams(4, 4))


def _window_by_definition(g_fd, K, M):
    """W[k, m] = sum_q exp(+j 2 pi k q / K) g_fd[m + q M]."""
    w = np.zeros((K, M), dtype=complex)
    for k in range(K):
        for m in range(M):
            for q in range(K):
                w[k, m] += np.exp(2j * np.pi * k * q / K) * g_fd[m + q * M]
    return w


class TestTxWindow:
    def test_matches_definition(self):
        for K, M in [(2, 2), (3, 4), (4, 3)]:
            p = GfdmParams(K, M)
            pulse = make_pulse("chirp", p)
            np.testing.assert_allclose(
                compute_tx_window(pulse, p).w, _window_by_definition(pulse.g_fd, K, M), atol=1e-12
            )

    def test_energy_constant_frozen(self):
        # Direct evaluation at K=2, M=2 gives sum |w|^2 = 8 = K * N for a unit-energy pulse.
        p = GfdmParams(2, 2)
        w = _window_by_definition(make_pulse("rc", p, 0.0).g_fd, 2, 2)
        assert abs(np.sum(np.abs(w) ** 2) - 8.0) < 1e-12

    @pytest.mark.parametrize("kind,K,M", [("rc", 8, 4), ("chirp", 5, 3), ("rect-td", 16, 1), ("rect-fd", 1, 16)])
    def test_energy_constant_general(self, kind, K, M):
        p = GfdmParams(K, M)
        pulse = make_pulse(kind, p, 0.5 if kind == "rc" else 0.0)
        w = compute_tx_window(pulse, p)
        assert abs(np.sum(np.abs(w.w) ** 2) - K * p.N) < 1e-9
        assert abs(np.sum(np.abs(w.w) ** 2) - K * np.linalg.norm(pulse.g_fd) ** 2) < 1e-9

    def test_ofdm_window(self):
        p = GfdmParams(512, 1)
        w = compute_tx_window(make_pulse("rect-td", p), p)
        assert w.shape == (512, 1)
        np.testing.assert_allclose(w.w, np.sqrt(512) * np.ones((512, 1)), atol=1e-9)

    def test_ofdm_window_small_scale(self):
        p = GfdmParams(8, 1)
        pulse = make_pulse("rect-td", p)
        np.testing.assert_allclose(
            compute_tx_window(pulse, p).w, _window_by_definition(pulse.g_fd, 8, 1), atol=1e-12
        )

    def test_sc_window(self):
        p = GfdmParams(1, 512)
        pulse = make_pulse("rect-fd", p)
        w = compute_tx_window(pulse, p)
        assert w.shape == (1, 512)
        np.testing.assert_allclose(w.w[0], pulse.g_fd, atol=1e-12)

    def test_alpha0_flat(self):
        p = GfdmParams(32, 16)
        w = compute_tx_window(make_pulse("rc", p, 0.0), p)
        assert np.allclose(np.abs(w.w), np.abs(w.w[0, 0]), rtol=1e-9)
        assert equal_amplitude_columns(w).all()

    def test_rolloff_not_flat(self):
        p = GfdmParams(8, 4)
        w = compute_tx_window(make_pulse("rc", p, 0.5), p)
        assert not equal_amplitude_columns(w).all()
        assert np.abs(w.w).min() > 1e-3

    def test_length_mismatch(self):
        with pytest.raises(ConfigError):
            compute_tx_window(make_pulse("rc", GfdmParams(4, 4)), GfdmParams(4, 3))


class TestZfWindow:
    def test_ones(self):
        w = zf_rx_window(WindowMatrix(np.ones((4, 3))))
        np.testing.assert_array_equal(w.w, np.ones((4, 3)))
        assert w.role is WindowRole.RX

    def test_twos(self):
        np.testing.assert_array_equal(zf_rx_window(WindowMatrix(np.full((2, 2), 2.0))).w, 0.5)

    def test_zero_entry(self):
        w = np.ones((3, 3), dtype=complex)
        w[1, 2] = 0
        with pytest.raises(SingularWindowError) as info:
            zf_rx_window(WindowMatrix(w))
        assert info.value.index == (1, 2)

    def test_product_is_one(self):
        p = GfdmParams(8, 4)
        w = compute_tx_window(make_pulse("rc", p, 0.8), p)
        assert np.abs(zf_rx_window(w).w * w.w - 1).max() < 1e-10

    def test_rect_td_with_subsymbols_is_singular(self):
        p = GfdmParams(4, 3)
        with pytest.raises(SingularWindowError):
            zf_rx_window(compute_tx_window(make_pulse("rect-td", p), p))
