import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinchrl.channel import (
    BlockageRealization,
    ChannelParams,
    achievable_rate,
    assemble,
    guided_wavelength,
    los_prob,
    noise_power,
    sample_blockage,
    waveguide_channel,
    wireless_channel,
)
from pinchrl.geometry import PinchingConfig, WaveguideLayout, point3

LAYOUT = WaveguideLayout()
PARAMS = ChannelParams()


def random_instance(rng, layout=LAYOUT, params=PARAMS):
    config = PinchingConfig.from_flat(layout, rng.uniform(0, 100, layout.total_pas))
    user = point3(rng.uniform(0, 100), rng.uniform(5, 30))
    blockage = sample_blockage(rng, layout, config, user, params)
    return config, user, blockage, assemble(layout, config, user, blockage, params)


def test_guided_wavelength():
    assert guided_wavelength(0.0111, 1.0) == 0.0111
    assert guided_wavelength(0.0111, 1.4) == pytest.approx(0.0079286, rel=1e-4)
    assert guided_wavelength(0.0111, 2.8) == pytest.approx(guided_wavelength(0.0111, 1.4) / 2)


def test_waveguide_channel_at_feed_and_one_wavelength():
    lg = PARAMS.guided_wavelength
    cfg = PinchingConfig((np.array([0.0, lg, 3 * lg, 50.0]), np.zeros(4) + [0, 1, 2, 3]))
    g = waveguide_channel(LAYOUT, cfg, 0, PARAMS)
    root = np.sqrt(0.25)
    assert g[0] == root + 0j
    assert g[1] == pytest.approx(root + 0j, abs=1e-12)
    assert g[2] == pytest.approx(root + 0j, abs=1e-12)


@given(st.lists(st.floats(-200, 200), min_size=4, max_size=4))
def test_waveguide_channel_is_lossless(xs):
    cfg = PinchingConfig((np.array(xs), np.zeros(4)))
    g = waveguide_channel(LAYOUT, cfg, 0, PARAMS)
    np.testing.assert_allclose(np.abs(g), 0.5, rtol=0, atol=1e-12)


def test_delta_eq_bound_checked():
    with pytest.raises(ValueError):
        ChannelParams(delta_eq=0.5).delta_for(LAYOUT)
    assert ChannelParams(delta_eq=0.1).delta_for(LAYOUT).tolist() == [0.1, 0.1]


def test_los_prob_values():
    assert los_prob(0.0, 0.05) == 1.0
    assert los_prob(123.0, 0.0) == 1.0
    assert los_prob(20.0, 0.05) == pytest.approx(np.exp(-1.0), rel=1e-12)
    assert los_prob(20.0, 0.05) == pytest.approx(0.367879, abs=1e-6)


@given(st.floats(0, 500), st.floats(0, 500), st.floats(0, 1), st.floats(0, 1))
def test_los_prob_monotone(d1, d2, b1, b2):
    assert los_prob(max(d1, d2), b1) <= los_prob(min(d1, d2), b1)
    assert los_prob(d1, max(b1, b2)) <= los_prob(d1, min(b1, b2))


def test_sample_blockage_no_blockage_when_beta_zero():
    params = ChannelParams(beta=0.0)
    config = PinchingConfig.uniform(LAYOUT)
    b = sample_blockage(np.random.default_rng(0), LAYOUT, config, point3(90, 30), params)
    assert b.los.tolist() == [1] * 8
    assert np.all((b.phases >= 0) & (b.phases < 2 * np.pi))


def test_sample_blockage_reproducible():
    config = PinchingConfig.uniform(LAYOUT)
    a = sample_blockage(np.random.default_rng(7), LAYOUT, config, point3(40, 10), PARAMS)
    b = sample_blockage(np.random.default_rng(7), LAYOUT, config, point3(40, 10), PARAMS)
    np.testing.assert_array_equal(a.los, b.los)
    np.testing.assert_array_equal(a.phases, b.phases)


def test_sample_blockage_binomial_frequency():
    # one PA whose distance to the user is exactly 20 m
    layout = WaveguideLayout((100.0,), (10.0,), (0.0,), (1,))
    config = PinchingConfig((np.array([50.0]),))
    user = point3(50.0, np.sqrt(300.0))
    assert np.linalg.norm(config.points(layout)[0] - user) == pytest.approx(20.0)
    rng = np.random.default_rng(11)
    n = 100_000
    hits = sum(int(sample_blockage(rng, layout, config, user, PARAMS).los[0]) for _ in range(n))
    p = np.exp(-1.0)
    assert abs(hits / n - p) <= 3 * np.sqrt(p * (1 - p) / n)


def test_wireless_channel_below_pa():
    h = wireless_channel(point3(50, 0, 10), point3(50, 0, 0), 1, 0.0, PARAMS)
    assert abs(h) == pytest.approx(PARAMS.eta_los_value * 10 ** -1.95, rel=1e-12)
    assert PARAMS.eta_los_value == pytest.approx(0.0111 / (4 * np.pi))


def test_wireless_channel_distance_and_phase():
    pa, user = point3(50, 0, 10), point3(50, 5, 0)
    d = np.sqrt(125.0)
    assert d == pytest.approx(11.18034, abs=1e-5)
    h = wireless_channel(pa, user, 1, 0.0, PARAMS)
    expected = PARAMS.eta_los_value * np.exp(-2j * np.pi * d / PARAMS.wavelength) / d ** 1.95
    assert h == pytest.approx(expected, rel=1e-9)
    hn = wireless_channel(pa, user, 0, 1.3, PARAMS)
    assert hn == pytest.approx(PARAMS.eta_nlos_value * np.exp(-1.3j) / d ** 2.2, rel=1e-12)


def test_wireless_channel_power_law_ratio():
    user = point3(0, 0, 0)
    near = wireless_channel(point3(0, 0, 10), user, 1, 0.0, PARAMS)
    far = wireless_channel(point3(0, 0, 20), user, 1, 0.0, PARAMS)
    assert abs(far) / abs(near) == pytest.approx(2 ** -1.95, rel=1e-12)


def test_wireless_channel_rejects_coincident_points():
    with pytest.raises(ValueError):
        wireless_channel(point3(1, 2, 3), point3(1, 2, 3), 1, 0.0, PARAMS)


@given(st.floats(1.01, 300), st.floats(1.01, 300))
def test_modulus_ordering(d1, d2):
    def los(d):
        return abs(wireless_channel(point3(0, 0, d), point3(0, 0, 0), 1, 0.0, PARAMS))

    def nlos(d):
        return abs(wireless_channel(point3(0, 0, d), point3(0, 0, 0), 0, 0.0, PARAMS))

    lo, hi = sorted((d1, d2))
    assert los(hi) <= los(lo)
    assert nlos(d1) < los(d1)


def test_assemble_dimensions_and_sparsity():
    rng = np.random.default_rng(3)
    _, _, _, chan = random_instance(rng)
    assert chan.H.shape == (8,)
    assert chan.G.shape == (8, 2)
    assert np.count_nonzero(chan.G[:, 0]) == 4 and np.count_nonzero(chan.G[:, 1]) == 4
    assert np.all(chan.G[4:, 0] == 0) and np.all(chan.G[:4, 1] == 0)
    np.testing.assert_array_equal(chan.H, np.concatenate(chan.h))
    gram = chan.G.conj().T @ chan.G
    np.testing.assert_allclose(gram, np.diag([4 * 0.25, 4 * 0.25]), atol=1e-12)


def test_assemble_degenerate_single_pa():
    layout = WaveguideLayout((100.0,), (10.0,), (0.0,), (1,))
    config = PinchingConfig((np.array([20.0]),))
    b = BlockageRealization(np.array([1], dtype=np.int8), np.array([0.0]))
    chan = assemble(layout, config, point3(10, 10), b, PARAMS)
    assert chan.H.shape == (1,) and chan.G.shape == (1, 1)


def test_assemble_dimension_mismatch():
    config = PinchingConfig((np.zeros(3), np.zeros(4)))
    b = BlockageRealization(np.ones(8, dtype=np.int8), np.zeros(8))
    with pytest.raises(ValueError):
        assemble(LAYOUT, config, point3(1, 5), b, PARAMS)


def test_achievable_rate_zero_beam():
    _, _, _, chan = random_instance(np.random.default_rng(4))
    assert achievable_rate(chan, np.zeros(2), 1e-12) == 0.0


def test_achievable_rate_unit_snr():
    layout = WaveguideLayout((100.0,), (10.0,), (0.0,), (1,))
    params = ChannelParams(delta_eq=1.0, eta_los=10.0 ** 1.95, eta_nlos=1.0)
    config = PinchingConfig((np.array([50.0]),))
    b = BlockageRealization(np.array([1], dtype=np.int8), np.array([0.0]))
    chan = assemble(layout, config, point3(50, 0), b, params)
    assert abs(chan.H[0]) == pytest.approx(1.0)
    assert achievable_rate(chan, np.array([1.0]), 1.0) == pytest.approx(1.0, rel=1e-12)


def test_achievable_rate_matches_explicit_loop():
    rng = np.random.default_rng(5)
    for _ in range(50):
        config, user, blockage, chan = random_instance(rng)
        w = rng.normal(size=2) + 1j * rng.normal(size=2)
        noise = PARAMS.noise_power
        total = 0j
        k = 0
        for n in range(LAYOUT.n_waveguides):
            for p, x in enumerate(config.positions[n]):
                pa = point3(x, LAYOUT.offsets[n], LAYOUT.heights[n])
                h = wireless_channel(pa, user, blockage.los[k], blockage.phases[k], PARAMS)
                g = 0.5 * np.exp(-2j * np.pi * abs(x) / PARAMS.guided_wavelength)
                total += h * g * w[n]
                k += 1
        assert achievable_rate(chan, w, noise) == pytest.approx(np.log2(1 + abs(total) ** 2 / noise), rel=1e-10)


def test_noise_power():
    assert noise_power(-174, 1) == pytest.approx(10 ** -20.4, rel=1e-12)
    assert noise_power(-174, 1e6) == pytest.approx(10 ** -14.4, rel=1e-12)
    assert noise_power(-174, 1e7) == pytest.approx(10 * noise_power(-174, 1e6), rel=1e-12)
    with pytest.raises(ValueError):
        noise_power(-174, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * np.pi), st.floats(1.0, 10.0))
def test_rate_phase_invariance_and_power_monotonicity(seed, theta, scale):
    rng = np.random.default_rng(seed)
    _, _, _, chan = random_instance(rng)
    w = rng.normal(size=2) + 1j * rng.normal(size=2)
    w *= np.sqrt(0.1) / np.linalg.norm(w)
    noise = PARAMS.noise_power
    base = achievable_rate(chan, w, noise)
    assert achievable_rate(chan, w * np.exp(1j * theta), noise) == pytest.approx(base, rel=1e-12)
    assert achievable_rate(chan, scale * w, noise) >= base


def test_matched_filter_cauchy_schwarz_equality():
    rng = np.random.default_rng(6)
    for _ in range(100):
        _, _, _, chan = random_instance(rng)
        eff = chan.G.conj().T @ chan.H
        w = 0.3 * eff / np.linalg.norm(eff)
        amp = abs(chan.H.conj() @ chan.G @ w) ** 2
        assert amp == pytest.approx(np.linalg.norm(eff) ** 2 * 0.09, rel=1e-10)


def test_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(alpha_nlos=3.0)
    with pytest.raises(ValueError):
        ChannelParams(eta_los=1e-3, eta_nlos=2e-3)
    with pytest.raises(ValueError):
        ChannelParams(n_eff=0.5)
