import numpy as np
import pytest

from crpower.channel import (
    ChannelGains,
    PowerVector,
    SHADOWING_STD_DB,
    all_sinrs,
    build_gains,
    dbm_to_mw,
    mw_to_dbm,
    path_gain,
    pn_sinr,
    sn_sinr,
)
from crpower.topology import GridSpec, sample_placement


def test_path_gain_hand_value():
    # 200 m, no shadowing: 128.1 + 37.6*log10(0.2) + 10 = 111.819 dB
    g = path_gain(200.0, 0.0)
    assert 10.0 * np.log10(g) == pytest.approx(-111.819, abs=2e-3)
    assert g == pytest.approx(6.577e-12, rel=1e-3)


def test_path_gain_log_linearity():
    # +10 dB shadowing scales the gain by exactly 0.1
    for d in (50.0, 200.0, 555.0):
        assert path_gain(d, 10.0) == pytest.approx(0.1 * path_gain(d, 0.0),
                                                   rel=1e-12)


def test_path_gain_distance_clamp_and_errors():
    assert path_gain(0.5) == path_gain(1.0)
    with pytest.raises(ValueError):
        path_gain(float("nan"))
    with pytest.raises(ValueError):
        path_gain(100.0, float("inf"))


def test_shadowing_statistics():
    rng = np.random.default_rng(123)
    placement = sample_placement(GridSpec(), 2, rng)
    # recover shadowing samples by inverting the loss model on g_pp draws
    samples = []
    for _ in range(300):
        gains = build_gains(placement, rng)
        base = np.array([[path_gain(d) for d in row] for row in
                         _distances(placement)])
        shadow_db = 10.0 * np.log10(base / gains.g_pp)
        samples.append(shadow_db.ravel())
    samples = np.concatenate(samples)
    assert abs(np.mean(samples)) < 0.05 * SHADOWING_STD_DB
    assert np.std(samples) == pytest.approx(SHADOWING_STD_DB, rel=0.05)


def _distances(placement):
    from crpower.topology import pairwise_wrap_distances
    return pairwise_wrap_distances(placement.active_ap_positions,
                                   placement.pn_rx_positions, placement.grid)


def test_dbm_roundtrip():
    values = np.array([-130.0, -20.0, 0.0, 17.5, 40.0])
    back = mw_to_dbm(dbm_to_mw(values))
    np.testing.assert_allclose(back, values, rtol=1e-12)


def _single_link_gains(g: float, noise: float = 1e-13) -> ChannelGains:
    tiny = 1e-30
    return ChannelGains(
        g_pp=np.array([[g]]),
        g_ps=np.array([[tiny]]),
        g_ss=np.array([[tiny]]),
        g_sp=np.array([[tiny]]),
        noise_power_mw=noise,
    )


def test_pn_sinr_hand_value():
    # received power -100 dBm over -130 dBm noise and no interference: 30 dB
    g = 1e-10  # 0 dBm transmit * 1e-10 = -100 dBm received
    gains = _single_link_gains(g)
    powers = PowerVector(np.array([0.0]), np.array([0.0]))
    gamma = pn_sinr(0, gains, powers)
    assert gamma == pytest.approx(1e3, rel=1e-9)


def test_pn_sinr_unity_when_signal_equals_interference_plus_noise():
    gains = ChannelGains(
        g_pp=np.array([[1e-10]]),
        g_ps=np.array([[1e-10]]),
        g_ss=np.array([[1e-12]]),
        g_sp=np.array([[1e-12]]),
        noise_power_mw=1e-13,
    )
    # signal = 1e-10 mW; CR interference 0.999e-10 + noise 1e-13 = 1e-10
    powers = PowerVector(np.array([0.0]), np.array([0.999]))
    assert pn_sinr(0, gains, powers) == pytest.approx(1.0, rel=1e-12)


def test_cr_transmission_strictly_decreases_pn_sinr():
    rng = np.random.default_rng(4)
    placement = sample_placement(GridSpec(), 2, rng)
    gains = build_gains(placement, rng)
    pn_dbm = np.full(gains.n_pn, 30.0)
    base = [pn_sinr(i, gains, PowerVector(pn_dbm, np.zeros(2)))
            for i in range(gains.n_pn)]
    with_cr = [pn_sinr(i, gains, PowerVector(pn_dbm, np.array([1.0, 0.0])))
               for i in range(gains.n_pn)]
    assert all(w < b for w, b in zip(with_cr, base))


def test_sn_sinr_zero_when_off_and_degenerate_case():
    gains = _single_link_gains(1e-9)
    gains = ChannelGains(gains.g_pp, gains.g_ps, np.array([[1e-9]]),
                         gains.g_sp, gains.noise_power_mw)
    off = PowerVector(np.array([-20.0]), np.array([0.0]))
    assert sn_sinr(0, gains, off) == 0.0
    # lone CR, negligible PN interference: gamma = G*P/noise
    on = PowerVector(np.array([-20.0]), np.array([1.0]))
    expected = 1e-9 * 1.0 / (1e-30 * dbm_to_mw(-20.0) + 1e-13)
    assert sn_sinr(0, gains, on) == pytest.approx(expected, rel=1e-9)


def test_symmetric_cr_links_have_identical_sinr():
    own, cross, pn_leak = 1e-9, 1e-12, 1e-13
    gains = ChannelGains(
        g_pp=np.array([[1e-10]]),
        g_ps=np.array([[1e-13], [1e-13]]),
        g_ss=np.array([[own, cross], [cross, own]]),
        g_sp=np.array([[pn_leak, pn_leak]]),
    )
    powers = PowerVector(np.array([10.0]), np.array([0.5, 0.5]))
    assert sn_sinr(0, gains, powers) == pytest.approx(
        sn_sinr(1, gains, powers), rel=1e-12)


def test_sinr_monotonicity_in_powers():
    rng = np.random.default_rng(8)
    placement = sample_placement(GridSpec(), 2, rng)
    gains = build_gains(placement, rng)
    pn_dbm = np.full(gains.n_pn, 20.0)
    low = sn_sinr(0, gains, PowerVector(pn_dbm, np.array([0.1, 0.2])))
    high = sn_sinr(0, gains, PowerVector(pn_dbm, np.array([0.2, 0.2])))
    more_interf = sn_sinr(0, gains, PowerVector(pn_dbm, np.array([0.1, 0.4])))
    assert high > low
    assert more_interf < low


def test_all_sinrs_matches_scalar_ops():
    rng = np.random.default_rng(21)
    placement = sample_placement(GridSpec(), 2, rng)
    gains = build_gains(placement, rng)
    powers = PowerVector(rng.uniform(-20, 40, gains.n_pn),
                         np.array([0.0, 3.0]))
    pn, sn = all_sinrs(gains, powers)
    for i in range(gains.n_pn):
        assert pn[i] == pytest.approx(pn_sinr(i, gains, powers), rel=1e-12)
    for i in range(gains.n_cr):
        assert sn[i] == pytest.approx(sn_sinr(i, gains, powers), rel=1e-12)


def test_gain_validation():
    with pytest.raises(ValueError):
        _single_link_gains(2.0)        # gains must be <= 1
    with pytest.raises(ValueError):
        _single_link_gains(1e-10, noise=0.0)


def test_gains_json_roundtrip():
    rng = np.random.default_rng(31)
    placement = sample_placement(GridSpec(), 2, rng)
    gains = build_gains(placement, rng)
    back = ChannelGains.from_json(gains.to_json())
    np.testing.assert_allclose(back.g_pp, gains.g_pp)
    np.testing.assert_allclose(back.g_ss, gains.g_ss)
    assert back.noise_power_mw == gains.noise_power_mw
