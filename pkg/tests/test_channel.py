import numpy as np
import pytest

from rfpa_isac import channel as ch
from rfpa_isac import sigmodel as sm
from rfpa_isac.config import SCHEMES, default_config
from rfpa_isac.errors import DimensionMismatch, IllConditioned


def test_draw_is_deterministic_per_seed_and_pulse(cfg):
    a = ch.draw_channel(cfg, 0, 11)
    assert a.entries.shape == (cfg.N, cfg.M)
    assert np.array_equal(a.entries, ch.draw_channel(cfg, 0, 11).entries)
    assert not np.array_equal(a.entries, ch.draw_channel(cfg, 0, 12).entries)
    assert not np.array_equal(a.entries, ch.draw_channel(cfg, 1, 11).entries)
    assert not np.array_equal(a.entries, ch.draw_channel(cfg, 0, 11, ch.ROLE_EVE).entries)


def test_unit_mean_power():
    cfg = default_config(M=1, N=1)
    rng = np.random.default_rng(0)
    h = np.array([ch.draw_channel(cfg, 0, rng).entries[0, 0] for _ in range(100_000)])
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.02)


def test_identity_noiseless_transmit(cfg, rng):
    x = sm.ComplexSignal(ch.crandn(rng, (cfg.M, 100)), cfg.f_s)
    r = ch.transmit(x, ch.ChannelMatrix(np.eye(cfg.M)), 0.0, rng)
    assert np.array_equal(r.samples, x.samples)
    H = ch.draw_channel(cfg, 0, 1)
    r = ch.transmit(x, H, 0.0, rng)
    assert np.allclose(r.samples, H.entries @ x.samples, rtol=0, atol=1e-13)


def test_noise_variance_moment():
    rng = np.random.default_rng(5)
    x = sm.ComplexSignal(np.zeros((1, 100_000)), 1.0)
    r = ch.transmit(x, ch.ChannelMatrix([[1.0]]), 1.0, rng)
    assert np.var(r.samples) == pytest.approx(1.0, abs=0.02)


def test_transmit_dimension_check(cfg):
    x = sm.ComplexSignal(np.zeros((3, 4)), cfg.f_s)
    with pytest.raises(DimensionMismatch):
        ch.transmit(x, ch.draw_channel(cfg, 0, 0), 0.0, None)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_equalize_inverts_channel(scheme, rng):
    cfg = default_config(scheme=scheme)
    sec = sm.random_secrets(cfg, rng)
    x = sm.generate_pulse(cfg, sm.encode_message(sm.random_bits(cfg, rng), cfg, 0), sec, 0)
    for seed in range(5):
        H = ch.draw_channel(cfg, 0, seed)
        xh = ch.equalize(ch.transmit(x, H, 0.0, None), H)
        assert np.linalg.norm(xh.samples - x.samples) <= 1e-9 * np.linalg.norm(x.samples)


def test_equalize_identity_and_tall_channel(rng):
    cfg = default_config(N=12)
    x = sm.ComplexSignal(ch.crandn(rng, (cfg.M, 50)), cfg.f_s)
    assert np.allclose(ch.equalize(x, ch.ChannelMatrix(np.eye(cfg.M))).samples, x.samples)
    H = ch.draw_channel(cfg, 0, 3)
    assert H.entries.shape == (12, 8)
    assert np.allclose(ch.equalize(ch.transmit(x, H, 0, None), H).samples, x.samples, atol=1e-12)


def test_rank_deficient_channel_rejected(cfg):
    H = ch.draw_channel(cfg, 0, 0).entries.copy()
    H[:, 1] = H[:, 0]
    with pytest.raises(IllConditioned):
        ch.equalize(sm.ComplexSignal(np.zeros((cfg.N, 4)), cfg.f_s), ch.ChannelMatrix(H))


def test_noise_calibration_identity_channel():
    # per-sample SNR after equalization should be Es/N0 = (bits/sample) * Eb/N0
    cfg = default_config(M=1, N=1)
    rng = np.random.default_rng(9)
    x = sm.ComplexSignal(np.ones((1, 10_000)), cfg.f_s)
    bits = 10_000
    for ebn0 in (0.0, 10.0):
        nv = ch.noise_variance(x, bits, ebn0, ch.ChannelMatrix([[1.0]]))
        xh = ch.equalize(ch.transmit(x, ch.ChannelMatrix([[1.0]]), nv, rng), ch.ChannelMatrix([[1.0]]))
        snr = 10 * np.log10(1.0 / np.mean(np.abs(xh.samples - 1.0) ** 2))
        assert snr == pytest.approx(ebn0, abs=0.5)


def test_noise_level_referenced_to_equalizer_output(cfg):
    H = ch.draw_channel(cfg, 0, 2)
    x = sm.ComplexSignal(np.ones((cfg.M, 10)), cfg.f_s)
    raw = ch.noise_variance(x, 40, 10.0)
    eq = ch.noise_variance(x, 40, 10.0, H)
    g = np.linalg.inv(H.entries.conj().T @ H.entries)
    assert eq * np.trace(g).real / cfg.M == pytest.approx(raw)
    assert ch.noise_variance(x, 40, float("inf")) == 0.0


def test_probe_noiseless_is_reciprocal(rng):
    p = ch.probe_cir(100, float("inf"), rng)
    assert np.array_equal(p.alice, p.bob)


def test_probe_correlation_matches_snr():
    p = ch.probe_cir(100_000, 10.0, np.random.default_rng(3))
    rho = np.abs(np.vdot(p.alice, p.bob)) / np.sqrt(np.vdot(p.alice, p.alice).real * np.vdot(p.bob, p.bob).real)
    assert rho == pytest.approx(1 / 1.1, abs=0.01)


@pytest.mark.parametrize("snr", [0.0, 10.0, 30.0])
def test_probe_eve_independent(snr):
    # L |rho|^2 is Exp(1) under independence, so the 0.02 bound has a ~1.8% false-alarm rate per stream
    p = ch.probe_cir(10_000, snr, np.random.default_rng([100, int(snr)]))
    rho = np.abs(np.vdot(p.alice, p.eve)) / np.sqrt(np.vdot(p.alice, p.alice).real * np.vdot(p.eve, p.eve).real)
    assert rho < 0.02


def test_probe_csv(tmp_path, rng):
    p = ch.probe_cir(5, 20.0, rng)
    path = tmp_path / "probe.csv"
    p.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,re_a,im_a,re_b,im_b,re_e,im_e"
    assert len(lines) == 6
    assert float(lines[1].split(",")[1]) == p.alice[0].real
