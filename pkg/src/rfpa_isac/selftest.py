"""Quick built-in invariant checks, one group per module (``rfpa-isac selftest``)."""

from __future__ import annotations

import numpy as np

from . import ambiguity, channel, codes, crkg, harness, receiver, sigmodel
from .config import default_config
from .errors import ConstraintViolation


def _check_sigmodel():
    try:
        default_config(delta_t=0.3e-6)
        raise AssertionError("delta_t mismatch accepted")
    except ConstraintViolation as exc:
        assert exc.name == "delta_t = 1/delta_f"
    assert list(codes.compose_code(0, 0, K=10, M=3)) == [0, 1, 2]
    assert codes.decompose_code([5, 3, 0, 4], K=6) == (9, 20)
    cfg = default_config(scheme="PH")
    rng = np.random.default_rng(0)
    msg = sigmodel.encode_message(np.zeros(sigmodel.bits_per_pulse(cfg), np.uint8), cfg)
    assert np.all(msg.phases == 0)
    x = sigmodel.generate_pulse(cfg, msg, sigmodel.random_secrets(cfg, rng), 0)
    assert np.isclose(x.energy(), cfg.M * cfg.Q * cfg.spc)


def _check_ambiguity():
    cfg = default_config(M=1, N=1, L=1, Phi_T=1, Phi_f=1, scheme="SIM")
    msg = sigmodel.PulseMessage(np.ones((cfg.Q, 1)), np.zeros((cfg.Q, 1)), np.zeros((cfg.Q, 1), int),
                                [0] * cfg.Q, [0] * cfg.Q)
    sec = sigmodel.zero_secrets(1)
    v0 = ambiguity.cross_af_closed(cfg, [msg], sec, 0, 0, 0.0, 0.0)
    assert np.isclose(v0, cfg.tau, rtol=1e-9)
    assert abs(ambiguity.cross_af_closed(cfg, [msg], sec, 0, 0, cfg.T_p, 0.0)) == 0


def _check_channel():
    cfg = default_config()
    a = channel.draw_channel(cfg, 0, 7)
    assert np.array_equal(a.entries, channel.draw_channel(cfg, 0, 7).entries)
    x = sigmodel.ComplexSignal(np.ones((cfg.M, 4)), cfg.f_s)
    r = channel.transmit(x, channel.ChannelMatrix(np.eye(cfg.M)), 0.0, None)
    assert np.array_equal(r.samples, x.samples)
    y = channel.equalize(channel.transmit(x, a, 0.0, None), a)
    assert np.allclose(y.samples, x.samples, rtol=1e-9, atol=1e-12)


def _check_receiver():
    rng = np.random.default_rng(1)
    for scheme in ("PH", "AMP", "SIM", "HYB"):
        cfg = default_config(scheme=scheme)
        sec = sigmodel.random_secrets(cfg, rng)
        bits = sigmodel.random_bits(cfg, rng)
        x = sigmodel.generate_pulse(cfg, sigmodel.encode_message(bits, cfg, 2), sec, 2)
        H = channel.draw_channel(cfg, 2, 3)
        out = receiver.decode_pulse(channel.transmit(x, H, 0.0, None), H, cfg, sec, 2)
        assert np.array_equal(out, bits), scheme


def _check_crkg():
    assert crkg.bdr([0, 1, 1, 0], [0, 1, 1, 0], 2) == 0.0
    assert crkg.bdr([0, 1], [1, 0], 2) == 1.0
    assert crkg.empirical_entropy([0, 1, 2, 3] * 4) == 2.0
    probe = channel.probe_cir(64, float("inf"), np.random.default_rng(2))
    a, b, _ = crkg.generate_labels(probe, 4, seed=0)
    assert np.array_equal(a, b) and np.all(np.bincount(a) == 16)


def _check_harness():
    cfg = default_config()
    assert harness.achievable_rate(cfg, "PH") == 16e6
    assert harness.achievable_rate(cfg, "HYB") == 44e6
    assert harness.secrecy_rate_estimate(0.0, 0.5) == 1.0


CHECKS = [("sigmodel", _check_sigmodel), ("ambiguity", _check_ambiguity), ("channel", _check_channel),
          ("receiver", _check_receiver), ("crkg", _check_crkg), ("harness", _check_harness)]


def run_all():
    results = []
    for name, fn in CHECKS:
        try:
            fn()
            results.append((name, True, ""))
        except Exception as exc:  # report, don't abort the remaining groups
            results.append((name, False, f"{type(exc).__name__}: {exc}"))
    return results
