import math
from itertools import permutations

import numpy as np
import pytest

from rfpa_isac import harness
from rfpa_isac.config import SCHEMES, default_config
from rfpa_isac.errors import DomainError


def test_rate_examples(cfg):
    assert harness.achievable_rate(cfg, "PH") == 16e6
    assert harness.achievable_rate(cfg, "AMP") == 8e6
    assert harness.achievable_rate(cfg, "SIM") == 20e6
    assert harness.achievable_rate(cfg, "HYB") == 44e6
    assert harness.achievable_rate(cfg.replace(M=5), "SIM") == 14e6


def test_sim_rate_table(cfg):
    rows = harness.rate_table(cfg)
    assert [r["M"] for r in rows] == list(range(1, 11))
    sim = [r["SIM"] for r in rows]
    assert sim[4] == 14e6
    # C(K,M) M! = K!/(K-M)! never shrinks as M grows
    assert all(a <= b for a, b in zip(sim, sim[1:]))
    # independent count of ordered distinct hop tuples
    for r in rows:
        n = sum(1 for _ in permutations(range(10), r["M"]))
        assert r["SIM"] == (n.bit_length() - 1) * 10 * 1e5


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("M", [1, 2, 3, 5, 8])
def test_rate_matches_message_counting(scheme, M):
    cfg = default_config(M=M, N=max(M, 8))
    assert harness.achievable_rate(cfg, scheme) == harness.brute_force_rate(cfg, scheme)


def test_rate_counts_alphabets():
    cfg = default_config(K=6, M=3, N=3, J_ask=4, J_psk=8, tau=1.2e-6)
    assert harness.count_chip_messages(cfg, "PH") == 8 ** 3
    assert harness.count_chip_messages(cfg, "AMP") == 4 ** 3
    assert harness.count_chip_messages(cfg, "SIM") == 120
    assert harness.count_chip_messages(cfg, "HYB") == 120 * 32 ** 3


def test_secrecy_examples():
    assert harness.secrecy_rate_estimate(0.0, 0.5) == 1.0
    assert harness.secrecy_rate_estimate(0.5, 0.5) == 0.0
    assert harness.secrecy_rate_estimate(0.11, 0.5) == pytest.approx(0.5, abs=0.005)
    # Bob worse than Eve clamps to zero
    assert harness.secrecy_rate_estimate(0.3, 0.1) == 0.0
    for bad in [(-0.1, 0.5), (0.2, 0.6), (float("nan"), 0.5)]:
        with pytest.raises(DomainError):
            harness.secrecy_rate_estimate(*bad)


def test_spec_validation(cfg):
    with pytest.raises(ValueError):
        harness.ExperimentSpec("ber", cfg, (0.0, 4.0), 0)
    with pytest.raises(ValueError):
        harness.ExperimentSpec("ber", cfg, (4.0, 0.0), 10)
    with pytest.raises(ValueError):
        harness.ExperimentSpec("ber", cfg, (float("nan"),), 10)
    with pytest.raises(ValueError):
        harness.CurveResult(np.zeros(2), np.zeros(2), -np.ones(2))


def test_zero_noise_ber_is_zero():
    for scheme in SCHEMES:
        cfg = default_config(scheme=scheme)
        res = harness.run_ber_sweep(harness.ExperimentSpec("ber", cfg, (math.inf,), 2000, seed=3))
        assert res.metric[0] == 0.0 and res.stderr[0] == 0.0
        assert res.counts[0, 0] >= 2000
        assert 0.4 <= res.metric2[0] <= 0.6


def test_sweep_deterministic_across_workers():
    cfg = default_config(scheme="PH")
    spec = dict(kind="ber", cfg=cfg, axis=(0.0, 8.0), trials=3000, seed=11)
    a = harness.run_ber_sweep(harness.ExperimentSpec(**spec, workers=1))
    b = harness.run_ber_sweep(harness.ExperimentSpec(**spec, workers=3))
    assert np.array_equal(a.counts, b.counts)
    assert harness.curve_csv(a, cfg) == harness.curve_csv(b, cfg)
    c = harness.run_ber_sweep(harness.ExperimentSpec(**{**spec, "seed": 12}))
    assert not np.array_equal(a.counts, c.counts)


def test_points_are_independent_of_sweep_neighbours():
    cfg = default_config(scheme="PH")
    both = harness.run_ber_sweep(harness.ExperimentSpec("ber", cfg, (0.0, 8.0), 1000, seed=2))
    # pulse streams are keyed by (seed, point index, pulse), so later points leave point 0 alone
    first = harness.run_ber_sweep(harness.ExperimentSpec("ber", cfg, (0.0,), 1000, seed=2))
    assert np.array_equal(both.counts[0], first.counts[0])


def test_stderr_shrinks_with_trials():
    cfg = default_config(scheme="AMP")
    small = harness.run_ber_sweep(harness.ExperimentSpec("ber", cfg, (4.0,), 4000, seed=1))
    big = harness.run_ber_sweep(harness.ExperimentSpec("ber", cfg, (4.0,), 16000, seed=1))
    for res in (small, big):
        n = res.counts[0, 0]
        p = res.metric[0]
        assert res.stderr[0] == pytest.approx(math.sqrt(p * (1 - p) / n))
    assert small.stderr[0] / big.stderr[0] == pytest.approx(2.0, rel=0.15)


def test_pulses_for_bits(cfg):
    assert harness.pulses_for_bits(cfg, 1) == 1
    assert harness.pulses_for_bits(cfg, 440) == 1
    assert harness.pulses_for_bits(cfg, 441) == 2


def test_eve_mismatch_without_agility_is_one():
    cfg = default_config(Phi_T=1, Phi_f=1, L=4)
    assert harness.eve_mismatch_af(cfg, 10, seed=0) == pytest.approx(1.0, rel=1e-12)


def test_eve_mismatch_below_one_at_defaults(cfg):
    assert harness.eve_mismatch_af(cfg, 100, seed=5) == pytest.approx(0.1345, abs=0.002)


def test_eve_mismatch_falls_with_pri_alphabet():
    base = default_config(T_p=20e-6)
    vals = [harness.eve_mismatch_af(base.replace(Phi_T=p), 100, seed=5) for p in (1, 2, 4, 8)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert all(0 < v <= 1 for v in vals)


def test_eve_mismatch_needs_draws(cfg):
    with pytest.raises(ValueError):
        harness.eve_mismatch_af(cfg, 5)


def test_crkg_point_entropy_and_ordering():
    p2 = harness.crkg_point(256, 20.0, 2, 5, seed=0)
    p8 = harness.crkg_point(256, 20.0, 8, 5, seed=0)
    assert p2.entropy_bits == 1.0 and p8.entropy_bits == 3.0
    assert 0 <= p2.bdr < p8.bdr <= 1
    pts = harness.run_crkg_sweep(64, [10.0, 20.0], [2, 4], 2, seed=1)
    assert [(p.snr_db, p.phi) for p in pts] == [(10.0, 2), (10.0, 4), (20.0, 2), (20.0, 4)]


def test_curve_csv_layout(cfg):
    res = harness.CurveResult(np.array([0.0, 4.0]), np.array([0.1, 0.01]), np.array([0.01, 0.001]),
                              meta={"kind": "ber", "seed": 7})
    text = harness.curve_csv(res, cfg)
    lines = text.splitlines()
    assert lines[0] == "# kind: ber" and lines[1] == "# seed: 7"
    assert f"# config_digest: {cfg.digest()}" in lines
    assert "axis,metric,stderr" in lines
    assert lines[-1] == "4.0,0.01,0.001"


def test_write_text_refuses_overwrite(tmp_path):
    p = tmp_path / "sub" / "a.csv"
    harness.write_text(p, "x\n")
    with pytest.raises(FileExistsError):
        harness.write_text(p, "y\n")
    harness.write_text(p, "y\n", force=True)
    assert p.read_text() == "y\n"
