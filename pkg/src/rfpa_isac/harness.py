"""Experiment engine: bit rates, BER and CRKG sweeps, Eve's AF mismatch and CSV output."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .ambiguity import table_af
from .channel import ROLE_BOB, ROLE_EVE, draw_channel, noise_variance, probe_cir, transmit
from .config import SCHEMES, WaveformConfig
from .crkg import bdr, empirical_entropy, generate_labels
from .errors import DomainError
from .receiver import decode_pulse
from .sigmodel import (bits_per_chip, bits_per_pulse, chip_table, encode_message, generate_pulse,
                       random_bits, random_secrets)


# --- achievable rate -------------------------------------------------------

def _per_second(cfg: WaveformConfig, bits_per_chip_: int) -> float:
    # exact rational arithmetic on the decimal PRI keeps e.g. 16 Mb/s from becoming 15999999.999...
    return float(Fraction(cfg.Q * bits_per_chip_) / Fraction(repr(cfg.T_p)))


def achievable_rate(cfg: WaveformConfig, scheme: Optional[str] = None) -> float:
    """Bits per second: PRF * Q * (bits carried by one chip)."""
    return _per_second(cfg, bits_per_chip(cfg, scheme))


def count_chip_messages(cfg: WaveformConfig, scheme: Optional[str] = None) -> int:
    """Distinct chip waveforms a scheme can emit, by explicit enumeration.

    Hop codes are enumerated as ordered M-tuples of distinct hops; symbol
    alphabets per antenna are enumerated and raised to the antenna count.
    """
    scheme = scheme or cfg.scheme
    n_codes = sum(1 for _ in itertools.permutations(range(cfg.K), cfg.M))
    phases = {round(2 * math.pi * j / cfg.J_psk, 12) for j in range(cfg.J_psk)}
    amps = {round((2 * j - 1) * cfg.ask_step, 12) for j in range(1, cfg.J_ask + 1)}
    per_antenna = len(set(itertools.product(amps, phases)))
    if scheme == "PH":
        return len(phases) ** cfg.M
    if scheme == "AMP":
        return len(amps) ** cfg.M
    if scheme == "SIM":
        return n_codes
    return n_codes * per_antenna ** cfg.M


def brute_force_rate(cfg: WaveformConfig, scheme: Optional[str] = None) -> float:
    """Rate from message counting; a hybrid chip splits into its index and symbol parts."""
    scheme = scheme or cfg.scheme
    if scheme == "HYB":
        idx = count_chip_messages(cfg, "SIM").bit_length() - 1
        sym = (count_chip_messages(cfg, "HYB") // count_chip_messages(cfg, "SIM")).bit_length() - 1
        return _per_second(cfg, idx + sym)
    return _per_second(cfg, count_chip_messages(cfg, scheme).bit_length() - 1)


def rate_table(cfg: WaveformConfig, Ms: Sequence[int] = None) -> list[dict]:
    """Rates of every scheme for each antenna count (N raised to M where needed)."""
    Ms = list(Ms) if Ms is not None else list(range(1, cfg.K + 1))
    rows = []
    for M in Ms:
        c = cfg.replace(M=M, N=max(cfg.N, M))
        rows.append({"M": M, **{s: achievable_rate(c, s) for s in SCHEMES}})
    return rows


# --- experiment records ----------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    cfg: WaveformConfig
    axis: tuple
    trials: int
    seed: int = 0
    out: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        axis = tuple(float(v) for v in self.axis)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(math.isnan(v) for v in axis) or list(axis) != sorted(axis):
            raise ValueError("sweep axis must be sorted and free of NaN")
        object.__setattr__(self, "axis", axis)


@dataclass(frozen=True)
class CurveResult:
    axis: np.ndarray
    metric: np.ndarray
    stderr: np.ndarray
    metric2: Optional[np.ndarray] = None
    stderr2: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)
    counts: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.axis)
        for arr in (self.metric, self.stderr, self.metric2, self.stderr2):
            if arr is not None and len(arr) != n:
                raise ValueError("curve arrays must have equal length")
        if np.any(np.asarray(self.stderr) < 0):
            raise ValueError("standard errors must be non-negative")


# --- BER -------------------------------------------------------------------

def _ber_trial(cfg: WaveformConfig, ebn0_db: float, seed: int, point: int, trial: int) -> tuple[int, int, int]:
    """One pulse round trip; returns (bits, Bob errors, Eve errors)."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(point), int(trial)]))
    secrets = random_secrets(cfg, rng)
    l = int(rng.integers(cfg.L))
    bits = random_bits(cfg, rng)
    x = generate_pulse(cfg, encode_message(bits, cfg, l), secrets, l)
    n_bits = bits.size

    H = draw_channel(cfg, l, rng, ROLE_BOB)
    r = transmit(x, H, noise_variance(x, n_bits, ebn0_db, H), rng)
    bob = int(np.count_nonzero(decode_pulse(r, H, cfg, secrets, l) != bits))

    H_e = draw_channel(cfg, l, rng, ROLE_EVE)
    r_e = transmit(x, H_e, noise_variance(x, n_bits, ebn0_db, H_e), rng)
    guess = random_secrets(cfg, rng)
    eve = int(np.count_nonzero(decode_pulse(r_e, H_e, cfg, guess, l) != bits))
    return n_bits, bob, eve


def _ber_block(args):
    cfg, ebn0, seed, point, lo, hi = args
    tot = np.zeros(3, dtype=np.int64)
    for t in range(lo, hi):
        tot += _ber_trial(cfg, ebn0, seed, point, t)
    return tot


def pulses_for_bits(cfg: WaveformConfig, target_bits: int) -> int:
    return max(1, math.ceil(target_bits / bits_per_pulse(cfg)))


def run_ber_sweep(spec: ExperimentSpec) -> CurveResult:
    """Bob (metric) and Eve (metric2) BER against Eb/N0.

    ``spec.trials`` is the number of information bits per point; it is rounded
    up to whole pulses. Each pulse has its own RNG stream keyed by
    (seed, point, pulse) and counts are integers, so results do not depend on
    the worker count.
    """
    cfg = spec.cfg
    n_pulses = pulses_for_bits(cfg, spec.trials)
    block = max(1, math.ceil(n_pulses / max(1, 4 * spec.workers)))
    jobs = [(cfg, ebn0, spec.seed, p, lo, min(lo + block, n_pulses))
            for p, ebn0 in enumerate(spec.axis) for lo in range(0, n_pulses, block)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            parts = list(pool.map(_ber_block, jobs))
    else:
        parts = [_ber_block(j) for j in jobs]
    counts = np.zeros((len(spec.axis), 3), dtype=np.int64)
    for job, part in zip(jobs, parts):
        counts[job[3]] += part
    n = counts[:, 0].astype(float)
    bob = counts[:, 1] / n
    eve = counts[:, 2] / n
    meta = {"kind": "ber", "scheme": cfg.scheme, "seed": spec.seed, "bits_per_point": int(counts[0, 0]),
            "pulses_per_point": n_pulses, "config_digest": cfg.digest()}
    return CurveResult(np.array(spec.axis), bob, np.sqrt(bob * (1 - bob) / n), eve,
                       np.sqrt(eve * (1 - eve) / n), meta, counts)


# --- Eve AF mismatch -------------------------------------------------------

def eve_mismatch_af(cfg: WaveformConfig, draws: int, seed: int = 0) -> float:
    """Mean ratio of Eve's best mismatched-reference AF peak to Bob's matched peak.

    Eve correlates the true waveform against a copy built with guessed agility
    secrets. She searches the delays at which a wrongly guessed PRI offset
    could re-align pulses (multiples of the pulse width up to Phi_T - 1) at
    zero Doppler. Bob's peak is |AF(0, 0)| of the matched waveform.
    """
    if draws < 10:
        raise ValueError("draws must be >= 10")
    W = np.ones((cfg.M, cfg.M))
    lags = cfg.tau * np.arange(-(cfg.Phi_T - 1), cfg.Phi_T)
    ratios = []
    for d in range(draws):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(d)]))
        secrets = random_secrets(cfg, rng)
        msgs = [encode_message(random_bits(cfg, rng), cfg, l) for l in range(cfg.L)]
        guess = random_secrets(cfg, rng)
        true_tab = chip_table(cfg, msgs, secrets)
        eve_tab = chip_table(cfg, msgs, guess)
        bob_peak = abs(table_af(true_tab, true_tab, [0.0], [0.0], W)[0])
        eve_peak = np.abs(table_af(true_tab, eve_tab, lags, np.zeros_like(lags), W)).max()
        ratios.append(eve_peak / bob_peak)
    return float(np.mean(ratios))


# --- secrecy ---------------------------------------------------------------

def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def secrecy_rate_estimate(ber_bob: float, ber_eve: float) -> float:
    """[(1 - H_b(p_bob)) - (1 - H_b(p_eve))]^+ per channel use (binary symmetric model)."""
    for p in (ber_bob, ber_eve):
        if not 0.0 <= p <= 0.5 or math.isnan(p):
            raise DomainError(f"BER {p} outside [0, 0.5]")
    return max(0.0, (1 - binary_entropy(ber_bob)) - (1 - binary_entropy(ber_eve)))


# --- CRKG ------------------------------------------------------------------

@dataclass(frozen=True)
class CrkgPoint:
    snr_db: float
    phi: int
    bdr: float
    bdr_stderr: float
    entropy_bits: float


def crkg_point(L: int, snr_db: float, phi: int, trials: int, seed: int, z: float = 2.0) -> CrkgPoint:
    """Mean Alice/Bob BDR and mean entropy of Alice's labels over ``trials`` probing runs."""
    rates, ents = [], []
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(t)]))
        probe = probe_cir(L, snr_db, rng)
        a, b, _ = generate_labels(probe, phi, seed=seed + t, z=z, include_eve=False)
        rates.append(bdr(a, b, phi))
        ents.append(empirical_entropy(a))
    rates = np.array(rates)
    se = float(rates.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return CrkgPoint(float(snr_db), int(phi), float(rates.mean()), se, float(np.mean(ents)))


def run_crkg_sweep(L: int, snrs: Sequence[float], phis: Sequence[int], trials: int, seed: int,
                   z: float = 2.0) -> list[CrkgPoint]:
    return [crkg_point(L, s, p, trials, seed, z) for s in snrs for p in phis]


# --- CSV -------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v))


def meta_lines(meta: dict, cfg: Optional[WaveformConfig] = None) -> list[str]:
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    if cfg is not None:
        if "config_digest" not in meta:
            lines.append(f"# config_digest: {cfg.digest()}")
        lines.append("# config:")
        lines += [f"#   {ln}" for ln in cfg.as_lines()]
    return lines


def curve_csv(result: CurveResult, cfg: Optional[WaveformConfig] = None) -> str:
    lines = meta_lines(result.meta, cfg)
    two = result.metric2 is not None
    lines.append("axis,metric,stderr,metric2,stderr2" if two else "axis,metric,stderr")
    for i in range(len(result.axis)):
        row = [result.axis[i], result.metric[i], result.stderr[i]]
        if two:
            row += [result.metric2[i], result.stderr2[i]]
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_text(path, text: str, force: bool = False) -> Path:
    """Write a file, refusing to replace an existing one unless ``force``."""
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists (use --force to overwrite)")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
