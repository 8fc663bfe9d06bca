"""Pulse decoders: matched-filter bank, 1-sparse OMP hop detection and the hybrid receiver."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from math import factorial
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import codes
from .channel import ChannelMatrix, equalize
from .config import WaveformConfig
from .sigmodel import ComplexSignal, SecretSequences, ask_levels, psk_levels, shared_codes


@dataclass(frozen=True)
class ChipDetection:
    """Per-chip receiver state, kept for diagnostics."""

    l: int
    q: int
    c_hat: np.ndarray
    gamma: np.ndarray
    peak_magnitudes: np.ndarray
    out_of_band: bool = False


def _chip_phase_ref(cfg: WaveformConfig, secrets: SecretSequences, l: int, q: int) -> np.ndarray:
    """Sample offsets (relative to the phase origin) of chip q in pulse l."""
    n = q * cfg.spc + np.arange(cfg.spc)
    if cfg.legacy_eq6_timebase:
        n = n + int(secrets.gamma_T[l]) * cfg.pulse_samples
    return n


def reference_chip(cfg: WaveformConfig, secrets: SecretSequences, l: int, q: int, c_q) -> np.ndarray:
    """Unit-amplitude hop waveforms for codes ``c_q`` over chip q (len(c_q) x spc)."""
    n = _chip_phase_ref(cfg, secrets, l, q)
    bins = int(secrets.gamma_f[l]) * cfg.K + np.asarray(c_q, dtype=np.int64)
    cycles = np.mod(bins[:, None] * n[None, :], cfg.spc) / cfg.spc
    return np.exp(2j * np.pi * cycles)


def chip_samples(x_hat: ComplexSignal, cfg: WaveformConfig, secrets: SecretSequences, l: int, q: int) -> np.ndarray:
    start = l * cfg.T_p + secrets.T_l(cfg, l) + q * cfg.delta_t
    return x_hat.window(start, cfg.spc).samples


def matched_filter_chip(x_hat: ComplexSignal, cfg: WaveformConfig, secrets: SecretSequences,
                        l: int, q: int, c_q) -> np.ndarray:
    """Antenna-summed stream correlated with each reference hop, normalized by the chip length.

    A clean chip with amplitude ``a`` and phase ``Omega`` on hop ``c_q[m]`` yields
    ``a exp(i Omega)`` in entry ``m``.
    """
    y = chip_samples(x_hat, cfg, secrets, l, q).sum(axis=0)
    ref = reference_chip(cfg, secrets, l, q, c_q)
    # (1/Delta_t) * sum(...) / f_s == mean over the spc samples
    return (ref.conj() @ y) / cfg.spc


def _nearest(values: np.ndarray, levels: np.ndarray) -> np.ndarray:
    # argmin returns the first minimum, so ties go to the lower index
    return np.argmin(np.abs(values[..., None] - levels), axis=-1)


def demap_symbols(gamma, cfg: WaveformConfig, scheme: Optional[str] = None):
    """Hard decisions on matched-filter outputs.

    Returns ``(a_hat, Omega_hat, bits)`` where ``bits`` holds the amplitude and/or
    phase bits of the scheme, per antenna, ASK bits before PSK bits.
    """
    scheme = scheme or cfg.scheme
    gamma = np.asarray(gamma, dtype=complex)
    amps = ask_levels(cfg)
    phs = psk_levels(cfg)
    ia = _nearest(np.abs(gamma), amps)
    # wrap the phase error into (-pi, pi] before picking the nearest point
    dphi = np.angle(gamma)[..., None] - phs
    dphi = np.abs(np.angle(np.exp(1j * dphi)))
    dphi = np.round(dphi, 12)
    ip = np.argmin(dphi, axis=-1)
    ka, kp = codes.log2_int(cfg.J_ask), codes.log2_int(cfg.J_psk)
    abits = codes.unpack_groups(codes.gray_encode(ia)[..., None], ka) if ka else np.zeros(gamma.shape + (0,), np.uint8)
    pbits = codes.unpack_groups(codes.gray_encode(ip)[..., None], kp) if kp else np.zeros(gamma.shape + (0,), np.uint8)
    if scheme == "PH":
        bits = pbits
    elif scheme == "AMP":
        bits = abits
    elif scheme == "HYB":
        bits = np.concatenate([abits, pbits], axis=-1)
    else:
        bits = np.zeros(gamma.shape + (0,), np.uint8)
    return amps[ia], phs[ip], bits.reshape(gamma.shape[:-1] + (-1,)).astype(np.uint8)


def _bin_to_hop(bins: np.ndarray, cfg: WaveformConfig, f_l: float):
    freq = bins * cfg.f_s / cfg.spc
    raw = np.round(np.mod(freq - f_l, cfg.f_s) / cfg.delta_f).astype(np.int64)
    span = int(round(cfg.f_s / cfg.delta_f))
    raw = np.mod(raw, span)
    oob = raw >= cfg.K
    # circular nearest in-band hop: either wrap up to K-1 or down to 0
    up = raw - (cfg.K - 1)
    down = span - raw
    clamped = np.where(up <= down, cfg.K - 1, 0)
    return np.where(oob, clamped, raw), bool(oob.any())


def omp_detect_hops(chip: np.ndarray, cfg: WaveformConfig, f_l: float):
    """1-sparse OMP per antenna over a local Fourier dictionary.

    ``chip`` is M x spc. Returns ``(c_hat, out_of_band)``; out-of-band bins are
    snapped to the nearest valid hop and flagged rather than raised.
    """
    c_hat, oob, _ = _omp(chip, cfg, f_l)
    return c_hat, oob


def _omp(chip, cfg, f_l):
    spec = np.abs(np.fft.fft(np.asarray(chip), axis=-1))
    best = np.argmax(spec, axis=-1)  # first maximum, i.e. lowest bin on ties
    hops, oob = _bin_to_hop(best, cfg, f_l)
    return hops, oob, spec[np.arange(spec.shape[0]), best]


def ml_detect_hops(chip: np.ndarray, cfg: WaveformConfig, secrets: SecretSequences, l: int, q: int,
                   coef: Optional[np.ndarray] = None) -> np.ndarray:
    """Exhaustive least-squares search over every valid code vector.

    ``coef`` are the known per-antenna chip symbols (default all ones).
    Cost grows as C(K,M) M!, so this is only meant for small instances.
    """
    coef = np.ones(cfg.M, dtype=complex) if coef is None else np.asarray(coef, dtype=complex)
    ref = reference_chip(cfg, secrets, l, q, np.arange(cfg.K))
    best, best_cost = None, np.inf
    for c in itertools.permutations(range(cfg.K), cfg.M):
        cand = coef[:, None] * ref[list(c)]
        cost = float(np.sum(np.abs(chip - cand) ** 2))
        if cost < best_cost:
            best, best_cost = c, cost
    return np.array(best, dtype=np.int64)


def _sim_bits_from_code(c_hat, cfg: WaveformConfig) -> np.ndarray:
    nsim = codes.sim_bits(cfg.K, cfg.M)
    c_hat = codes.repair_code(c_hat, cfg.K)
    s, p = codes.decompose_code(c_hat, K=cfg.K)
    combined = s * factorial(cfg.M) + p
    # codes past the bit budget are never transmitted; fold them back in range
    combined %= 1 << nsim
    return codes.int_to_bits(combined, nsim)


def decode_pulse(r: ComplexSignal, H: ChannelMatrix, cfg: WaveformConfig, secrets: SecretSequences, l: int,
                 detections: Optional[list] = None) -> np.ndarray:
    """Recover the bits of pulse ``l`` from a received signal covering it.

    Detection errors never raise; they show up as bit errors. When a list is
    passed as ``detections`` one :class:`ChipDetection` per chip is appended.
    """
    start = l * cfg.T_p + secrets.T_l(cfg, l)
    x_hat = equalize(r.window(start, cfg.pulse_samples), H)
    f_l = secrets.f_l(cfg, l)
    scheme = cfg.scheme
    preshared = shared_codes(cfg, l) if scheme in ("PH", "AMP") else None
    out = []
    for q in range(cfg.Q):
        chip = x_hat.samples[:, q * cfg.spc:(q + 1) * cfg.spc]
        oob = False
        if preshared is not None:
            c_hat = preshared[q]
            peaks = np.zeros(cfg.M)
        else:
            c_hat, oob, peaks = _omp(chip, cfg, f_l)
            c_hat = codes.repair_code(c_hat, cfg.K)
            out.append(_sim_bits_from_code(c_hat, cfg))
        if scheme == "SIM":
            gamma = np.ones(cfg.M, dtype=complex)
        else:
            gamma = matched_filter_chip(x_hat, cfg, secrets, l, q, c_hat)
            out.append(demap_symbols(gamma, cfg)[2].ravel())
        if detections is not None:
            detections.append(ChipDetection(l, q, np.asarray(c_hat), gamma, np.asarray(peaks), oob))
    return np.concatenate(out).astype(np.uint8)


def detections_to_csv(detections: Sequence[ChipDetection], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["l", "q", "m", "c_hat", "gamma_re", "gamma_im", "peak", "out_of_band"])
        for d in detections:
            for m in range(len(d.c_hat)):
                peak = d.peak_magnitudes[m] if len(d.peak_magnitudes) else 0.0
                w.writerow([d.l, d.q, m, int(d.c_hat[m]), repr(d.gamma[m].real), repr(d.gamma[m].imag),
                            repr(float(peak)), int(d.out_of_band)])

