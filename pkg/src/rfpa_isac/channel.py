"""Flat-fading wiretap channel, AWGN, zero-forcing equalization and reciprocal probing."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .config import WaveformConfig
from .errors import DimensionMismatch, IllConditioned, LengthMismatch
from .sigmodel import ComplexSignal

# Role tags for independent RNG streams derived from one seed.
ROLE_BOB = 0
ROLE_EVE = 1

COND_LIMIT = 1e-10


def crandn(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian CN(0, var)."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class ChannelMatrix:
    entries: np.ndarray
    l: int = 0

    def __post_init__(self):
        e = np.atleast_2d(np.asarray(self.entries, dtype=complex)).copy()
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @property
    def M(self) -> int:
        return self.entries.shape[1]


def draw_channel(cfg: WaveformConfig, l: int, seed, role: int = ROLE_BOB) -> ChannelMatrix:
    """N x M i.i.d. CN(0,1) matrix, a pure function of (seed, l, role).

    ``seed`` may also be a Generator, in which case the draw consumes it.
    """
    if isinstance(seed, np.random.Generator):
        rng = seed
    else:
        rng = np.random.default_rng([int(seed), int(l), int(role)])
    return ChannelMatrix(crandn(rng, (cfg.N, cfg.M)), l)


def noise_variance(x: ComplexSignal, n_bits: int, ebn0_db: float, H: Optional[ChannelMatrix] = None) -> float:
    """Per-sample complex noise variance for a target Eb/N0.

    Eb is the transmitted energy per information bit (in sample units) and the
    noise variance is N0 = Eb / 10^(EbN0/10). With ``H`` given the level is set
    at the zero-forcing output instead: the per-stream noise after equalization,
    ``N0 * tr((H^H H)^-1) / M``, is what the detector sees, so the raw variance
    is scaled by ``M / tr((H^H H)^-1)``.
    """
    if n_bits <= 0:
        raise ValueError("n_bits must be positive")
    if not np.isfinite(ebn0_db):
        return 0.0
    eb = x.energy() / n_bits
    n0 = eb / 10 ** (ebn0_db / 10)
    if H is not None:
        g = np.linalg.inv(H.entries.conj().T @ H.entries)
        n0 *= H.M / float(np.real(np.trace(g)))
    return float(n0)


def transmit(x: ComplexSignal, H: ChannelMatrix, noise_var: float, rng: Optional[np.random.Generator]) -> ComplexSignal:
    """r = H x + w with w i.i.d. CN(0, noise_var) per sample and receive antenna."""
    if H.M != x.n_rows:
        raise DimensionMismatch(f"H has {H.M} columns but the signal has {x.n_rows} rows")
    r = H.entries @ x.samples
    if noise_var > 0:
        r = r + crandn(rng, r.shape, noise_var)
    return ComplexSignal(r, x.f_s, x.t0)


def pseudo_inverse(H: ChannelMatrix) -> np.ndarray:
    """(H^H H)^-1 H^H via the SVD; refuses nearly rank-deficient H."""
    u, sv, vh = np.linalg.svd(H.entries, full_matrices=False)
    if H.N < H.M or sv[-1] < COND_LIMIT * sv[0]:
        raise IllConditioned(f"singular value ratio {sv[-1] / sv[0] if sv[0] else 0.0:.3g}")
    return (vh.conj().T / sv) @ u.conj().T


def equalize(r: ComplexSignal, H: ChannelMatrix) -> ComplexSignal:
    if H.N != r.n_rows:
        raise DimensionMismatch(f"H has {H.N} rows but the signal has {r.n_rows}")
    return ComplexSignal(pseudo_inverse(H) @ r.samples, r.f_s, r.t0)


@dataclass(frozen=True)
class CIRSampleSet:
    alice: np.ndarray
    bob: np.ndarray
    eve: np.ndarray
    snr_db: float

    def __post_init__(self):
        if not (len(self.alice) == len(self.bob) == len(self.eve)):
            raise LengthMismatch("probe arrays must have equal length")

    def __len__(self):
        return len(self.alice)

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "re_a", "im_a", "re_b", "im_b", "re_e", "im_e"])
            for i, (a, b, e) in enumerate(zip(self.alice, self.bob, self.eve)):
                w.writerow([i, *(repr(float(v)) for v in (a.real, a.imag, b.real, b.imag, e.real, e.imag))])


def probe_cir(L: int, snr_db: float, rng: np.random.Generator) -> CIRSampleSet:
    """Reciprocal probing: Alice and Bob see h + independent noise, Eve an independent channel."""
    if L < 1:
        raise ValueError("L must be at least 1")
    h = crandn(rng, L)
    if np.isinf(snr_db) and snr_db > 0:
        na = nb = np.zeros(L, dtype=complex)
    else:
        var = 10 ** (-snr_db / 10)
        na = crandn(rng, L, var)
        nb = crandn(rng, L, var)
    eve = crandn(rng, L)
    return CIRSampleSet(h + na, h + nb, eve, float(snr_db))
