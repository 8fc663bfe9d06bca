"""RFPA frequency-hopping waveform model: messages, secrets and sampled synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Optional, Sequence

import numpy as np

from . import codes
from .config import WaveformConfig
from .errors import DuplicateHop, LengthMismatch

# Public seed of the pre-shared hop pattern used by PH and AMP.
SHARED_PATTERN_SEED = 0x5EED


def ask_levels(cfg: WaveformConfig) -> np.ndarray:
    """Amplitude constellation {(2j-1) * step : j = 1..J_ask}."""
    return (2 * np.arange(1, cfg.J_ask + 1) - 1) * cfg.ask_step


def psk_levels(cfg: WaveformConfig) -> np.ndarray:
    return 2 * np.pi * np.arange(cfg.J_psk) / cfg.J_psk


def bits_per_chip(cfg: WaveformConfig, scheme: Optional[str] = None) -> int:
    scheme = scheme or cfg.scheme
    if scheme == "PH":
        return cfg.M * codes.log2_int(cfg.J_psk)
    if scheme == "AMP":
        return cfg.M * codes.log2_int(cfg.J_ask)
    sim = codes.sim_bits(cfg.K, cfg.M)
    if scheme == "SIM":
        return sim
    if scheme == "HYB":
        return sim + cfg.M * codes.log2_int(cfg.J_ask * cfg.J_psk)
    raise ValueError(f"unknown scheme {scheme!r}")


def bits_per_pulse(cfg: WaveformConfig, scheme: Optional[str] = None) -> int:
    return cfg.Q * bits_per_chip(cfg, scheme)


@dataclass(frozen=True)
class SecretSequences:
    """Per-pulse agility indices: start offset T_l = tau * gamma_T[l], carrier f_l = K delta_f gamma_f[l]."""

    gamma_T: np.ndarray
    gamma_f: np.ndarray

    def __post_init__(self):
        gT = np.asarray(self.gamma_T, dtype=np.int64).copy()
        gf = np.asarray(self.gamma_f, dtype=np.int64).copy()
        if gT.shape != gf.shape or gT.ndim != 1:
            raise LengthMismatch("gamma_T and gamma_f must be 1-D of equal length")
        gT.setflags(write=False)
        gf.setflags(write=False)
        object.__setattr__(self, "gamma_T", gT)
        object.__setattr__(self, "gamma_f", gf)

    def __len__(self):
        return len(self.gamma_T)

    def check(self, cfg: WaveformConfig) -> None:
        if len(self) < cfg.L:
            raise LengthMismatch(f"need {cfg.L} secret symbols, got {len(self)}")
        if self.gamma_T.min() < 0 or self.gamma_T.max() >= cfg.Phi_T:
            raise ValueError("gamma_T outside [0, Phi_T)")
        if self.gamma_f.min() < 0 or self.gamma_f.max() >= cfg.Phi_f:
            raise ValueError("gamma_f outside [0, Phi_f)")

    def T_l(self, cfg: WaveformConfig, l: int) -> float:
        return cfg.tau * int(self.gamma_T[l])

    def f_l(self, cfg: WaveformConfig, l: int) -> float:
        return cfg.K * cfg.delta_f * int(self.gamma_f[l])

    def __eq__(self, other):
        if not isinstance(other, SecretSequences):
            return NotImplemented
        return np.array_equal(self.gamma_T, other.gamma_T) and np.array_equal(self.gamma_f, other.gamma_f)

    __hash__ = None


def zero_secrets(L: int) -> SecretSequences:
    return SecretSequences(np.zeros(L, dtype=np.int64), np.zeros(L, dtype=np.int64))


def random_secrets(cfg: WaveformConfig, rng: np.random.Generator) -> SecretSequences:
    return SecretSequences(rng.integers(0, cfg.Phi_T, cfg.L), rng.integers(0, cfg.Phi_f, cfg.L))


@dataclass(frozen=True)
class PulseMessage:
    """Content of one pulse, one row per chip: amplitudes, phases and hop codes (Q x M)."""

    amplitudes: np.ndarray
    phases: np.ndarray
    codes: np.ndarray
    selection_index: np.ndarray
    permutation_index: np.ndarray

    def __post_init__(self):
        for name, dtype in (("amplitudes", float), ("phases", float), ("codes", np.int64),
                            ("selection_index", object), ("permutation_index", object)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.amplitudes.shape == self.phases.shape == self.codes.shape) or self.codes.ndim != 2:
            raise LengthMismatch("amplitudes, phases and codes must share a (Q, M) shape")
        for row in self.codes:
            if len(set(row.tolist())) != len(row):
                raise DuplicateHop(f"repeated hop within a chip: {row.tolist()}")

    @property
    def Q(self) -> int:
        return self.codes.shape[0]

    @property
    def M(self) -> int:
        return self.codes.shape[1]

    def scaled(self, s: float) -> "PulseMessage":
        return PulseMessage(self.amplitudes * s, self.phases, self.codes,
                            self.selection_index, self.permutation_index)


def shared_codes(cfg: WaveformConfig, l: int) -> np.ndarray:
    """Pre-shared hop pattern (Q x M) for schemes that do not embed in the codes."""
    out = np.empty((cfg.Q, cfg.M), dtype=np.int64)
    for q in range(cfg.Q):
        rng = np.random.default_rng([SHARED_PATTERN_SEED, cfg.K, l, q])
        out[q] = rng.permutation(cfg.K)[: cfg.M]
    return out


def _message_from_codes(a, om, c, K):
    idx = [codes.decompose_code(row, K=K) for row in c]
    return PulseMessage(a, om, c, [s for s, _ in idx], [p for _, p in idx])


def encode_message(bits, cfg: WaveformConfig, l: int = 0) -> PulseMessage:
    """Map one pulse worth of bits onto chip symbols for ``cfg.scheme``.

    Bits are consumed chip by chip. Within a chip, SIM/HYB put the code-index
    bits first (MSB first, combined index ``s * M! + p``), followed for HYB by
    ``log2 J_ask`` amplitude bits then ``log2 J_psk`` phase bits per antenna.
    ASK and PSK symbols are Gray coded. ``l`` selects the pre-shared hop
    pattern used by PH and AMP.
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    per_chip = bits_per_chip(cfg)
    if bits.size != cfg.Q * per_chip:
        raise LengthMismatch(f"{cfg.scheme} needs {cfg.Q * per_chip} bits per pulse, got {bits.size}")
    chips = bits.reshape(cfg.Q, per_chip)
    Q, M, K = cfg.Q, cfg.M, cfg.K
    a = np.ones((Q, M))
    om = np.zeros((Q, M))
    ka = codes.log2_int(cfg.J_ask)
    kp = codes.log2_int(cfg.J_psk)

    if cfg.scheme in ("PH", "AMP"):
        c = shared_codes(cfg, l)
        width = kp if cfg.scheme == "PH" else ka
        sym = codes.gray_decode(codes.pack_groups(chips, width))
        if cfg.scheme == "PH":
            om = psk_levels(cfg)[sym]
        else:
            a = ask_levels(cfg)[sym]
        return _message_from_codes(a, om, c, K)

    nsim = codes.sim_bits(K, M)
    mfact = factorial(M)
    c = np.empty((Q, M), dtype=np.int64)
    s_idx, p_idx = [], []
    for q in range(Q):
        combined = codes.bits_to_int(chips[q, :nsim])
        if combined >= 1 << nsim:
            raise codes.IndexOverflow("combined index exceeds bit budget")
        s, p = divmod(combined, mfact)
        c[q] = codes.compose_code(s, p, K=K, M=M)
        s_idx.append(s)
        p_idx.append(p)
    if cfg.scheme == "HYB":
        groups = chips[:, nsim:].reshape(Q, M, ka + kp)
        a = ask_levels(cfg)[codes.gray_decode(codes.pack_groups(groups[..., :ka], ka)[..., 0])]
        om = psk_levels(cfg)[codes.gray_decode(codes.pack_groups(groups[..., ka:], kp)[..., 0])]
    return PulseMessage(a, om, c, s_idx, p_idx)


def random_bits(cfg: WaveformConfig, rng: np.random.Generator, scheme: Optional[str] = None) -> np.ndarray:
    return rng.integers(0, 2, bits_per_pulse(cfg, scheme), dtype=np.uint8)


def random_messages(cfg: WaveformConfig, rng: np.random.Generator) -> list[PulseMessage]:
    return [encode_message(random_bits(cfg, rng), cfg, l) for l in range(cfg.L)]


@dataclass(frozen=True)
class ComplexSignal:
    """Uniformly sampled complex baseband, one row per antenna.

    ``waveform`` optionally evaluates the underlying continuous-time signal at
    arbitrary instants (rows x times) and ``edges`` lists the instants where it
    may be discontinuous; both are used by the numerical AF oracle.
    """

    samples: np.ndarray
    f_s: float
    t0: float = 0.0
    waveform: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False, repr=False)
    edges: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.samples, dtype=complex))
        object.__setattr__(self, "samples", s)

    @property
    def n_rows(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def span(self) -> float:
        return self.n_samples / self.f_s

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_samples) / self.f_s

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))

    def rows(self, idx) -> "ComplexSignal":
        idx = np.atleast_1d(idx)
        wf = None
        if self.waveform is not None:
            parent = self.waveform
            wf = lambda t: parent(t)[idx]  # noqa: E731
        return ComplexSignal(self.samples[idx], self.f_s, self.t0, wf, self.edges)

    def window(self, start: float, n: int) -> "ComplexSignal":
        """``n`` samples starting at time ``start`` (zero where this signal has none)."""
        offset = int(round((start - self.t0) * self.f_s))
        out = np.zeros((self.n_rows, n), dtype=complex)
        lo, hi = max(offset, 0), min(offset + n, self.n_samples)
        if hi > lo:
            out[:, lo - offset: hi - offset] = self.samples[:, lo:hi]
        return ComplexSignal(out, self.f_s, self.t0 + offset / self.f_s, self.waveform, self.edges)


@dataclass(frozen=True)
class ChipTable:
    """Flattened chip slots of a waveform.

    Slot ``i`` occupies ``[start[i], start[i] + width)``; on antenna ``m`` it carries
    ``coef[i, m] * exp(i 2 pi freq[i, m] (t - origin[i]))``.
    """

    start: np.ndarray
    origin: np.ndarray
    freq: np.ndarray
    coef: np.ndarray
    width: float

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        order = np.argsort(self.start)
        starts = self.start[order]
        # tolerance keeps sample instants that land on a chip edge in the later chip
        tol = 1e-9 * self.width
        pos = np.searchsorted(starts, t + tol, side="right") - 1
        valid = pos >= 0
        slot = order[np.clip(pos, 0, None)]
        valid &= (t - self.start[slot]) < self.width - tol
        ph = (2 * np.pi) * (self.freq[slot] * (t - self.origin[slot])[:, None])
        out = np.empty(ph.shape, dtype=complex)
        np.cos(ph, out=out.real)
        np.sin(ph, out=out.imag)
        out *= self.coef[slot]
        out[~valid] = 0.0
        return out.T

    def edges(self) -> np.ndarray:
        return np.unique(np.concatenate([self.start, self.start + self.width]))


def chip_table(cfg: WaveformConfig, msgs: Sequence[PulseMessage], secrets: SecretSequences,
               pulses: Optional[Sequence[int]] = None) -> ChipTable:
    """Chip slots of pulses ``pulses`` (default: one per message, l = 0..len-1)."""
    if pulses is None:
        pulses = range(len(msgs))
    starts, origins, freqs, coefs = [], [], [], []
    q = np.arange(cfg.Q)
    for msg, l in zip(msgs, pulses):
        T_l = secrets.T_l(cfg, l)
        f_l = secrets.f_l(cfg, l)
        t_l = l * cfg.T_p + T_l
        starts.append(t_l + q * cfg.delta_t)
        ref = l * cfg.T_p if cfg.legacy_eq6_timebase else t_l
        origins.append(np.full(cfg.Q, ref))
        freqs.append(f_l + msg.codes * cfg.delta_f)
        coefs.append(msg.amplitudes * np.exp(1j * msg.phases))
    return ChipTable(np.concatenate(starts), np.concatenate(origins),
                     np.concatenate(freqs, axis=0), np.concatenate(coefs, axis=0), cfg.delta_t)


def _pulse_samples(cfg: WaveformConfig, msg: PulseMessage, secrets: SecretSequences, l: int) -> np.ndarray:
    # Hop frequencies are integer multiples of delta_f = f_s / spc, so the phase
    # is computed exactly in integer cycles-per-sample arithmetic.
    spc = cfg.spc
    n = np.arange(cfg.pulse_samples)
    if cfg.legacy_eq6_timebase:
        n_ref = n + int(secrets.gamma_T[l]) * cfg.pulse_samples
    else:
        n_ref = n
    bins = int(secrets.gamma_f[l]) * cfg.K + msg.codes  # (Q, M) in units of delta_f
    chip = n // spc
    b = bins[chip].T  # (M, n)
    cycles = np.mod(b * n_ref[None, :], spc) / spc
    coef = (msg.amplitudes * np.exp(1j * msg.phases))[chip].T
    return coef * np.exp(2j * np.pi * cycles)


def generate_pulse(cfg: WaveformConfig, msg: PulseMessage, secrets: SecretSequences, l: int) -> ComplexSignal:
    """Active segment of pulse ``l`` (M x tau f_s samples), starting at l T_p + T_l."""
    if not 0 <= l < len(secrets):
        raise ValueError(f"pulse index {l} outside secrets of length {len(secrets)}")
    if msg.codes.shape != (cfg.Q, cfg.M):
        raise LengthMismatch("message shape does not match config")
    t0 = l * cfg.T_p + secrets.T_l(cfg, l)
    table = chip_table(cfg, [msg], secrets, [l])
    return ComplexSignal(_pulse_samples(cfg, msg, secrets, l), cfg.f_s, t0, table.evaluate, table.edges())


def generate_frame(cfg: WaveformConfig, msgs: Sequence[PulseMessage], secrets: SecretSequences) -> ComplexSignal:
    """Full coding period: every pulse placed in its PRI, idle time as explicit zeros."""
    L = len(msgs)
    pri = cfg.pri_samples
    out = np.zeros((cfg.M, L * pri), dtype=complex)
    for l, msg in enumerate(msgs):
        off = l * pri + int(secrets.gamma_T[l]) * cfg.pulse_samples
        out[:, off: off + cfg.pulse_samples] = _pulse_samples(cfg, msg, secrets, l)
    table = chip_table(cfg, msgs, secrets)
    return ComplexSignal(out, cfg.f_s, 0.0, table.evaluate, table.edges())
