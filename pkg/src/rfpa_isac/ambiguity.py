"""MIMO ambiguity function of RFPA waveforms.

The cross-AF between antennas m and m' is

    chi(tau, nu) = integral x_m(t) conj(x_m'(t + tau)) exp(i 2 pi nu t) dt.

Both signals are sums of rectangular chips carrying complex tones, so the
integral splits into one term per pair of overlapping chip slots. Over the
overlap [lo, lo + w] the integrand is exp(alpha t + beta) with purely
imaginary alpha, which integrates in closed form. A quadrature oracle
(:func:`af_numeric_oracle`) evaluates the same integral directly from the
analytic waveforms for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import WaveformConfig
from .errors import SampleRateMismatch
from .sigmodel import (ChipTable, ComplexSignal, PulseMessage, SecretSequences, chip_table,
                       encode_message, random_bits, random_secrets)

GAMMA_ARR = 0.5
# below this |alpha * w| the ratio form is replaced by its series limit
LIMIT_THRESHOLD = 1e-6
_CHUNK_PAIRS = 200_000


@dataclass(frozen=True)
class AFQuery:
    tau: float
    nu: float
    f: float = 0.0
    f_prime: float = 0.0
    gamma_arr: float = GAMMA_ARR

    def __post_init__(self):
        vals = (self.tau, self.nu, self.f, self.f_prime, self.gamma_arr)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("AF query values must be finite")


def axis_points(start: float, stop: float, count: int) -> np.ndarray:
    """np.linspace, with points within rounding of zero snapped to exactly zero."""
    pts = np.linspace(start, stop, int(count))
    pts[np.abs(pts) <= 1e-12 * max(abs(start), abs(stop))] = 0.0
    return pts


@dataclass(frozen=True)
class AFGrid:
    """AF magnitudes on a delay x Doppler grid (either axis may hold a single point)."""

    delay_axis: tuple
    doppler_axis: tuple
    values: np.ndarray
    normalized: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def taus(self) -> np.ndarray:
        return axis_points(*self.delay_axis)

    @property
    def nus(self) -> np.ndarray:
        return axis_points(*self.doppler_axis)

    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20 * np.log10(np.abs(self.values))

    def cut(self) -> tuple[np.ndarray, np.ndarray]:
        """(axis values, dB values) along the axis with more than one point."""
        v = self.db()
        if self.delay_axis[2] >= self.doppler_axis[2]:
            return self.taus, v[:, 0]
        return self.nus, v[0, :]


def spatial_weights(M: int, f: float = 0.0, f_prime: float = 0.0, gamma_arr: float = GAMMA_ARR) -> np.ndarray:
    m = np.arange(M)
    return np.exp(2j * np.pi * (f * m[:, None] - f_prime * m[None, :]) * gamma_arr)


def overlap_kernel(y, branch: str = "auto") -> np.ndarray:
    """(exp(i y) - 1) / (i y), the normalized integral of exp(i y u) over u in [0, 1].

    ``branch="ratio"`` forces the quotient, ``"limit"`` the y -> 0 value and
    ``"auto"`` uses the quotient above :data:`LIMIT_THRESHOLD` and a
    second-order series below it.
    """
    y = np.asarray(y, dtype=float)
    if branch == "limit":
        return np.ones_like(y, dtype=complex)
    iy = 1j * y
    if branch == "ratio":
        return np.expm1(iy) / iy
    small = np.abs(y) < LIMIT_THRESHOLD
    safe = np.where(small, 1.0, iy)
    ratio = np.expm1(safe) / safe
    series = 1 + iy / 2 + iy * iy / 6
    return np.where(small, series, ratio)


def _slot_pairs(a: ChipTable, b: ChipTable, taus: np.ndarray):
    """Indices (query, slot in a, slot in b) of chip pairs whose windows overlap."""
    order = np.argsort(b.start, kind="stable")
    sb = b.start[order]
    w = a.width
    # slot j of b shifted by -tau overlaps slot i of a iff |s_j - tau - s_i| < w
    lo = np.searchsorted(sb, a.start[None, :] + taus[:, None] - w, side="right")
    qs, ia, jb = [], [], []
    for k in (0, 1):
        j = lo + k
        ok = j < len(sb)
        jj = np.where(ok, j, 0)
        d = sb[jj] - taus[:, None] - a.start[None, :]
        ok &= np.abs(d) < w
        qi, ii = np.nonzero(ok)
        qs.append(qi)
        ia.append(ii)
        jb.append(order[jj[qi, ii]])
    return np.concatenate(qs), np.concatenate(ia), np.concatenate(jb)


def table_af(a: ChipTable, b: ChipTable, taus, nus, weights: np.ndarray) -> np.ndarray:
    """Sum over antenna pairs of weighted cross-AFs between waveform a and reference b."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    nus = np.broadcast_to(np.asarray(nus, dtype=float), taus.shape)
    out = np.zeros(taus.shape, dtype=complex)
    if taus.size == 0:
        return out
    step = max(1, _CHUNK_PAIRS // max(1, 2 * len(a.start)))
    for s in range(0, taus.size, step):
        t_chunk, n_chunk = taus[s:s + step], nus[s:s + step]
        qi, i, j = _slot_pairs(a, b, t_chunk)
        if qi.size == 0:
            continue
        tau, nu = t_chunk[qi], n_chunk[qi]
        lo = np.maximum(a.start[i], b.start[j] - tau)
        hi = np.minimum(a.start[i] + a.width, b.start[j] - tau + b.width)
        w = hi - lo
        F = a.freq[i]  # (P, M)
        G = b.freq[j]
        A = a.coef[i] * np.exp(2j * np.pi * F * (lo - a.origin[i])[:, None])
        B = b.coef[j] * np.exp(2j * np.pi * G * (lo + tau - b.origin[j])[:, None])
        y = 2 * np.pi * (F[:, :, None] - G[:, None, :] + nu[:, None, None]) * w[:, None, None]
        pair = A[:, :, None] * B.conj()[:, None, :] * overlap_kernel(y) * weights
        term = pair.sum(axis=(1, 2)) * w * np.exp(2j * np.pi * nu * lo)
        out[s:s + step] += np.bincount(qi, weights=term.real, minlength=t_chunk.size) \
            + 1j * np.bincount(qi, weights=term.imag, minlength=t_chunk.size)
    return out


def cross_af_closed(cfg: WaveformConfig, msgs: Sequence[PulseMessage], secrets: SecretSequences,
                    m: int, m_prime: int, tau, nu):
    """Closed-form cross-AF between transmit antennas m and m' (scalar or array queries)."""
    table = chip_table(cfg, msgs, secrets)
    W = np.zeros((cfg.M, cfg.M))
    W[m, m_prime] = 1.0
    val = table_af(table, table, tau, nu, W)
    return val[0] if np.ndim(tau) == 0 else val


def mimo_af(cfg: WaveformConfig, msgs: Sequence[PulseMessage], secrets: SecretSequences,
            query: AFQuery | Sequence[AFQuery]):
    """Spatially weighted sum of all cross-AFs for one query or a batch sharing (f, f', gamma)."""
    single = isinstance(query, AFQuery)
    qs = [query] if single else list(query)
    table = chip_table(cfg, msgs, secrets)
    W = spatial_weights(cfg.M, qs[0].f, qs[0].f_prime, qs[0].gamma_arr)
    val = table_af(table, table, [q.tau for q in qs], [q.nu for q in qs], W)
    return val[0] if single else val


def mimo_af_grid(cfg, msgs, secrets, taus, nus, W: Optional[np.ndarray] = None,
                 reference: Optional[ChipTable] = None) -> np.ndarray:
    """Vectorized MIMO AF for paired arrays of delays and Dopplers.

    ``reference`` replaces the delayed copy by another waveform (cross-AF
    against a mismatched receiver reference).
    """
    table = chip_table(cfg, msgs, secrets)
    W = np.ones((cfg.M, cfg.M)) if W is None else W
    return table_af(table, reference if reference is not None else table, taus, nus, W)


def _breakpoints(x: ComplexSignal, y: ComplexSignal, tau: float) -> np.ndarray:
    ex = np.asarray(x.edges if x.edges is not None else [x.t0, x.t0 + x.span], dtype=float)
    ey = np.asarray(y.edges if y.edges is not None else [y.t0, y.t0 + y.span], dtype=float) - tau
    lo = max(ex.min(), ey.min())
    hi = min(ex.max(), ey.max())
    if hi <= lo:
        return np.array([])
    pts = np.concatenate([ex, ey, [lo, hi]])
    return np.unique(pts[(pts >= lo) & (pts <= hi)])


def mimo_af_numeric(x: ComplexSignal, y: ComplexSignal, tau: float, nu: float, oversample: int,
                    weights: Optional[np.ndarray] = None) -> complex:
    """Quadrature of sum_{m,m'} W[m,m'] int x_m(t) conj(y_m'(t + tau)) exp(i 2 pi nu t) dt.

    Both waveforms are re-evaluated analytically at every node. The support is
    split at every chip edge of x and of y shifted by -tau, and each piece gets
    ceil(length * f_s * oversample) midpoint nodes.
    """
    if not math.isclose(x.f_s, y.f_s, rel_tol=1e-12):
        raise SampleRateMismatch(f"{x.f_s} vs {y.f_s}")
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    if x.waveform is None or y.waveform is None:
        raise ValueError("quadrature needs signals carrying their analytic waveform")
    W = np.ones((x.n_rows, y.n_rows)) if weights is None else np.asarray(weights)
    bp = _breakpoints(x, y, tau)
    if bp.size < 2:
        return 0j
    rate = x.f_s * oversample
    # each piece holds at most one tone per antenna, so a piece where either
    # signal is silent at its midpoint contributes nothing
    mids = 0.5 * (bp[:-1] + bp[1:])
    live = np.any(x.waveform(mids) != 0, axis=0) & np.any(y.waveform(mids + tau) != 0, axis=0)
    nodes, widths = [], []
    for a, b in zip(bp[:-1][live], bp[1:][live]):
        n = max(1, math.ceil((b - a) * rate - 1e-9))
        h = (b - a) / n
        nodes.append(a + (np.arange(n) + 0.5) * h)
        widths.append(np.full(n, h))
    if not nodes:
        return 0j
    t = np.concatenate(nodes)
    dt = np.concatenate(widths)
    total = 0j
    for s in range(0, t.size, 1 << 16):
        tt, hh = t[s:s + (1 << 16)], dt[s:s + (1 << 16)]
        X = x.waveform(tt)
        Y = y.waveform(tt + tau)
        ph = np.exp(2j * np.pi * nu * tt) * hh
        G = (X * ph) @ Y.conj().T
        total += np.sum(W * G)
    return complex(total)


def af_numeric_oracle(x_m: ComplexSignal, x_mp: ComplexSignal, tau: float, nu: float, oversample: int = 64) -> complex:
    """Numerical cross-AF of two single-antenna signals."""
    if x_m.n_rows != 1 or x_mp.n_rows != 1:
        raise ValueError("oracle takes single-row signals; select antennas with .rows()")
    return mimo_af_numeric(x_m, x_mp, tau, nu, oversample)


def _draw_realization(cfg: WaveformConfig, seed: int, draw: int):
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(draw)]))
    secrets = random_secrets(cfg, rng)
    msgs = [encode_message(random_bits(cfg, rng), cfg, l) for l in range(cfg.L)]
    return msgs, secrets


def cut_axes(cfg: WaveformConfig, cut: str, points: int):
    """Default delay/Doppler axes of a cut: +-2 PRIs in delay, +-500 kHz in Doppler."""
    if cut == "zero-doppler":
        return (-2 * cfg.T_p, 2 * cfg.T_p, points), (0.0, 0.0, 1)
    if cut == "zero-delay":
        return (0.0, 0.0, 1), (-5e5, 5e5, points)
    raise ValueError(f"unknown cut {cut!r}")


def af_cut(cfg: WaveformConfig, scheme: Optional[str] = None, *, cut: str = "zero-doppler", points: int = 801,
           delay_axis=None, doppler_axis=None, draws: int = 1, seed: int = 0) -> AFGrid:
    """Mean |AF| over ``draws`` random (message, secrets) realizations, normalized to the origin.

    Each draw uses its own RNG stream keyed by (seed, draw). Antenna weights are
    unity (broadside, f = f' = 0). The normalization divides by the mean |AF(0,0)|
    so the origin sits at exactly 0 dB.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    if scheme is not None:
        cfg = cfg.replace(scheme=scheme)
    d_ax, n_ax = cut_axes(cfg, cut, points)
    d_ax = tuple(delay_axis) if delay_axis is not None else d_ax
    n_ax = tuple(doppler_axis) if doppler_axis is not None else n_ax
    taus = axis_points(*d_ax)
    nus = axis_points(*n_ax)
    T, V = np.meshgrid(taus, nus, indexing="ij")
    acc = np.zeros(T.shape)
    origin = 0.0
    for d in range(draws):
        msgs, secrets = _draw_realization(cfg, seed, d)
        table = chip_table(cfg, msgs, secrets)
        W = np.ones((cfg.M, cfg.M))
        acc += np.abs(table_af(table, table, T.ravel(), V.ravel(), W)).reshape(T.shape)
        origin += abs(table_af(table, table, [0.0], [0.0], W)[0])
    values = acc / origin
    meta = {"cut": cut, "draws": draws, "seed": seed, "scheme": cfg.scheme, "Phi_T": cfg.Phi_T,
            "Phi_f": cfg.Phi_f, "config_digest": cfg.digest()}
    return AFGrid(d_ax, n_ax, values, True, meta)


def sidelobe_stats(grid: AFGrid, cfg: WaveformConfig) -> dict:
    """Zero-Doppler summary: mean sidelobe level and the peak lobe near nonzero PRI multiples (dB)."""
    taus, db = grid.cut()
    lin = 10 ** (db / 20)
    side = np.abs(taus) >= cfg.delta_t
    k = np.round(taus / cfg.T_p)
    near = (k != 0) & (np.abs(taus - k * cfg.T_p) < cfg.tau)
    return {
        "mean_sidelobe_db": float(20 * np.log10(lin[side].mean())),
        "peak_sidelobe_db": float(db[side].max()),
        "peak_periodic_db": float(db[near].max()) if near.any() else float("-inf"),
    }
