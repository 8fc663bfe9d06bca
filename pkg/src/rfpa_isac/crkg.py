"""Secret sequence generation from reciprocal channel probes.

Each party quantizes its own complex probe samples with an equal-size fuzzy
C-means vector quantizer and labels the clusters with a rule that depends only
on the cluster geometry, so Alice and Bob reach the same labels without
exchanging anything when their probes are close.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import CIRSampleSet
from .config import WaveformConfig
from .errors import DegenerateData, LengthMismatch
from .sigmodel import SecretSequences


@dataclass(frozen=True)
class FcmState:
    centers: np.ndarray
    memberships: np.ndarray
    m: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    counts: np.ndarray
    centers: np.ndarray


def _as_points(samples) -> np.ndarray:
    z = np.asarray(samples, dtype=complex).ravel()
    return np.column_stack([z.real, z.imag])


def farthest_point_init(points: np.ndarray, Phi: int, start: int) -> np.ndarray:
    """Phi points by farthest-point traversal starting from ``points[start]``."""
    idx = [int(start)]
    d = np.linalg.norm(points - points[start], axis=1)
    for _ in range(Phi - 1):
        nxt = int(np.argmax(d))
        idx.append(nxt)
        d = np.minimum(d, np.linalg.norm(points - points[nxt], axis=1))
    return points[idx].copy()


def fcm_memberships(points: np.ndarray, centers: np.ndarray, m: float = 2.0) -> np.ndarray:
    """Standard FCM membership matrix (L x Phi); a point sitting on a center belongs to it fully."""
    d = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
    zero = d == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = d ** (-2.0 / (m - 1.0))
        u = inv / inv.sum(axis=1, keepdims=True)
    hit = zero.any(axis=1)
    if hit.any():
        u[hit] = zero[hit] / zero[hit].sum(axis=1, keepdims=True)
    return u


def fcm_centers(points: np.ndarray, u: np.ndarray, m: float = 2.0) -> np.ndarray:
    w = u ** m
    return (w.T @ points) / w.sum(axis=0)[:, None]


def fcm_cluster(samples, Phi: int, m: float = 2.0, eps: float = 1e-5, max_iter: int = 300,
                rng: Optional[np.random.Generator] = None, start: Optional[int] = None,
                init_centers: Optional[np.ndarray] = None) -> FcmState:
    """Fuzzy C-means on complex samples treated as 2-D points.

    Initial centers come from farthest-point traversal starting at sample
    ``start`` (drawn from ``rng`` when not given) unless ``init_centers`` is set.
    Stops when the Frobenius norm of the membership change is at most ``eps``.
    """
    points = _as_points(samples)
    L = len(points)
    if Phi < 1 or L < Phi:
        raise ValueError(f"need at least Phi={Phi} samples, got {L}")
    if np.all(points == points[0]):
        raise DegenerateData("all samples identical")
    if init_centers is not None:
        centers = _as_points(init_centers) if np.iscomplexobj(init_centers) else np.asarray(init_centers, float)
    else:
        if start is None:
            start = int((rng or np.random.default_rng(0)).integers(L))
        centers = farthest_point_init(points, Phi, start)
    u = fcm_memberships(points, centers, m)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        centers = fcm_centers(points, u, m)
        u_new = fcm_memberships(points, centers, m)
        delta = np.linalg.norm(u_new - u)
        u = u_new
        if delta <= eps:
            converged = True
            break
    return FcmState(centers[:, 0] + 1j * centers[:, 1], u, m, it, converged)


def equalize_cluster_sizes(state: FcmState, Phi: int, samples=None) -> ClusterAssignment:
    """Greedy equal-size assignment by descending membership.

    Visiting membership entries from largest to smallest is the same as
    repeatedly taking the global maximum and zeroing either the point's row
    (once assigned) or the single entry (when its cluster is full). Centers are
    recomputed as plain cluster means when ``samples`` is given.
    """
    u = np.asarray(state.memberships)
    L = u.shape[0]
    if L % Phi:
        raise ValueError(f"L={L} not divisible by Phi={Phi}")
    cap = L // Phi
    labels = np.full(L, -1, dtype=np.int64)
    counts = np.zeros(Phi, dtype=np.int64)
    order = np.argsort(-u, axis=None, kind="stable")
    remaining = L
    for flat in order:
        i, k = divmod(int(flat), Phi)
        if labels[i] >= 0 or counts[k] >= cap:
            continue
        labels[i] = k
        counts[k] += 1
        remaining -= 1
        if remaining == 0:
            break
    if samples is not None:
        z = np.asarray(samples, dtype=complex).ravel()
        centers = np.array([z[labels == k].mean() for k in range(Phi)])
    else:
        centers = np.asarray(state.centers)
    return ClusterAssignment(labels, counts, centers)


def canonical_label(centers, z: float = 2.0) -> tuple[np.ndarray, bool]:
    """Geometry-only labeling of cluster centers.

    Returns ``(perm, converged)`` with ``perm[c]`` the label of center ``c``.
    Centers are standardized per axis and numbered by ascending x; adjacent
    pairs that are close in x are then reordered: swapped when the later one
    sits clearly lower in y, otherwise ordered by x + y. Passes repeat until
    nothing changes or 10 * Phi passes have run.
    """
    c = np.asarray(centers, dtype=complex).ravel()
    Phi = len(c)
    if z <= 0:
        raise ValueError("z must be positive")
    x, y = c.real.copy(), c.imag.copy()
    for v in (x, y):
        sd = v.std()
        v -= v.mean()
        if sd > 0:
            v /= sd
    Dx = x[:, None] - x[None, :]
    Dy = y[:, None] - y[None, :]
    t_x, t_y = Dx.std() / z, Dy.std() / z
    order = list(np.argsort(x, kind="stable"))
    converged = False
    for _ in range(10 * Phi):
        changed = False
        for k in range(Phi - 1):
            i, j = order[k], order[k + 1]
            dx = abs(x[j] - x[i])
            dy = y[i] - y[j]
            if dx >= t_x:
                continue
            if dy >= t_y:
                swap = True
            else:
                swap = x[i] + y[i] > x[j] + y[j]
            if swap:
                order[k], order[k + 1] = j, i
                changed = True
        if not changed:
            converged = True
            break
    perm = np.empty(Phi, dtype=np.int64)
    perm[np.array(order)] = np.arange(Phi)
    return perm, converged


def quantize_party(samples, Phi: int, *, start: int, z: float = 2.0, m: float = 2.0, eps: float = 1e-5,
                   max_iter: int = 300, init_centers=None) -> np.ndarray:
    """Full three-phase pipeline for one party: a label in [0, Phi) per sample."""
    if Phi == 1:
        return np.zeros(len(samples), dtype=np.int64)
    state = fcm_cluster(samples, Phi, m, eps, max_iter, start=start, init_centers=init_centers)
    assign = equalize_cluster_sizes(state, Phi, samples)
    perm, _ = canonical_label(assign.centers, z)
    return perm[assign.labels]


@dataclass(frozen=True)
class SecretTriple:
    alice: SecretSequences
    bob: SecretSequences
    eve: SecretSequences


def _party_labels(probe: CIRSampleSet, Phi: int, start: int, z: float, fcm: dict, shared_init: bool,
                  include_eve: bool = True):
    a = quantize_party(probe.alice, Phi, start=start, z=z, **fcm)
    init = None
    if shared_init and Phi > 1:
        init = farthest_point_init(_as_points(probe.alice), Phi, start)
    b = quantize_party(probe.bob, Phi, start=start, z=z, init_centers=init, **fcm)
    e = quantize_party(probe.eve, Phi, start=start, z=z, **fcm) if include_eve else None
    return a, b, e


def generate_labels(probe: CIRSampleSet, Phi: int, *, seed: int = 0, round_tag: int = 0, z: float = 2.0,
                    m: float = 2.0, eps: float = 1e-5, max_iter: int = 300, shared_init: bool = False,
                    include_eve: bool = True):
    """One probing round quantized by every party: ``(alice, bob, eve)`` label arrays.

    The Phase-I starting sample is derived from the public ``seed`` so each
    party starts its traversal at the same index of its own data; no sample
    values are exchanged unless ``shared_init`` is set, in which case Bob
    starts from Alice's initial centers.
    """
    L = len(probe)
    if L % Phi:
        raise ValueError(f"probe length {L} not divisible by Phi={Phi}")
    start = int(np.random.default_rng([int(seed), 0xC1, int(round_tag)]).integers(0, L))
    return _party_labels(probe, Phi, start, z, {"m": m, "eps": eps, "max_iter": max_iter}, shared_init,
                         include_eve)


def generate_secrets(probe_T: CIRSampleSet, probe_f: CIRSampleSet, cfg: Optional[WaveformConfig] = None, *,
                     Phi_T: Optional[int] = None, Phi_f: Optional[int] = None, seed: int = 0,
                     z: float = 2.0, m: float = 2.0, eps: float = 1e-5, max_iter: int = 300,
                     shared_init: bool = False, reconcile: bool = False) -> SecretTriple:
    """Secret sequences for Alice, Bob and Eve from two independent probing rounds.

    The first round (``probe_T``) is quantized with Phi_T levels and gives the
    PRI offsets, the second (``probe_f``) with Phi_f levels the carrier offsets.
    Alphabet sizes come from ``cfg`` unless given explicitly.
    ``reconcile=True`` hands Bob Alice's sequences, standing in for an ideal
    reconciliation step.
    """
    Phi_T = Phi_T if Phi_T is not None else cfg.Phi_T
    Phi_f = Phi_f if Phi_f is not None else cfg.Phi_f
    if len(probe_f) != len(probe_T):
        raise LengthMismatch("probing rounds must have equal length")
    kw = {"seed": seed, "z": z, "m": m, "eps": eps, "max_iter": max_iter, "shared_init": shared_init}
    aT, bT, eT = generate_labels(probe_T, Phi_T, round_tag=0, **kw)
    af, bf, ef = generate_labels(probe_f, Phi_f, round_tag=1, **kw)
    alice = SecretSequences(aT, af)
    bob = alice if reconcile else SecretSequences(bT, bf)
    return SecretTriple(alice, bob, SecretSequences(eT, ef))


def empirical_entropy(labels) -> float:
    """Shannon entropy (bits) of the label histogram."""
    if isinstance(labels, ClusterAssignment):
        labels = labels.labels
    labels = np.asarray(labels).ravel()
    if labels.size == 0:
        raise ValueError("labels must be non-empty")
    _, counts = np.unique(labels, return_counts=True)
    p = counts / counts.sum()
    return float(-np.sum(p * np.log2(p))) + 0.0


def scalar_quantize(samples, Phi: int) -> np.ndarray:
    """Baseline: uniform bins over [min, max] of the real part, one per sample."""
    re = np.asarray(samples, dtype=complex).real
    lo, hi = re.min(), re.max()
    if hi == lo:
        return np.zeros(re.size, dtype=np.int64)
    idx = np.floor((re - lo) / (hi - lo) * Phi).astype(np.int64)
    return np.clip(idx, 0, Phi - 1)


def _bits(values: np.ndarray, width: int) -> np.ndarray:
    return (values[:, None] >> np.arange(width - 1, -1, -1)) & 1


def bdr(seq_a, seq_b, phi=None) -> float:
    """Bitwise disagreement rate between two label sequences.

    Integer arrays need ``phi`` (alphabet size). For :class:`SecretSequences`
    ``phi`` is ``(Phi_T, Phi_f)`` and both sequences are compared bitwise.
    """
    if isinstance(seq_a, SecretSequences):
        if len(seq_a) != len(seq_b):
            raise LengthMismatch("sequences differ in length")
        pT, pf = phi if phi is not None else (int(max(seq_a.gamma_T.max(), seq_b.gamma_T.max())) + 1,
                                              int(max(seq_a.gamma_f.max(), seq_b.gamma_f.max())) + 1)
        wT, wf = _width(pT), _width(pf)
        diff = _diff_bits(seq_a.gamma_T, seq_b.gamma_T, wT) + _diff_bits(seq_a.gamma_f, seq_b.gamma_f, wf)
        total = len(seq_a) * (wT + wf)
        return diff / total if total else 0.0
    a = np.asarray(seq_a, dtype=np.int64).ravel()
    b = np.asarray(seq_b, dtype=np.int64).ravel()
    if a.size != b.size:
        raise LengthMismatch("sequences differ in length")
    if phi is None:
        phi = int(max(a.max(initial=0), b.max(initial=0))) + 1
    w = _width(phi)
    if w == 0 or a.size == 0:
        return 0.0
    return _diff_bits(a, b, w) / (a.size * w)


def _width(phi: int) -> int:
    return max(0, (int(phi) - 1).bit_length())


def _diff_bits(a, b, width) -> int:
    if width == 0:
        return 0
    return int(np.sum(_bits(np.asarray(a, np.int64), width) != _bits(np.asarray(b, np.int64), width)))


def symbol_agreement(seq_a: Sequence[int], seq_b: Sequence[int]) -> float:
    a, b = np.asarray(seq_a), np.asarray(seq_b)
    if a.size != b.size:
        raise LengthMismatch("sequences differ in length")
    return float(np.mean(a == b))
