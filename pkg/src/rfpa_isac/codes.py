"""Bit/symbol mapping and hop-code algebra.

Hop codes are built as ``c = P S d``: the selection matrix ``S`` picks an M-subset
of the K hop indices (listed in ascending order) and the permutation matrix ``P``
assigns those hops to antennas. Subsets are ranked lexicographically and
permutations by their Lehmer code (factorial number system), so a SIM symbol
is the single integer ``s * M! + p``.
"""

from __future__ import annotations

from math import comb, factorial
from typing import Sequence

import numpy as np

from .errors import DuplicateHop, IndexOverflow


def gray_encode(n):
    return n ^ (n >> 1)


def gray_decode(g):
    n = g
    shift = g >> 1
    # works for ints and integer ndarrays alike
    while np.any(shift):
        n = n ^ shift
        shift = shift >> 1
    return n


def bits_to_int(bits: Sequence[int]) -> int:
    """MSB-first bit sequence to a Python int (arbitrary width)."""
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def int_to_bits(value: int, width: int) -> np.ndarray:
    if value < 0 or value >> width:
        raise IndexOverflow(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def pack_groups(bits: np.ndarray, width: int) -> np.ndarray:
    """Interpret the last axis of ``bits`` as MSB-first groups of ``width`` bits."""
    bits = np.asarray(bits, dtype=np.int64)
    shape = bits.shape[:-1] + (bits.shape[-1] // width, width)
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return (bits.reshape(shape) * weights).sum(axis=-1)


def unpack_groups(values: np.ndarray, width: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    bits = (values[..., None] >> shifts) & 1
    return bits.reshape(values.shape[:-1] + (values.shape[-1] * width,)).astype(np.uint8)


def code_space(K: int, M: int) -> int:
    """Number of distinct hop-code vectors, C(K, M) * M!."""
    return comb(K, M) * factorial(M)


def sim_bits(K: int, M: int) -> int:
    """floor(log2(C(K,M) * M!)), exact for any K."""
    return code_space(K, M).bit_length() - 1


def log2_int(n: int) -> int:
    return n.bit_length() - 1


def unrank_subset(rank: int, K: int, M: int) -> list[int]:
    """The ``rank``-th M-subset of range(K) in lexicographic order."""
    if not 0 <= rank < comb(K, M):
        raise IndexOverflow(f"subset rank {rank} outside [0, C({K},{M}))")
    out = []
    x = 0
    for i in range(M):
        while True:
            c = comb(K - x - 1, M - i - 1)
            if rank < c:
                out.append(x)
                x += 1
                break
            rank -= c
            x += 1
    return out


def rank_subset(subset: Sequence[int], K: int) -> int:
    M = len(subset)
    rank = 0
    prev = -1
    for i, v in enumerate(subset):
        for x in range(prev + 1, v):
            rank += comb(K - x - 1, M - i - 1)
        prev = v
    return rank


def unrank_permutation(rank: int, M: int) -> list[int]:
    if not 0 <= rank < factorial(M):
        raise IndexOverflow(f"permutation rank {rank} outside [0, {M}!)")
    avail = list(range(M))
    out = []
    for i in range(M):
        f = factorial(M - 1 - i)
        d, rank = divmod(rank, f)
        out.append(avail.pop(d))
    return out


def rank_permutation(perm: Sequence[int]) -> int:
    M = len(perm)
    avail = list(range(M))
    rank = 0
    for i, v in enumerate(perm):
        d = avail.index(v)
        rank += d * factorial(M - 1 - i)
        avail.pop(d)
    return rank


def compose_code(s_index: int, p_index: int, cfg=None, *, K: int | None = None, M: int | None = None) -> np.ndarray:
    """Hop-code vector for subset rank ``s_index`` and permutation rank ``p_index``.

    Either pass a config or explicit ``K`` and ``M``.
    """
    if cfg is not None:
        K, M = cfg.K, cfg.M
    subset = unrank_subset(int(s_index), K, M)
    perm = unrank_permutation(int(p_index), M)
    return np.array([subset[j] for j in perm], dtype=np.int64)


def decompose_code(c: Sequence[int], cfg=None, *, K: int | None = None) -> tuple[int, int]:
    """Inverse of :func:`compose_code`: ``(subset rank, permutation rank)``."""
    if cfg is not None:
        K = cfg.K
    c = [int(v) for v in c]
    if len(set(c)) != len(c):
        raise DuplicateHop(f"repeated hop in code vector {c}")
    if any(v < 0 or v >= K for v in c):
        raise IndexOverflow(f"hop outside [0, {K}) in {c}")
    subset = sorted(c)
    pos = {v: i for i, v in enumerate(subset)}
    perm = [pos[v] for v in c]
    return rank_subset(subset, K), rank_permutation(perm)


def selection_matrix(subset: Sequence[int], K: int) -> np.ndarray:
    S = np.zeros((len(subset), K), dtype=np.int64)
    S[np.arange(len(subset)), list(subset)] = 1
    return S


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    M = len(perm)
    P = np.zeros((M, M), dtype=np.int64)
    P[np.arange(M), list(perm)] = 1
    return P


def code_matrices(c: Sequence[int], K: int) -> tuple[np.ndarray, np.ndarray]:
    """Selection and permutation matrices with ``P @ S @ arange(K) == c``."""
    subset = sorted(int(v) for v in c)
    pos = {v: i for i, v in enumerate(subset)}
    return selection_matrix(subset, K), permutation_matrix([pos[int(v)] for v in c])


def repair_code(c: Sequence[int], K: int) -> np.ndarray:
    """Replace repeated hops (after the first occurrence) by the smallest unused ones."""
    seen = set()
    out = []
    dup_pos = []
    for i, v in enumerate(int(x) for x in c):
        if v in seen:
            dup_pos.append(i)
            out.append(-1)
        else:
            seen.add(v)
            out.append(v)
    free = (h for h in range(K) if h not in seen)
    for i in dup_pos:
        out[i] = next(free)
    return np.array(out, dtype=np.int64)
