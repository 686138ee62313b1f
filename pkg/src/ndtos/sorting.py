"""Front-propagation sort of the faces of an immersion.

Two implementations of the same hierarchical queue live here.
:class:`HierQueue` keeps one ``deque`` per level and backs the step-by-step
API (:func:`priority_push`, :func:`priority_pop`, :func:`sort_reference`).
The compiled kernel behind :func:`sort` stores each level's FIFO as a chain
of fixed-size blocks drawn from a shared pool, so pushes and pops walk
memory sequentially.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .interpolate import IntervalImage

DOWN_FIRST = 0
UP_FIRST = 1
POLICIES = {"down": DOWN_FIRST, "up": UP_FIRST, "down-first": DOWN_FIRST, "up-first": UP_FIRST}
BLOCK = 64  # faces per FIFO block in the kernel


def policy_code(policy) -> int:
    if isinstance(policy, (int, np.integer)) and int(policy) in (DOWN_FIRST, UP_FIRST):
        return int(policy)
    try:
        return POLICIES[policy]
    except (KeyError, TypeError):
        raise ValueError(f"unknown next-level policy {policy!r}") from None


@njit(cache=True)
def _clamp(level, lo, hi):
    if level < lo:
        return lo
    if level > hi:
        return hi
    return level


@njit(cache=True)
def _next_level(count, level_min, level, policy):
    # Nearest nonempty bucket; equal distances resolved by the policy.
    nb = count.shape[0]
    b = level - level_min
    for dist in range(1, nb):
        down = b - dist
        up = b + dist
        if policy == DOWN_FIRST:
            if down >= 0 and count[down] > 0:
                return down + level_min
            if up < nb and count[up] > 0:
                return up + level_min
        else:
            if up < nb and count[up] > 0:
                return up + level_min
            if down >= 0 and count[down] > 0:
                return down + level_min
        if down < 0 and up >= nb:
            break
    return level


class HierQueue:
    """Hierarchical FIFO queue over the integer levels ``[level_min, level_max]``.

    A face may be enqueued once per queue lifetime.
    """

    def __init__(self, level_min: int, level_max: int, capacity: int):
        if level_max < level_min:
            raise ValueError("empty level range")
        nb = level_max - level_min + 1
        self.level_min = int(level_min)
        self.level_max = int(level_max)
        self.buckets = [deque() for _ in range(nb)]
        self.count = np.zeros(nb, dtype=np.int64)
        self.seen = np.zeros(capacity, dtype=np.bool_)

    def __len__(self) -> int:
        return int(self.count.sum())

    def push(self, face: int, level: int) -> None:
        if self.seen[face]:
            raise RuntimeError(f"face {face} enqueued twice")
        if not self.level_min <= level <= self.level_max:
            raise ValueError(f"level {level} outside the queue range")
        self.seen[face] = True
        b = level - self.level_min
        self.buckets[b].append(face)
        self.count[b] += 1

    def pop(self, level: int) -> int:
        b = level - self.level_min
        if not 0 <= b < len(self.buckets) or not self.buckets[b]:
            raise IndexError(f"no face queued at level {level}")
        self.count[b] -= 1
        return self.buckets[b].popleft()

    def nonempty_levels(self) -> list:
        return [int(b) + self.level_min for b in np.flatnonzero(self.count)]


def priority_push(q: HierQueue, h: int, U: IntervalImage, l_cur: int) -> int:
    """Enqueue flat face index ``h`` at the level of ``U(h)`` closest to ``l_cur``."""
    lo = int(U.lo.flat[h])
    hi = int(U.hi.flat[h])
    level = int(_clamp(l_cur, lo, hi))
    q.push(h, level)
    return level


def priority_pop(q: HierQueue, l_cur: int, policy="down") -> tuple:
    """Pop from ``l_cur``, moving to the nearest nonempty level when it is empty.

    Returns ``(face, new_level)``.
    """
    if len(q) == 0:
        raise IndexError("pop from an empty hierarchical queue")
    inside = min(max(l_cur, q.level_min), q.level_max)
    if q.count[inside - q.level_min] > 0:
        l_cur = inside
    else:
        l_cur = int(_next_level(q.count, q.level_min, inside, policy_code(policy)))
    return q.pop(l_cur), l_cur


@dataclass
class SortResult:
    """Propagation order and flattened levels.

    ``R`` lists flat face indices in visit order; ``u_flat`` is the level at
    which each face was popped; ``levels_visited[k]`` is the current level of
    the k-th run of consecutive pops, which starts at ``R`` index
    ``run_starts[k]``.
    """

    R: np.ndarray
    u_flat: np.ndarray
    levels_visited: np.ndarray
    run_starts: np.ndarray
    shape: tuple = field(default=())


@njit(cache=True)
def _sort_kernel(lo, hi, shape, p_inf, l_inf, level_min, nlevels, policy,
                 deja_vu, R, u_flat, runs, run_levels, slots, bnext):
    # Queue operations are written inline: numba calls that pass many
    # arrays cost several times the work they do here.
    ndim = shape.shape[0]
    strides = np.empty(ndim, dtype=np.int64)
    s = 1
    for k in range(ndim - 1, -1, -1):
        strides[k] = s
        s *= shape[k]

    # Per level: head block and offset, tail block and fill, size.
    hb = np.full(nlevels, -1, dtype=np.int64)
    hp = np.zeros(nlevels, dtype=np.int64)
    tb = np.full(nlevels, -1, dtype=np.int64)
    tp = np.zeros(nlevels, dtype=np.int64)
    count = np.zeros(nlevels, dtype=np.int64)
    free = -1  # recycled blocks, chained through bnext
    fresh = 0

    b = l_inf - level_min
    bnext[0] = -1
    hb[b] = 0
    tb[b] = 0
    tp[b] = 1
    slots[0] = p_inf
    count[b] = 1
    fresh = 1
    deja_vu[p_inf] = True
    remaining = 1
    l_cur = l_inf
    idx = 0
    nruns = 0
    while remaining > 0:
        if count[l_cur - level_min] == 0:
            l_cur = _next_level(count, level_min, l_cur, policy)
        # pop
        b = l_cur - level_min
        blk = hb[b]
        h = slots[blk * BLOCK + hp[b]]
        hp[b] += 1
        count[b] -= 1
        if count[b] == 0:
            hb[b] = -1
            tb[b] = -1
            bnext[blk] = free
            free = blk
        elif hp[b] == BLOCK:
            hb[b] = bnext[blk]
            hp[b] = 0
            bnext[blk] = free
            free = blk
        remaining -= 1

        if nruns == 0 or run_levels[nruns - 1] != l_cur:
            runs[nruns] = idx
            run_levels[nruns] = l_cur
            nruns += 1
        u_flat[h] = l_cur
        R[idx] = h
        idx += 1

        rem = h
        for k in range(ndim):
            c = rem // strides[k]
            rem -= c * strides[k]
            for side in range(2):
                if side == 0:
                    if c == 0:
                        continue
                    m = h - strides[k]
                else:
                    if c == shape[k] - 1:
                        continue
                    m = h + strides[k]
                if deja_vu[m]:
                    continue
                deja_vu[m] = True
                remaining += 1
                # push at the level of U(m) closest to l_cur
                lv = l_cur
                if lv < lo[m]:
                    lv = lo[m]
                elif lv > hi[m]:
                    lv = hi[m]
                q = lv - level_min
                t = tb[q]
                if t < 0 or tp[q] == BLOCK:
                    if free >= 0:
                        nb = free
                        free = bnext[free]
                    else:
                        nb = fresh
                        fresh += 1
                    bnext[nb] = -1
                    if t < 0:
                        hb[q] = nb
                        hp[q] = 0
                    else:
                        bnext[t] = nb
                    tb[q] = nb
                    tp[q] = 0
                    t = nb
                slots[t * BLOCK + tp[q]] = m
                tp[q] += 1
                count[q] += 1
    return idx, nruns


def sort(U: IntervalImage, policy="down") -> SortResult:
    """Sort all faces of ``U`` by front propagation from the exterior face.

    Parameters
    ----------
    U : IntervalImage
        Immersion with ``p_inf`` and ``l_inf`` set.
    policy : {"down", "up"}
        Which side wins when two nonempty levels are equally close.
    """
    if U.p_inf is None or U.l_inf is None:
        raise ValueError("immersion has no exterior face / border level")
    shape = np.asarray(U.lo.shape, dtype=np.int64)
    p_inf = int(np.ravel_multi_index(tuple(U.p_inf), U.lo.shape))
    lo = U.lo.ravel()
    hi = U.hi.ravel()
    if not lo[p_inf] <= U.l_inf <= hi[p_inf]:
        raise ValueError("border level is not a value of the exterior face")
    level_min = int(min(lo.min(), U.l_inf))
    level_max = int(max(hi.max(), U.l_inf))
    n = lo.shape[0]
    # Work arrays come from numpy, which asks for huge pages on large
    # allocations; the kernel's random accesses then miss the TLB far less.
    R = np.empty(n, dtype=np.int32)
    u_flat = np.empty(n, dtype=lo.dtype)
    runs = np.empty(n, dtype=np.int64)
    run_levels = np.empty(n, dtype=np.int64)
    nlevels = level_max - level_min + 1
    # Live blocks: at most n / BLOCK full ones plus a partial head and tail per level.
    nblocks = n // BLOCK + 2 * nlevels + 1
    idx, nruns = _sort_kernel(
        lo, hi, shape, p_inf, int(U.l_inf), level_min, nlevels, policy_code(policy),
        np.zeros(n, dtype=np.bool_), R, u_flat, runs, run_levels,
        np.empty(nblocks * BLOCK, dtype=np.int32), np.empty(nblocks, dtype=np.int64),
    )
    if idx != n:
        raise RuntimeError("propagation did not reach every face")
    return SortResult(R, u_flat, run_levels[:nruns].copy(), runs[:nruns].copy(), shape=tuple(U.lo.shape))


def sort_reference(U: IntervalImage, policy="down") -> SortResult:
    """Plain-Python propagation through :class:`HierQueue`, for checking :func:`sort`."""
    shape = U.lo.shape
    n = U.lo.size
    level_min = int(min(U.lo.min(), U.l_inf))
    level_max = int(max(U.hi.max(), U.l_inf))
    q = HierQueue(level_min, level_max, n)
    strides = [int(x) // U.lo.itemsize for x in U.lo.strides]
    p_inf = int(np.ravel_multi_index(tuple(U.p_inf), shape))
    q.push(p_inf, int(U.l_inf))
    l_cur = int(U.l_inf)
    R, u_flat = [], np.empty(n, dtype=U.lo.dtype)
    levels, starts = [], []
    while len(q):
        h, l_cur = priority_pop(q, l_cur, policy)
        if not levels or levels[-1] != l_cur:
            levels.append(l_cur)
            starts.append(len(R))
        u_flat[h] = l_cur
        R.append(h)
        coords = np.unravel_index(h, shape)
        for k in range(len(shape)):
            for step in (-1, 1):
                c = coords[k] + step
                if 0 <= c < shape[k] and not q.seen[h + step * strides[k]]:
                    priority_push(q, h + step * strides[k], U, l_cur)
    return SortResult(np.array(R, dtype=np.int32), u_flat, np.array(levels, dtype=np.int64),
                      np.array(starts, dtype=np.int64), shape=tuple(shape))
