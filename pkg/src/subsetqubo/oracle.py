"""Exact subset-sum solvers: brute force, meet-in-the-middle and a bitset DP.

These are the ground truth for the heuristics and the enumeration backend of
the audit layer.  The empty subset is excluded unless ``include_empty`` is
set; duplicate values give distinct masks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InstanceTooLarge, RangeTooLarge
from .model import SubsetSumInstance

BRUTE_FORCE_MAX_N = 24
MITM_MAX_N = 40
DEFAULT_MEMORY_CAP = 1 << 30

_SCAN_CHUNK = 1 << 16


@dataclass
class EnumerationResult:
    masks: list[np.ndarray] = field(default_factory=list)
    exhausted: bool = True
    cap_hit: bool = False

    def as_set(self) -> set[tuple[int, ...]]:
        """Solutions as sorted index tuples, for order-free comparison."""
        return {tuple(int(i) for i in np.flatnonzero(z)) for z in self.masks}

    @property
    def feasible(self) -> bool:
        return bool(self.masks)


def _bits_to_mask(bits: int, n: int) -> np.ndarray:
    return np.array([(bits >> i) & 1 for i in range(n)], dtype=bool)


def brute_force(instance: SubsetSumInstance, stop_at_first: bool = False,
                cap: Optional[int] = None, include_empty: bool = False) -> EnumerationResult:
    """Check every subset.

    When all values share a sign the search is a depth-first walk over the
    values sorted by magnitude that abandons a branch as soon as the target
    is overshot or out of reach.  Otherwise all ``2^n`` subset sums are
    scanned in vectorised chunks.
    """
    n = instance.n
    if n > BRUTE_FORCE_MAX_N:
        raise InstanceTooLarge(f"brute force handles n <= {BRUTE_FORCE_MAX_N}, got {n}")
    limit = cap
    if limit is not None and limit < 1:
        raise ValueError("cap must be at least 1")
    vals = instance.values
    if all(v >= 0 for v in vals):
        return _pruned_search(vals, instance.target, limit, include_empty, stop_at_first)
    if all(v <= 0 for v in vals):
        return _pruned_search([-v for v in vals], -instance.target, limit, include_empty,
                              stop_at_first)
    return _scan(instance, limit, include_empty, stop_at_first)


def _pruned_search(vals, target, limit, include_empty, stop_at_first) -> EnumerationResult:
    n = len(vals)
    order = sorted(range(n), key=lambda i: -vals[i])
    sorted_vals = [vals[i] for i in order]
    suffix = [0] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix[k] = suffix[k + 1] + sorted_vals[k]
    out = EnumerationResult()
    chosen: list[int] = []

    def walk(pos: int, partial: int) -> bool:
        # returns True to abort the whole search
        if partial > target or partial + suffix[pos] < target:
            return False
        if pos == n:
            if chosen or include_empty:
                if limit is not None and len(out.masks) >= limit:
                    out.cap_hit = True
                    out.exhausted = False
                    return True
                z = np.zeros(n, dtype=bool)
                z[[order[k] for k in chosen]] = True
                out.masks.append(z)
                if stop_at_first:
                    out.exhausted = False
                    return True
            return False
        chosen.append(pos)
        if walk(pos + 1, partial + sorted_vals[pos]):
            return True
        chosen.pop()
        return walk(pos + 1, partial)

    walk(0, 0)
    return out


def _subset_sum_table(vals: list[int]) -> np.ndarray:
    """Sums of all subsets of ``vals``, entry ``b`` is the sum for bitmask ``b``."""
    table = np.zeros(1, dtype=np.int64)
    for v in vals:
        table = np.concatenate([table, table + np.int64(v)])
    return table


def _scan(instance, limit, include_empty, stop_at_first) -> EnumerationResult:
    n = instance.n
    lo_bits = min(n, 12)
    low = _subset_sum_table(list(instance.values[:lo_bits]))
    high = _subset_sum_table(list(instance.values[lo_bits:]))
    low_mask = (1 << lo_bits) - 1
    out = EnumerationResult()
    T = np.int64(instance.target)
    for start in range(0, 1 << n, _SCAN_CHUNK):
        b = np.arange(start, min(start + _SCAN_CHUNK, 1 << n), dtype=np.int64)
        sums = low[b & low_mask] + high[b >> lo_bits]
        for bits in b[sums == T]:
            bits = int(bits)
            if bits == 0 and not include_empty:
                continue
            if limit is not None and len(out.masks) >= limit:
                out.cap_hit = True
                out.exhausted = False
                return out
            out.masks.append(_bits_to_mask(bits, n))
            if stop_at_first:
                out.exhausted = False
                return out
    return out


# -- meet in the middle -------------------------------------------------------

def _halves(instance: SubsetSumInstance):
    n = instance.n
    if n > MITM_MAX_N:
        raise InstanceTooLarge(f"meet-in-the-middle handles n <= {MITM_MAX_N}, got {n}")
    h = n // 2
    left = _subset_sum_table(list(instance.values[:h]))
    right = _subset_sum_table(list(instance.values[h:]))
    order = np.argsort(right, kind="stable")
    right_sorted = right[order]
    need = np.int64(instance.target) - left
    lo = np.searchsorted(right_sorted, need, side="left")
    hi = np.searchsorted(right_sorted, need, side="right")
    return h, order, lo, hi


def count_solutions(instance: SubsetSumInstance, include_empty: bool = False) -> int:
    _, _, lo, hi = _halves(instance)
    total = int((hi - lo).sum())
    if instance.target == 0 and not include_empty:
        total -= 1
    return total


def meet_in_middle(instance: SubsetSumInstance, cap: Optional[int] = None,
                   include_empty: bool = False) -> EnumerationResult:
    """Enumerate solutions by joining the sorted subset sums of two halves."""
    if cap is not None and cap < 1:
        raise ValueError("cap must be at least 1")
    n = instance.n
    h, order, lo, hi = _halves(instance)
    out = EnumerationResult()
    for lbits in np.flatnonzero(hi > lo):
        for k in range(lo[lbits], hi[lbits]):
            bits = int(lbits) | (int(order[k]) << h)
            if bits == 0 and not include_empty:
                continue
            if cap is not None and len(out.masks) >= cap:
                out.cap_hit = True
                out.exhausted = False
                return out
            out.masks.append(_bits_to_mask(bits, n))
    return out


# -- pseudo-polynomial DP -----------------------------------------------------

def dp_range_bytes(instance: SubsetSumInstance) -> int:
    """Memory the layered bitsets need over ``[n min(0, x_min), n max(0, x_max)]``."""
    n = instance.n
    span = n * (max(0, max(instance.values)) - min(0, min(instance.values))) + 1
    return n * span // 8 + 1


def dp_decide(instance: SubsetSumInstance, memory_cap: int = DEFAULT_MEMORY_CAP
              ) -> tuple[bool, Optional[np.ndarray]]:
    """Exact feasibility (non-empty subsets) with a backtracked witness.

    Reachable sums are Python-int bitsets shifted by the magnitude of the
    negative values, so negative entries are handled.  One bitset per prefix
    is kept for the backtrack.
    """
    need = dp_range_bytes(instance)
    if need > memory_cap:
        raise RangeTooLarge(f"DP needs ~{need} bytes, cap is {memory_cap}")
    vals = instance.values
    n = len(vals)
    offset = -sum(v for v in vals if v < 0)
    top = sum(v for v in vals if v > 0)
    T = instance.target
    if not -offset <= T <= top:
        return False, None
    zero = 1 << offset
    # layers[k]: sums reachable by non-empty subsets of the first k values
    layers = [0]
    for v in vals:
        every = layers[-1] | zero
        shifted = every << v if v >= 0 else every >> -v
        layers.append(layers[-1] | shifted)
    if not (layers[n] >> (T + offset)) & 1:
        return False, None

    z = np.zeros(n, dtype=bool)
    t = T
    taken = False
    for k in range(n, 0, -1):
        if taken and t == 0:
            break
        if (layers[k - 1] >> (t + offset)) & 1:
            continue
        z[k - 1] = True
        t -= vals[k - 1]
        taken = True
    return True, z
