"""Hopfield-style energy descent for subset sum, serial and batched multistart.

The network weights ``W = -P/2`` and thresholds ``theta = (P 1 - p)/2`` are
never materialised.  With ``sigma = x.z`` and ``r = sigma - T`` the energy
gradient is ``x_i * r`` and flipping spin ``i`` moves the residual to
``r - s_i x_i``.  Everything below works on ``r`` directly.

Flip policies
-------------
``steepest``
    flip the spin whose flip gives the smallest ``|r'|``, provided it is
    strictly smaller than ``|r|``.  The squared residual, and with it the
    QUBO energy, strictly decreases at every flip.
``paper-argmin``
    the literal rule: take ``i = argmin_i x_i r`` and set
    ``s_i = sign(-x_i r)``.  A no-op update counts as convergence.

Multistart runs restarts in batches of ``m`` states which advance in
lockstep, one flip per state per step.  Restart ``j`` draws all its
randomness from a counter-based stream keyed by ``(seed, j)``, so results do
not depend on batch boundaries or worker count.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from .errors import DimensionMismatch, NoSolutionFound
from .model import SubsetSumInstance
from .qubo import verify

POLICIES = ("steepest", "paper-argmin")
TIE_BREAKS = ("random", "lowest-index")

# rows * n elements per vectorised chunk
_CHUNK_ELEMS = 1 << 21


@dataclass(frozen=True)
class DescentConfig:
    policy: str = "steepest"
    init_density: float = 0.5
    max_flips: Optional[int] = None  # None -> 64 * n
    tie_break: str = "random"

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"unknown tie break {self.tie_break!r}")
        if not 0.0 < self.init_density < 1.0:
            raise ValueError("init_density must lie strictly between 0 and 1")
        if self.max_flips is not None and self.max_flips < 1:
            raise ValueError("max_flips must be at least 1")

    def flip_cap(self, n: int) -> int:
        return self.max_flips if self.max_flips is not None else 64 * n


@dataclass(frozen=True)
class MultistartConfig:
    max_restarts: int = 10**6
    batch: int = 10**4
    workers: Optional[int] = None  # None -> os.cpu_count()
    seed: int = 0
    early_stop: bool = True
    time_limit: Optional[float] = None
    collect_all: bool = False
    cap: int = 10
    keep_outcomes: bool = False

    def __post_init__(self):
        if self.max_restarts < 1 or self.batch < 1:
            raise ValueError("max_restarts and batch must be positive")
        if self.batch > self.max_restarts:
            object.__setattr__(self, "batch", self.max_restarts)
        if self.collect_all and self.cap < 1:
            raise ValueError("cap must be at least 1 when collecting solutions")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def n_workers(self) -> int:
        return self.workers if self.workers else (os.cpu_count() or 1)


@dataclass(frozen=True)
class Solution:
    indices: tuple[int, ...]
    values: tuple[int, ...]

    def mask(self, n: int) -> np.ndarray:
        z = np.zeros(n, dtype=bool)
        z[list(self.indices)] = True
        return z

    @classmethod
    def from_mask(cls, instance: SubsetSumInstance, z) -> "Solution":
        idx = tuple(int(i) for i in np.flatnonzero(z))
        return cls(indices=idx, values=tuple(instance.values[i] for i in idx))


@dataclass
class SolveReport:
    """Outcome of a heuristic solve.

    ``distinct_optima`` counts distinct minimal-energy states the solver saw,
    ``verified_count`` how many of those pass exact verification.
    """

    solutions: list[Solution]
    restarts_used: int
    flips_total: int
    distinct_optima: int
    verified_count: int
    wall_time: float
    engine: str
    seed: int
    outcomes: Optional[list[tuple[int, int, int]]] = field(default=None, repr=False)

    @property
    def found(self) -> bool:
        return bool(self.solutions)

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "solutions": [{"indices": list(s.indices), "values": list(s.values)}
                          for s in self.solutions],
            "restarts_used": self.restarts_used,
            "flips_total": self.flips_total,
            "distinct_optima": self.distinct_optima,
            "verified_count": self.verified_count,
            "wall_time_s": self.wall_time if timing else 0.0,
            "engine": self.engine,
            "seed": self.seed,
        }


# -- counter-based random streams ------------------------------------------

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_TIE_DOMAIN = np.uint64(0xD1B54A32D192ED03)


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finaliser, elementwise on uint64 (wrapping arithmetic)."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def _restart_keys(seed: int, restart_ids: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        base = _mix64(np.array([seed], dtype=np.uint64))[0]
        return _mix64(base + (restart_ids.astype(np.uint64) + np.uint64(1)) * _GOLDEN)


def _initial_spins(keys: np.ndarray, n: int, density: float) -> np.ndarray:
    with np.errstate(over="ignore"):
        cols = _mix64((np.arange(n, dtype=np.uint64) + np.uint64(1)) * _GOLDEN)
        u = _mix64(keys[:, None] ^ cols[None, :])
    threshold = np.uint64(min(int(density * 2.0**64), 2**64 - 1))
    return np.where(u < threshold, 1, -1).astype(np.int8)


def _tie_draws(keys: np.ndarray, step: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        return _mix64(keys ^ (_TIE_DOMAIN + np.uint64(step) * _GOLDEN))


# -- serial descent ---------------------------------------------------------

def init_state(n: int, density: float, rng: np.random.Generator) -> np.ndarray:
    if not 0.0 < density < 1.0:
        raise ValueError("density must lie strictly between 0 and 1")
    return np.where(rng.random(n) < density, 1, -1).astype(np.int8)


def best_flip(state, r: int, x, policy: str = "steepest", tie_break: str = "random",
              rng: Optional[np.random.Generator] = None) -> Optional[int]:
    """Index of the spin to flip next, or ``None`` at a local minimum."""
    s = np.asarray(state, dtype=np.int64)
    x = np.asarray(x, dtype=np.int64)
    if policy == "steepest":
        cand = np.abs(r - s * x)
        best = cand.min()
        if best >= abs(r):
            return None
        ties = np.flatnonzero(cand == best)
    elif policy == "paper-argmin":
        if r == 0:
            return None
        key = x if r > 0 else -x
        ties = np.flatnonzero(key == key.min())
    else:
        raise ValueError(f"unknown policy {policy!r}")
    if len(ties) == 1 or tie_break == "lowest-index":
        i = int(ties[0])
    else:
        if rng is None:
            raise ValueError("random tie breaking needs an rng")
        i = int(ties[rng.integers(len(ties))])
    if policy == "paper-argmin":
        # s_i <- sign(-x_i r); zero gradient or an unchanged spin is a no-op
        grad_sign = np.sign(x[i]) * np.sign(r)
        if grad_sign == 0 or -grad_sign == s[i]:
            return None
    return i


class DescentResult(NamedTuple):
    state: np.ndarray
    flips: int
    residual: int
    path: Optional[list[int]] = None


def descend(instance: SubsetSumInstance, start, cfg: DescentConfig = DescentConfig(),
            rng: Optional[np.random.Generator] = None, record: bool = False) -> DescentResult:
    """Apply ``best_flip`` until it returns ``None`` or the flip cap is reached.

    With ``record`` the residual after every applied flip is kept in ``path``
    (the starting residual first).
    """
    s = np.array(start, dtype=np.int8)
    if s.shape != (instance.n,):
        raise DimensionMismatch(f"state has shape {s.shape}, expected ({instance.n},)")
    x = instance.x
    r = sum(v for v, si in zip(instance.values, s) if si > 0) - instance.target
    path = [r] if record else None
    flips = 0
    for _ in range(cfg.flip_cap(instance.n)):
        i = best_flip(s, r, x, cfg.policy, cfg.tie_break, rng)
        if i is None:
            break
        r -= int(s[i]) * instance.values[i]
        s[i] = -s[i]
        flips += 1
        if record:
            path.append(r)
    return DescentResult(s, flips, r, path)


# -- dense reference --------------------------------------------------------

@dataclass(frozen=True)
class HopfieldParams:
    x: tuple[int, ...]
    target: int

    @classmethod
    def from_instance(cls, instance: SubsetSumInstance) -> "HopfieldParams":
        return cls(instance.values, instance.target)

    def gradient(self, s) -> list[int]:
        """Rank-one gradient ``x_i (sigma - T)``."""
        r = sum(v for v, si in zip(self.x, s) if si > 0) - self.target
        return [v * r for v in self.x]

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """``W = -P/2`` and ``theta = (P 1 - 2 T x)/2`` as exact fractions."""
        x = np.array([Fraction(v) for v in self.x], dtype=object)
        P = np.outer(x, x)
        W = -P / 2
        theta = (P.sum(axis=1) - 2 * self.target * x) / 2
        return W, theta


def dense_gradient(params: HopfieldParams, s) -> np.ndarray:
    W, theta = params.dense()
    so = np.array([Fraction(int(v)) for v in s], dtype=object)
    return -(W @ so) + theta


def dense_reference_step(params: HopfieldParams, state) -> np.ndarray:
    """One literal update: ``i = argmin grad``, ``s_i = sign(W_i s - theta_i)``."""
    s = np.array(state, dtype=np.int8)
    if s.shape != (len(params.x),):
        raise DimensionMismatch(f"state has shape {s.shape}, expected ({len(params.x)},)")
    if len(params.x) > 64:
        raise ValueError("the dense reference path is limited to n <= 64")
    grad = dense_gradient(params, s)
    i = min(range(len(grad)), key=lambda k: grad[k])
    if grad[i] > 0:
        s[i] = -1
    elif grad[i] < 0:
        s[i] = 1
    return s


# -- batched descent --------------------------------------------------------

def descend_batch(x: np.ndarray, target: int, spins: np.ndarray, keys: np.ndarray,
                  cfg: DescentConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Descend every row of ``spins`` in lockstep.

    ``keys`` holds one random-stream key per row (used for tie breaking).
    Returns final spins, residuals and per-row flip counts.
    """
    S = np.array(spins, dtype=np.int8)
    m, n = S.shape
    r = (S > 0).astype(np.int64) @ x - np.int64(target)
    flips = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    Sa, ra, ka = S, r.copy(), keys
    steepest = cfg.policy == "steepest"
    neg_x = -x
    for step in range(cfg.flip_cap(n)):
        if len(active) == 0:
            break
        if steepest:
            cand = np.abs(ra[:, None] - Sa * x[None, :])
            best = cand.min(axis=1)
            moving = best < np.abs(ra)
            ties = cand == best[:, None]
        else:
            key = np.where(ra[:, None] > 0, x[None, :], neg_x[None, :])
            ties = key == key.min(axis=1)[:, None]
            moving = ra != 0
        if cfg.tie_break == "lowest-index":
            choice = ties.argmax(axis=1)
        else:
            nties = ties.sum(axis=1)
            pick = (_tie_draws(ka, step) % nties.astype(np.uint64)).astype(np.int64)
            choice = (np.cumsum(ties, axis=1) > pick[:, None]).argmax(axis=1)
        rows = np.arange(len(active))
        old = Sa[rows, choice].astype(np.int64)
        if not steepest:
            new = -np.sign(x[choice]) * np.sign(ra)
            moving &= (new != 0) & (new != old)
        delta = old * x[choice]
        ra = np.where(moving, ra - delta, ra)
        Sa[rows[moving], choice[moving]] = -Sa[rows[moving], choice[moving]]
        flips[active[moving]] += 1
        done = ~moving
        if done.any():
            S[active[done]] = Sa[done]
            r[active[done]] = ra[done]
            keep = moving
            active, Sa, ra, ka = active[keep], Sa[keep], ra[keep], ka[keep]
    if len(active):
        S[active] = Sa
        r[active] = ra
    return S, r, flips


class _BatchResult(NamedTuple):
    ids: np.ndarray
    residuals: np.ndarray
    flips: np.ndarray
    cand_ids: np.ndarray      # restarts whose final state may be an optimum
    cand_states: np.ndarray   # bool masks of those restarts


def run_restarts(instance: SubsetSumInstance, cfg: DescentConfig, seed: int,
                 start: int, stop: int) -> _BatchResult:
    """Run restarts ``start .. stop-1`` and return their outcomes."""
    n = instance.n
    x = instance.x
    rows = max(1, _CHUNK_ELEMS // n)
    ids_all, res_all, flips_all, cid, cst = [], [], [], [], []
    for lo in range(start, stop, rows):
        ids = np.arange(lo, min(lo + rows, stop), dtype=np.int64)
        keys = _restart_keys(seed, ids)
        S0 = _initial_spins(keys, n, cfg.init_density)
        S, r, flips = descend_batch(x, instance.target, S0, keys, cfg)
        z = S > 0
        absr = np.abs(r)
        keep = (absr == absr.min()) | (r == 0)
        ids_all.append(ids)
        res_all.append(r)
        flips_all.append(flips)
        cid.append(ids[keep])
        cst.append(z[keep])
    return _BatchResult(np.concatenate(ids_all), np.concatenate(res_all),
                        np.concatenate(flips_all), np.concatenate(cid), np.concatenate(cst))


def multistart(instance: SubsetSumInstance, dcfg: DescentConfig = DescentConfig(),
               mcfg: MultistartConfig = MultistartConfig(), strict: bool = False) -> SolveReport:
    """Random-restart descent until a verified solution, the budget or the time limit.

    With ``early_stop`` the report counts restarts up to and including the
    first solving restart (or the one that completes ``cap`` distinct
    solutions when collecting).  In ``strict`` mode an unsuccessful search
    raises :class:`NoSolutionFound` carrying the report.
    """
    t0 = time.perf_counter()
    deadline = None if mcfg.time_limit is None else t0 + mcfg.time_limit
    n_batches = -(-mcfg.max_restarts // mcfg.batch)
    want = mcfg.cap if mcfg.collect_all else 1
    results: dict[int, _BatchResult] = {}
    lock = threading.Lock()
    stop = threading.Event()
    next_batch = [0]
    found_masks: set[bytes] = set()

    def worker():
        while not stop.is_set():
            with lock:
                b = next_batch[0]
                if b >= n_batches:
                    return
                next_batch[0] += 1
            if deadline is not None and time.perf_counter() > deadline:
                stop.set()
                return
            lo = b * mcfg.batch
            res = run_restarts(instance, dcfg, mcfg.seed, lo, min(lo + mcfg.batch, mcfg.max_restarts))
            with lock:
                results[b] = res
                if mcfg.early_stop:
                    for rid, z in zip(res.cand_ids, res.cand_states):
                        if z.any() and verify(instance, z):
                            found_masks.add(z.tobytes())
                    if len(found_masks) >= want:
                        stop.set()

    n_workers = min(mcfg.n_workers(), n_batches)
    if n_workers <= 1:
        worker()
    else:
        threads = [threading.Thread(target=worker) for _ in range(n_workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    report = _assemble(instance, [results[b] for b in sorted(results)], mcfg, want)
    report.wall_time = time.perf_counter() - t0
    if strict and not report.found:
        raise NoSolutionFound(report)
    return report


def _assemble(instance: SubsetSumInstance, batches: list[_BatchResult],
              mcfg: MultistartConfig, want: int) -> SolveReport:
    # batches start in index order, so every batch below the last one started
    # has completed and the outcome prefix is contiguous
    solutions: list[Solution] = []
    seen: set[bytes] = set()
    cutoff = None
    for batch in batches:
        order = np.argsort(batch.cand_ids, kind="stable")
        for rid, z in zip(batch.cand_ids[order], batch.cand_states[order]):
            if len(solutions) >= want:
                break
            if not (z.any() and verify(instance, z)):
                continue
            key = z.tobytes()
            if key in seen:
                continue
            seen.add(key)
            solutions.append(Solution.from_mask(instance, z))
            if len(solutions) >= want:
                cutoff = int(rid)
        if cutoff is not None:
            break

    if batches:
        ids = np.concatenate([b.ids for b in batches])
        res = np.concatenate([b.residuals for b in batches])
        flips = np.concatenate([b.flips for b in batches])
        cids = np.concatenate([b.cand_ids for b in batches])
        cst = np.concatenate([b.cand_states for b in batches])
    else:
        ids = res = flips = cids = np.zeros(0, dtype=np.int64)
        cst = np.zeros((0, instance.n), dtype=bool)
    if mcfg.early_stop and cutoff is not None:
        sel = ids <= cutoff
        ids, res, flips = ids[sel], res[sel], flips[sel]
        csel = cids <= cutoff
        cids, cst = cids[csel], cst[csel]

    distinct = verified = 0
    if len(res):
        best = np.abs(res).min()
        cres = (cst.astype(np.int64) @ instance.x) - instance.target
        optima = {z.tobytes(): z for z, rr in zip(cst, cres) if abs(int(rr)) == best}
        distinct = len(optima)
        verified = sum(1 for z in optima.values() if z.any() and verify(instance, z))

    outcomes = None
    if mcfg.keep_outcomes:
        order = np.argsort(ids, kind="stable")
        outcomes = [(int(i), int(r), int(f)) for i, r, f in zip(ids[order], res[order], flips[order])]

    return SolveReport(
        solutions=solutions,
        restarts_used=int(len(ids)),
        flips_total=int(flips.sum()),
        distinct_optima=distinct,
        verified_count=verified,
        wall_time=0.0,
        engine="hopfield",
        seed=mcfg.seed,
        outcomes=outcomes,
    )
