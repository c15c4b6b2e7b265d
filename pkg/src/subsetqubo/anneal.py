"""Digital-annealer model: evolutionary search plus a hardware precision model.

Annealing hardware accepts coefficients normalised into ``[-2.0, 1.0]`` at a
fixed precision.  :func:`quantize` reproduces that: one global positive
scale, then rounding to a ``2^-frac_bits`` grid.  Quantised coefficients are
kept as integers in grid units so energies are exact.

:func:`evolve` is a generational GA over bitstrings (tournament selection,
uniform crossover, per-bit mutation, elitism) whose fitness is either the
exact squared residual or the quantised Ising energy.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, NoSolutionFound
from .hopfield import Solution, SolveReport
from .model import SubsetSumInstance
from .qubo import IsingForm, build_qubo, qubo_to_ising, verify

RANGE_LO = Fraction(-2)
RANGE_HI = Fraction(1)

# distinct optimal states tracked per run
_OPTIMA_CAP = 100_000


@dataclass(frozen=True)
class QuantizedIsing:
    couplings: np.ndarray  # int64 grid units, n x n
    biases: np.ndarray     # int64 grid units, n
    scale: Fraction
    frac_bits: int
    degenerate: bool = False

    @property
    def n(self) -> int:
        return len(self.biases)

    @property
    def unit(self) -> Fraction:
        return Fraction(1, 1 << self.frac_bits)

    def coupling_values(self) -> np.ndarray:
        return self.couplings / float(1 << self.frac_bits)

    def bias_values(self) -> np.ndarray:
        return self.biases / float(1 << self.frac_bits)


def _round_half_away(v: Fraction) -> int:
    q, rem = divmod(abs(v.numerator), v.denominator)
    if 2 * rem >= v.denominator:
        q += 1
    return q if v >= 0 else -q


def normalising_scale(ising: IsingForm) -> Optional[Fraction]:
    """Largest scale keeping every coefficient inside ``[-2.0, 1.0]``; ``None`` if all are zero."""
    coeffs = [int(c) for c in ising.matrix.ravel()] + [int(b) for b in ising.linear]
    top = max(coeffs)
    bottom = min(coeffs)
    bounds = []
    if top > 0:
        bounds.append(RANGE_HI / top)
    if bottom < 0:
        bounds.append(RANGE_LO / bottom)
    return min(bounds) if bounds else None


def quantize(ising: IsingForm, frac_bits: int = 8, scale: Optional[Fraction] = None) -> QuantizedIsing:
    """Normalise couplings and biases with one scale and round to the fixed-point grid.

    Rounding is to the nearest multiple of ``2^-frac_bits``, ties away from
    zero.  An all-zero model has no defined scale; it comes back with scale 1,
    an all-zero grid and ``degenerate`` set.  Passing ``scale`` overrides the
    normalising choice (it must keep the model in range).
    """
    if frac_bits < 1:
        raise ValueError("frac_bits must be at least 1")
    n = ising.n
    degenerate = False
    if scale is None:
        scale = normalising_scale(ising)
        if scale is None:
            degenerate = True
            scale = Fraction(1)
    if scale <= 0:
        raise ValueError("scale must be positive")
    grid = 1 << frac_bits

    def q(c) -> int:
        return _round_half_away(Fraction(int(c)) * scale * grid)

    couplings = np.array([[q(ising.matrix[i, j]) for j in range(n)] for i in range(n)],
                         dtype=np.int64).reshape(n, n)
    biases = np.array([q(b) for b in ising.linear], dtype=np.int64)
    lo, hi = int(RANGE_LO * grid), int(RANGE_HI * grid)
    if couplings.size and (couplings.min() < lo or couplings.max() > hi) \
            or biases.size and (biases.min() < lo or biases.max() > hi):
        raise ValueError("scale pushes coefficients outside [-2.0, 1.0]")
    return QuantizedIsing(couplings, biases, Fraction(scale), frac_bits, degenerate)


def energies_quantized_raw(q: QuantizedIsing, spins: np.ndarray) -> np.ndarray:
    """Energies of the rows of ``spins`` in grid units (exact int64)."""
    S = np.asarray(spins, dtype=np.int64)
    if S.ndim != 2 or S.shape[1] != q.n:
        raise DimensionMismatch(f"spin batch has shape {S.shape}, expected (m, {q.n})")
    return np.einsum("ij,jk,ik->i", S, q.couplings, S) + S @ q.biases


def energy_quantized(q: QuantizedIsing, s) -> Fraction:
    s = np.asarray(s)
    if s.shape != (q.n,):
        raise DimensionMismatch(f"spin state has shape {s.shape}, expected ({q.n},)")
    return Fraction(int(energies_quantized_raw(q, s[None, :])[0]), 1 << q.frac_bits)


def all_spin_states(n: int) -> np.ndarray:
    """Every state in ``{-1, +1}^n``; row ``b`` encodes bitmask ``b``."""
    if n > 24:
        raise ValueError("exhaustive enumeration is limited to n <= 24")
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def quantized_optima(instance: SubsetSumInstance, frac_bits: int) -> tuple[int, int]:
    """Exhaustively count ``(optimal states, optimal states failing exact verification)``
    of the quantised model of ``instance``."""
    q = quantize(qubo_to_ising(build_qubo(instance)), frac_bits)
    S = all_spin_states(instance.n)
    e = energies_quantized_raw(q, S)
    opt = S[e == e.min()] > 0
    sums = opt.astype(np.int64) @ instance.x
    ok = (sums == instance.target) & opt.any(axis=1)
    return len(opt), int((~ok).sum())


# -- evolutionary solver ----------------------------------------------------

@dataclass(frozen=True)
class EvolveConfig:
    population: int = 128
    generations: int = 10_000
    tournament: int = 2
    crossover_rate: float = 0.5
    mutation_rate: Optional[float] = None  # None -> 1/n
    elitism: int = 2
    seed: int = 0
    early_stop: bool = True

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be below the population size")
        if self.tournament < 1 or self.generations < 1:
            raise ValueError("tournament and generations must be positive")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must be a probability")


def evolve(instance: SubsetSumInstance, ecfg: EvolveConfig = EvolveConfig(),
           fitness: str = "exact", frac_bits: int = 8,
           initial_population: Optional[np.ndarray] = None,
           strict: bool = False, record_history: bool = False) -> SolveReport:
    """Minimise the fitness with a generational GA.

    ``fitness`` is ``"exact"`` (``|sigma - T|``, equivalent to the squared
    residual) or ``"quantized"`` (Ising energy at ``frac_bits`` precision).
    The report's ``restarts_used`` holds the number of generations evaluated
    and ``flips_total`` the number of mutated bits.  With ``record_history``
    the best fitness of every generation is stored in ``report.outcomes``.
    """
    t0 = time.perf_counter()
    n = instance.n
    rng = np.random.default_rng(ecfg.seed)
    x = instance.x
    T = np.int64(instance.target)
    P = ecfg.population
    mut = ecfg.mutation_rate if ecfg.mutation_rate is not None else 1.0 / n
    if fitness == "exact":
        qmodel = None
    elif fitness == "quantized":
        qmodel = quantize(qubo_to_ising(build_qubo(instance)), frac_bits)
    else:
        raise ValueError(f"unknown fitness mode {fitness!r}")

    def score(pop: np.ndarray) -> np.ndarray:
        if qmodel is None:
            return np.abs(pop.astype(np.int64) @ x - T)
        return energies_quantized_raw(qmodel, np.where(pop, 1, -1))

    if initial_population is None:
        pop = rng.random((P, n)) < 0.5
    else:
        pop = np.array(initial_population, dtype=bool)
        if pop.shape != (P, n):
            raise DimensionMismatch(f"initial population has shape {pop.shape}, expected ({P}, {n})")

    best: Optional[int] = None
    optima: dict[bytes, np.ndarray] = {}
    solutions: dict[bytes, np.ndarray] = {}
    history: list[int] = []
    flips = 0
    gens = 0
    for gen in range(ecfg.generations):
        fit = score(pop)
        gens += 1
        gen_best = int(fit.min())
        history.append(gen_best)
        if best is None or gen_best < best:
            best = gen_best
            optima.clear()
        if gen_best == best:
            for z in np.unique(pop[fit == best], axis=0):
                if len(optima) < _OPTIMA_CAP:
                    optima.setdefault(z.tobytes(), z)
        sums = pop.astype(np.int64) @ x
        hits = pop[(sums == T) & pop.any(axis=1)]
        for z in np.unique(hits, axis=0):
            solutions.setdefault(z.tobytes(), z)
        if solutions and ecfg.early_stop and qmodel is None:
            break
        if gen == ecfg.generations - 1:
            break

        order = np.argsort(fit, kind="stable")
        elites = pop[order[:ecfg.elitism]]
        n_children = P - ecfg.elitism
        contenders = rng.integers(P, size=(n_children, 2, ecfg.tournament))
        winners = np.take_along_axis(
            contenders, fit[contenders].argmin(axis=2)[..., None], axis=2)[..., 0]
        mum, dad = pop[winners[:, 0]], pop[winners[:, 1]]
        children = np.where(rng.random((n_children, n)) < ecfg.crossover_rate, dad, mum)
        flip = rng.random((n_children, n)) < mut
        flips += int(flip.sum())
        children ^= flip
        pop = np.concatenate([elites, children])
        if (pop == pop[0]).all():
            # diversity collapsed: keep the elites, reseed everybody else
            pop[ecfg.elitism:] = rng.random((n_children, n)) < 0.5

    verified = sum(1 for z in optima.values() if verify(instance, z))
    sols = [Solution.from_mask(instance, solutions[k]) for k in sorted(solutions)]
    report = SolveReport(
        solutions=sols,
        restarts_used=gens,
        flips_total=flips,
        distinct_optima=len(optima),
        verified_count=verified,
        wall_time=time.perf_counter() - t0,
        engine="evolve" if qmodel is None else f"evolve-q{frac_bits}",
        seed=ecfg.seed,
        outcomes=history if record_history else None,
    )
    if strict and not report.found:
        raise NoSolutionFound(report)
    return report
