"""Subset-sum instances, the artificial-data generator and problem documents.

Amounts are exact integers in minor currency units (cents).  The caps below
keep every partial sum of an instance inside a signed 64-bit integer, which
is what the vectorised solvers rely on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterator, Optional, Sequence

import numpy as np

from .errors import EmptyValues, MagnitudeOverflow, ParseError, TooManyValues

MAX_MAGNITUDE = 2**50
MAX_VALUES = 4096

_META_FIELDS = {"seed": str, "decimals": int, "source": str}
_DOC_FIELDS = {"values", "target", "planted", "meta"}


def check_amount(value: int, what: str = "value") -> int:
    if abs(value) > MAX_MAGNITUDE:
        raise MagnitudeOverflow(f"{what} {value} exceeds 2^50 in magnitude")
    return value


@dataclass(frozen=True, eq=True)
class SubsetSumInstance:
    """Ordered values ``x`` and a target ``T``; indices are stable identifiers."""

    values: tuple[int, ...]
    target: int
    planted: Optional[tuple[int, ...]] = None
    meta: dict = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self):
        if len(self.values) == 0:
            raise EmptyValues("an instance needs at least one value")
        if len(self.values) > MAX_VALUES:
            raise TooManyValues(f"{len(self.values)} values exceed the cap of {MAX_VALUES}")
        for i, v in enumerate(self.values):
            check_amount(v, f"values[{i}]")
        check_amount(self.target, "target")
        if self.planted is not None:
            idx = self.planted
            if len(set(idx)) != len(idx) or any(i < 0 or i >= self.n for i in idx):
                raise ValueError(f"planted indices {idx} are not distinct in-range indices")
            if sum(self.values[i] for i in idx) != self.target:
                raise ValueError("planted subset does not sum to the target")

    @property
    def n(self) -> int:
        return len(self.values)

    @cached_property
    def x(self) -> np.ndarray:
        """Values as a read-only int64 vector."""
        arr = np.asarray(self.values, dtype=np.int64)
        arr.setflags(write=False)
        return arr

    @property
    def decimals(self) -> int:
        return int(self.meta.get("decimals", 2))

    def planted_mask(self) -> Optional[np.ndarray]:
        if self.planted is None:
            return None
        z = np.zeros(self.n, dtype=bool)
        z[list(self.planted)] = True
        return z


def new_instance(values: Sequence[int], target: int, planted=None, meta=None) -> SubsetSumInstance:
    vals = tuple(_as_int(v, f"values[{i}]") for i, v in enumerate(values))
    return SubsetSumInstance(
        values=vals,
        target=_as_int(target, "target"),
        planted=None if planted is None else tuple(sorted(int(i) for i in planted)),
        meta=dict(meta or {}),
    )


def _as_int(v: Any, what: str) -> int:
    if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, np.integer)):
        raise TypeError(f"{what} must be an integer amount, got {v!r}")
    return int(v)


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    k: int
    x_min: int
    x_max: int
    samples: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.n > MAX_VALUES:
            raise TooManyValues(f"n={self.n} exceeds {MAX_VALUES}")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        check_amount(self.x_min, "x_min")
        check_amount(self.x_max, "x_max")
        if self.k * max(abs(self.x_min), abs(self.x_max)) > MAX_MAGNITUDE:
            raise MagnitudeOverflow("k * max|x| exceeds 2^50, a planted target could overflow")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def generate(cfg: GeneratorConfig, rng: Optional[np.random.Generator] = None) -> SubsetSumInstance:
    """Draw ``n`` values uniformly from ``[x_min, x_max]`` (with replacement) and
    plant a uniformly chosen ``k``-subset whose sum becomes the target."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    values = rng.integers(cfg.x_min, cfg.x_max, size=cfg.n, endpoint=True, dtype=np.int64)
    planted = np.sort(rng.choice(cfg.n, size=cfg.k, replace=False))
    vals = tuple(int(v) for v in values)
    target = sum(vals[i] for i in planted)
    return new_instance(vals, target, planted=planted.tolist(), meta={"seed": str(cfg.seed)})


def generate_samples(cfg: GeneratorConfig) -> Iterator[SubsetSumInstance]:
    """The ``cfg.samples`` instances of one configuration, drawn from one seeded stream."""
    rng = np.random.default_rng(cfg.seed)
    for i in range(cfg.samples):
        inst = generate(cfg, rng)
        yield new_instance(inst.values, inst.target, inst.planted,
                           meta={"seed": str(cfg.seed), "source": f"sample {i}"})


@dataclass(frozen=True)
class SolutionRatio:
    r: float
    interval_lo: int
    interval_hi: int


def solution_ratio(n: int, x_min: int, x_max: int) -> SolutionRatio:
    """Expected number of solutions for a random target: ``2^n / (n (x_max - x_min))``.

    For symmetric bounds this is ``2^n / (2 n x_max)``.
    """
    if n < 1 or not x_min < x_max:
        raise ValueError("need n >= 1 and x_min < x_max")
    # 2^n overflows a float for n > 1023; divide in exact integers first
    r = _ratio(2**n, n * (x_max - x_min))
    return SolutionRatio(r=r, interval_lo=n * min(x_min, 0), interval_hi=n * max(x_max, 0))


def _ratio(num: int, den: int) -> float:
    try:
        return num / den
    except OverflowError:
        return float("inf")


# -- problem documents ------------------------------------------------------

def instance_to_dict(inst: SubsetSumInstance) -> dict:
    doc: dict[str, Any] = {"values": list(inst.values), "target": inst.target}
    if inst.planted is not None:
        doc["planted"] = list(inst.planted)
    if inst.meta:
        doc["meta"] = dict(inst.meta)
    return doc


def write_problem(inst: SubsetSumInstance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def read_problem(text: str) -> SubsetSumInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(doc)


def instance_from_dict(doc: Any) -> SubsetSumInstance:
    if not isinstance(doc, dict):
        raise ParseError("problem document must be a JSON object")
    unknown = set(doc) - _DOC_FIELDS
    if unknown:
        raise ParseError(f"unknown field(s): {', '.join(sorted(unknown))}")
    for required in ("values", "target"):
        if required not in doc:
            raise ParseError(f"missing field '{required}'")
    values = doc["values"]
    if not isinstance(values, list):
        raise ParseError("field 'values' must be an array of integers")
    for i, v in enumerate(values):
        _expect_int(v, f"values[{i}]")
    _expect_int(doc["target"], "target")
    planted = doc.get("planted")
    if planted is not None:
        if not isinstance(planted, list):
            raise ParseError("field 'planted' must be an array of indices")
        for i, v in enumerate(planted):
            _expect_int(v, f"planted[{i}]")
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise ParseError("field 'meta' must be an object")
    for key, value in meta.items():
        if key not in _META_FIELDS:
            raise ParseError(f"unknown field 'meta.{key}'")
        kind = _META_FIELDS[key]
        if kind is int:
            _expect_int(value, f"meta.{key}")
        elif not isinstance(value, kind):
            raise ParseError(f"field 'meta.{key}' must be a string")
    try:
        return new_instance(values, doc["target"], planted=planted, meta=meta)
    except (EmptyValues, MagnitudeOverflow, TooManyValues):
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _expect_int(v: Any, where: str) -> None:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"field '{where}': expected an integer in minor units, got {v!r}")
