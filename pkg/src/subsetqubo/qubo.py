"""QUBO and Ising forms of a subset-sum instance.

The QUBO objective is ``E(z) = z^T P z - p^T z`` with ``P = x x^T`` and
``p = 2 T x``.  Because ``P`` has rank one, ``E(z) = (x.z - T)^2 - T^2`` and
nothing here needs the dense matrix at runtime.  The dense helpers exist for
reference checks and small exports.

Ising coefficients ``Q = P/4`` and ``q = (P 1 - p)/2`` are quarter-integers,
so the Ising form stores everything multiplied by four.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .errors import DimensionMismatch, ParseError
from .model import SubsetSumInstance


def as_mask(z: Sequence, n: int) -> np.ndarray:
    z = np.asarray(z)
    if z.shape != (n,):
        raise DimensionMismatch(f"mask has shape {z.shape}, expected ({n},)")
    return z.astype(bool)


def spins_from_mask(z) -> np.ndarray:
    return np.where(np.asarray(z, dtype=bool), 1, -1).astype(np.int8)


def mask_from_spins(s) -> np.ndarray:
    return np.asarray(s) > 0


def subset_sum(values: Sequence[int], z) -> int:
    """Exact ``x.z`` in Python integers."""
    return sum(int(v) for v, b in zip(values, z) if b)


def residual(instance: SubsetSumInstance, z) -> int:
    """``sigma - T`` for the selection ``z``; zero exactly when ``z`` solves the instance."""
    z = as_mask(z, instance.n)
    return subset_sum(instance.values, z) - instance.target


def verify(instance: SubsetSumInstance, z, allow_empty: bool = False) -> bool:
    z = as_mask(z, instance.n)
    if not allow_empty and not z.any():
        return False
    return residual(instance, z) == 0


@dataclass(frozen=True)
class QuboForm:
    x: tuple[int, ...]
    target: int

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def offset(self) -> int:
        """Constant relating energy to the squared residual: ``E = r^2 + offset``."""
        return -self.target * self.target

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Materialised ``(P, p)`` as exact object arrays; reference use only."""
        x = np.array(self.x, dtype=object)
        return np.outer(x, x), 2 * self.target * x


def build_qubo(instance: SubsetSumInstance) -> QuboForm:
    return QuboForm(x=instance.values, target=instance.target)


def energy_qubo(form: QuboForm, z) -> int:
    z = as_mask(z, form.n)
    r = subset_sum(form.x, z) - form.target
    return r * r + form.offset


def energy_qubo_dense(form: QuboForm, z) -> int:
    """``z^T P z - p^T z`` evaluated literally on the dense matrices."""
    z = as_mask(z, form.n)
    P, p = form.dense()
    zo = np.array([int(b) for b in z], dtype=object)
    return int(zo @ P @ zo - p @ zo)


@dataclass(frozen=True)
class IsingForm:
    """Ising model stored as integers scaled by four.

    ``4 E_ising(s) = s^T M s + h^T s`` and ``E_qubo(z) = E_ising(s) + const_shift_x4 / 4``
    where ``s = 2z - 1``.  For forms built from an instance ``M = P`` (so the
    diagonal is kept) and ``h = 2 (P 1 - p)``.
    """

    matrix: np.ndarray  # object dtype, exact ints
    linear: np.ndarray  # object dtype, exact ints
    const_shift_x4: int

    @property
    def n(self) -> int:
        return len(self.linear)

    @property
    def const_shift(self) -> Fraction:
        return Fraction(self.const_shift_x4, 4)


def qubo_to_ising(form: QuboForm) -> IsingForm:
    P, p = form.dense()
    ones_P = P.sum(axis=1)
    linear = 2 * (ones_P - p)
    # 4 * (1^T P 1 / 4 - p^T 1 / 2)
    shift_x4 = int(ones_P.sum()) - 2 * int(p.sum())
    return IsingForm(matrix=P, linear=linear, const_shift_x4=shift_x4)


def energy_ising_x4(ising: IsingForm, s) -> int:
    s = np.asarray(s)
    if s.shape != (ising.n,):
        raise DimensionMismatch(f"spin state has shape {s.shape}, expected ({ising.n},)")
    so = np.array([int(v) for v in s], dtype=object)
    return int(so @ ising.matrix @ so + ising.linear @ so)


def energy_ising(ising: IsingForm, s) -> Fraction:
    return Fraction(energy_ising_x4(ising, s), 4)


# -- Ising export -----------------------------------------------------------
#
# The export uses the usual upper-triangle convention:
#   4 E_qubo(z) = sum_{i<j} J_ij s_i s_j + sum_i h_i s_i + C
# so the diagonal of M (constant under s_i^2 = 1) is folded into C.

def ising_to_dict(ising: IsingForm) -> dict:
    n = ising.n
    M = ising.matrix
    quadratic = []
    for i in range(n):
        for j in range(i + 1, n):
            v = int(M[i, j]) + int(M[j, i])
            if v:
                quadratic.append([i, j, v])
    diag = sum(int(M[i, i]) for i in range(n))
    return {
        "n": n,
        "linear": [int(v) for v in ising.linear],
        "quadratic": quadratic,
        "const_shift_x4": ising.const_shift_x4 + diag,
    }


def export_ising(ising: IsingForm) -> str:
    return json.dumps(ising_to_dict(ising), indent=2) + "\n"


def ising_from_dict(doc: Any) -> IsingForm:
    """Rebuild an Ising form from an export; couplings land in the upper triangle."""
    if not isinstance(doc, dict):
        raise ParseError("Ising document must be a JSON object")
    unknown = set(doc) - {"n", "linear", "quadratic", "const_shift_x4"}
    if unknown:
        raise ParseError(f"unknown field(s): {', '.join(sorted(unknown))}")
    try:
        n = doc["n"]
        linear = doc["linear"]
        quadratic = doc["quadratic"]
        shift = doc["const_shift_x4"]
    except KeyError as exc:
        raise ParseError(f"missing field '{exc.args[0]}'") from None
    if not _is_int(n) or n < 1 or not _is_int(shift):
        raise ParseError("fields 'n' and 'const_shift_x4' must be integers")
    if not isinstance(linear, list) or len(linear) != n or not all(_is_int(v) for v in linear):
        raise ParseError(f"field 'linear' must hold {n} integers")
    M = np.zeros((n, n), dtype=object)
    M[:] = 0
    if not isinstance(quadratic, list):
        raise ParseError("field 'quadratic' must be an array of [i, j, value]")
    for k, entry in enumerate(quadratic):
        if (not isinstance(entry, list) or len(entry) != 3 or not all(_is_int(v) for v in entry)
                or not 0 <= entry[0] < entry[1] < n):
            raise ParseError(f"field 'quadratic[{k}]': expected [i, j, value] with 0 <= i < j < n")
        i, j, v = entry
        M[i, j] += v
    return IsingForm(matrix=M, linear=np.array(linear, dtype=object), const_shift_x4=shift)


def read_ising(text: str) -> IsingForm:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return ising_from_dict(doc)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)
