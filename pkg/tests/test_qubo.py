import itertools
import json
from fractions import Fraction

import numpy as np
import pytest

from conftest import all_masks, random_instance
from subsetqubo.errors import DimensionMismatch, ParseError
from subsetqubo.model import new_instance
from subsetqubo.qubo import (build_qubo, energy_ising, energy_qubo, energy_qubo_dense,
                             export_ising, ising_to_dict, mask_from_spins, qubo_to_ising,
                             read_ising, residual, spins_from_mask, verify)


def reference_ising(x, T):
    """Q = P/4 and q = (P 1 - p)/2 straight from the definitions, as fractions."""
    n = len(x)
    P = [[Fraction(x[i] * x[j]) for j in range(n)] for i in range(n)]
    p = [Fraction(2 * T * v) for v in x]
    Q = [[P[i][j] / 4 for j in range(n)] for i in range(n)]
    q = [(sum(P[i]) - p[i]) / 2 for i in range(n)]
    return Q, q


def ising_energy_reference(Q, q, s):
    n = len(s)
    return (sum(Q[i][j] * s[i] * s[j] for i in range(n) for j in range(n))
            + sum(q[i] * s[i] for i in range(n)))


def test_build_qubo_dense():
    P, p = build_qubo(new_instance([1, 2], 3)).dense()
    assert P.tolist() == [[1, 2], [2, 4]]
    assert p.tolist() == [6, 12]


def test_build_qubo_zero_and_negative():
    P, p = build_qubo(new_instance([0, 0], 0)).dense()
    assert not P.any() and not p.any()
    _, p = build_qubo(new_instance([3, -4], -1)).dense()
    assert p.tolist() == [-6, 8]


@pytest.mark.parametrize("z, expected", [([1, 1], -9), ([0, 0], 0), ([1, 0], -5)])
def test_energy_examples(z, expected):
    form = build_qubo(new_instance([1, 2], 3))
    assert energy_qubo_dense(form, z) == expected
    assert energy_qubo(form, z) == expected


def test_energy_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        energy_qubo(build_qubo(new_instance([1, 2], 3)), [1])


def test_offset_is_minus_t_squared():
    assert build_qubo(new_instance([1, 2], 7)).offset == -49


def test_ising_example():
    ising = qubo_to_ising(build_qubo(new_instance([1, 2], 3)))
    assert ising.matrix.tolist() == [[1, 2], [2, 4]]
    assert ising.linear.tolist() == [-6, -12]
    assert ising.const_shift == Fraction(-27, 4)
    Q, q = reference_ising([1, 2], 3)
    diffs = set()
    for z in all_masks(2):
        s = spins_from_mask(z)
        assert energy_ising(ising, s) == ising_energy_reference(Q, q, s)
        diffs.add(energy_qubo(build_qubo(new_instance([1, 2], 3)), z) - energy_ising(ising, s))
    assert diffs == {Fraction(-27, 4)}


def test_ising_zero():
    ising = qubo_to_ising(build_qubo(new_instance([0], 0)))
    assert not ising.matrix.any() and not ising.linear.any() and ising.const_shift == 0


def test_ising_equivalence_exhaustive(rng):
    for _ in range(40):
        inst = random_instance(rng, n_max=10)
        form = build_qubo(inst)
        ising = qubo_to_ising(form)
        Q, q = reference_ising(inst.values, inst.target)
        eq, ei = [], []
        for z in all_masks(inst.n):
            s = spins_from_mask(z)
            e_ising = energy_ising(ising, s)
            assert e_ising == ising_energy_reference(Q, q, s)
            assert energy_qubo(form, z) == e_ising + ising.const_shift
            eq.append(energy_qubo(form, z))
            ei.append(e_ising)
        assert np.argmin(eq) == np.argmin(ei)


def test_mask_spin_bijection():
    for z in all_masks(5):
        assert (mask_from_spins(spins_from_mask(z)) == z).all()


def test_energy_identity_random(rng):
    for _ in range(1000):
        inst = random_instance(rng, n_max=40, mag=10**12)
        z = rng.random(inst.n) < 0.5
        assert energy_qubo(build_qubo(inst), z) + inst.target**2 == residual(inst, z) ** 2


def test_rank_one_matches_dense(rng):
    for _ in range(50):
        n = int(rng.integers(1, 65))
        inst = new_instance([int(v) for v in rng.integers(-10**14, 10**14, size=n)],
                            int(rng.integers(-10**14, 10**14)))
        z = rng.random(n) < 0.5
        form = build_qubo(inst)
        assert energy_qubo(form, z) == energy_qubo_dense(form, z)


def test_minimum_energy_characterises_feasibility(rng):
    for _ in range(60):
        inst = random_instance(rng, n_max=12)
        form = build_qubo(inst)
        energies = [energy_qubo(form, z) for z in all_masks(inst.n)]
        feasible = any(sum(c) == inst.target
                       for r in range(0, inst.n + 1)
                       for c in itertools.combinations(inst.values, r))
        assert (min(energies) == -inst.target**2) == feasible


def test_residual_examples():
    inst = new_instance([1, 2], 3)
    assert residual(inst, [1, 1]) == 0
    assert residual(inst, [0, 0]) == -3
    inst = new_instance([5, 7, 11], 12)
    brute = [c for r in range(4) for c in itertools.combinations(range(3), r)
             if sum(inst.values[i] for i in c) == 12]
    assert brute == [(0, 1)]
    assert residual(inst, [1, 1, 0]) == 0


def test_verify_empty_policy():
    inst = new_instance([4, -4], 0)
    assert not verify(inst, [0, 0])
    assert verify(inst, [0, 0], allow_empty=True)
    assert verify(inst, [1, 1])
    with pytest.raises(DimensionMismatch):
        verify(inst, [1, 1, 1])


def test_verify_planted(rng):
    from subsetqubo.model import GeneratorConfig, generate
    for seed in range(20):
        inst = generate(GeneratorConfig(n=20, k=5, x_min=-100, x_max=100, seed=seed))
        assert verify(inst, inst.planted_mask())


def test_ising_export_round_trip(rng):
    for _ in range(20):
        inst = random_instance(rng, n_max=8)
        ising = qubo_to_ising(build_qubo(inst))
        doc = json.loads(export_ising(ising))
        assert set(doc) == {"linear", "quadratic", "const_shift_x4", "n"}
        assert all(i < j for i, j, _ in doc["quadratic"])
        back = read_ising(export_ising(ising))
        for z in all_masks(inst.n):
            s = spins_from_mask(z)
            # the export convention: 4 E_qubo = sum J s s + h s + C
            assert energy_ising(back, s) + Fraction(doc["const_shift_x4"], 4) \
                == energy_qubo(build_qubo(inst), z)
        assert ising_to_dict(back) == doc


def test_read_ising_errors():
    with pytest.raises(ParseError):
        read_ising('{"n": 2, "linear": [1], "quadratic": [], "const_shift_x4": 0}')
    with pytest.raises(ParseError):
        read_ising('{"n": 2, "linear": [1, 2], "quadratic": [[1, 0, 3]], "const_shift_x4": 0}')
    with pytest.raises(ParseError):
        read_ising('{"n": 2, "linear": [1, 2], "quadratic": []}')
