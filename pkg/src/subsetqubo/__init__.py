"""Subset sum via QUBO/Ising reductions, Hopfield descent and digital annealing."""

from .errors import (BadReference, DegenerateModel, DimensionMismatch, EmptyValues,
                     InstanceTooLarge, MagnitudeOverflow, NoSolutionFound, ParseError,
                     RangeTooLarge, ScopeTooSmall, SubsetSumError, TooManyValues)
from .model import (GeneratorConfig, SubsetSumInstance, generate, generate_samples,
                    new_instance, read_problem, solution_ratio, write_problem)
from .qubo import build_qubo, energy_qubo, qubo_to_ising, residual, verify
from .hopfield import DescentConfig, MultistartConfig, SolveReport, descend, multistart
from .anneal import EvolveConfig, evolve, quantize
from .oracle import brute_force, count_solutions, dp_decide, meet_in_middle

__version__ = "0.1.0"
