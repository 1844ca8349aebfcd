import numpy as np
import pytest

from delayhinf import (
    Polynomial,
    RationalFunction,
    Weights,
    normalize_plant,
    synthesize,
)

GRID = np.logspace(-3, 4, 1000)


def make_benchmark_plant():
    return normalize_plant(
        [(0, [3.0, 1.0]), ("0.4", [-2.0, 2.0])],
        [(0, [0.0, 0.0, 1.0]), ("0.2", [0.0, 1.0]), ("0.5", [5.0])])


def make_benchmark_weights():
    return Weights(
        RationalFunction(Polynomial([2.0, 2.0]), Polynomial([1.0, 10.0])),
        RationalFunction(Polynomial([0.22, 0.2]), Polynomial([1.0])))


@pytest.fixture(scope="session")
def benchmark_plant():
    return make_benchmark_plant()


@pytest.fixture(scope="session")
def benchmark_weights():
    return make_benchmark_weights()


@pytest.fixture(scope="session")
def benchmark_synthesis(benchmark_plant, benchmark_weights):
    """(factorization, synthesis data, controller) computed once."""
    return synthesize(benchmark_plant, benchmark_weights, rel_tol=1e-7)


BENCHMARK_PROBLEM_TEXT = """\
[plant.numerator]
0    3 1
0.4  -2 2
[plant.denominator]
0    0 0 1
0.2  0 1
0.5  5
[weight.W1]
num 2 2
den 1 10
[weight.W2]
num 0.22 0.2
den 1
[options]
t-end 30
"""


@pytest.fixture()
def benchmark_problem_file(tmp_path):
    path = tmp_path / "benchmark.dhp"
    path.write_text(BENCHMARK_PROBLEM_TEXT)
    return str(path)
