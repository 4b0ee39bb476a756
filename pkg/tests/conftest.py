import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ncsg.algebra import TracialAlgebra
from ncsg.semigroup import Depolarizing, MarkovChain, Schur, TensorSum, build_generator, eigendecompose

settings.register_profile("ncsg", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ncsg")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


ALGEBRAS = [
    TracialAlgebra.matrix(2),
    TracialAlgebra.matrix(3),
    TracialAlgebra((2, 1), (0.7, 0.3)),
    TracialAlgebra.diagonal([0.1, 0.2, 0.3, 0.4]),
]


def two_state(a=0.3, b=0.2):
    w = np.array([b, a]) / (a + b)
    alg = TracialAlgebra.diagonal(w)
    return alg, MarkovChain([[-a, a], [b, -b]])


def builtin_systems():
    """One instance of every built-in generator family, as (label, algebra, spec)."""
    rng = np.random.default_rng(7)
    m2 = TracialAlgebra.matrix(2)
    out = [
        ("schur_m2", m2, Schur([0.0, 1.0])),
        ("schur_m3", TracialAlgebra.matrix(3), Schur(rng.standard_normal((3, 2)))),
        ("schur_m4", TracialAlgebra.matrix(4), Schur(rng.standard_normal((4, 2)))),
        ("depolarizing_m2", m2, Depolarizing(1.0)),
        ("depolarizing_blocks", TracialAlgebra((2, 1), (0.6, 0.4)), Depolarizing(0.5)),
    ]
    alg, spec = two_state()
    out.append(("two_state_chain", alg, spec))
    ts = TensorSum(Depolarizing(1.0), Schur([0.0, 1.0]), m2, m2)
    out.append(("tensor_sum", ts.algebra, ts))
    return out


@pytest.fixture(scope="session")
def schur_m4():
    rng = np.random.default_rng(1)
    return eigendecompose(build_generator(Schur(rng.standard_normal((4, 2))), TracialAlgebra.matrix(4)))


@pytest.fixture(scope="session")
def schur_m3():
    rng = np.random.default_rng(3)
    return eigendecompose(build_generator(Schur(rng.standard_normal((3, 2))), TracialAlgebra.matrix(3)))


@pytest.fixture(scope="session")
def depolarizing_m2():
    return eigendecompose(build_generator(Depolarizing(1.0), TracialAlgebra.matrix(2)))


@pytest.fixture(scope="session")
def chain_dec():
    alg, spec = two_state()
    return eigendecompose(build_generator(spec, alg))


E1 = math.exp(-1)
