import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wkmeasure import FiniteOperator

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

EXPONENTS = (1.5, 2.0, 3.0)

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_operator(rng, m, n, q=2.0, p=2.0, complex_=False, density=1.0,
                    rows=None, cols=None) -> FiniteOperator:
    M = rng.standard_normal((m, n))
    if complex_:
        M = M + 1j * rng.standard_normal((m, n))
    if density < 1.0:
        M = M * (rng.random((m, n)) < density)
    return FiniteOperator.from_dense(M, rows, cols, q, p, "complex" if complex_ else "real")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def planted_partition(rng, n_atoms, max_class=6, rotate=False, min_class=1):
    """Random block generators on ``n_atoms`` atoms with a known partition.

    Returns ``(generators, atoms, classes)``.  Each class carries a dense block
    whose entries have modulus in ``[1e-3, 1]``; generators come with their
    adjoints.  With ``rotate`` the atoms are a random orthonormal basis.
    """
    from wkmeasure import AtomSystem
    perm = rng.permutation(np.arange(1, n_atoms + 1))
    classes, i = [], 0
    while i < n_atoms:
        size = int(rng.integers(min_class, max_class + 1))
        if n_atoms - (i + size) < min_class:
            size = n_atoms - i
        classes.append(sorted(perm[i:i + size].tolist()))
        i += size
    if rotate:
        E, _ = np.linalg.qr(rng.standard_normal((n_atoms, n_atoms)))
        atoms = AtomSystem.from_matrix(E)
    else:
        E = np.eye(n_atoms)
        atoms = AtomSystem.standard(range(1, n_atoms + 1))
    gens = []
    for _ in range(int(rng.integers(1, 3))):
        B = np.zeros((n_atoms, n_atoms))
        for c in classes:
            idx = np.array(c) - 1
            block = rng.uniform(1e-3, 1.0, (len(c), len(c))) * rng.choice((-1.0, 1.0), (len(c), len(c)))
            B[np.ix_(idx, idx)] = block
        M = E @ B @ E.T
        gens += [FiniteOperator.from_dense(M), FiniteOperator.from_dense(M.T)]
    return gens, atoms, classes
