"""Shared constructions for the test suite.

Planted instances are built backwards from a known exact solution or
certificate so tests can assert against ground truth that never touched
the solver.
"""

import numpy as np

from hqp import QpKktPoint, QpProblem


def random_spd_matrix(rng, n, shift=0.5):
    G = rng.standard_normal((n, n))
    return G.T @ G + shift * np.eye(n)


def random_full_rank(rng, m, n):
    while True:
        E = rng.standard_normal((m, n))
        if m == 0 or np.linalg.matrix_rank(E) == m:
            return E


def planted_kkt_instance(rng, n, m):
    """Problem with a known exact optimal primal-dual point.

    Pick the point first (strictly complementary: positive primal on a
    random support, positive bound multiplier off it), then back out the
    linear cost and right-hand side that make it stationary and feasible.
    """
    C = random_spd_matrix(rng, n)
    E = random_full_rank(rng, m, n)
    support = rng.random(n) < 0.6
    if not support.any():
        support[int(rng.integers(n))] = True
    y = np.where(support, rng.random(n) + 0.5, 0.0)
    xi = np.where(support, 0.0, rng.random(n) + 0.5)
    nu = rng.standard_normal(m)
    c = -(C @ y) - E.T @ nu + xi
    f = E @ y
    problem = QpProblem(C, c, E if m else None, f if m else None)
    return problem, QpKktPoint(y=y, nu=nu, xi=xi)


def planted_certificate_instance(rng, n, m):
    """Infeasible problem with a known exact certificate.

    Nonnegative constraint rows and a positive multiplier give a
    nonnegative E'nu; scaling f = -nu / ||nu||^2 normalizes f'nu to -1.
    The certificate's existence itself proves infeasibility.
    """
    assert m >= 1
    C = random_spd_matrix(rng, n)
    E = 1.0 - rng.random((m, n))  # entries in (0, 1]; full row rank a.s.
    nu = rng.random(m) + 0.5
    xi = E.T @ nu
    f = -nu / float(nu @ nu)
    c = rng.standard_normal(n)
    problem = QpProblem(C, c, E, f)
    return problem, nu, xi
