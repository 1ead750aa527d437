import numpy as np
import pytest
from scipy.special import roots_hermitenorm


def fd_gradient(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_jacobian(f, x, h=1e-5):
    """Central finite-difference Jacobian of a vector function, rows = outputs."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def gauss_expectation_nodes(var, n):
    """Nodes/weights for E[f(Z)], Z ~ N(0, var), by probabilists' Gauss-Hermite."""
    # scipy switches to an asymptotic rule for large n, where numpy's
    # hermegauss overflows
    x, w = roots_hermitenorm(n)
    return np.sqrt(var) * x, w / np.sqrt(2 * np.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
