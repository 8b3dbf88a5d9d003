"""Shared finite-difference and oracle utilities for the test suite."""

import numpy as np


def fd_gradient(fun, x, h=1e-6):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(len(x)):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return g


def fd_hessian(grad_fun, x, h=1e-5):
    """Central-difference Jacobian of a gradient function."""
    x = np.asarray(x, dtype=float)
    g0 = np.asarray(grad_fun(x))
    H = np.zeros((len(x), len(g0)))
    for i in range(len(x)):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        H[i] = (np.asarray(grad_fun(xp)) - np.asarray(grad_fun(xm))) \
            / (2.0 * h)
    return H


def dense(mat):
    return mat.toarray() if hasattr(mat, "toarray") else np.asarray(mat)
