"""Geometry of the flat unit torus [-1/2, 1/2)^d."""

import numpy as np


def wrap(x):
    """Wrap coordinates into the fundamental domain [-1/2, 1/2).

    Idempotent; works on scalars or arrays of any shape.
    """
    x = np.asarray(x, dtype=float)
    return x - np.floor(x + 0.5)


def displacement(x, y):
    """Minimal-image displacement x - y on the torus, componentwise in [-1/2, 1/2)."""
    return wrap(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))


def distance(x, y):
    """Torus distance: Euclidean norm of the minimal-image displacement.

    Broadcasts over leading axes; the last axis is the coordinate axis.
    """
    d = displacement(x, y)
    return np.sqrt(np.sum(d * d, axis=-1))


def grid_points(n):
    """Coordinates x_j = -1/2 + j/n of the uniform n-point grid per axis."""
    return -0.5 + np.arange(n) / n


def grid_mesh(n):
    """(X1, X2) meshes of the n x n torus grid, indexed [i, j] = (x1_i, x2_j)."""
    x = grid_points(n)
    return np.meshgrid(x, x, indexing="ij")
