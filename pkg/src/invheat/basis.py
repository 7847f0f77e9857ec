"""Biorthonormal eigenbasis for the nonlocal boundary conditions
u(0) = u(1), u_x(1) = 0.

The direct problem X'' + lambda X = 0 with those conditions is not
self-adjoint; its eigenfunctions alone are not a basis, so each cosine
eigenfunction is paired with an associated function:

    X_0 = 2,  X_{2k-1} = 4 cos(2 pi k x),  X_{2k} = 4 (1 - x) sin(2 pi k x)

The adjoint family

    Y_0 = x,  Y_{2k-1} = x cos(2 pi k x),  Y_{2k} = sin(2 pi k x)

makes (X_i, Y_j) = delta_ij, so coefficients are extracted by plain
integration against Y even though the X are not orthogonal.
"""

from __future__ import annotations

import numpy as np

from .numerics import DEFAULT_X_QUAD, QuadratureConfig, integrate, quadrature_nodes_weights

__all__ = [
    "mode_number",
    "eigenvalue",
    "eigen_x",
    "eigen_y",
    "project",
    "basis_matrix_x",
    "basis_matrix_y",
]


def mode_number(index: int) -> int:
    """Wavenumber k of basis member ``index``: 0 -> 0, 2k-1 and 2k -> k."""
    return (index + 1) // 2


def eigenvalue(index: int) -> float:
    """lambda = (2 pi k)^2 for the member's wavenumber."""
    return (2.0 * np.pi * mode_number(index)) ** 2


def eigen_x(index: int, x):
    """Direct-family member X_index evaluated at x (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if index == 0:
        return np.full_like(x, 2.0) if x.ndim else 2.0
    k = mode_number(index)
    if index % 2 == 1:
        return 4.0 * np.cos(2.0 * np.pi * k * x)
    return 4.0 * (1.0 - x) * np.sin(2.0 * np.pi * k * x)


def eigen_y(index: int, x):
    """Adjoint-family member Y_index evaluated at x."""
    x = np.asarray(x, dtype=float)
    if index == 0:
        return x if x.ndim else float(x)
    k = mode_number(index)
    if index % 2 == 1:
        return x * np.cos(2.0 * np.pi * k * x)
    return np.sin(2.0 * np.pi * k * x)


def project(f, index: int, quad: QuadratureConfig = DEFAULT_X_QUAD) -> float:
    """Coefficient of ``f`` on basis member ``index``: integral of f * Y_index."""
    return integrate(lambda x: np.asarray(f(x), dtype=float) * eigen_y(index, x), 0.0, 1.0, quad)


def basis_matrix_x(n_indices: int, x) -> np.ndarray:
    """Matrix X[i, m] = X_i(x_m) for i = 0..n_indices-1."""
    x = np.asarray(x, dtype=float)
    return np.vstack([eigen_x(i, x) for i in range(n_indices)])


def basis_matrix_y(n_indices: int, x) -> np.ndarray:
    """Matrix Y[i, m] = Y_i(x_m) for i = 0..n_indices-1."""
    x = np.asarray(x, dtype=float)
    return np.vstack([eigen_y(i, x) for i in range(n_indices)])
