"""Distance-geometry kernels: squared distances, signed simplex volumes and
Cayley-Menger (bi-)determinants.

Every function accepts plain sequences or numpy arrays. Points are stored as
rows, i.e. a simplex in R^n is an ``(n + 1, n)`` array.
"""

from math import factorial

import numpy as np

__all__ = [
    "DEGENERACY_EPS",
    "squared_distance",
    "squared_distance_table",
    "signed_volume",
    "bordered_matrix",
    "cayley_menger_bidet",
    "cayley_menger_bidet_from_table",
    "cayley_menger_det",
    "cayley_menger_det_from_table",
    "cm_prefactor",
    "degeneracy_scale",
    "is_degenerate",
    "batch_cm_det",
]

DEGENERACY_EPS = 1e-9


def _points(ps, name="points"):
    arr = np.asarray(ps, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array of row points, got shape {arr.shape}")
    return arr


def squared_distance(a, b):
    """Squared Euclidean distance between two coordinate vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(diff @ diff)


def squared_distance_table(xs, ys=None):
    """Table ``T[i, j] = |x_i - y_j|^2``.

    With ``ys`` omitted the table of ``xs`` against itself is returned, with
    an exactly zero diagonal.
    """
    xs = _points(xs, "xs")
    same = ys is None
    ys = xs if same else _points(ys, "ys")
    if xs.shape[1] != ys.shape[1]:
        raise ValueError(f"dimension mismatch: {xs.shape[1]} vs {ys.shape[1]}")
    diff = xs[:, None, :] - ys[None, :, :]
    table = np.einsum("ijk,ijk->ij", diff, diff)
    if same:
        np.fill_diagonal(table, 0.0)
    return table


def signed_volume(ps):
    """Signed volume of the ordered simplex ``ps`` (``n + 1`` points in R^n).

    Computed as ``det([1^T; X]) / n!`` with the points as the columns of X,
    which equals ``det(x_1 - x_0, ..., x_n - x_0) / n!``. Swapping two
    points flips the sign.
    """
    ps = _points(ps)
    count, n = ps.shape
    if count != n + 1:
        raise ValueError(f"need {n + 1} points in R^{n}, got {count}")
    frame = np.vstack([np.ones(count), ps.T])
    return float(np.linalg.det(frame)) / factorial(n)


def cm_prefactor(n):
    """The ``2 (-1/2)^(n+1)`` factor in front of the bordered determinant."""
    return 2.0 * (-0.5) ** (n + 1)


def bordered_matrix(table):
    """Embed a square squared-distance table in the 0/1 border."""
    table = np.asarray(table, dtype=float)
    k = table.shape[-1]
    out = np.ones(table.shape[:-2] + (k + 1, k + 1))
    out[..., 0, 0] = 0.0
    out[..., 1:, 1:] = table
    return out


def _check_table(table):
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] < 2:
        raise ValueError(f"need a square (n+1)x(n+1) distance table, got shape {table.shape}")
    if not np.all(np.isfinite(table)):
        raise ValueError("distance table has missing (non-finite) entries")
    return table


def cayley_menger_bidet_from_table(table):
    """Cayley-Menger bi-determinant from the cross table ``d(x_i, y_j)^2``.

    The table is ``(n + 1) x (n + 1)`` with rows indexed by the first point
    set and columns by the second; NaN marks a missing measurement.
    """
    table = _check_table(table)
    n = table.shape[0] - 1
    return cm_prefactor(n) * float(np.linalg.det(bordered_matrix(table)))


def cayley_menger_det_from_table(table):
    """Cayley-Menger determinant of one point set from its distance table."""
    return cayley_menger_bidet_from_table(table)


def cayley_menger_bidet(xs, ys):
    """Cayley-Menger bi-determinant of two ordered point sets in R^n.

    Equals ``(n!)^2 Vol(X) Vol(Y)`` for signed volumes.
    """
    xs = _points(xs, "xs")
    ys = _points(ys, "ys")
    n = xs.shape[1]
    if xs.shape != (n + 1, n) or ys.shape != (n + 1, n):
        raise ValueError(f"both sets need {n + 1} points in R^{n}: got {xs.shape}, {ys.shape}")
    return cayley_menger_bidet_from_table(squared_distance_table(xs, ys))


def cayley_menger_det(xs):
    """Cayley-Menger determinant ``D(X) = D(X; X)``, equal to ``(n! Vol)^2``."""
    xs = _points(xs, "xs")
    n = xs.shape[1]
    if xs.shape[0] != n + 1:
        raise ValueError(f"need {n + 1} points in R^{n}, got {xs.shape[0]}")
    return cayley_menger_bidet_from_table(squared_distance_table(xs))


def degeneracy_scale(table):
    """``(max squared distance)^n`` for an ``(n+1) x (n+1)`` table.

    ``D`` is homogeneous of degree ``2n`` in length, so this makes the
    degeneracy test scale free. Works on stacks of tables.
    """
    table = np.asarray(table, dtype=float)
    n = table.shape[-1] - 1
    return np.max(table, axis=(-2, -1)) ** n


def is_degenerate(det_value, table, eps=DEGENERACY_EPS):
    """True when ``|D|`` is within ``eps * scale`` of zero."""
    scale = degeneracy_scale(table)
    return np.abs(det_value) <= eps * scale


def batch_cm_det(tables):
    """Cayley-Menger determinants for a ``(K, n+1, n+1)`` stack of tables."""
    tables = np.asarray(tables, dtype=float)
    n = tables.shape[-1] - 1
    if len(tables) == 0:
        return np.zeros(0)
    return cm_prefactor(n) * np.linalg.det(bordered_matrix(tables))
