from __future__ import annotations

import numpy as np

from .errors import AntisymmetryViolation

ANTISYMMETRY_TOL = 1e-12


def check_antisymmetric(a: np.ndarray, tol: float = ANTISYMMETRY_TOL) -> float:
    """Return max|A + A^T| / max|A|, raising AntisymmetryViolation above ``tol``."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if a.size == 0:
        return 0.0
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return 0.0
    defect = float(np.max(np.abs(a + a.T))) / scale
    if defect > tol:
        raise AntisymmetryViolation(f"matrix is not antisymmetric (defect {defect:.3e})")
    return defect


def pfaffian(a, check: bool = True) -> complex:
    """Pfaffian by skew-symmetric Gaussian elimination with partial pivoting.

    Odd dimension gives 0 and the empty matrix gives 1.
    """
    a = np.array(a, dtype=complex)
    if check:
        check_antisymmetric(a)
    n = a.shape[0]
    if n % 2:
        return 0.0 + 0.0j
    result = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        piv = k + 1 + int(np.argmax(np.abs(a[k, k + 1:])))
        if piv != k + 1:
            a[[k + 1, piv], :] = a[[piv, k + 1], :]
            a[:, [k + 1, piv]] = a[:, [piv, k + 1]]
            result = -result
        head = a[k, k + 1]
        if head == 0:
            return 0.0 + 0.0j
        result *= head
        if k + 2 < n:
            tau = a[k, k + 2:] / head
            col = a[k + 2:, k + 1].copy()
            a[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return complex(result)


def bordered(a: np.ndarray, border: np.ndarray) -> np.ndarray:
    """Adjoin ``border`` as a last column (and its negative as a last row).

    With this layout the 1x1 case ``pf(b; .)`` equals ``b``.
    """
    a = np.asarray(a, dtype=complex)
    border = np.asarray(border, dtype=complex)
    n = a.shape[-1]
    out = np.zeros(a.shape[:-2] + (n + 1, n + 1), dtype=complex)
    out[..., :n, :n] = a
    out[..., :n, n] = border
    out[..., n, :n] = -border
    return out


def pfaffian_stack(a: np.ndarray) -> np.ndarray:
    """Pfaffians of a stack of small antisymmetric matrices by first-row expansion.

    Cost grows like (m - 1)!!, so this is meant for m <= 10; no checks are made.
    """
    a = np.asarray(a, dtype=complex)
    m = a.shape[-1]
    if m == 0:
        return np.ones(a.shape[:-2], dtype=complex)
    if m % 2:
        return np.zeros(a.shape[:-2], dtype=complex)
    if m == 2:
        return a[..., 0, 1]
    out = np.zeros(a.shape[:-2], dtype=complex)
    for j in range(1, m):
        keep = [k for k in range(1, m) if k != j]
        minor = a[..., keep, :][..., :, keep]
        sign = 1.0 if j % 2 else -1.0
        out = out + sign * a[..., 0, j] * pfaffian_stack(minor)
    return out
