"""Symmetric tridiagonal eigenvalues by Sturm-sequence bisection.

Only the one or two extreme eigenvalues are ever needed by the truncation
oracles, so robustness beats speed: bisection on the Gershgorin interval
with the classic sign-count recurrence

    d_k = (diag_k - x) - offdiag_{k-1}^2 / d_{k-1}

where the number of negative d_k equals the number of eigenvalues
strictly below x.  Tiny pivots are replaced by a negative underflow
guard, making the count a total function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TridiagonalMatrix", "sturm_count", "kth_eigenvalue", "eigenvalues"]


@dataclass(frozen=True, eq=False)
class TridiagonalMatrix:
    """Symmetric tridiagonal matrix stored as its diagonal and off-diagonal.

    Symmetry is guaranteed by the representation: the off-diagonal holds
    each coupling once and is used for both triangles.
    """

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        off = np.asarray(self.offdiag, dtype=float)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", off)
        if diag.ndim != 1 or off.ndim != 1 or len(off) != max(len(diag) - 1, 0):
            raise ValueError("need diag of length N and offdiag of length N-1")
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(off))):
            raise ValueError("matrix entries must be finite")

    @property
    def n(self) -> int:
        return len(self.diag)

    def gershgorin(self) -> tuple[float, float]:
        """Interval certain to contain the whole spectrum."""
        radius = np.zeros(self.n)
        if self.n > 1:
            radius[:-1] += np.abs(self.offdiag)
            radius[1:] += np.abs(self.offdiag)
        return float(np.min(self.diag - radius)), float(np.max(self.diag + radius))

    def scale(self) -> float:
        top = float(np.max(np.abs(self.diag))) if self.n else 0.0
        if self.n > 1:
            top = max(top, float(np.max(np.abs(self.offdiag))))
        return max(top, 1.0)


def sturm_count(t: TridiagonalMatrix, x: float) -> int:
    """Number of eigenvalues of ``t`` strictly less than ``x``."""
    diag = t.diag.tolist()
    off2 = (t.offdiag ** 2).tolist()
    omega = 1e-300 * t.scale()
    count = 0
    d = diag[0] - x
    if abs(d) < omega:
        d = -omega
    if d < 0:
        count = 1
    for i in range(1, len(diag)):
        d = (diag[i] - x) - off2[i - 1] / d
        if abs(d) < omega:
            d = -omega
        if d < 0:
            count += 1
    return count


def kth_eigenvalue(t: TridiagonalMatrix, k: int, tol: float = 1e-12) -> float:
    """The k-th smallest eigenvalue (k = 0 is the smallest).

    Bisection until the bracket width is below ``tol * max(1, |midpoint|)``;
    the midpoint of the final bracket is returned.
    """
    if not 0 <= k < t.n:
        raise ValueError(f"eigenvalue index {k} out of range for size {t.n}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = t.gershgorin()
    if lo == hi:
        return lo
    for _ in range(20000):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol * max(1.0, abs(mid)) or mid <= lo or mid >= hi:
            return mid
        if sturm_count(t, mid) <= k:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)  # pragma: no cover - loop bound is generous


def eigenvalues(t: TridiagonalMatrix, ks, tol: float = 1e-12) -> list[float]:
    """kth_eigenvalue for several indices, in the given order."""
    return [kth_eigenvalue(t, k, tol) for k in ks]
