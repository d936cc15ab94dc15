"""Shared semigroup data types: symbols, sequences, kernel tables, banded
generators, and index-ordering helpers for the two-sided index set."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "NumericalConsistencyError",
    "SymbolSpec",
    "SequenceData",
    "KernelTable",
    "BandedGenerator",
    "cos_symbol",
    "symmetrize_kernel",
    "rows_from_dense",
    "detect_bandwidth",
    "zorder_indices",
    "zposition",
    "geometric_t_grid",
]


class NumericalConsistencyError(RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""


def zorder_indices(k_max: int) -> np.ndarray:
    """Two-sided index set stored as 0, 1, -1, 2, -2, ..., k_max, -k_max."""
    out = np.zeros(2 * k_max + 1, dtype=int)
    k = np.arange(1, k_max + 1)
    out[2 * k - 1] = k
    out[2 * k] = -k
    return out


def zposition(k: int) -> int:
    """Storage position of index k in the 0, 1, -1, 2, -2, ... ordering."""
    if k == 0:
        return 0
    return 2 * k - 1 if k > 0 else -2 * k


def geometric_t_grid(t_min: float = 1e-4, t_max: float = 1e4, points: int = 257) -> np.ndarray:
    """Default time grid for maximal-operator scans (t = 0 is added by callers)."""
    return np.geomspace(t_min, t_max, points)


@dataclass(frozen=True, eq=False)
class SymbolSpec:
    """Polynomial symbol s with its supremum over the spectral variable.

    ``coeffs`` are ascending-power coefficients of s(x) on [-1, 1].  For the
    periodic bases x stands for cos(theta), so s = cos corresponds to
    coeffs = (0, 1).
    """

    coeffs: tuple
    s_max: float

    @classmethod
    def from_coeffs(cls, coeffs) -> "SymbolSpec":
        """Build a symbol, computing s_max exactly from the critical points."""
        poly = Polynomial(np.asarray(coeffs, dtype=float))
        candidates = [-1.0, 1.0]
        if poly.degree() >= 2:
            for r in poly.deriv().roots():
                if abs(r.imag) < 1e-12 and -1.0 < r.real < 1.0:
                    candidates.append(float(r.real))
        s_max = max(float(poly(c)) for c in candidates)
        return cls(coeffs=tuple(float(c) for c in poly.coef), s_max=s_max)

    @property
    def poly(self) -> Polynomial:
        return Polynomial(np.asarray(self.coeffs))

    @property
    def degree(self) -> int:
        return int(Polynomial(np.asarray(self.coeffs)).degree())

    def values(self, x) -> np.ndarray:
        return self.poly(np.asarray(x, dtype=float))


def cos_symbol() -> SymbolSpec:
    """s(cos theta) = cos theta, the standard heat symbol for periodic bases."""
    return SymbolSpec.from_coeffs([0.0, 1.0])


@dataclass(frozen=True, eq=False)
class SequenceData:
    """Finitely supported sequence: integer support and matching values."""

    support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", np.asarray(self.support, dtype=int))
        object.__setattr__(self, "values", np.asarray(self.values))
        if self.support.shape != self.values.shape:
            raise ValueError("support and values must have the same length")

    @classmethod
    def delta(cls, n: int) -> "SequenceData":
        return cls(support=np.array([n]), values=np.array([1.0]))

    def norm2(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_dense(self, indices: np.ndarray) -> np.ndarray:
        """Values aligned with ``indices`` (zero off the support).

        Raises if the support is not contained in ``indices``.
        """
        pos = {int(n): i for i, n in enumerate(indices)}
        out = np.zeros(len(indices), dtype=self.values.dtype)
        for n, v in zip(self.support, self.values):
            if int(n) not in pos:
                raise ValueError(f"support index {n} outside table range")
            out[pos[int(n)]] = v
        return out


@dataclass(eq=False)
class KernelTable:
    """Dense table of kernel values K_t(n, m) over a finite index window.

    ``indices`` lists the basis indices in storage order (plain 0..N for
    one-sided bases, the 0, 1, -1, ... ordering for two-sided ones), and
    ``entries[i, j]`` is the kernel value for the index pair
    (indices[i], indices[j]).  Tables are symmetrized on construction.
    """

    t: float
    indices: np.ndarray
    entries: np.ndarray
    basis: object = None
    _pos: dict = field(default=None, repr=False)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=int)
        self.entries = np.asarray(self.entries, dtype=float)
        self._pos = {int(n): i for i, n in enumerate(self.indices)}

    @property
    def size(self) -> int:
        return self.indices.size

    def position(self, n: int) -> int:
        return self._pos[int(n)]

    def value(self, n: int, m: int) -> float:
        return float(self.entries[self.position(n), self.position(m)])

    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.entries, axis=1)


def symmetrize_kernel(entries: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Average a kernel table with its transpose, rejecting gross asymmetry
    (a symptom of insufficient quadrature order)."""
    asym = float(np.max(np.abs(entries - entries.T)))
    if asym > tol:
        raise NumericalConsistencyError(
            f"kernel symmetry residual {asym:.3e} exceeds {tol:.1e}; quadrature order too low"
        )
    return 0.5 * (entries + entries.T)


@dataclass(eq=False)
class BandedGenerator:
    """Banded matrix of a polynomial multiplication operator plus its symbol sup.

    ``rows[i, bandwidth + k]`` holds the coefficient u_{i,k} coupling storage
    position i to position i + k.  The semigroup generator in the convention
    used throughout (W_t = exp(t (M_s - s_max I))) is ``rows`` with s_max
    subtracted from the central column; see :meth:`generator_matrix`.
    """

    indices: np.ndarray
    rows: np.ndarray
    bandwidth: int
    s_max: float
    basis: object = None
    symbol: object = None

    @property
    def size(self) -> int:
        return self.indices.size

    def u(self, i: int, k: int) -> float:
        """Band coefficient at storage position i, offset k (|k| <= bandwidth)."""
        if abs(k) > self.bandwidth:
            return 0.0
        return float(self.rows[i, self.bandwidth + k])

    def multiplication_matrix(self) -> np.ndarray:
        n, L = self.size, self.bandwidth
        out = np.zeros((n, n))
        for k in range(-L, L + 1):
            col = self.rows[:, L + k]
            for i in range(n):
                j = i + k
                if 0 <= j < n:
                    out[i, j] = col[i]
        return out

    def generator_matrix(self) -> np.ndarray:
        """Dense M_s - s_max I on the truncation window."""
        return self.multiplication_matrix() - self.s_max * np.eye(self.size)

    def generator_row(self, i: int) -> np.ndarray:
        row = self.rows[i].copy()
        row[self.bandwidth] -= self.s_max
        return row


def rows_from_dense(matrix: np.ndarray, bandwidth: int) -> np.ndarray:
    """Extract (size, 2*bandwidth+1) band rows from a dense matrix."""
    n = matrix.shape[0]
    rows = np.zeros((n, 2 * bandwidth + 1))
    for k in range(-bandwidth, bandwidth + 1):
        for i in range(n):
            j = i + k
            if 0 <= j < n:
                rows[i, bandwidth + k] = matrix[i, j]
    return rows


def detect_bandwidth(matrix: np.ndarray, tol: float = 1e-12) -> int:
    """Largest |i - j| with an entry above tol."""
    n = matrix.shape[0]
    band = 0
    for k in range(n - 1, 0, -1):
        if np.max(np.abs(np.diagonal(matrix, offset=k))) > tol:
            band = k
            break
    return band
