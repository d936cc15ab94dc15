"""Classical Jacobi polynomials: recurrence coefficients, orthonormal
evaluation, norm constants and Gauss-Jacobi quadrature.

All polynomials are orthonormal with respect to (1-x)^alpha (1+x)^beta on
[-1, 1].  Evaluation uses the forward three-term recurrence, which is stable
on the interval for the orthonormal family; no asymptotic formulas are used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "JacobiParams",
    "RecurrenceCoeffs",
    "QuadratureRule",
    "norm_constant",
    "recurrence_coeffs",
    "eval_jacobi",
    "eval_jacobi_derivative",
    "jacobi_table",
    "jacobi_derivative_table",
    "weight_values",
    "build_quadrature",
]


@dataclass(frozen=True)
class JacobiParams:
    """Weight exponents (alpha, beta); both must exceed -1 for finite moments."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= -1.0 or self.beta <= -1.0:
            raise ValueError(
                f"Jacobi parameters must exceed -1, got alpha={self.alpha}, beta={self.beta}"
            )

    @property
    def rho(self) -> float:
        return self.alpha + self.beta + 1.0

    def shifted(self, da: float = 1.0, db: float = 1.0) -> "JacobiParams":
        return JacobiParams(self.alpha + da, self.beta + db)


@dataclass(frozen=True, eq=False)
class RecurrenceCoeffs:
    """Three-term coefficients: x p_n = a[n+1] p_{n+1} + b[n] p_n + a[n] p_{n-1}.

    a[0] is set to 0 by convention (there is no p_{-1} term).
    """

    a: np.ndarray
    b: np.ndarray


def norm_constant(params: JacobiParams, k: int) -> float:
    """L2 norm of the degree-k standard Jacobi polynomial under the weight.

    Computed through log-gamma differences so large k does not overflow.
    """
    if k < 0:
        raise ValueError("index k must be nonnegative")
    a, b, r = params.alpha, params.beta, params.rho
    # log((2k + r) Gamma(k + r)) written as lgamma(r + 1) at k = 0, where the
    # plain form is 0 * inf for r = 0 (both exponents equal to -1/2)
    if k == 0:
        log_tail = math.lgamma(r + 1.0)
    else:
        log_tail = math.log(2.0 * k + r) + math.lgamma(k + r)
    log_sq = (
        r * math.log(2.0)
        + math.lgamma(k + a + 1.0)
        + math.lgamma(k + b + 1.0)
        - log_tail
        - math.lgamma(k + 1.0)
    )
    return math.exp(0.5 * log_sq)


def recurrence_coeffs(params: JacobiParams, n_max: int) -> RecurrenceCoeffs:
    """Orthonormal-family recurrence coefficients a_n, b_n for n <= n_max."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    a, b, r = params.alpha, params.beta, params.rho
    n = np.arange(n_max + 1, dtype=float)
    aa = np.zeros(n_max + 1)
    bb = np.zeros(n_max + 1)
    # b_0 = (beta - alpha) / (rho + 1) is the continuous limit of the generic
    # formula, which is 0/0 when alpha + beta = 0.
    bb[0] = (b - a) / (r + 1.0)
    if n_max >= 1:
        # n = 1 with the factor (n + r - 1)/(2n + r - 2) cancelled, which is
        # 0/0 at r = 0 in the generic expression
        aa[1] = 2.0 / (r + 1.0) * math.sqrt((1.0 + a) * (1.0 + b) / (r + 2.0))
        bb[1:] = (b * b - a * a) / ((2.0 * n[1:] + r + 1.0) * (2.0 * n[1:] + r - 1.0))
    if n_max >= 2:
        m = n[2:]
        aa[2:] = (
            2.0
            / (2.0 * m + r - 1.0)
            * np.sqrt(
                m * (m + a) * (m + b) * (m + r - 1.0) / ((2.0 * m + r) * (2.0 * m + r - 2.0))
            )
        )
    return RecurrenceCoeffs(a=aa, b=bb)


def jacobi_table(params: JacobiParams, n_max: int, x) -> np.ndarray:
    """Values p_n(x) for n = 0..n_max; shape (n_max+1, len(x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rec = recurrence_coeffs(params, n_max + 1)
    out = np.empty((n_max + 1, x.size))
    out[0] = 1.0 / norm_constant(params, 0)
    if n_max >= 1:
        out[1] = (x - rec.b[0]) * out[0] / rec.a[1]
    for n in range(1, n_max):
        out[n + 1] = ((x - rec.b[n]) * out[n] - rec.a[n] * out[n - 1]) / rec.a[n + 1]
    return out


def eval_jacobi(params: JacobiParams, n: int, x):
    """Orthonormal Jacobi value p_n(x); x may be scalar or array."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    val = jacobi_table(params, n, xs)[n]
    return float(val[0]) if np.isscalar(x) else val


def jacobi_derivative_table(params: JacobiParams, n_max: int, x) -> np.ndarray:
    """Values p_n'(x) via the shifted-family identity
    p_n' = sqrt(n (n + rho)) p_{n-1}^{(alpha+1, beta+1)}."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros((n_max + 1, x.size))
    if n_max >= 1:
        up = jacobi_table(params.shifted(), n_max - 1, x)
        n = np.arange(1, n_max + 1, dtype=float)
        out[1:] = np.sqrt(n * (n + params.rho))[:, None] * up
    return out


def eval_jacobi_derivative(params: JacobiParams, n: int, x):
    """Derivative of the orthonormal Jacobi polynomial; 0 for n = 0."""
    if n == 0:
        return 0.0 if np.isscalar(x) else np.zeros_like(np.asarray(x, dtype=float))
    fac = math.sqrt(n * (n + params.rho))
    return fac * eval_jacobi(params.shifted(), n - 1, x)


def weight_values(exponent_a: float, exponent_b: float, x) -> np.ndarray:
    """(1-x)^a (1+x)^b evaluated elementwise."""
    x = np.asarray(x, dtype=float)
    return (1.0 - x) ** exponent_a * (1.0 + x) ** exponent_b


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss rule for integrals against (1-x)^a (1+x)^b on (-1, 1)."""

    exponent_a: float
    exponent_b: float
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    @property
    def order(self) -> int:
        return self.nodes.size

    def integrate(self, f) -> float:
        """Integrate f (callable or array of node values) against the weight."""
        vals = f(self.nodes) if callable(f) else np.asarray(f, dtype=float)
        return float(np.dot(self.weights, vals))


def build_quadrature(exponent_a: float, exponent_b: float, order: int) -> QuadratureRule:
    """Gauss-Jacobi rule by eigen-decomposition of the symmetric tridiagonal
    recurrence matrix (Golub-Welsch); exact for polynomial degree 2*order - 1."""
    if order < 1:
        raise ValueError("order must be at least 1")
    params = JacobiParams(exponent_a, exponent_b)  # validates integrability
    rec = recurrence_coeffs(params, order)
    if order == 1:
        nodes = np.array([rec.b[0]])
        vec0 = np.array([1.0])
    else:
        nodes, vecs = eigh_tridiagonal(rec.b[:order], rec.a[1:order])
        vec0 = vecs[0]
    mass = norm_constant(params, 0) ** 2
    weights = mass * vec0**2
    return QuadratureRule(
        exponent_a=exponent_a,
        exponent_b=exponent_b,
        nodes=nodes,
        weights=weights,
        exactness_degree=2 * order - 1,
    )
