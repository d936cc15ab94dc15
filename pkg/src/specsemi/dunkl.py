"""Dunkl-Jacobi orthonormal functions on [-pi, pi] and their heat kernel.

The family combines a Jacobi polynomial in cos(t) with a shifted-family
polynomial times sin(t):

    psi_0  = p_0 / sqrt(2)
    psi_k  = (p_k(cos t) + i p_{k-1}^{(alpha+1,beta+1)}(cos t) sin t) / 2,  k >= 1
    psi_-k = conj(psi_k)

The 1/2 (rather than 1/sqrt(2)) factor for k >= 1 is what makes the family
orthonormal against A(t) = (1-cos t)^alpha (1+cos t)^beta |sin t|: each of
the two squared components integrates to 2.  Consequently the rows of the
cos-multiplication matrix touching psi_0 carry sqrt(2) corrections relative
to the generic band pattern; everything is validated against direct
quadrature of the defining integrals.

All [-pi, pi] integrals are folded onto x = cos(tau) in [-1, 1]: the sum of
the tau > 0 and tau < 0 halves is a polynomial in x, so Gauss-Jacobi rules
integrate them exactly and the |sin| kink never enters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .core import (
    KernelTable,
    NumericalConsistencyError,
    SymbolSpec,
    symmetrize_kernel,
    zorder_indices,
    zposition,
)
from .jacobi import (
    JacobiParams,
    build_quadrature,
    jacobi_table,
    recurrence_coeffs,
)

__all__ = [
    "DunklSystem",
    "BlockBandCoeffs",
    "eval_psi",
    "psi_table",
    "recurrence_row",
    "six_term_residual",
    "build_mcos_matrix",
    "dunkl_multiplication_matrix",
    "dunkl_kernel",
    "lambda_eigen_residual",
    "second_order_residual",
]

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class DunklSystem:
    params: JacobiParams

    @property
    def rho(self) -> float:
        return self.params.rho

    def lambda_k(self, k) -> np.ndarray:
        k = np.abs(np.asarray(k, dtype=float))
        return np.sqrt(k * (k + self.rho))

    def nu(self, k: int) -> float:
        """Normalization of psi_k relative to the raw cos/sin combination."""
        return 1.0 / SQRT2 if k == 0 else 0.5


@dataclass(frozen=True, eq=False)
class BlockBandCoeffs:
    """Generic band entries c_k = (a_k + A_{k-1})/2, c_k* = (a_k - A_{k-1})/2,
    d_k = (b_k + B_{k-1})/2, d_k* = (b_k - B_{k-1})/2 where capital letters
    refer to the (alpha+1, beta+1) family and A_{-1} = B_{-1} = 0."""

    c: np.ndarray
    c_star: np.ndarray
    d: np.ndarray
    d_star: np.ndarray


def block_coeffs(sys: DunklSystem, k_max: int) -> BlockBandCoeffs:
    low = recurrence_coeffs(sys.params, k_max + 1)
    up = recurrence_coeffs(sys.params.shifted(), k_max + 1)
    c = np.zeros(k_max + 1)
    c_star = np.zeros(k_max + 1)
    d = np.zeros(k_max + 1)
    d_star = np.zeros(k_max + 1)
    for k in range(k_max + 1):
        ak = low.a[k]
        Akm1 = up.a[k - 1] if k >= 1 else 0.0
        bk = low.b[k]
        Bkm1 = up.b[k - 1] if k >= 1 else 0.0
        c[k] = 0.5 * (ak + Akm1)
        c_star[k] = 0.5 * (ak - Akm1)
        d[k] = 0.5 * (bk + Bkm1)
        d_star[k] = 0.5 * (bk - Bkm1)
    return BlockBandCoeffs(c=c, c_star=c_star, d=d, d_star=d_star)


def psi_table(sys: DunklSystem, k_max: int, t) -> np.ndarray:
    """psi_k(t) for k in the 0, 1, -1, ... ordering; shape (2 k_max + 1, len(t))."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    c, s = np.cos(t), np.sin(t)
    low = jacobi_table(sys.params, k_max, c)
    up = jacobi_table(sys.params.shifted(), max(k_max - 1, 0), c)
    out = np.empty((2 * k_max + 1, t.size), dtype=complex)
    out[0] = low[0] / SQRT2
    for k in range(1, k_max + 1):
        val = 0.5 * (low[k] + 1j * up[k - 1] * s)
        out[zposition(k)] = val
        out[zposition(-k)] = np.conj(val)
    return out


def eval_psi(sys: DunklSystem, k: int, t):
    """Single Dunkl-Jacobi function value; t may be scalar or array."""
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    tab = psi_table(sys, abs(k), ts)
    val = tab[zposition(k)]
    return complex(val[0]) if np.isscalar(t) else val


def recurrence_row(sys: DunklSystem, k: int) -> dict:
    """Expansion of cos(t) psi_k over the family, as {index: coefficient}.

    For |k| >= 2 these are exactly the generic band entries; the rows meeting
    psi_0 replace the (c_1, c_1*) pair by the single entry a_1 / sqrt(2)
    required by the orthonormal scaling.
    """
    ak = abs(k)
    bc = block_coeffs(sys, ak + 1)
    a1 = recurrence_coeffs(sys.params, 1).a[1]
    if ak == 0:
        b0 = recurrence_coeffs(sys.params, 0).b[0]
        return {0: b0, 1: a1 / SQRT2, -1: a1 / SQRT2}
    sgn = 1 if k > 0 else -1
    if ak == 1:
        row = {
            0: a1 / SQRT2,
            sgn * 1: bc.d[1],
            -sgn * 1: bc.d_star[1],
            sgn * 2: bc.c[2],
            -sgn * 2: bc.c_star[2],
        }
        return row
    return {
        sgn * (ak - 1): bc.c[ak],
        -sgn * (ak - 1): bc.c_star[ak],
        sgn * ak: bc.d[ak],
        -sgn * ak: bc.d_star[ak],
        sgn * (ak + 1): bc.c[ak + 1],
        -sgn * (ak + 1): bc.c_star[ak + 1],
    }


def six_term_residual(sys: DunklSystem, k: int, t) -> float:
    """Max pointwise defect of the six-term expansion of cos(t) psi_k."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    row = recurrence_row(sys, k)
    k_need = max(abs(j) for j in row) if row else 0
    tab = psi_table(sys, max(k_need, abs(k)), t)
    rhs = np.zeros(t.size, dtype=complex)
    for j, coeff in row.items():
        rhs += coeff * tab[zposition(j)]
    lhs = np.cos(t) * tab[zposition(k)]
    return float(np.max(np.abs(lhs - rhs)))


def build_mcos_matrix(sys: DunklSystem, k_max: int) -> np.ndarray:
    """Dense matrix of multiplication by cos(t) in the 0, 1, -1, ... ordering,
    assembled from the band coefficients (no quadrature)."""
    size = 2 * k_max + 1
    out = np.zeros((size, size))
    for k in range(0, k_max + 1):
        for sgn in ((1,) if k == 0 else (1, -1)):
            row = recurrence_row(sys, sgn * k)
            i = zposition(sgn * k)
            for j, coeff in row.items():
                if abs(j) <= k_max:
                    out[i, zposition(j)] = coeff
    return out


def _fold_weights(sys: DunklSystem, order: int):
    """Nodes x = cos(tau) and weights such that
    int_{-pi}^{pi} g(tau) A(tau) dtau = sum_j w_j (g(tau_j) + g(-tau_j))."""
    rule = build_quadrature(sys.params.alpha, sys.params.beta, order)
    return rule.nodes, rule.weights, np.arccos(rule.nodes)


def dunkl_multiplication_matrix(
    sys: DunklSystem, s_poly: Polynomial, k_max: int, order: int = None
) -> np.ndarray:
    """Matrix of multiplication by s(cos tau) via the two-family reduction.

    Entries are 2 nu_n nu_m (G0(|n|, |m|) + sign(n) sign(m) G1(|n|-1, |m|-1))
    with G0, G1 plain Jacobi Gram matrices at (alpha, beta), (alpha+1, beta+1).
    """
    if order is None:
        order = k_max + s_poly.degree() + 32
    g0 = _jacobi_gram(sys.params, k_max, s_poly, order)
    g1 = _jacobi_gram(sys.params.shifted(), max(k_max - 1, 0), s_poly, order)
    return _assemble_two_sided(sys, k_max, g0, g1)


def _jacobi_gram(params: JacobiParams, n_max: int, mult, order: int) -> np.ndarray:
    rule = build_quadrature(params.alpha, params.beta, order)
    tab = jacobi_table(params, n_max, rule.nodes)
    mv = mult(rule.nodes) if callable(mult) else np.asarray(mult)
    return (tab * (rule.weights * mv)) @ tab.T


def _assemble_two_sided(sys: DunklSystem, k_max: int, g0: np.ndarray, g1: np.ndarray) -> np.ndarray:
    size = 2 * k_max + 1
    idx = zorder_indices(k_max)
    nu = np.where(idx == 0, 1.0 / SQRT2, 0.5)
    sgn = np.sign(idx)
    absi = np.abs(idx)
    even = g0[absi[:, None], absi[None, :]]
    odd = np.zeros((size, size))
    nz = absi >= 1
    rows = np.where(nz)[0]
    odd[np.ix_(rows, rows)] = g1[(absi[rows] - 1)[:, None], (absi[rows] - 1)[None, :]]
    out = 2.0 * np.outer(nu, nu) * (even + np.outer(sgn, sgn) * odd)
    return out


def dunkl_kernel(
    sys: DunklSystem, t: float, k_max: int, symbol: SymbolSpec = None,
    method: str = "decomposition", order: int = None,
) -> KernelTable:
    """Heat kernel table over indices |k| <= k_max.

    ``decomposition`` assembles the two classical Jacobi kernels at
    (alpha, beta) and (alpha+1, beta+1); ``direct`` integrates the defining
    [-pi, pi] integral after folding onto x = cos(tau).  The default symbol
    is cos, giving the damping exp(-(1 - cos tau) t).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if symbol is None:
        symbol = SymbolSpec.from_coeffs([0.0, 1.0])
    if order is None:
        order = 2 * k_max + 64
    spoly = symbol.poly
    if method == "decomposition":
        def damp(x):
            return np.exp(-(symbol.s_max - spoly(x)) * t)

        g0 = _jacobi_gram(sys.params, k_max, damp, order)
        g1 = _jacobi_gram(sys.params.shifted(), max(k_max - 1, 0), damp, order)
        entries = _assemble_two_sided(sys, k_max, g0, g1)
    elif method == "direct":
        x, w, tau = _fold_weights(sys, order)
        tab_p = psi_table(sys, k_max, tau)
        tab_m = psi_table(sys, k_max, -tau)
        damp = np.exp(-(symbol.s_max - spoly(x)) * t) * w
        cmplx = (tab_p * damp) @ np.conj(tab_p).T + (tab_m * damp) @ np.conj(tab_m).T
        imag = float(np.max(np.abs(cmplx.imag)))
        if imag > 1e-10:
            raise NumericalConsistencyError(
                f"direct Dunkl kernel has imaginary part {imag:.3e}"
            )
        entries = cmplx.real
    else:
        raise ValueError(f"unknown method {method!r}")
    entries = symmetrize_kernel(entries)
    return KernelTable(t=float(t), indices=zorder_indices(k_max), entries=entries)


def _log_weight_ratio(sys: DunklSystem, t):
    """A'(t)/A(t) for the weight A; singular at t = 0 and t = +-pi."""
    a, b = sys.params.alpha, sys.params.beta
    c, s = np.cos(t), np.sin(t)
    return a * s / (1.0 - c) - b * s / (1.0 + c) + c / s


def _log_weight_ratio_deriv(sys: DunklSystem, t):
    a, b = sys.params.alpha, sys.params.beta
    c, s = np.cos(t), np.sin(t)
    return -a / (1.0 - c) - b / (1.0 + c) - 1.0 / s**2


def _psi_derivatives(sys: DunklSystem, k: int, t):
    """(psi_k, psi_k', psi_k'', odd part) with analytic differentiation."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ak = abs(k)
    c, s = np.cos(t), np.sin(t)
    rho = sys.rho
    if ak == 0:
        p0 = jacobi_table(sys.params, 0, c)[0]
        zero = np.zeros_like(t, dtype=complex)
        return p0 / SQRT2 + 0j, zero, zero, zero

    t0 = jacobi_table(sys.params, ak, c)
    t1 = jacobi_table(sys.params.shifted(), ak, c)
    t2 = jacobi_table(sys.params.shifted(2.0, 2.0), ak, c)
    t3 = jacobi_table(sys.params.shifted(3.0, 3.0), ak, c)

    lam1 = math.sqrt(ak * (ak + rho))
    pv = t0[ak]
    pd = lam1 * t1[ak - 1]
    pdd = lam1 * (math.sqrt((ak - 1) * (ak + rho + 1)) * t2[ak - 2] if ak >= 2 else 0.0)

    sv = t1[ak - 1]
    sd = math.sqrt((ak - 1) * (ak + rho + 1)) * t2[ak - 2] if ak >= 2 else np.zeros_like(c)
    sdd = (
        math.sqrt((ak - 1) * (ak + rho + 1)) * math.sqrt((ak - 2) * (ak + rho + 2)) * t3[ak - 3]
        if ak >= 3
        else np.zeros_like(c)
    )

    sgn = 1.0 if k > 0 else -1.0
    val = 0.5 * (pv + 1j * sgn * sv * s)
    d1 = 0.5 * (-s * pd + 1j * sgn * (sv * c - s * s * sd))
    d2 = 0.5 * (-c * pd + s * s * pdd + 1j * sgn * (-s * sv - 3.0 * s * c * sd + s**3 * sdd))
    odd = 0.5j * sgn * sv * s
    return val, d1, d2, odd


def lambda_eigen_residual(sys: DunklSystem, k: int, t) -> float:
    """Defect of the first-order eigen-relation
    Lambda[psi_k] = i sign(k) lambda_k psi_k at interior points t != 0."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(np.isclose(np.abs(t), 0.0)) or np.any(np.isclose(np.abs(t), np.pi)):
        raise ValueError("evaluation point is singular for the weight log-derivative")
    val, d1, _, odd = _psi_derivatives(sys, k, t)
    lam = float(sys.lambda_k(k))
    res = d1 + _log_weight_ratio(sys, t) * odd - 1j * np.sign(k) * lam * val
    return float(np.max(np.abs(res)))


def second_order_residual(sys: DunklSystem, k: int, t) -> float:
    """Defect of L[psi_k] = Lambda^2[psi_k] - (A'/A)' (psi_k)_odd, with
    L f = f'' + (A'/A) f' and Lambda^2 psi_k = -lambda_k^2 psi_k."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    val, d1, d2, odd = _psi_derivatives(sys, k, t)
    lam = float(sys.lambda_k(k))
    lhs = d2 + _log_weight_ratio(sys, t) * d1
    rhs = -(lam**2) * val - _log_weight_ratio_deriv(sys, t) * odd
    return float(np.max(np.abs(lhs - rhs)))
