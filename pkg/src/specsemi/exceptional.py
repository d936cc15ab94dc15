"""Exceptional Jacobi systems built from one first-order Darboux step.

A system is determined by the base weight exponents (alpha, beta) and a
polynomial pair (b, bw) with w = bw / b.  The transformed functions

    P1_n = b p_n' - bw p_n

are orthogonal under W = (1 - x^2) w^{alpha,beta} / b^2 and, normalized by
sigma_n = sqrt(n (n + rho) + lambda_tilde), form the orthonormal family used
by the diffusion kernels.  Consistency of (b, bw) is enforced through the
Riccati identity p (w' + w^2) + q w = lambda_tilde, checked exactly on
polynomial coefficients: the eigen-equation structure fails silently for an
inconsistent pair, so this is a constructor-level error, not a warning.

The flow symbol is Q with Q' = b and Q(0) = 0; multiplication by Q is banded
of bandwidth deg Q in this family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .core import KernelTable, symmetrize_kernel
from .jacobi import JacobiParams, build_quadrature, jacobi_derivative_table, jacobi_table, weight_values

__all__ = [
    "ExceptionalSystem",
    "ExceptionalWeight",
    "PartnerCoeffs",
    "make_system",
    "seed_pair",
    "worked_example_system",
    "eval_exceptional",
    "exceptional_table",
    "q_recurrence_coeffs",
    "q_recurrence_matrix",
    "exceptional_kernel",
    "partner_operator_coeffs",
]

_ONE_MINUS_X = Polynomial([1.0, -1.0])


def _as_poly(coeffs) -> Polynomial:
    if isinstance(coeffs, Polynomial):
        return coeffs
    return Polynomial(np.asarray(coeffs, dtype=float))


@dataclass(frozen=True, eq=False)
class ExceptionalWeight:
    """Orthogonality weight (1-x)^(alpha-1) (1+x)^(beta+1) / b_tilde(x)^2."""

    exponent_a: float
    exponent_b: float
    b_tilde: Polynomial

    def smooth_values(self, x) -> np.ndarray:
        """The non-Jacobi factor 1 / b_tilde^2; analytic on [-1, 1]."""
        return 1.0 / self.b_tilde(np.asarray(x, dtype=float)) ** 2

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return weight_values(self.exponent_a, self.exponent_b, x) * self.smooth_values(x)


@dataclass(frozen=True, eq=False)
class ExceptionalSystem:
    base: JacobiParams
    b: Polynomial
    bw: Polynomial
    b_tilde: Polynomial
    q_poly: Polynomial
    lambda_tilde: float
    weight: ExceptionalWeight

    @property
    def rho(self) -> float:
        return self.base.rho

    @property
    def q_degree(self) -> int:
        return int(self.q_poly.degree())

    @property
    def q_max(self) -> float:
        # Q is increasing on [-1, 1] because Q' = b > 0 there.
        return float(self.q_poly(1.0))

    def sigma(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return np.sqrt(k * (k + self.rho) + self.lambda_tilde)

    def p_poly(self) -> Polynomial:
        return Polynomial([1.0, 0.0, -1.0])

    def q_classical(self) -> Polynomial:
        a, b = self.base.alpha, self.base.beta
        return Polynomial([b - a, -(a + b + 2.0)])


def _riccati_numerator(base: JacobiParams, b: Polynomial, bw: Polynomial) -> Polynomial:
    p = Polynomial([1.0, 0.0, -1.0])
    q = Polynomial([base.beta - base.alpha, -(base.alpha + base.beta + 2.0)])
    return p * (bw.deriv() * b - bw * b.deriv()) + p * bw**2 + q * bw * b


def make_system(base: JacobiParams, b, bw, riccati_tol: float = 1e-9) -> ExceptionalSystem:
    """Assemble an exceptional system from the polynomial pair (b, bw).

    Raises ValueError when b has a zero inside (-1, 1), when b does not carry
    a simple zero at x = 1, or when the pair fails the Riccati consistency
    identity (a non-constant quotient means the pair does not factor the base
    operator and the induced family would not be orthogonal).
    """
    b = _as_poly(b)
    bw = _as_poly(bw)
    if base.alpha <= 0.0:
        raise ValueError("endpoint exponent alpha must be positive for an integrable transform weight")

    scale = float(np.max(np.abs(b.coef)))
    if abs(b(1.0)) > 1e-10 * scale:
        raise ValueError("b must vanish at x = 1")
    b_tilde, rem = divmod(b, _ONE_MINUS_X)
    if rem.coef.size and abs(rem.coef[0]) > 1e-10 * scale:
        raise ValueError("deflation of the zero at x = 1 left a remainder")
    if abs(b_tilde(1.0)) < 1e-10 * scale:
        raise ValueError("b must have a simple zero at x = 1 (b'(1) != 0)")

    # positivity on the open interval: no interior roots and positive sample
    # (the margin at +1 leaves room for the root that was deflated above)
    for r in b.roots():
        if abs(r.imag) < 1e-9 and -1.0 - 1e-9 < r.real < 1.0 - 1e-6:
            raise ValueError(f"b has a zero at x = {r.real:.6f} inside (-1, 1)")
    if b(0.0) <= 0.0:
        raise ValueError("b must be positive on (-1, 1)")

    num = _riccati_numerator(base, b, bw)
    den = b * b
    quo, rem = divmod(num, den)
    lam_tilde = float(quo.coef[0]) if quo.coef.size else 0.0
    tail = float(np.max(np.abs(quo.coef[1:]))) if quo.coef.size > 1 else 0.0
    rem_max = float(np.max(np.abs(rem.coef))) if rem.coef.size else 0.0
    if max(tail, rem_max) > riccati_tol * max(1.0, scale**2):
        raise ValueError(
            "inconsistent (b, bw) pair: p(w' + w^2) + q w is not constant "
            f"(residual {max(tail, rem_max):.3e})"
        )
    if lam_tilde <= 0.0:
        raise ValueError(f"nonpositive normalization shift lambda_tilde = {lam_tilde}")

    q_poly = b.integ()  # integration constant 0 fixes Q(0) = 0
    weight = ExceptionalWeight(
        exponent_a=base.alpha - 1.0, exponent_b=base.beta + 1.0, b_tilde=b_tilde
    )
    return ExceptionalSystem(
        base=base, b=b, bw=bw, b_tilde=b_tilde, q_poly=q_poly,
        lambda_tilde=lam_tilde, weight=weight,
    )


def _binom(z: float, j: int) -> float:
    """Generalized binomial coefficient, valid for any real upper argument."""
    out = 1.0
    for i in range(j):
        out *= (z - i) / (j - i)
    return out


def _standard_jacobi(a: float, b: float, m: int) -> Polynomial:
    """Unnormalized degree-m Jacobi polynomial for arbitrary real (a, b).

    Needed with a <= -1 when constructing Darboux seeds, so this goes through
    the explicit binomial expansion rather than the recurrence."""
    half_minus = Polynomial([0.5, -0.5])  # (1 - x)/2
    half_plus = Polynomial([0.5, 0.5])
    out = Polynomial([0.0])
    for k in range(m + 1):
        out += _binom(m + a, m - k) * _binom(m + b, k) * (-half_minus) ** k * half_plus ** (m - k)
    return out


def seed_pair(base: JacobiParams, m: int = 1):
    """Polynomial pair (b, bw) from the quasi-rational eigenfunction seed
    (1-x)^(-alpha) J_m^(-alpha, beta), where J_m is the standard degree-m
    Jacobi polynomial.

    With phi the seed and w = phi'/phi, the pair is b = +-(1-x) J_m and
    bw = +-(alpha J_m + (1-x) J_m'), signs fixed so b(0) > 0.  The pair
    satisfies the Riccati identity by construction; make_system still rejects
    it when J_m has zeros in [-1, 1) (then b is not admissible).
    """
    jm = _standard_jacobi(-base.alpha, base.beta, m)
    b = _ONE_MINUS_X * jm
    bw = base.alpha * jm + _ONE_MINUS_X * jm.deriv()
    if b(0.0) < 0:
        b, bw = -b, -bw
    return b, bw


def worked_example_system() -> ExceptionalSystem:
    """The running example: base (3/2, 1/2), b = x^2/2 - 3x/2 + 1, bw = 1 - x/4.

    This is seed_pair(JacobiParams(1.5, 0.5), m=1); the constant term pair
    printed alongside this b in parts of the literature, bw = -(x+2)/4, fails
    the Riccati identity and is rejected by make_system.
    """
    return make_system(
        JacobiParams(1.5, 0.5), b=[1.0, -1.5, 0.5], bw=[1.0, -0.25]
    )


def exceptional_table(sys: ExceptionalSystem, n_max: int, x) -> np.ndarray:
    """Orthonormal values P~_n(x) for n = 0..n_max; shape (n_max+1, len(x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p0 = jacobi_table(sys.base, n_max, x)
    d0 = jacobi_derivative_table(sys.base, n_max, x)
    raw = sys.b(x)[None, :] * d0 - sys.bw(x)[None, :] * p0
    return raw / sys.sigma(np.arange(n_max + 1))[:, None]


def eval_exceptional(sys: ExceptionalSystem, n: int, x):
    if n < 0:
        raise ValueError("index must be nonnegative")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    val = exceptional_table(sys, n, xs)[n]
    return float(val[0]) if np.isscalar(x) else val


def _transform_gram(sys: ExceptionalSystem, n_max: int, multiplier, order: int) -> np.ndarray:
    """Gram matrix of the orthonormal family against ``multiplier`` under W.

    Uses the Gauss rule for exponents (alpha-1, beta+1); the remaining factor
    1/b_tilde^2 is analytic on [-1, 1], so convergence is geometric.
    """
    rule = build_quadrature(sys.weight.exponent_a, sys.weight.exponent_b, order)
    tab = exceptional_table(sys, n_max, rule.nodes)
    w = rule.weights * sys.weight.smooth_values(rule.nodes) * multiplier(rule.nodes)
    return (tab * w) @ tab.T


def q_recurrence_matrix(sys: ExceptionalSystem, n_max: int, order: int = None) -> np.ndarray:
    """Square matrix block u_{n,m} of multiplication by Q for n, m = 0..n_max."""
    if order is None:
        order = n_max + 96
    return _transform_gram(sys, n_max, sys.q_poly, order)


def q_recurrence_coeffs(sys: ExceptionalSystem, n: int, order: int = None) -> np.ndarray:
    """Band coefficients u_{n,-L..L} of Q P~_n = sum_k u_{n,k} P~_{n+k}.

    Raises on a reconstruction failure at test points, which would indicate
    an inconsistent system or insufficient quadrature.
    """
    L = sys.q_degree
    if order is None:
        order = n + L + 96
    gram = _transform_gram(sys, n + L, sys.q_poly, order)
    row = np.zeros(2 * L + 1)
    for k in range(-L, L + 1):
        if 0 <= n + k <= n + L:
            row[L + k] = gram[n, n + k]

    xs = np.linspace(-0.85, 0.85, 7)
    tab = exceptional_table(sys, n + L, xs)
    recon = np.zeros_like(xs)
    for k in range(-L, L + 1):
        if 0 <= n + k <= n + L:
            recon += row[L + k] * tab[n + k]
    resid = np.max(np.abs(sys.q_poly(xs) * tab[n] - recon))
    if resid > 1e-8 * max(1.0, np.max(np.abs(tab[n]))):
        raise ValueError(f"band reconstruction residual {resid:.3e}; system inconsistent")
    return row


def exceptional_kernel(
    sys: ExceptionalSystem, t: float, n_max: int, order: int = None,
    method: str = "decomposition",
) -> KernelTable:
    """Diffusion kernel table for the symbol Q at time t, indices 0..n_max.

    The default route splits the kernel into two classical-Jacobi pieces with
    smooth integrands (weights (alpha+1, beta+1) and (alpha, beta)); the
    singular-weight quadrature of the defining integral is kept as the
    ``direct`` cross-validation route.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if order is None:
        order = 2 * n_max + 64
    if method == "decomposition":
        entries = _kernel_decomposition(sys, t, n_max, order)
    elif method == "direct":
        entries = _kernel_direct(sys, t, n_max, order)
    else:
        raise ValueError(f"unknown method {method!r}")
    entries = symmetrize_kernel(entries)
    return KernelTable(t=float(t), indices=np.arange(n_max + 1), entries=entries)


def _kernel_decomposition(sys: ExceptionalSystem, t: float, n_max: int, order: int) -> np.ndarray:
    qp, qmax = sys.q_poly, sys.q_max
    rho = sys.rho
    n = np.arange(n_max + 1, dtype=float)
    sig = sys.sigma(n)

    # derivative piece: integrand p_{n-1}^{+} p_{m-1}^{+} e^{-(Q(1)-Q)t} w^{a+1,b+1}
    up = build_quadrature(sys.base.alpha + 1.0, sys.base.beta + 1.0, order)
    damp_up = np.exp(-(qmax - qp(up.nodes)) * t) * up.weights
    tab_up = jacobi_table(sys.base.shifted(), max(n_max - 1, 0), up.nodes)
    gram_up = (tab_up * damp_up) @ tab_up.T
    g = np.sqrt(n * (n + rho)) / sig
    k1 = np.zeros((n_max + 1, n_max + 1))
    if n_max >= 1:
        k1[1:, 1:] = np.outer(g[1:], g[1:]) * gram_up[:n_max, :n_max]

    # zero-order piece: multiplier t * (p * bw) + lambda_tilde under w^{a,b}
    bpw = Polynomial([1.0, 0.0, -1.0]) * sys.bw
    base_rule = build_quadrature(sys.base.alpha, sys.base.beta, order)
    mult = t * bpw(base_rule.nodes) + sys.lambda_tilde
    damp0 = np.exp(-(qmax - qp(base_rule.nodes)) * t) * base_rule.weights * mult
    tab0 = jacobi_table(sys.base, n_max, base_rule.nodes)
    k2 = (tab0 * damp0) @ tab0.T / np.outer(sig, sig)
    return k1 + k2


def _kernel_direct(sys: ExceptionalSystem, t: float, n_max: int, order: int) -> np.ndarray:
    rule = build_quadrature(sys.weight.exponent_a, sys.weight.exponent_b, order)
    tab = exceptional_table(sys, n_max, rule.nodes)
    damp = (
        np.exp(-(sys.q_max - sys.q_poly(rule.nodes)) * t)
        * rule.weights
        * sys.weight.smooth_values(rule.nodes)
    )
    return (tab * damp) @ tab.T


@dataclass(frozen=True, eq=False)
class PartnerCoeffs:
    """Rational coefficients of the transformed operator p y'' + q^ y' + r^ y.

    q_hat = q_hat_num / b and r_hat = r_hat_num / b^2; the family P~_n
    satisfies the eigen-equation with eigenvalue -n (n + rho).
    """

    q_hat_num: Polynomial
    r_hat_num: Polynomial
    b: Polynomial

    def q_hat(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.q_hat_num(x) / self.b(x)

    def r_hat(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.r_hat_num(x) / self.b(x) ** 2


def partner_operator_coeffs(sys: ExceptionalSystem) -> PartnerCoeffs:
    p = sys.p_poly()
    q = sys.q_classical()
    b, bw = sys.b, sys.bw
    q_hat_num = q * b + p.deriv() * b - 2.0 * b.deriv() * p
    r_hat_num = (
        q.deriv() * b**2
        + bw * p.deriv() * b
        - b.deriv() * (q + p.deriv()) * b
        + (2.0 * b.deriv() ** 2 - b.deriv(2) * b) * p
        + 2.0 * (bw.deriv() * b - bw * b.deriv()) * p
    )
    return PartnerCoeffs(q_hat_num=q_hat_num, r_hat_num=r_hat_num, b=b)
