"""Discrete diffusion semigroups W_t = exp(t (M_s - s_max I)) over a chosen
orthonormal basis: kernel tables, semigroup application, maximal operator,
banded generators and dual-route initial-value evolution.

Sign convention: the kernel damping is exp(-(s_max - s(x)) t), so the
generator acting on coefficient sequences is M_s - s_max I (nonpositive
spectrum).  Both evolution routes — kernel quadrature and band-matrix
exponential — realize this convention and are cross-validated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial, chebyshev
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from . import dunkl as _dunkl
from . import exceptional as _exceptional
from .core import (
    BandedGenerator,
    KernelTable,
    NumericalConsistencyError,
    SequenceData,
    SymbolSpec,
    detect_bandwidth,
    geometric_t_grid,
    rows_from_dense,
    symmetrize_kernel,
    zorder_indices,
)
from .jacobi import JacobiParams, QuadratureRule, build_quadrature, jacobi_table

__all__ = [
    "BasisDescriptor",
    "build_kernel",
    "apply_semigroup",
    "compose_check",
    "maximal_operator",
    "build_generator",
    "evolve_ivp",
    "evolve_methods",
    "limit_stencil",
    "symbol_row_limits",
    "default_symbol",
]

KINDS = ("classical_jacobi", "exceptional_jacobi", "dunkl_jacobi", "fourier_oracle")


@dataclass(frozen=True, eq=False)
class BasisDescriptor:
    """Selects one of the supported orthonormal systems.

    ``index_set`` is 'integers' exactly for the two-sided bases (Dunkl and
    the Fourier oracle); ``system`` carries the exceptional-system object
    when kind = 'exceptional_jacobi'.
    """

    kind: str
    params: JacobiParams = None
    index_set: str = "naturals"
    system: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        two_sided = self.kind in ("dunkl_jacobi", "fourier_oracle")
        if two_sided != (self.index_set == "integers"):
            raise ValueError("index_set must be 'integers' exactly for the two-sided bases")
        if self.kind == "exceptional_jacobi" and self.system is None:
            raise ValueError("exceptional basis requires a system object")

    @classmethod
    def classical(cls, alpha: float, beta: float) -> "BasisDescriptor":
        return cls(kind="classical_jacobi", params=JacobiParams(alpha, beta))

    @classmethod
    def exceptional(cls, system) -> "BasisDescriptor":
        return cls(kind="exceptional_jacobi", params=system.base, system=system)

    @classmethod
    def dunkl(cls, alpha: float, beta: float) -> "BasisDescriptor":
        return cls(kind="dunkl_jacobi", params=JacobiParams(alpha, beta), index_set="integers")

    @classmethod
    def fourier(cls) -> "BasisDescriptor":
        return cls(kind="fourier_oracle", index_set="integers")

    def indices(self, n: int) -> np.ndarray:
        if self.index_set == "integers":
            return zorder_indices(n)
        return np.arange(n + 1)


def default_symbol(basis: BasisDescriptor) -> SymbolSpec:
    """The canonical flow symbol: s = x for the polynomial and periodic
    bases (meaning cos(theta) for the latter), s = Q for an exceptional system."""
    if basis.kind == "exceptional_jacobi":
        return SymbolSpec.from_coeffs(basis.system.q_poly.coef)
    return SymbolSpec.from_coeffs([0.0, 1.0])


def _check_exceptional_symbol(basis: BasisDescriptor, symbol: SymbolSpec):
    qc = basis.system.q_poly.coef
    sc = np.asarray(symbol.coeffs)
    n = max(qc.size, sc.size)
    qc = np.pad(qc, (0, n - qc.size))
    sc = np.pad(sc, (0, n - sc.size))
    if not np.allclose(qc, sc, atol=1e-12):
        raise ValueError("exceptional basis supports only its own flow symbol Q")


def _fourier_ring_values(symbol: SymbolSpec, t: float, k_max: int, n_grid: int = None) -> np.ndarray:
    """kappa_k = (1/2pi) int exp(-(s_max - s(cos th)) t) cos(k th) dth, k = 0..k_max.

    The integrand is analytic and 2pi-periodic, so the trapezoid rule
    converges geometrically; n_grid is chosen so aliasing is below 1e-15.
    """
    if n_grid is None:
        n_grid = max(4 * k_max + 128, 256)
    th = 2.0 * np.pi * np.arange(n_grid) / n_grid
    damp = np.exp(-(symbol.s_max - symbol.poly(np.cos(th))) * t)
    ks = np.arange(k_max + 1)
    return (np.cos(np.outer(ks, th)) @ damp) / n_grid


def _fourier_kernel(symbol: SymbolSpec, t: float, k_max: int) -> np.ndarray:
    kappa = _fourier_ring_values(symbol, t, 2 * k_max)
    idx = zorder_indices(k_max)
    return kappa[np.abs(idx[:, None] - idx[None, :])]


def build_kernel(
    basis: BasisDescriptor, symbol: SymbolSpec, t: float, n: int,
    quad: QuadratureRule = None,
) -> KernelTable:
    """Kernel table K_t over the index window of size parameter n
    (indices 0..n, or |k| <= n for two-sided bases)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    order = quad.order if quad is not None else 2 * n + 64

    if basis.kind == "classical_jacobi":
        rule = quad or build_quadrature(basis.params.alpha, basis.params.beta, order)
        tab = jacobi_table(basis.params, n, rule.nodes)
        damp = np.exp(-(symbol.s_max - symbol.values(rule.nodes)) * t) * rule.weights
        entries = symmetrize_kernel((tab * damp) @ tab.T)
        table = KernelTable(t=float(t), indices=np.arange(n + 1), entries=entries)
    elif basis.kind == "exceptional_jacobi":
        _check_exceptional_symbol(basis, symbol)
        table = _exceptional.exceptional_kernel(basis.system, t, n, order=order)
    elif basis.kind == "dunkl_jacobi":
        table = _dunkl.dunkl_kernel(
            _dunkl.DunklSystem(basis.params), t, n, symbol=symbol, order=order
        )
    else:
        entries = symmetrize_kernel(_fourier_kernel(symbol, t, n))
        table = KernelTable(t=float(t), indices=zorder_indices(n), entries=entries)
    table.basis = basis
    return table


def apply_semigroup(table: KernelTable, f: SequenceData) -> SequenceData:
    """W_t f as a sequence over the table's index window."""
    dense = f.to_dense(table.indices)
    return SequenceData(support=table.indices.copy(), values=table.entries @ dense)


def _inner_mask(indices: np.ndarray) -> np.ndarray:
    half = np.max(np.abs(indices)) // 2
    return np.abs(indices) <= half


def compose_check(k1: KernelTable, k2: KernelTable, k12: KernelTable) -> float:
    """Max defect of sum_j K_{t1}(n, j) K_{t2}(m, j) = K_{t1+t2}(n, m) over the
    inner half of k12's index window.  k1 and k2 may be larger tables; the
    inner sum runs over their (common) index set."""
    if k1.size != k2.size or np.any(k1.indices != k2.indices):
        raise ValueError("k1 and k2 must share the same index window")
    prod = k1.entries @ k2.entries.T
    mask = _inner_mask(k12.indices)
    sel = np.where(mask)[0]
    rows1 = np.array([k1.position(n) for n in k12.indices[sel]])
    sub = prod[np.ix_(rows1, rows1)]
    ref = k12.entries[np.ix_(sel, sel)]
    return float(np.max(np.abs(sub - ref)))


class _Applier:
    """Per-basis factorized action of W_t, reused across a whole t-grid."""

    def __init__(self, basis: BasisDescriptor, symbol: SymbolSpec, n: int, order: int = None):
        self.basis = basis
        self.symbol = symbol
        self.n = n
        self.indices = basis.indices(n)
        order = order or 2 * n + 64
        kind = basis.kind
        if kind == "classical_jacobi":
            rule = build_quadrature(basis.params.alpha, basis.params.beta, order)
            self._parts = (jacobi_table(basis.params, n, rule.nodes), rule.weights,
                           symbol.s_max - symbol.values(rule.nodes))
        elif kind == "exceptional_jacobi":
            sysx = basis.system
            qp = sysx.q_poly
            ns = np.arange(n + 1, dtype=float)
            sig = sysx.sigma(ns)
            g = np.sqrt(ns * (ns + sysx.rho)) / sig
            up = build_quadrature(sysx.base.alpha + 1.0, sysx.base.beta + 1.0, order)
            tab_up = jacobi_table(sysx.base.shifted(), max(n - 1, 0), up.nodes)
            base = build_quadrature(sysx.base.alpha, sysx.base.beta, order)
            tab0 = jacobi_table(sysx.base, n, base.nodes)
            bpw = (Polynomial([1.0, 0.0, -1.0]) * sysx.bw)(base.nodes)
            self._xparts = dict(
                g=g, sig=sig,
                up_tab=tab_up, up_w=up.weights, up_damp=sysx.q_max - qp(up.nodes),
                tab0=tab0, w0=base.weights, damp0=sysx.q_max - qp(base.nodes),
                bpw=bpw, lam=sysx.lambda_tilde,
            )
        elif kind == "dunkl_jacobi":
            sysd = _dunkl.DunklSystem(basis.params)
            r0 = build_quadrature(basis.params.alpha, basis.params.beta, order)
            r1 = build_quadrature(basis.params.alpha + 1.0, basis.params.beta + 1.0, order)
            self._dparts = dict(
                t0=jacobi_table(basis.params, n, r0.nodes), w0=r0.weights,
                e0=symbol.s_max - symbol.values(r0.nodes),
                t1=jacobi_table(basis.params.shifted(), max(n - 1, 0), r1.nodes),
                w1=r1.weights, e1=symbol.s_max - symbol.values(r1.nodes),
                nu=np.where(self.indices == 0, 1.0 / math.sqrt(2.0), 0.5),
                sgn=np.sign(self.indices), absi=np.abs(self.indices),
            )
        elif kind != "fourier_oracle":
            raise ValueError(f"unknown basis kind {kind!r}")

    def apply(self, t: float, dense: np.ndarray) -> np.ndarray:
        """W_t applied to one sequence (1-D) or a stack of them (columns)."""
        squeeze = dense.ndim == 1
        vec = dense[:, None] if squeeze else dense
        out = self._apply2d(float(t), vec)
        return out[:, 0] if squeeze else out

    def _apply2d(self, t: float, vec: np.ndarray) -> np.ndarray:
        kind = self.basis.kind
        if kind == "classical_jacobi":
            tab, w, gap = self._parts
            return tab @ ((np.exp(-gap * t) * w)[:, None] * (tab.T @ vec))
        if kind == "exceptional_jacobi":
            p = self._xparts
            core = np.zeros_like(vec)
            if self.n >= 1:
                inner = p["up_tab"].T @ (p["g"][:, None] * vec)[1:]
                scaled = (np.exp(-p["up_damp"] * t) * p["up_w"])[:, None] * inner
                core[1:] = p["g"][1:, None] * (p["up_tab"] @ scaled)
            inner0 = p["tab0"].T @ (vec / p["sig"][:, None])
            mult = np.exp(-p["damp0"] * t) * p["w0"] * (t * p["bpw"] + p["lam"])
            core += (p["tab0"] @ (mult[:, None] * inner0)) / p["sig"][:, None]
            return core
        if kind == "dunkl_jacobi":
            p = self._dparts
            nf = p["nu"][:, None] * vec
            g_even = np.zeros((self.n + 1, vec.shape[1]))
            g_odd = np.zeros((max(self.n, 1), vec.shape[1]))
            np.add.at(g_even, p["absi"], nf)
            has = p["absi"] >= 1
            np.add.at(g_odd, p["absi"][has] - 1, (p["sgn"][:, None] * nf)[has])
            r_even = p["t0"] @ ((np.exp(-p["e0"] * t) * p["w0"])[:, None] * (p["t0"].T @ g_even))
            r_odd = p["t1"] @ ((np.exp(-p["e1"] * t) * p["w1"])[:, None] * (p["t1"].T @ g_odd))
            out = 2.0 * p["nu"][:, None] * r_even[p["absi"]]
            out[has] += 2.0 * (p["nu"] * p["sgn"])[has][:, None] * r_odd[p["absi"][has] - 1]
            return out
        kappa = _fourier_ring_values(self.symbol, t, 2 * self.n)
        K = kappa[np.abs(self.indices[:, None] - self.indices[None, :])]
        return K @ vec


def maximal_operator(
    basis: BasisDescriptor, symbol: SymbolSpec, f: SequenceData, t_grid=None,
    n: int = None, refine: bool = True,
) -> SequenceData:
    """Pointwise supremum over t >= 0 of |W_t f|, scanned on a time grid.

    The grid always gains the endpoint t = 0, so the result dominates |f|.
    With ``refine`` the scan maximum is polished by a bounded scalar search
    in log t between the neighbouring grid points, making the result
    insensitive to the grid resolution.
    """
    if t_grid is None:
        t_grid = geometric_t_grid()
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise ValueError("t_grid must be nonempty")
    if np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be sorted")
    if n is None:
        n = int(np.max(np.abs(f.support))) + 64

    app = _Applier(basis, symbol, n)
    dense = f.to_dense(app.indices).astype(float)
    ts = t_grid[t_grid > 0]
    vals = np.empty((ts.size, dense.size))
    for i, t in enumerate(ts):
        vals[i] = np.abs(app.apply(float(t), dense))
    best = vals.max(axis=0)
    arg = vals.argmax(axis=0)
    best = np.maximum(best, np.abs(dense))  # t = 0 endpoint

    if refine and ts.size >= 3:
        logt = np.log(ts)
        for j in range(dense.size):
            i = arg[j]
            lo = logt[max(i - 1, 0)]
            hi = logt[min(i + 1, ts.size - 1)]
            if hi - lo < 1e-12:
                continue
            res = minimize_scalar(
                lambda u, jj=j: -abs(app.apply(math.exp(u), dense)[jj]),
                bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-10},
            )
            best[j] = max(best[j], -float(res.fun))
    return SequenceData(support=app.indices.copy(), values=best)


def build_generator(
    basis: BasisDescriptor, symbol: SymbolSpec, n: int, quad: QuadratureRule = None,
) -> BandedGenerator:
    """Banded matrix of M_s on the index window, with the symbol supremum.

    The bandwidth is deg s for the one-sided polynomial bases and the block
    equivalent for the two-sided orderings.  Gross asymmetry of the computed
    matrix signals insufficient quadrature and raises.
    """
    order = quad.order if quad is not None else n + 8 * (symbol.degree + 1) + 64
    if basis.kind == "classical_jacobi":
        rule = quad or build_quadrature(basis.params.alpha, basis.params.beta, order)
        tab = jacobi_table(basis.params, n, rule.nodes)
        dense = (tab * (rule.weights * symbol.values(rule.nodes))) @ tab.T
        bandwidth = symbol.degree
    elif basis.kind == "exceptional_jacobi":
        _check_exceptional_symbol(basis, symbol)
        dense = _exceptional.q_recurrence_matrix(basis.system, n, order=order)
        bandwidth = basis.system.q_degree
    elif basis.kind == "dunkl_jacobi":
        sysd = _dunkl.DunklSystem(basis.params)
        dense = _dunkl.dunkl_multiplication_matrix(sysd, symbol.poly, n, order=order)
        bandwidth = max(detect_bandwidth(dense), 1)
    else:
        cheb_c = chebyshev.poly2cheb(np.asarray(symbol.coeffs))
        kappa = np.zeros(2 * n + 1)
        kappa[0] = cheb_c[0]
        for k in range(1, min(cheb_c.size, 2 * n + 1)):
            kappa[k] = 0.5 * cheb_c[k]
        idx = zorder_indices(n)
        dense = kappa[np.abs(idx[:, None] - idx[None, :])]
        bandwidth = max(detect_bandwidth(dense), 1)

    asym = float(np.max(np.abs(dense - dense.T)))
    if asym > 1e-9:
        raise NumericalConsistencyError(
            f"multiplication matrix asymmetry {asym:.3e}; quadrature order too low"
        )
    dense = 0.5 * (dense + dense.T)
    return BandedGenerator(
        indices=basis.indices(n), rows=rows_from_dense(dense, bandwidth),
        bandwidth=bandwidth, s_max=symbol.s_max, basis=basis, symbol=symbol,
    )


def evolve_ivp(gen: BandedGenerator, f: SequenceData, t: float, method: str = "kernel") -> SequenceData:
    """Solve u' = (M_s - s_max I) u, u(0) = f, at time t.

    ``kernel`` evaluates W_t f through the kernel table; ``band_expm``
    exponentiates the truncated band matrix (scaling and squaring).  The two
    agree up to truncation effects, which are confined to the outer half of
    the window for f supported in the inner half.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if method == "kernel":
        size_param = int(np.max(np.abs(gen.indices)))
        table = build_kernel(gen.basis, gen.symbol, t, size_param)
        return apply_semigroup(table, f)
    if method == "band_expm":
        dense = f.to_dense(gen.indices).astype(float)
        u = expm(t * gen.generator_matrix()) @ dense
        return SequenceData(support=gen.indices.copy(), values=u)
    raise ValueError(f"unknown method {method!r}")


def evolve_methods(gen: BandedGenerator, f: SequenceData, t: float):
    """Both evolution routes plus their inner-half disagreement."""
    uk = evolve_ivp(gen, f, t, method="kernel")
    ub = evolve_ivp(gen, f, t, method="band_expm")
    mask = _inner_mask(gen.indices)
    gap = float(np.max(np.abs(uk.values[mask] - ub.values[mask])))
    return uk, ub, gap


def limit_stencil(gen: BandedGenerator, cauchy_tol: float = 1e-2) -> np.ndarray:
    """Limit row of the generator M_s - s_max I, from the deepest full row.

    The row at position size-1-L is compared against the row roughly half way
    down (same parity, so the block structure of two-sided orderings lines
    up); a large gap means the rows have not converged and raises.
    """
    L = gen.bandwidth
    i1 = gen.size - 1 - L
    if i1 <= L:
        raise ValueError("window too small for a full interior row")
    i0 = i1 // 2
    if (i1 - i0) % 2 == 1:
        i0 += 1
    defect = float(np.max(np.abs(gen.rows[i1] - gen.rows[i0])))
    scale = max(1.0, float(np.max(np.abs(gen.rows[i1]))))
    if defect > cauchy_tol * scale:
        raise NumericalConsistencyError(
            f"generator rows not Cauchy: defect {defect:.3e} between rows {i0} and {i1}"
        )
    return gen.generator_row(i1)


def symbol_row_limits(symbol: SymbolSpec) -> np.ndarray:
    """Predicted limits U_j of the multiplication-matrix rows, from the
    Chebyshev coefficients of s: U_0 = c_0 and U_j = c_j / 2."""
    cheb_c = chebyshev.poly2cheb(np.asarray(symbol.coeffs))
    out = cheb_c.copy()
    out[1:] *= 0.5
    return out
