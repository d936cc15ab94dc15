"""Weighted sequence norms, discrete Muckenhoupt constants, and empirical
kernel/maximal-operator estimates.

Everything here is falsification-oriented: the library reports empirical
constants and their stability under window doubling or grid refinement, it
does not prove membership or boundedness.  Thresholds used by callers
(growth factor 2 on size doubling, slope margins 0.15 / 0.2) are heuristics
chosen to catch a wrong decay exponent while absorbing logarithmic factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import KernelTable, SequenceData, SymbolSpec, geometric_t_grid
from .semigroup import BasisDescriptor, maximal_operator, _Applier

__all__ = [
    "WeightSeq",
    "power_weight",
    "ap_constant",
    "weighted_norm",
    "weak_norm",
    "KernelEstimateReport",
    "standard_kernel_check",
    "ProbeResult",
    "maximal_inequality_probe",
    "random_f_family",
]


@dataclass(frozen=True, eq=False)
class WeightSeq:
    """Strictly positive weight on a contiguous integer window."""

    indices: np.ndarray
    values: np.ndarray
    tag: str = ""

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=int))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.indices.shape != self.values.shape:
            raise ValueError("indices and values must match")
        if np.any(self.values <= 0):
            raise ValueError("weights must be strictly positive")
        if self.indices.size > 1 and np.any(np.diff(self.indices) != 1):
            raise ValueError("weight window must be contiguous")

    def at(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=int)
        lo = int(self.indices[0])
        pos = n - lo
        if np.any(pos < 0) or np.any(pos >= self.values.size):
            raise ValueError("index outside weight window")
        return self.values[pos]


def power_weight(gamma: float, lo: int, hi: int) -> WeightSeq:
    """(1 + |n|)^gamma on the window lo..hi inclusive."""
    idx = np.arange(lo, hi + 1)
    return WeightSeq(indices=idx, values=(1.0 + np.abs(idx)) ** gamma,
                     tag=f"power:{gamma:g}")


def ap_constant(w: WeightSeq, p: float, window=None) -> float:
    """Discrete Muckenhoupt constant over all subintervals of the window.

    For p > 1 this is sup over m <= n of
        (n - m + 1)^{-p} (sum w) (sum w^{-1/(p-1)})^{p-1},
    for p = 1 it is sup of the interval average of w times max 1/w.  The final
    power combination is formed in the log domain so large windows and
    exponents do not overflow.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    vals = w.values
    if window is not None:
        lo, hi = window
        sel = (w.indices >= lo) & (w.indices <= hi)
        vals = vals[sel]
    size = vals.size
    if size == 0:
        raise ValueError("empty window")

    cs = np.concatenate([[0.0], np.cumsum(vals)])
    best = -np.inf
    if p > 1:
        dual = vals ** (-1.0 / (p - 1.0))
        cd = np.concatenate([[0.0], np.cumsum(dual)])
        for m in range(size):
            lengths = np.arange(1, size - m + 1, dtype=float)
            s1 = cs[m + 1:] - cs[m]
            s2 = cd[m + 1:] - cd[m]
            val = np.log(s1) + (p - 1.0) * np.log(s2) - p * np.log(lengths)
            best = max(best, float(np.max(val)))
        return math.exp(best)
    for m in range(size):
        lengths = np.arange(1, size - m + 1, dtype=float)
        s1 = cs[m + 1:] - cs[m]
        inv_min = 1.0 / np.minimum.accumulate(vals[m:])
        val = np.log(s1) + np.log(inv_min) - np.log(lengths)
        best = max(best, float(np.max(val)))
    return math.exp(best)


def weighted_norm(f: SequenceData, w: WeightSeq, p: float) -> float:
    """(sum |f|^p w)^(1/p) over the support of f."""
    if p < 1:
        raise ValueError("p must be at least 1")
    wv = w.at(f.support)
    return float(np.sum(np.abs(f.values) ** p * wv) ** (1.0 / p))


def weak_norm(f: SequenceData, w: WeightSeq) -> float:
    """sup_{t>0} t * w({|f| > t}), evaluated exactly on the level set of |f|.

    The supremum over each level interval is attained as t approaches the
    next value of |f| from below, so scanning the sorted distinct values of
    |f| is exact.
    """
    av = np.abs(f.values)
    wv = w.at(f.support)
    order = np.argsort(-av)
    av, wv = av[order], wv[order]
    best = 0.0
    acc = 0.0
    i = 0
    while i < av.size:
        j = i
        while j < av.size and av[j] == av[i]:
            acc += wv[j]
            j += 1
        if av[i] > 0:
            best = max(best, av[i] * acc)
        i = j
    return best


@dataclass(eq=False)
class KernelEstimateReport:
    """Empirical size/smoothness constants and decay-slope fits for a family
    of kernel tables sharing one basis."""

    c1: float
    c2: float
    slope_kernel: float
    slope_diff: float
    t_values: list
    n_center: int
    floor: float
    per_t: dict = field(default_factory=dict)


def _decay_slope(table: KernelTable, n_center: int, floor: float):
    """log|K| vs log|n - m| fit over m in [n/2, 2n], skipping |n-m| < 2."""
    positive = table.indices >= 0
    idx = table.indices[positive]
    pos = {int(v): i for i, v in enumerate(table.indices)}
    n = n_center
    ms = [m for m in idx if n // 2 <= m <= 2 * n and abs(m - n) >= 2]
    vals = np.array([abs(table.entries[pos[n], pos[m]]) for m in ms])
    dist = np.array([abs(m - n) for m in ms], dtype=float)
    keep = vals > floor
    if keep.sum() < 4:
        raise ValueError("too few usable entries above the noise floor for a slope fit")
    return float(np.polyfit(np.log(dist[keep]), np.log(vals[keep]), 1)[0]), int(keep.sum())


def _diff_slope(table: KernelTable, m_center: int, floor: float):
    """log|K(n+1,m) - K(n,m)| vs log|n - m| over the local range of n."""
    pos = {int(v): i for i, v in enumerate(table.indices)}
    m = m_center
    lo = int(math.ceil(2 * m / 3))
    hi = int(math.floor(3 * m / 2))
    ns = [n for n in range(lo, hi + 1)
          if abs(n - m) >= 2 and (n + 1) in pos and n in pos]
    vals = np.array([abs(table.entries[pos[n + 1], pos[m]] - table.entries[pos[n], pos[m]]) for n in ns])
    dist = np.array([abs(n - m) for n in ns], dtype=float)
    keep = vals > floor
    if keep.sum() < 4:
        raise ValueError("too few usable first differences above the noise floor")
    return float(np.polyfit(np.log(dist[keep]), np.log(vals[keep]), 1)[0]), int(keep.sum())


def standard_kernel_check(tables, n_center: int = None, floor: float = 1e-13) -> KernelEstimateReport:
    """Empirical local-standard-kernel constants for a family of tables.

    C1 = sup |n-m| |K(n,m)| over all off-diagonal pairs and all tables;
    C2 = sup |n-m|^2 |K(n+1,m) - K(n,m)| over the local range
    2m/3 <= n <= 3m/2, n != m, m +- 1.  Decay slopes at ``n_center`` are kept
    as secondary diagnostics of the decay exponents themselves.
    """
    tables = list(tables)
    if not tables:
        raise ValueError("no tables given")
    base_idx = tables[0].indices
    for tb in tables:
        if np.any(tb.indices != base_idx):
            raise ValueError("tables must share one index window")
    if n_center is None:
        n_center = int(np.max(base_idx)) // 2

    c1 = 0.0
    c2 = 0.0
    per_t = {}
    worst_slope = -np.inf
    worst_diff = -np.inf
    for tb in tables:
        dist = np.abs(base_idx[:, None] - base_idx[None, :])
        off = dist > 0
        c1 = max(c1, float(np.max(dist[off] * np.abs(tb.entries[off]))))

        pos = {int(v): i for i, v in enumerate(base_idx)}
        top = int(np.max(base_idx))
        for m in range(2, top):
            lo = int(math.ceil(2 * m / 3))
            hi = min(int(math.floor(3 * m / 2)), top - 1)
            for n in range(lo, hi + 1):
                if abs(n - m) < 2:
                    continue
                d = abs(tb.entries[pos[n + 1], pos[m]] - tb.entries[pos[n], pos[m]])
                c2 = max(c2, (n - m) ** 2 * d)

        sk, used_k = _decay_slope(tb, n_center, floor)
        sd, used_d = _diff_slope(tb, n_center, floor)
        per_t[tb.t] = dict(slope=sk, diff_slope=sd, points=used_k, diff_points=used_d)
        worst_slope = max(worst_slope, sk)
        worst_diff = max(worst_diff, sd)

    return KernelEstimateReport(
        c1=c1, c2=c2, slope_kernel=worst_slope, slope_diff=worst_diff,
        t_values=[tb.t for tb in tables], n_center=n_center, floor=floor, per_t=per_t,
    )


@dataclass(eq=False)
class ProbeResult:
    ratios: np.ndarray
    sup_ratio: float
    mean_ratio: float
    p: float
    weak: bool


def random_f_family(rng, count: int, radius: int, index_set: str = "naturals"):
    """Standard-normal sequences supported on the window of the given radius."""
    if index_set == "integers":
        support = np.arange(-radius, radius + 1)
    else:
        support = np.arange(radius + 1)
    return [SequenceData(support=support.copy(), values=rng.standard_normal(support.size))
            for _ in range(count)]


def maximal_inequality_probe(
    basis: BasisDescriptor, symbol: SymbolSpec, w: WeightSeq, p: float,
    f_family, t_grid=None, n: int = None,
) -> ProbeResult:
    """Empirical norm ratios ||W_* f|| / ||f|| over a family of sequences.

    For p > 1 both sides use the weighted strong norm; for p = 1 the left side
    uses the weak norm, matching the endpoint inequality being probed.  The
    scan is grid-only (no local refinement): ratios are meant to be compared
    across resolutions.
    """
    if t_grid is None:
        t_grid = geometric_t_grid(points=129)
    if n is None:
        n = int(np.max(np.abs(w.indices)))
    f_family = list(f_family)
    app = _Applier(basis, symbol, n)
    dense = np.stack([f.to_dense(app.indices).astype(float) for f in f_family], axis=1)
    best = np.abs(dense).copy()
    for t in np.asarray(t_grid, dtype=float):
        if t <= 0:
            continue
        vals = np.abs(app.apply(float(t), dense))
        np.maximum(best, vals, out=best)

    weak = p == 1.0
    ratios = np.empty(len(f_family))
    for i, f in enumerate(f_family):
        wf = SequenceData(support=app.indices.copy(), values=best[:, i])
        denom = weighted_norm(f, w, p)
        num = weak_norm(wf, w) if weak else weighted_norm(wf, w, p)
        ratios[i] = num / denom
    return ProbeResult(
        ratios=ratios, sup_ratio=float(np.max(ratios)),
        mean_ratio=float(np.mean(ratios)), p=p, weak=weak,
    )
