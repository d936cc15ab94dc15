"""Run configuration, experiment orchestration and report emission.

Outputs are bit-stable: a fixed config and seed produce byte-identical CSV
and JSON files.  Floats in CSV are printed with 17 significant digits so
doubles round-trip exactly; JSON uses the shortest round-trip repr.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np
import jsonschema

from . import analysis, dunkl, exceptional, semigroup
from .core import (
    NumericalConsistencyError,
    SequenceData,
    SymbolSpec,
    geometric_t_grid,
)
from .jacobi import JacobiParams

__all__ = [
    "RunConfig",
    "ReportRow",
    "ConfigError",
    "load_config",
    "cmd_kernel",
    "cmd_evolve",
    "cmd_maximal",
    "cmd_verify",
    "EXIT_OK",
    "EXIT_CHECK_FAILED",
    "EXIT_NUMERICAL",
    "EXIT_CONFIG",
]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_NUMERICAL = 2
EXIT_CONFIG = 64

EVOLVE_TOL = 1e-7

VERIFY_SUITES = ("proposition1", "lemma1", "lemma2", "stencil", "maximal")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    system: str
    alpha: float = 0.0
    beta: float = 0.0
    b_coeffs: list = None
    bw_coeffs: list = None
    s_coeffs: list = None
    N: int = 64
    quad_order: int = 0
    t_values: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    t_grid: dict = field(default_factory=lambda: {
        "min": 1e-4, "max": 1e4, "points": 257, "scale": "geometric"})
    weight: dict = field(default_factory=lambda: {"kind": "power", "gamma": 0.0, "p": 2.0})
    f: dict = field(default_factory=lambda: {"support": [0], "values": [1.0]})
    seed: int = 12345
    output_dir: str = "out"

    def grid(self) -> np.ndarray:
        g = self.t_grid
        if g["scale"] == "geometric":
            return np.geomspace(g["min"], g["max"], g["points"])
        return np.linspace(g["min"], g["max"], g["points"])

    def sequence(self) -> SequenceData:
        return SequenceData(
            support=np.asarray(self.f["support"], dtype=int),
            values=np.asarray(self.f["values"], dtype=float),
        )


def _schema() -> dict:
    with resources.files("specsemi").joinpath("schema/runconfig.schema.json").open() as fh:
        return json.load(fh)


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}") from exc
    cfg = RunConfig(**raw)
    base = RunConfig(system=cfg.system)
    for key in ("t_grid", "weight", "f"):
        merged = dict(getattr(base, key))
        merged.update(getattr(cfg, key) or {})
        setattr(cfg, key, merged)
    if len(cfg.f["support"]) != len(cfg.f["values"]):
        raise ConfigError("f.support and f.values must have equal length")
    if cfg.system == "exceptional" and (cfg.b_coeffs is None) != (cfg.bw_coeffs is None):
        raise ConfigError("b_coeffs and bw_coeffs must be given together")
    return cfg


def build_objects(cfg: RunConfig):
    """(basis, symbol) pair described by the config."""
    try:
        if cfg.system == "jacobi":
            basis = semigroup.BasisDescriptor.classical(cfg.alpha, cfg.beta)
        elif cfg.system == "exceptional":
            base = JacobiParams(cfg.alpha, cfg.beta)
            if cfg.b_coeffs is None:
                b, bw = exceptional.seed_pair(base)
            else:
                b, bw = cfg.b_coeffs, cfg.bw_coeffs
            basis = semigroup.BasisDescriptor.exceptional(exceptional.make_system(base, b, bw))
        elif cfg.system == "dunkl":
            basis = semigroup.BasisDescriptor.dunkl(cfg.alpha, cfg.beta)
        else:
            basis = semigroup.BasisDescriptor.fourier()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.system == "exceptional":
        if cfg.s_coeffs is not None:
            raise ConfigError("the exceptional system fixes its own symbol Q")
        symbol = semigroup.default_symbol(basis)
    else:
        symbol = SymbolSpec.from_coeffs(cfg.s_coeffs or [0.0, 1.0])
    return basis, symbol


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.16e}"


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n")


@dataclass
class ReportRow:
    check_id: str
    params: str
    measured: float
    tolerance: float
    passed: bool
    tag: str = ""


def _write_report(outdir: Path, suite: str, cfg: RunConfig, rows):
    write_csv(
        outdir / "report.csv",
        ["id", "params", "measured", "tolerance", "passed", "tag"],
        [(r.check_id, r.params, r.measured, r.tolerance, r.passed, r.tag) for r in rows],
    )
    payload = {
        "suite": suite,
        "config": asdict(cfg),
        "rows": [asdict(r) for r in rows],
        "all_passed": all(r.passed for r in rows),
    }
    (outdir / "report.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _outdir(cfg: RunConfig, override=None) -> Path:
    out = Path(override) if override else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands


def cmd_kernel(cfg: RunConfig, out_override=None) -> int:
    """Write kernel_t{t}.csv (columns n,m,K) for each configured t value."""
    out = _outdir(cfg, out_override)
    basis, symbol = build_objects(cfg)
    for t in cfg.t_values:
        table = semigroup.build_kernel(basis, symbol, float(t), cfg.N)
        rows = []
        for i, n in enumerate(table.indices):
            for j, m in enumerate(table.indices):
                rows.append((int(n), int(m), table.entries[i, j]))
        write_csv(out / f"kernel_t{t:g}.csv", ["n", "m", "K"], rows)
    return EXIT_OK


def cmd_evolve(cfg: RunConfig, out_override=None, f: SequenceData = None) -> int:
    """Write u.csv with both evolution routes and their pointwise gap.

    Exit code 2 when the routes disagree beyond the tolerance on the inner
    half of the window (the file is still written).
    """
    out = _outdir(cfg, out_override)
    basis, symbol = build_objects(cfg)
    seq = f if f is not None else cfg.sequence()
    gen = semigroup.build_generator(basis, symbol, cfg.N)
    rows = []
    worst = 0.0
    for t in cfg.t_values:
        uk, ub, gap = semigroup.evolve_methods(gen, seq, float(t))
        worst = max(worst, gap)
        for i, n in enumerate(gen.indices):
            rows.append((int(n), float(t), uk.values[i], ub.values[i],
                         abs(uk.values[i] - ub.values[i])))
    write_csv(out / "u.csv", ["n", "t", "u", "u_band", "disagreement"], rows)
    return EXIT_OK if worst <= EVOLVE_TOL else EXIT_NUMERICAL


def cmd_maximal(cfg: RunConfig, out_override=None, f: SequenceData = None) -> int:
    """Write wstar.csv with the scanned maximal function of the input."""
    out = _outdir(cfg, out_override)
    basis, symbol = build_objects(cfg)
    seq = f if f is not None else cfg.sequence()
    wstar = semigroup.maximal_operator(basis, symbol, seq, cfg.grid(), n=cfg.N)
    dense = seq.to_dense(wstar.support)
    rows = [(int(n), dense[i], wstar.values[i]) for i, n in enumerate(wstar.support)]
    write_csv(out / "wstar.csv", ["n", "f", "wstar"], rows)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, suite: str, out_override=None) -> int:
    """Run one verification suite and write report.csv / report.json.

    Exit 0 when every row passes, 1 otherwise; configuration and suite
    mismatches raise ConfigError (exit 64 at the CLI).
    """
    if suite not in VERIFY_SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {VERIFY_SUITES}")
    if suite in ("lemma1", "stencil") and cfg.system != "exceptional":
        raise ConfigError(f"suite {suite} requires system = exceptional")
    if suite == "lemma2" and cfg.system != "dunkl":
        raise ConfigError(f"suite {suite} requires system = dunkl")
    out = _outdir(cfg, out_override)
    basis, symbol = build_objects(cfg)
    runner = {
        "proposition1": _suite_proposition1,
        "lemma1": _suite_lemma1,
        "lemma2": _suite_lemma2,
        "stencil": _suite_stencil,
        "maximal": _suite_maximal,
    }[suite]
    rows = runner(cfg, basis, symbol)
    _write_report(out, suite, cfg, rows)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK_FAILED


# ------------------------------------------------------------ suite bodies


def _params_echo(cfg: RunConfig) -> str:
    return f"system={cfg.system} alpha={cfg.alpha:g} beta={cfg.beta:g} N={cfg.N}"


def _suite_proposition1(cfg: RunConfig, basis, symbol):
    rows = []
    echo = _params_echo(cfg)
    n = cfg.N
    rng = np.random.default_rng(cfg.seed)

    k0 = semigroup.build_kernel(basis, symbol, 0.0, n)
    identity_defect = float(np.max(np.abs(k0.entries - np.eye(k0.size))))
    rows.append(ReportRow("identity_t0", echo, identity_defect, 1e-10,
                          identity_defect <= 1e-10))

    ts = [1e-3, 1e-1, 1.0, 10.0, 1e3]
    tables = [semigroup.build_kernel(basis, symbol, t, n) for t in ts]
    violations = 0
    pd_min = np.inf
    idx = k0.indices
    inner = idx[np.abs(idx) <= np.max(np.abs(idx)) // 2]
    for _ in range(200):
        support = rng.choice(inner, size=min(9, inner.size), replace=False)
        f = SequenceData(support=support, values=rng.standard_normal(support.size))
        fn = f.norm2()
        for tb in tables:
            wf = semigroup.apply_semigroup(tb, f)
            if wf.norm2() > fn * (1.0 + 1e-12):
                violations += 1
            pd_min = min(pd_min, float(np.dot(wf.values, f.to_dense(tb.indices))))
    rows.append(ReportRow("contraction_violations", echo, float(violations), 0.0,
                          violations == 0))
    rows.append(ReportRow("positive_definiteness_min", echo, pd_min, -1e-10,
                          pd_min >= -1e-10))

    row_norm_max = max(float(np.max(tb.row_norms())) for tb in tables)
    rows.append(ReportRow("row_l2_bound", echo, row_norm_max, 1.0 + 1e-10,
                          row_norm_max <= 1.0 + 1e-10))

    big = n + max(n // 2, 16)
    k1 = semigroup.build_kernel(basis, symbol, 0.5, big)
    k2 = semigroup.build_kernel(basis, symbol, 1.5, big)
    k12 = semigroup.build_kernel(basis, symbol, 2.0, n)
    comp = semigroup.compose_check(k1, k2, k12)
    rows.append(ReportRow("semigroup_residual", echo, comp, 1e-8, comp <= 1e-8))

    smooth_support = inner[: min(5, inner.size)]
    smooth = SequenceData(
        support=smooth_support,
        values=np.array([1.0 / math.factorial(i) for i in range(smooth_support.size)]),
    )
    gaps = []
    for t in (1.0, 0.1, 0.01, 0.001):
        tb = semigroup.build_kernel(basis, symbol, t, n)
        wf = semigroup.apply_semigroup(tb, smooth)
        gaps.append(float(np.linalg.norm(wf.values - smooth.to_dense(tb.indices))))
    cont_ok = gaps[-1] <= gaps[0] and gaps[-1] <= 0.1 * smooth.norm2()
    rows.append(ReportRow("strong_continuity", echo, gaps[-1], 0.1 * smooth.norm2(), cont_ok))

    if basis.kind == "fourier_oracle":
        rows.extend(_bessel_rows(cfg, basis, symbol, echo))
    return rows


def _bessel_series(k: int, t: float) -> float:
    """exp(-t) I_k(t) by the ascending series, in log space; independent of
    any quadrature in the library."""
    if t == 0.0:
        return 1.0 if k == 0 else 0.0
    k = abs(k)
    total = 0.0
    for j in range(0, 220):
        log_term = (k + 2 * j) * math.log(t / 2.0) - math.lgamma(j + 1) - math.lgamma(j + k + 1)
        total += math.exp(log_term - t)
        if j > 4 and math.exp(log_term - t) < 1e-22 * max(total, 1e-300):
            break
    return total


def _bessel_rows(cfg: RunConfig, basis, symbol, echo):
    rows = []
    worst = 0.0
    for t in (0.1, 1.0, 10.0):
        table = semigroup.build_kernel(basis, symbol, t, 16)
        for n in table.indices:
            for m in table.indices:
                ref = _bessel_series(int(n) - int(m), t)
                worst = max(worst, abs(table.value(int(n), int(m)) - ref))
    rows.append(ReportRow("bessel_kernel_error", echo, worst, 1e-10, worst <= 1e-10))

    gen = semigroup.build_generator(basis, symbol, cfg.N)
    f = SequenceData.delta(0)
    gap = max(semigroup.evolve_methods(gen, f, t)[2] for t in (0.5, 2.0, 5.0))
    rows.append(ReportRow("evolve_method_agreement", echo, gap, 1e-7, gap <= 1e-7))
    return rows


def _scope_tag_exceptional(cfg: RunConfig) -> str:
    if cfg.alpha > 1.5 + 1e-12 and cfg.beta >= -0.5:
        return ""
    if abs(cfg.alpha - 1.5) <= 1e-12 and cfg.beta >= -0.5:
        return "scope-boundary"
    return "out-of-scope-params"


def _suite_lemma1(cfg: RunConfig, basis, symbol):
    echo = _params_echo(cfg)
    tag = _scope_tag_exceptional(cfg)
    sysx = basis.system
    rows = []

    sig_err = _sigma_consistency(sysx, 30)
    rows.append(ReportRow("sigma_formula_rel_err", echo, sig_err, 1e-8,
                          sig_err <= 1e-8, tag))

    worst = 0.0
    for t in (0.1, 1.0):
        dec = exceptional.exceptional_kernel(sysx, t, 20)
        direct = exceptional.exceptional_kernel(sysx, t, 20, method="direct")
        worst = max(worst, float(np.max(np.abs(dec.entries - direct.entries))))
    rows.append(ReportRow("decomposition_vs_direct", echo, worst, 1e-8,
                          worst <= 1e-8, tag))

    n_big = 2 * cfg.N
    tables = [semigroup.build_kernel(basis, symbol, t, n_big) for t in (0.1, 1.0, 10.0)]
    report = analysis.standard_kernel_check(tables, n_center=cfg.N)
    rows.append(ReportRow("kernel_slope", echo, report.slope_kernel, -1.0 + 0.15,
                          report.slope_kernel <= -1.0 + 0.15, tag))
    rows.append(ReportRow("diff_slope", echo, report.slope_diff, -2.0 + 0.2,
                          report.slope_diff <= -2.0 + 0.2, tag))

    small = [_subtable(tb, cfg.N) for tb in tables]
    rep_small = analysis.standard_kernel_check(small, n_center=cfg.N // 2)
    c1_ratio = report.c1 / rep_small.c1
    c2_ratio = report.c2 / rep_small.c2
    rows.append(ReportRow("c1_doubling_ratio", echo, c1_ratio, 2.0, c1_ratio <= 2.0, tag))
    rows.append(ReportRow("c2_doubling_ratio", echo, c2_ratio, 2.0, c2_ratio <= 2.0, tag))

    diag = max(float(np.max(np.abs(np.diag(tb.entries)))) for tb in tables)
    rows.append(ReportRow("diagonal_bound", echo, diag, 1.0 + 1e-10,
                          diag <= 1.0 + 1e-10, tag))
    return rows


def _subtable(table, n_max: int):
    keep = np.abs(table.indices) <= n_max
    sel = np.where(keep)[0]
    from .core import KernelTable

    return KernelTable(
        t=table.t, indices=table.indices[sel],
        entries=table.entries[np.ix_(sel, sel)], basis=table.basis,
    )


def _sigma_consistency(sysx, k_max: int) -> float:
    from .jacobi import build_quadrature

    rule = build_quadrature(sysx.weight.exponent_a, sysx.weight.exponent_b, 2 * k_max + 96)
    tab = exceptional.exceptional_table(sysx, k_max, rule.nodes)
    w = rule.weights * sysx.weight.smooth_values(rule.nodes)
    norms = np.sqrt(np.sum(tab * tab * w, axis=1))
    return float(np.max(np.abs(norms - 1.0)))


def _suite_lemma2(cfg: RunConfig, basis, symbol):
    echo = _params_echo(cfg)
    tag = "" if (cfg.alpha >= -0.5 and cfg.beta >= -0.5) else "out-of-scope-params"
    sysd = dunkl.DunklSystem(basis.params)
    rows = []
    rng = np.random.default_rng(cfg.seed)

    worst = 0.0
    for t in (0.1, 1.0):
        dec = dunkl.dunkl_kernel(sysd, t, 16)
        direct = dunkl.dunkl_kernel(sysd, t, 16, method="direct")
        worst = max(worst, float(np.max(np.abs(dec.entries - direct.entries))))
    rows.append(ReportRow("decomposition_vs_direct", echo, worst, 1e-9,
                          worst <= 1e-9, tag))

    pts = rng.uniform(-np.pi, np.pi, size=100)
    six = max(dunkl.six_term_residual(sysd, k, pts) for k in range(-50, 51))
    rows.append(ReportRow("six_term_residual", echo, six, 1e-10, six <= 1e-10, tag))

    interior = rng.uniform(0.15, np.pi - 0.15, size=40)
    interior = np.concatenate([interior, -interior])
    djo = max(dunkl.lambda_eigen_residual(sysd, k, interior) for k in range(-30, 31))
    rows.append(ReportRow("lambda_eigen_residual", echo, djo, 1e-8, djo <= 1e-8, tag))

    n_big = 2 * cfg.N
    tables = [semigroup.build_kernel(basis, symbol, t, n_big) for t in (0.1, 1.0, 10.0)]
    report = analysis.standard_kernel_check(tables, n_center=cfg.N)
    rows.append(ReportRow("kernel_slope", echo, report.slope_kernel, -1.0 + 0.15,
                          report.slope_kernel <= -1.0 + 0.15, tag))
    rows.append(ReportRow("diff_slope", echo, report.slope_diff, -2.0 + 0.2,
                          report.slope_diff <= -2.0 + 0.2, tag))

    small = [_subtable(tb, cfg.N) for tb in tables]
    rep_small = analysis.standard_kernel_check(small, n_center=cfg.N // 2)
    c1_ratio = report.c1 / rep_small.c1
    c2_ratio = report.c2 / rep_small.c2
    rows.append(ReportRow("c1_doubling_ratio", echo, c1_ratio, 2.0, c1_ratio <= 2.0, tag))
    rows.append(ReportRow("c2_doubling_ratio", echo, c2_ratio, 2.0, c2_ratio <= 2.0, tag))
    return rows


def _suite_stencil(cfg: RunConfig, basis, symbol):
    echo = _params_echo(cfg)
    rows = []
    sysx = basis.system

    n_deep = 500
    gen = semigroup.build_generator(basis, symbol, n_deep + sysx.q_degree + 1)
    row = 48.0 * gen.generator_row(n_deep)
    target = 48.0 * semigroup.symbol_row_limits(symbol)
    # symmetric limit row of the generator: (U_L..U_1, U_0 - s_max, U_1..U_L)
    L = sysx.q_degree
    full_target = np.empty(2 * L + 1)
    full_target[L] = target[0] - 48.0 * symbol.s_max
    for j in range(1, L + 1):
        full_target[L - j] = full_target[L + j] = target[j] if j < target.size else 0.0
    dev = float(np.max(np.abs(row - full_target)))
    rows.append(ReportRow("stencil_row_n500", echo, dev, 0.05, dev <= 0.05))

    is_worked = np.allclose(sysx.b.coef, [1.0, -1.5, 0.5]) and np.allclose(
        sysx.bw.coef, [1.0, -0.25])
    if is_worked:
        u3 = 48 * Fraction(1, 48)
        rows.append(ReportRow("printed_48_u3", echo, float(u3), 0.0, u3 == 1))
        center = 48 * (Fraction(-3, 8) - Fraction(5, 12))
        rows.append(ReportRow("printed_center_minus38", echo, float(center), 0.0,
                              center == -38))
        stencil_target = np.array([1.0, -9.0, 27.0, -38.0, 27.0, -9.0, 1.0])
        dev_printed = float(np.max(np.abs(row - stencil_target)))
        rows.append(ReportRow("printed_stencil_match", echo, dev_printed, 0.05,
                              dev_printed <= 0.05))

    stencil = semigroup.limit_stencil(gen)
    cauchy = float(np.max(np.abs(48.0 * stencil - full_target)))
    rows.append(ReportRow("limit_stencil_consistency", echo, cauchy, 0.05, cauchy <= 0.05))
    return rows


def _suite_maximal(cfg: RunConfig, basis, symbol):
    echo = _params_echo(cfg)
    rows = []
    rng = np.random.default_rng(cfg.seed)
    n = cfg.N
    p = float(cfg.weight.get("p", 2.0))
    radius = max(n // 4, 4)

    flat = analysis.power_weight(0.0, *_window(basis, n))
    family = analysis.random_f_family(rng, 100, radius, basis.index_set)
    coarse = analysis.maximal_inequality_probe(
        basis, symbol, flat, 2.0, family, t_grid=geometric_t_grid(points=129), n=n)
    fine = analysis.maximal_inequality_probe(
        basis, symbol, flat, 2.0, family, t_grid=geometric_t_grid(points=257), n=n)
    drift = abs(fine.sup_ratio - coarse.sup_ratio) / coarse.sup_ratio
    rows.append(ReportRow("l2_sup_ratio", echo, fine.sup_ratio, 10.0,
                          fine.sup_ratio <= 10.0))
    rows.append(ReportRow("tgrid_refinement_drift", echo, drift, 0.1, drift <= 0.1))

    family2 = analysis.random_f_family(rng, 100, 2 * radius, basis.index_set)
    doubled = analysis.maximal_inequality_probe(
        basis, symbol, flat, 2.0, family2, t_grid=geometric_t_grid(points=257), n=n)
    growth = doubled.sup_ratio / fine.sup_ratio
    rows.append(ReportRow("support_doubling_growth", echo, growth, 1.1, growth <= 1.1))

    gamma_in = min(p - 1.0, 1.0) / 2.0
    lo, hi = _window(basis, 256)
    w_in = analysis.power_weight(gamma_in, lo, hi)
    c_small = analysis.ap_constant(w_in, p, window=(-(128 if lo < 0 else 0), 128))
    c_large = analysis.ap_constant(w_in, p)
    ratio_in = c_large / c_small
    rows.append(ReportRow("ap_inclass_window_ratio", echo, ratio_in, 1.2, ratio_in <= 1.2))

    w_out = analysis.power_weight(p, lo, hi)
    c_small_o = analysis.ap_constant(w_out, p, window=(-(128 if lo < 0 else 0), 128))
    c_large_o = analysis.ap_constant(w_out, p)
    ratio_out = c_large_o / c_small_o
    rows.append(ReportRow("ap_outclass_window_ratio", echo, ratio_out, 1.5,
                          ratio_out >= 1.5))

    wgt = analysis.power_weight(float(cfg.weight.get("gamma", 0.5)), *_window(basis, n))
    probe = analysis.maximal_inequality_probe(
        basis, symbol, wgt, p, family, t_grid=geometric_t_grid(points=129), n=n)
    rows.append(ReportRow("weighted_sup_ratio", echo, probe.sup_ratio, 50.0,
                          probe.sup_ratio <= 50.0))
    return rows


def _window(basis, n: int):
    return (-n, n) if basis.index_set == "integers" else (0, n)
