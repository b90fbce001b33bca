"""Command-line front end: experiment configuration, orchestration, CSV/SVG output.

Subcommands: phase-diagram, entropy, rate-function, lifetimes, lln-check,
oracle, simulate.  Configuration is a flat INI file ([model], [experiment],
[run], [output]) with CLI flag overrides; every output CSV starts with a
comment header carrying the schema version, config hash and seed, and
re-running a command with the same config yields byte-identical files.

Exit codes: 0 success, 2 config error, 3 resource error, 4 oracle failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import math
import struct
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import canonical, grand_canonical, kmc, oracle
from .errors import ConfigError, InsufficientDataError, ResourceError, ZRPError
from .grand_canonical import LATTICE_DEP, PARTICLE_DEP, RateModel
from .records import CSV_COLUMNS as RECORD_COLUMNS
from .records import ExperimentRecord
from .svg import LinePlot

CSV_SCHEMA = 1
KNOWN_KINDS = (
    "phase-diagram",
    "entropy",
    "rate-function",
    "lifetimes",
    "lln-check",
    "oracle",
    "simulate",
)


def _parse_grid(text: str, where: str) -> list[float]:
    """Grid spec: 'start:stop:step' (inclusive) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("range needs start:stop:step")
            start, stop, step = (float(p) for p in parts)
            if step <= 0:
                raise ValueError("step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            if n < 1:
                raise ValueError("empty range")
            return [round(start + i * step, 12) for i in range(n)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"{where}: bad grid spec {text!r} ({exc})") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description: model, kind, grids, run controls."""

    model: RateModel
    kind: str | None
    grids: dict
    replicas: int
    t_max: float | None
    seed: int
    workers: int
    out_dir: Path
    svg: bool
    options: dict
    config_hash: str


def _hash_config(sections: dict) -> str:
    lines = []
    for sec in sorted(sections):
        for key in sorted(sections[sec]):
            lines.append(f"{sec}.{key}={sections[sec][key]}")
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


def load_config(path: str | None, args: argparse.Namespace) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    sections = {s: dict(parser[s]) for s in parser.sections()}
    for sec in sections:
        if sec not in ("model", "experiment", "run", "output"):
            raise ConfigError(f"unknown config section [{sec}]")

    model_sec = sections.get("model", {})
    run_sec = sections.get("run", {})
    out_sec = sections.get("output", {})
    exp_sec = dict(sections.get("experiment", {}))

    def fval(sec, name, key, default):
        raw = sec.get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{name}] {key}: not a number: {raw!r}") from exc

    def ival(sec, name, key, default):
        raw = sec.get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"[{name}] {key}: not an integer: {raw!r}") from exc

    mode = model_sec.get("mode", LATTICE_DEP).strip()
    explicit_r = ival(model_sec, "model", "explicit_r", None)
    try:
        model = RateModel(
            c0=fval(model_sec, "model", "c0", 2.0),
            c1=fval(model_sec, "model", "c1", 1.0),
            a=fval(model_sec, "model", "a", 0.5),
            mode=mode,
            explicit_R=explicit_r,
        )
    except ZRPError as exc:
        raise ConfigError(f"[model]: {exc}") from exc

    kind = exp_sec.pop("kind", None)
    if kind is not None and kind not in KNOWN_KINDS:
        raise ConfigError(f"[experiment] kind: unknown kind {kind!r}")

    grids: dict = {}
    for key in ("rho", "phi", "rho_bg", "a"):
        if key in exp_sec:
            grids[key] = _parse_grid(exp_sec.pop(key), f"[experiment] {key}")
            if not grids[key]:
                raise ConfigError(f"[experiment] {key}: grid is empty")
    for key in ("l", "r", "pressure_l"):
        if key in exp_sec:
            vals = _parse_grid(exp_sec.pop(key), f"[experiment] {key}")
            ints = [int(round(v)) for v in vals]
            if not ints or any(abs(i - v) > 1e-9 for i, v in zip(ints, vals)):
                raise ConfigError(f"[experiment] {key}: must be a list of integers")
            grids[key.upper() if key in ("l", "r") else key] = ints

    seed = args.seed if args.seed is not None else ival(run_sec, "run", "seed", None)
    if seed is None:
        raise ConfigError("[run] seed: required (pass --seed or set it in the config; no implicit entropy)")
    t_max_raw = run_sec.get("t_max", "auto").strip()
    if t_max_raw == "auto":
        t_max = None
    else:
        try:
            t_max = float(t_max_raw)
        except ValueError as exc:
            raise ConfigError(f"[run] t_max: expected number or 'auto', got {t_max_raw!r}") from exc
    replicas = ival(run_sec, "run", "replicas", 200)
    if replicas < 1:
        raise ConfigError(f"[run] replicas: must be >= 1, got {replicas}")
    workers = args.workers if args.workers is not None else ival(run_sec, "run", "workers", 1)
    out_dir = Path(args.out if args.out is not None else out_sec.get("dir", "out"))
    svg = bool(args.svg) or out_sec.get("svg", "false").strip().lower() in ("1", "true", "yes")

    hashed = {
        "model": {k: model_sec.get(k, v) for k, v in
                  (("c0", model.c0), ("c1", model.c1), ("a", model.a), ("mode", model.mode),
                   ("explicit_r", model.explicit_R))},
        "experiment": dict(sections.get("experiment", {})),
        "run": {"seed": seed, "replicas": replicas, "t_max": t_max_raw},
    }
    return ExperimentConfig(
        model=model,
        kind=kind,
        grids=grids,
        replicas=replicas,
        t_max=t_max,
        seed=int(seed),
        workers=int(workers),
        out_dir=out_dir,
        svg=svg,
        options=exp_sec,
        config_hash=_hash_config(hashed),
    )


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, command: str, cfg: ExperimentConfig, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# zrp-csv v{CSV_SCHEMA}\n")
        fh.write(f"# command: {command}\n")
        fh.write(f"# config: {cfg.config_hash}\n")
        fh.write(f"# seed: {cfg.seed}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _check_kind(cfg: ExperimentConfig, command: str) -> None:
    if cfg.kind is not None and cfg.kind != command:
        raise ConfigError(f"[experiment] kind: config says {cfg.kind!r} but command is {command!r}")


def _require_grid(cfg: ExperimentConfig, key: str, what: str) -> list:
    if key not in cfg.grids or not cfg.grids[key]:
        raise ConfigError(f"[experiment] {what}: required for this command")
    return cfg.grids[key]


def _phase_boundaries(model: RateModel) -> tuple[float, float, float]:
    rho_c = grand_canonical.critical_density(model)
    if model.a == 0.0:
        return rho_c, rho_c, rho_c
    return rho_c, canonical.metastable_onset(model), canonical.transition_density(model)


def cmd_phase_diagram(cfg: ExperimentConfig) -> int:
    _check_kind(cfg, "phase-diagram")
    a_grid = cfg.grids.get("a") or [round(0.05 * i, 12) for i in range(19)]
    if cfg.model.mode == PARTICLE_DEP:
        a_grid = [a for a in a_grid if a < 1.0]
    rows = []
    for a in a_grid:
        model = dataclasses.replace(cfg.model, a=a)
        rho_c, rho_meta, rho_trans = _phase_boundaries(model)
        if model.mode == LATTICE_DEP:
            overlap_lo = overlap_hi = ""
            phases = (
                f"F(E):rho<={_fmt(rho_c)};F:({_fmt(rho_c)}..{_fmt(rho_meta)}];"
                f"F/C:({_fmt(rho_meta)}..{_fmt(rho_trans)});C/F:rho>={_fmt(rho_trans)}"
            )
        else:
            overlap_lo, overlap_hi = (rho_meta, rho_c) if a > 0 else ("", "")
            phases = (
                f"F(E):rho<={_fmt(rho_c)};F/C:({_fmt(rho_meta)}..{_fmt(rho_trans)});"
                f"C/F:rho>={_fmt(rho_trans)};F:empty"
            )
        rows.append((a, rho_c, rho_meta, rho_trans, overlap_lo, overlap_hi, phases))
    out = cfg.out_dir / "phase_diagram.csv"
    write_csv(out, "phase-diagram", cfg, ("a", "rho_c", "rho_meta", "rho_trans", "overlap_lo", "overlap_hi", "phases"), rows)
    if cfg.svg:
        plot = LinePlot("Stationary phase diagram", "a", "rho")
        plot.add("rho_c", a_grid, [r[1] for r in rows])
        plot.add("rho_meta", a_grid, [r[2] for r in rows], dashed=True)
        plot.add("rho_trans", a_grid, [r[3] for r in rows])
        plot.save(cfg.out_dir / "phase_diagram.svg")
    print(f"phase-diagram: {len(rows)} rows -> {out}")
    return 0


def _particle_log_z_column(L: int, n_max: int, model: RateModel) -> np.ndarray:
    """log Z(L, n) for n = 0..n_max in particle mode (one recursion per n,
    since the cutoff floor(a*n) changes with the target n)."""
    col = np.full(n_max + 1, -np.inf)
    col[0] = 0.0
    lc0, lc1 = math.log(model.c0), math.log(model.c1)
    for n in range(1, n_max + 1):
        R = model.cutoff(N=n)
        prev = np.full(n + 1, -np.inf)
        prev[0] = 0.0
        for _ in range(L):
            prev = canonical._next_partition_row(prev, R, lc0, lc1)
        col[n] = prev[n]
    return col


def _finite_pressure_lattice(model: RateModel, L: int, phi: float) -> float:
    return grand_canonical.log_partition(phi, model.cutoff(L=L), model)


def _finite_pressure_from_column(col: np.ndarray, L: int, phi: float) -> float:
    """(1/L) log sum_n phi^n Z(L,n) from a precomputed log-Z column."""
    if phi == 0.0:
        return 0.0
    terms = np.arange(col.size) * math.log(phi) + col
    top = terms.max()
    value = float(top + math.log(np.exp(terms - top).sum())) / L
    # a truncated tail shows up as the last terms still being near the peak
    if terms[-1] > top - 30.0:
        print(f"entropy: warning: pressure sum truncated at n={col.size - 1} for L={L}, phi={phi:g}")
    return value


def cmd_entropy(cfg: ExperimentConfig) -> int:
    _check_kind(cfg, "entropy")
    model = cfg.model
    rho_grid = _require_grid(cfg, "rho", "rho")
    L_list = _require_grid(cfg, "L", "l")
    rho_max = max(rho_grid)
    columns = ["rho", "s_fluid", "s_gcan", "s_can_analytic"] + [f"s_can_L{L}" for L in L_list]
    tables = {}
    if model.mode == LATTICE_DEP:
        for L in L_list:
            tables[L] = canonical.canonical_table(L, int(math.ceil(rho_max * L)), model)
    rows = []
    for rho in rho_grid:
        row = [
            rho,
            grand_canonical.fluid_entropy(rho, model),
            grand_canonical.grand_canonical_entropy(rho, model),
            canonical.canonical_entropy(rho, model),
        ]
        for L in L_list:
            N = int(round(rho * L))
            table = tables[L] if model.mode == LATTICE_DEP else canonical.canonical_table(L, N, model)
            row.append(table.log_z[L, N] / L)
        rows.append(tuple(row))
    out = cfg.out_dir / "entropy.csv"
    write_csv(out, "entropy", cfg, columns, rows)

    pressure_L = cfg.grids.get("pressure_l", [2, 4, 8])
    phi_c = grand_canonical.critical_fugacity(model)
    frac = 0.98 if model.mode == LATTICE_DEP else 0.90
    phi_grid = cfg.grids.get("phi") or [round(frac * phi_c * i / 40, 12) for i in range(41)]
    bad_phi = [p for p in phi_grid if p >= phi_c]
    if bad_phi:
        raise ConfigError(f"[experiment] phi: finite pressure needs phi < phi_c = {phi_c}, got {bad_phi[0]}")
    columns_cache: dict[int, np.ndarray] = {}
    if model.mode == PARTICLE_DEP:
        phi_top = max(phi_grid)
        if phi_top > 0.0:
            rho_peak = grand_canonical.fluid_density(min(phi_top, phi_c), model)
            slack = 60.0 / abs(math.log(phi_top / phi_c))
            for L in pressure_L:
                n_cap = min(int(math.ceil(L * rho_peak + slack)), 5000)
                columns_cache[L] = _particle_log_z_column(L, n_cap, model)
    pcols = ["phi", "p_fluid", "p_gcan"] + [f"log_z_L{L}" for L in pressure_L]
    prow = []
    for phi in phi_grid:
        p = grand_canonical.fluid_pressure(phi, model)
        base = [phi, p, p]
        for L in pressure_L:
            if model.mode == LATTICE_DEP:
                base.append(_finite_pressure_lattice(model, L, phi))
            else:
                base.append(_finite_pressure_from_column(columns_cache[L], L, phi))
        prow.append(tuple(base))
    pout = cfg.out_dir / "pressure.csv"
    write_csv(pout, "entropy", cfg, pcols, prow)

    if cfg.svg:
        plot = LinePlot("Entropy densities", "rho", "s(rho)")
        plot.add("s_gcan", rho_grid, [r[2] for r in rows])
        plot.add("s_can", rho_grid, [r[3] for r in rows], dashed=True)
        for i, L in enumerate(L_list):
            plot.add(f"recursion L={L}", rho_grid, [r[4 + i] for r in rows], markers=True)
        plot.save(cfg.out_dir / "entropy.svg")
        pplot = LinePlot("Pressure", "phi", "p(phi)")
        pplot.add("p_gcan", phi_grid, [r[1] for r in prow])
        for i, L in enumerate(pressure_L):
            pplot.add(f"L={L}", phi_grid, [r[3 + i] for r in prow], dashed=True)
        pplot.save(cfg.out_dir / "pressure.svg")
    print(f"entropy: {len(rows)} rows -> {out}, pressure -> {pout}")
    return 0


def cmd_rate_function(cfg: ExperimentConfig) -> int:
    _check_kind(cfg, "rate-function")
    model = cfg.model
    rho_list = _require_grid(cfg, "rho", "rho")
    rows, summary = [], []
    for rho in rho_list:
        curve = canonical.rate_function_curve(rho, model)
        if "rho_bg" in cfg.grids:
            grid = np.array(cfg.grids["rho_bg"], dtype=float)
            vals = np.array([canonical.rate_function(rho, b, model) for b in grid])
        else:
            grid, vals = curve.rho_bg, curve.values
        rows.extend((rho, b, v) for b, v in zip(grid, vals))
        summary.append(
            (
                rho,
                ";".join(_fmt(x) for x in curve.local_minima),
                ";".join(_fmt(x) for x in curve.local_maxima),
                curve.global_minimum,
                curve.branch_point,
                curve.branch_gap,
            )
        )
    out = cfg.out_dir / "rate_function.csv"
    write_csv(out, "rate-function", cfg, ("rho", "rho_bg", "rate"), rows)
    sout = cfg.out_dir / "rate_function_summary.csv"
    write_csv(
        sout,
        "rate-function",
        cfg,
        ("rho", "local_minima", "local_maxima", "global_minimum", "branch_point", "branch_gap"),
        summary,
    )
    if cfg.svg:
        plot = LinePlot("Background rate function", "rho_bg", "I(rho_bg)")
        for rho in rho_list:
            sub = [(b, v) for r, b, v in rows if r == rho]
            plot.add(f"rho={rho:g}", [s[0] for s in sub], [s[1] for s in sub])
        plot.save(cfg.out_dir / "rate_function.svg")
    print(f"rate-function: {len(rows)} rows -> {out}; extrema -> {sout}")
    return 0


def _fit_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def cmd_lifetimes(cfg: ExperimentConfig) -> int:
    _check_kind(cfg, "lifetimes")
    model = cfg.model
    L_list = _require_grid(cfg, "L", "l")
    rho = _require_grid(cfg, "rho", "rho")[0]
    onset = canonical.metastable_onset(model)
    if rho <= onset:
        raise ConfigError(f"[experiment] rho: need rho > metastability onset {onset:g} for two-phase statistics")
    records = kmc.lifetime_sweep(
        L_list, rho, model, replicas=cfg.replicas, seed=cfg.seed, t_max=cfg.t_max, workers=cfg.workers
    )
    summary = kmc.summarize_lifetimes(records)
    write_csv(
        cfg.out_dir / "lifetime_replicas.csv",
        "lifetimes",
        cfg,
        ("L", "replica", "tau_fluid", "fluid_censored", "tau_cond", "cond_censored"),
        [(r.L, r.replica, r.tau_fluid, r.fluid_censored, r.tau_cond, r.cond_censored) for r in records],
    )
    sum_cols = (
        "L", "replicas",
        "n_uncensored_fluid", "censored_fraction_fluid", "mean_tau_fluid", "se_tau_fluid",
        "n_uncensored_cond", "censored_fraction_cond", "mean_tau_cond", "se_tau_cond",
    )
    write_csv(
        cfg.out_dir / "lifetimes.csv", "lifetimes", cfg, sum_cols,
        [tuple(s[c] for c in sum_cols) for s in summary],
    )

    xi = canonical.lifetime_exponents(rho, model)
    analytic = {"fluid": xi.xi_fluid, "cond": xi.xi_cond}
    fit_rows, tail_rows = [], []
    smallest = min(s["L"] for s in summary)
    for phase in ("fluid", "cond"):
        usable = [
            s for s in summary
            if s[f"n_uncensored_{phase}"] >= 2
            and not (s["L"] == smallest and s[f"censored_fraction_{phase}"] > 0.2)
        ]
        if len(usable) < 3:
            raise InsufficientDataError(f"{phase}: need >= 3 uncensored L points, have {len(usable)}")
        Ls = np.array([s["L"] for s in usable], dtype=float)
        logmean = np.log([s[f"mean_tau_{phase}"] for s in usable])
        slope, intercept = _fit_line(Ls, logmean)
        rel = abs(slope - analytic[phase]) / analytic[phase]
        for s in usable:
            L = s["L"]
            taus = np.array(
                [getattr(r, f"tau_{phase}") for r in records
                 if r.L == L and not getattr(r, f"{phase}_censored")]
            )
            norm = np.sort(taus / taus.mean())
            n = norm.size
            emp_surv = 1.0 - (np.arange(1, n + 1) - 0.5) / n
            ks = float(np.abs((np.arange(1, n + 1) / n) - (1.0 - np.exp(-norm))).max())
            ks = max(ks, float(np.abs((np.arange(0, n) / n) - (1.0 - np.exp(-norm))).max()))
            fit_rows.append((phase, L, s[f"mean_tau_{phase}"], ks))
            tail_rows.extend((phase, L, t, es, math.exp(-t)) for t, es in zip(norm, emp_surv))
        fit_rows.append((phase, "fit", slope, rel))
        fit_rows.append((phase, "analytic", analytic[phase], 0.0))
    write_csv(
        cfg.out_dir / "lifetime_regression.csv", "lifetimes", cfg,
        ("phase", "item", "value", "aux"), fit_rows,
    )
    write_csv(
        cfg.out_dir / "lifetime_tails.csv", "lifetimes", cfg,
        ("phase", "L", "tau_normalized", "survival_empirical", "survival_exp1"), tail_rows,
    )
    exp_records = kmc.lifetime_records(records, rho, model)
    exp_records += [
        ExperimentRecord(
            params={"rho": rho, "c0": model.c0, "c1": model.c1, "a": model.a,
                    "mode": model.mode, "phase": phase},
            observable="lifetime_exponent",
            value=analytic[phase],
            provenance="analytic",
        )
        for phase in ("fluid", "cond")
    ]
    write_csv(
        cfg.out_dir / "records.csv", "lifetimes", cfg, RECORD_COLUMNS,
        [r.csv_row() for r in exp_records],
    )
    if cfg.svg:
        plot = LinePlot("Mean lifetimes", "L", "mean tau", logy=True)
        for phase in ("fluid", "cond"):
            plot.add(phase, [s["L"] for s in summary], [s[f"mean_tau_{phase}"] for s in summary], markers=True)
            plot.add(
                f"exp(xi_{phase} L)",
                [s["L"] for s in summary],
                [math.exp(analytic[phase] * s["L"]) for s in summary],
                dashed=True,
            )
        plot.save(cfg.out_dir / "lifetimes.svg")
    for phase in ("fluid", "cond"):
        row = next(r for r in fit_rows if r[0] == phase and r[1] == "fit")
        print(f"lifetimes: {phase} slope {row[2]:.5f} vs analytic {analytic[phase]:.5f} (rel err {row[3]:.3f})")
    return 0


def cmd_lln_check(cfg: ExperimentConfig) -> int:
    _check_kind(cfg, "lln-check")
    model = cfg.model
    rho_list = _require_grid(cfg, "rho", "rho")
    L_list = _require_grid(cfg, "L", "l")
    R_list = _require_grid(cfg, "R", "r")
    batches = int(cfg.options.get("batches", "100"))
    rho_c = grand_canonical.critical_density(model)
    z_inf_c = model.c0 / (model.c0 - model.c1)
    srows, brows = [], []
    for L in L_list:
        for R in R_list:
            in_regime = R > 2.0 * math.log(L)
            if not in_regime:
                print(f"lln-check: warning: R={R} is not >> log(L)={math.log(L):.2f}; outside the a.s. regime")
            for rho in rho_list:
                point = grand_canonical.grand_canonical_point(model, R, rho=rho)
                rng = np.random.default_rng([cfg.seed, L, R, int(rho * 10**9)])
                target = min(rho, rho_c)
                exceed = 0
                worst = 0.0
                means = []
                for b in range(batches):
                    draw = grand_canonical.sample_marginal(point, rng, size=L)
                    mean = float(draw.mean())
                    means.append(mean)
                    exceed += int((draw > R).sum())
                    worst = max(worst, abs(mean - target))
                    brows.append((L, R, rho, b, mean, int((draw > R).sum())))
                tail = grand_canonical.tail_exceed_probability(point)
                bound = (
                    L * math.sqrt(max(rho - rho_c, 0.0) / z_inf_c) * (model.c1 / model.c0) ** (R / 2)
                    if rho > rho_c
                    else float("nan")
                )
                srows.append(
                    (L, R, rho, target, float(np.mean(means)), worst, exceed,
                     L * batches * tail, bound, in_regime)
                )
    out = cfg.out_dir / "lln_check.csv"
    write_csv(
        out, "lln-check", cfg,
        ("L", "R", "rho", "target", "grand_mean", "max_abs_dev", "exceed_count",
         "expected_exceed_total_exact", "expected_exceed_per_batch_asymptotic", "in_regime"),
        srows,
    )
    write_csv(
        cfg.out_dir / "lln_batches.csv", "lln-check", cfg,
        ("L", "R", "rho", "batch", "mean", "exceed_count"), brows,
    )
    print(f"lln-check: {len(srows)} summary rows -> {out}")
    return 0


def cmd_oracle(cfg: ExperimentConfig) -> int:
    _check_kind(cfg, "oracle")
    model = cfg.model
    L = int(cfg.grids["L"][0]) if "L" in cfg.grids else 3
    N = int(cfg.options.get("n", 4))
    if L > 6 or N > 8:
        raise ConfigError(f"[experiment] l/n: oracle needs L <= 6 and N <= 8, got {L}, {N}")
    R = model.cutoff(L=L, N=N)
    kernel = cfg.options.get("kernel", "symmetric")
    if kernel == "symmetric":
        lattice = kmc.Lattice.ring(L)
    elif kernel == "asymmetric":
        lattice = kmc.Lattice.totally_asymmetric(L)
    else:
        raise ConfigError(f"[experiment] kernel: unknown kernel {kernel!r}")
    n_events = int(float(cfg.options.get("events", "1e7")))

    states, Q, pi = oracle.build_generator(L, N, R, model, lattice)
    res_stat = oracle.stationarity_residual(pi, Q)
    res_db = oracle.detailed_balance_residual(pi, Q) if kernel == "symmetric" else float("nan")
    rng = np.random.default_rng([cfg.seed, L, N, R])
    tv = oracle.kmc_empirical_tv(L, N, R, model, lattice, rng, n_events)

    checks = [
        ("stationarity_residual", res_stat, 1e-12, res_stat <= 1e-12),
        ("kmc_tv", tv, 0.01, tv <= 0.01),
    ]
    if kernel == "symmetric":
        checks.insert(1, ("detailed_balance_residual", res_db, 1e-12, res_db <= 1e-12))
    rows = [(name, value, tol, ok) for name, value, tol, ok in checks]
    out = cfg.out_dir / "oracle_report.csv"
    write_csv(out, "oracle", cfg, ("check", "value", "tolerance", "pass"), rows)
    failed = False
    for name, value, tol, ok in checks:
        print(f"oracle: {name} = {value:.3e} (tol {tol:g}) {'PASS' if ok else 'FAIL'}")
        failed |= not ok
    print(f"oracle: {len(states)} states, report -> {out}")
    return 4 if failed else 0


def cmd_simulate(cfg: ExperimentConfig) -> int:
    _check_kind(cfg, "simulate")
    model = cfg.model
    L = int(cfg.grids["L"][0]) if "L" in cfg.grids else 0
    if L < 2:
        raise ConfigError("[experiment] l: lattice size >= 2 required")
    if "n" in cfg.options:
        N = int(cfg.options["n"])
    elif "rho" in cfg.grids:
        N = int(round(cfg.grids["rho"][0] * L))
    else:
        raise ConfigError("[experiment] rho or n: particle number required")
    phase = cfg.options.get("phase", "uniform")
    t_end = float(cfg.options.get("t_end", "100.0"))
    sample_dt = float(cfg.options.get("sample_dt", "1.0"))
    kernel = cfg.options.get("kernel", "symmetric")
    lattice = kmc.Lattice.ring(L) if kernel == "symmetric" else kmc.Lattice.totally_asymmetric(L)
    rng = np.random.default_rng([cfg.seed, L, N])
    state = kmc.init_state(L, N, model, phase, rng)

    events_file = cfg.options.get("events_file")
    if events_file:
        n_dump = int(float(cfg.options.get("events", "100000")))
        rec_t, rec_src, rec_dst = kmc.record_events(state, model, lattice, rng, n_dump, t_max=t_end)
        path = cfg.out_dir / events_file
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            for t, s, d in zip(rec_t, rec_src, rec_dst):
                fh.write(struct.pack("<dII", t, int(s), int(d)))
        print(f"simulate: dumped {rec_t.size} events -> {path}")
        state = kmc.init_state(L, N, model, phase, np.random.default_rng([cfg.seed, L, N]))
        rng = np.random.default_rng([cfg.seed, L, N, 1])

    traj = kmc.trajectory_observables(state, model, lattice, rng, t_end, sample_dt)
    rows = list(zip(traj["t"], traj["sigma_bg_per_L"], traj["max_per_L"], traj["A"], traj["B"]))
    out = cfg.out_dir / "trajectory.csv"
    write_csv(out, "simulate", cfg, ("t", "sigma_bg_per_L", "max_per_L", "A", "B"), rows)
    if cfg.svg:
        plot = LinePlot("Trajectory", "t", "density")
        plot.add("sigma_bg/L", traj["t"], traj["sigma_bg_per_L"])
        plot.add("max/L", traj["t"], traj["max_per_L"], dashed=True)
        plot.save(cfg.out_dir / "trajectory.svg")
    print(f"simulate: {len(rows)} samples -> {out}")
    return 0


COMMANDS = {
    "phase-diagram": cmd_phase_diagram,
    "entropy": cmd_entropy,
    "rate-function": cmd_rate_function,
    "lifetimes": cmd_lifetimes,
    "lln-check": cmd_lln_check,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zrp",
        description="Zero-range process with size-dependent rates: ensembles, metastability, simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
        p.add_argument("--seed", type=int, default=None, help="RNG seed (overrides [run] seed)")
        p.add_argument("--workers", type=int, default=None, help="worker threads (overrides [run] workers)")
        p.add_argument("--svg", action="store_true", help="also render SVG plots")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except ZRPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
