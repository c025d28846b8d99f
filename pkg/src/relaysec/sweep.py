"""Parameter sweeps over closed-form, asymptotic and Monte Carlo engines.

Config files are flat TOML: sweep keys plus any SystemParams field as an
override.  See README for the schema.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from .analysis import asymptotic_essr, essr_with_outage, high_snr_slope, power_outage_prob
from .montecarlo import mc_essr_many, worker_count
from .system import ALPHA_MAX, ALPHA_MIN, Scenario, SystemParams, derive_link_stats, dbw_to_watt, watt_to_dbw

SWEEP_VARS = ("rho_db", "alpha", "lambda", "kappa", "d_rj", "d_uniform")
ENGINES = ("closed_form", "monte_carlo", "asymptote")
CSV_COLUMNS = ("scenario", "engine", "sweep_var", "value", "essr", "stderr", "flags")
DEFAULT_TOTAL_POWER_W = dbw_to_watt(SystemParams().p_s1_dbw) + dbw_to_watt(SystemParams().p_s2_dbw)
_PARAM_FIELDS = tuple(f.name for f in dataclasses.fields(SystemParams))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    sweep_var: str
    grid: tuple
    scenarios: tuple = ("WoJ", "FJ", "GNJ")
    engines: tuple = ("closed_form", "monte_carlo")
    mc_blocks: int = 1_000_000
    seed: int = 0
    eps_mode: str = "exact"
    composition: str = "paper"
    asymptote_mode: str = "oracle"
    total_power_w: float = DEFAULT_TOTAL_POWER_W
    base: SystemParams = field(default_factory=SystemParams)
    output: str | None = None

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ConfigError("invalid sweep: " + "; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if self.sweep_var not in SWEEP_VARS:
            out.append(f"sweep_var must be one of {SWEEP_VARS}, got {self.sweep_var!r}")
        g = self.grid
        if len(g) == 0:
            out.append("grid must be nonempty")
        elif any(not b > a for a, b in zip(g, g[1:])):
            out.append("grid must be strictly increasing")
        if self.sweep_var == "lambda" and any(not 0 < v < 1 for v in g):
            out.append("lambda grid must lie in (0, 1)")
        if self.sweep_var == "alpha" and any(not ALPHA_MIN <= v <= ALPHA_MAX for v in g):
            out.append(f"alpha grid must lie in [{ALPHA_MIN}, {ALPHA_MAX}]")
        if self.sweep_var in ("kappa", "d_rj", "d_uniform") and any(not v > 0 for v in g):
            out.append(f"{self.sweep_var} grid must be positive")
        for s in self.scenarios:
            try:
                Scenario.parse(s)
            except ValueError as exc:
                out.append(str(exc))
        if not self.scenarios:
            out.append("scenarios must be nonempty")
        if not self.engines or any(e not in ENGINES for e in self.engines):
            out.append(f"engines must be a nonempty subset of {ENGINES}, got {list(self.engines)}")
        if int(self.mc_blocks) != self.mc_blocks or self.mc_blocks < 10_000:
            out.append(f"mc_blocks must be an integer >= 10000, got {self.mc_blocks}")
        if self.eps_mode not in ("exact", "high_snr"):
            out.append(f"eps_mode must be 'exact' or 'high_snr', got {self.eps_mode!r}")
        if self.composition not in ("paper", "operational"):
            out.append(f"composition must be 'paper' or 'operational', got {self.composition!r}")
        if self.asymptote_mode not in ("oracle", "paper_faithful"):
            out.append(f"asymptote_mode must be 'oracle' or 'paper_faithful', got {self.asymptote_mode!r}")
        if not self.total_power_w > 0:
            out.append(f"total_power_w must be > 0, got {self.total_power_w}")
        return out

    def replace(self, **kw) -> "SweepSpec":
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    engine: str
    sweep_var: str
    value: float
    essr: float
    stderr: float | None
    flags: tuple = ()


# ------------------------------------------------------------- config

_SPEC_KEYS = {"sweep_var", "grid", "grid_start", "grid_stop", "grid_step", "scenarios",
              "engines", "mc_blocks", "seed", "eps_mode", "composition",
              "asymptote_mode", "total_power_w", "output"}


def _arange(start: float, stop: float, step: float) -> tuple:
    if not step > 0:
        raise ConfigError(f"grid_step must be > 0, got {step}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 12) for i in range(max(n, 0)))


def spec_from_mapping(data: dict, source: str = "<config>") -> SweepSpec:
    unknown = sorted(set(data) - _SPEC_KEYS - set(_PARAM_FIELDS))
    if unknown:
        raise ConfigError(f"{source}: unknown keys {unknown}")
    if "sweep_var" not in data:
        raise ConfigError(f"{source}: missing required key 'sweep_var'")
    if "grid" in data:
        if any(k in data for k in ("grid_start", "grid_stop", "grid_step")):
            raise ConfigError(f"{source}: give either 'grid' or grid_start/grid_stop/grid_step")
        grid = data["grid"]
        if not isinstance(grid, list) or not all(isinstance(v, (int, float)) for v in grid):
            raise ConfigError(f"{source}: 'grid' must be an array of numbers")
        grid = tuple(float(v) for v in grid)
    elif all(k in data for k in ("grid_start", "grid_stop", "grid_step")):
        grid = _arange(float(data["grid_start"]), float(data["grid_stop"]), float(data["grid_step"]))
    else:
        raise ConfigError(f"{source}: missing 'grid' (or grid_start/grid_stop/grid_step)")
    overrides = {k: data[k] for k in _PARAM_FIELDS if k in data}
    try:
        base = SystemParams(**overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    kw = {k: data[k] for k in ("sweep_var", "mc_blocks", "seed", "eps_mode", "composition",
                               "asymptote_mode", "total_power_w", "output") if k in data}
    for k in ("scenarios", "engines"):
        if k in data:
            if not isinstance(data[k], list):
                raise ConfigError(f"{source}: '{k}' must be an array of strings")
            kw[k] = tuple(str(Scenario.parse(s)) if k == "scenarios" and _is_scenario(s) else s
                          for s in data[k])
    try:
        return SweepSpec(grid=grid, base=base, **kw)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def _is_scenario(s) -> bool:
    try:
        Scenario.parse(s)
        return True
    except ValueError:
        return False


def load_config(path) -> SweepSpec:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    return spec_from_mapping(data, str(path))


# -------------------------------------------------------------- points

def point_params(spec: SweepSpec, v: float) -> SystemParams:
    b = spec.base
    sv = spec.sweep_var
    if sv == "rho_db":
        # both sources scaled together, xi = 1, N0 held fixed
        p_dbw = v + b.n0_dbm - 30.0
        return b.replace(p_s1_dbw=p_dbw, p_s2_dbw=p_dbw)
    if sv == "alpha":
        return b.replace(alpha=v)
    if sv == "lambda":
        return b.replace(p_s1_dbw=watt_to_dbw(v * spec.total_power_w),
                         p_s2_dbw=watt_to_dbw((1 - v) * spec.total_power_w))
    if sv == "kappa":
        return b.replace(kappa=v)
    if sv == "d_rj":
        return b.replace(d_rj=v)
    return b.replace(d_s1r=v, d_s2r=v, d_s1j=v, d_s2j=v, d_rj=v)


def _closed_form_rows(spec: SweepSpec, v: float) -> list[SweepRow]:
    rows = []
    try:
        ls = derive_link_stats(point_params(spec, v))
    except ValueError as exc:
        return [SweepRow(s, "closed_form", spec.sweep_var, v, math.nan, None,
                         (f"error:{exc}",)) for s in spec.scenarios]
    for s in spec.scenarios:
        try:
            r = essr_with_outage(Scenario.parse(s), ls)
            rows.append(SweepRow(s, "closed_form", spec.sweep_var, v, r.value, None, r.flags))
        except Exception as exc:  # flagged per row, sweep continues
            rows.append(SweepRow(s, "closed_form", spec.sweep_var, v, math.nan, None,
                                 (f"error:{type(exc).__name__}",)))
    return rows


def _asymptote_rows(spec: SweepSpec, v: float) -> list[SweepRow]:
    rows = []
    ls = derive_link_stats(point_params(spec, v))
    for s in spec.scenarios:
        try:
            a = asymptotic_essr(Scenario.parse(s), ls, mode=spec.asymptote_mode)
            flags = ("asymptote", f"mode:{spec.asymptote_mode}") + (("negative",) if a < 0 else ())
            rows.append(SweepRow(s, "asymptote", spec.sweep_var, v, a, None, flags))
        except Exception as exc:
            rows.append(SweepRow(s, "asymptote", spec.sweep_var, v, math.nan, None,
                                 (f"error:{type(exc).__name__}",)))
    return rows


def _mc_rows(spec: SweepSpec, v: float) -> list[SweepRow]:
    try:
        est = mc_essr_many(spec.scenarios, point_params(spec, v), int(spec.mc_blocks), spec.seed,
                           spec.eps_mode, spec.composition)
    except Exception as exc:
        return [SweepRow(s, "monte_carlo", spec.sweep_var, v, math.nan, None,
                         (f"error:{type(exc).__name__}",)) for s in spec.scenarios]
    flags = (f"composition:{spec.composition}", f"eps:{spec.eps_mode}")
    return [SweepRow(s, "monte_carlo", spec.sweep_var, v, est[Scenario.parse(s)].mean,
                     est[Scenario.parse(s)].stderr, flags) for s in spec.scenarios]


def run_sweep(spec: SweepSpec, out_path=None) -> list[SweepRow]:
    """One row per (scenario, engine, grid point), ordered in that nesting."""
    grid = list(spec.grid)
    by_engine: dict[str, list[list[SweepRow]]] = {}
    for eng in spec.engines:
        if eng == "monte_carlo":
            # Monte Carlo parallelises inside each point
            by_engine[eng] = [_mc_rows(spec, v) for v in grid]
            continue
        fn = _closed_form_rows if eng == "closed_form" else _asymptote_rows
        nw = min(worker_count(), len(grid))
        if nw <= 1:
            by_engine[eng] = [fn(spec, v) for v in grid]
        else:
            with ThreadPoolExecutor(max_workers=nw) as pool:
                by_engine[eng] = list(pool.map(lambda v: fn(spec, v), grid))
    rows = []
    for s in spec.scenarios:
        for eng in spec.engines:
            for point_rows in by_engine[eng]:
                rows.extend(r for r in point_rows if r.scenario == s)
    target = out_path if out_path is not None else spec.output
    if target:
        write_csv(rows, target)
    return rows


# ----------------------------------------------------------------- csv

def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def rows_to_csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.scenario, r.engine, r.sweep_var, _fmt(r.value), _fmt(r.essr),
                    _fmt(r.stderr), ";".join(r.flags)])
    return buf.getvalue()


def _atomic_write(text: str, path) -> Path:
    """Write to a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(rows, path) -> Path:
    return _atomic_write(rows_to_csv_text(rows), path)


def read_csv(path) -> list[SweepRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: expected columns {CSV_COLUMNS}, got {reader.fieldnames}")
        return [SweepRow(d["scenario"], d["engine"], d["sweep_var"], float(d["value"]),
                         float(d["essr"]), float(d["stderr"]) if d["stderr"] else None,
                         tuple(d["flags"].split(";")) if d["flags"] else ())
                for d in reader]


def merge_baseline(rows, baseline_path) -> list[dict]:
    """Wide table keyed by sweep value; baseline columns are copied verbatim.

    The baseline CSV needs a 'value' column; every other column is a curve.
    """
    with open(baseline_path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if "value" not in (reader.fieldnames or []):
            raise ValueError(f"{baseline_path}: baseline needs a 'value' column")
        base_cols = [c for c in reader.fieldnames if c != "value"]
        base = {float(d["value"]): d for d in reader}
    series = []
    table: dict[float, dict] = {}
    for r in rows:
        key = f"{r.scenario}/{r.engine}"
        if key not in series:
            series.append(key)
        table.setdefault(r.value, {})[key] = _fmt(r.essr)
    out = []
    for v in sorted(set(table) | set(base)):
        rec = {"value": _fmt(v)}
        rec.update({k: table.get(v, {}).get(k, "") for k in series})
        rec.update({f"baseline:{c}": base[v][c] if v in base else "" for c in base_cols})
        out.append(rec)
    return out


def write_table(records: list[dict], path) -> Path:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(records[0].keys()), lineterminator="\n")
    w.writeheader()
    w.writerows(records)
    return _atomic_write(buf.getvalue(), path)


# -------------------------------------------------------------- report

def _series(rows, scenario, engine):
    pts = sorted((r.value, r.essr) for r in rows if r.scenario == scenario and r.engine == engine)
    return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])


def top_decade_slope(x_db: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of y against log2(rho) over the last 10 dB of the grid."""
    keep = x_db >= x_db.max() - 10.0 - 1e-9
    if keep.sum() < 2:
        return math.nan
    lx = x_db[keep] / (10.0 * math.log10(2.0))
    return float(np.polyfit(lx, y[keep], 1)[0])


def report(rows, spec: SweepSpec | None = None) -> str:
    rows = list(rows)
    if not rows:
        raise ValueError("report needs at least one row")
    sv = rows[0].sweep_var
    scenarios = list(dict.fromkeys(r.scenario for r in rows))
    engines = list(dict.fromkeys(r.engine for r in rows))
    lines = [f"sweep over {sv}: {len(rows)} rows, scenarios {scenarios}, engines {engines}"]
    for s in scenarios:
        for e in engines:
            x, y = _series(rows, s, e)
            if x.size == 0 or np.all(np.isnan(y)):
                continue
            i = int(np.nanargmax(y))
            lines.append(f"  argmax {s:<3} {e:<11} {sv}={x[i]:g}  essr={y[i]:.4f}")
    if "closed_form" in engines and "monte_carlo" in engines:
        for s in scenarios:
            xc, lb = _series(rows, s, "closed_form")
            xm, mc = _series(rows, s, "monte_carlo")
            if xc.size and np.array_equal(xc, xm):
                gap = mc - lb
                j = int(np.nanargmax(np.abs(gap)))
                lines.append(f"  max |MC - LB| {s:<3} {gap[j]:+.4f} at {sv}={xc[j]:g}"
                             f"  (LB above MC at {int(np.sum(gap < 0))} points)")
    if sv == "rho_db":
        slopes = {}
        for s in scenarios:
            for e in engines:
                x, y = _series(rows, s, e)
                if x.size >= 2:
                    slopes[(s, e)] = top_decade_slope(x, y)
                    lines.append(f"  top-decade slope {s:<3} {e:<11} {slopes[(s, e)]:.4f} per log2(rho)")
        for e in engines:
            if ("FJ", e) in slopes and ("WoJ", e) in slopes and slopes[("WoJ", e)] > 0:
                ratio = slopes[("FJ", e)] / slopes[("WoJ", e)]
                lines.append(f"  FJ/WoJ slope ratio ({e}) {ratio:.4f}")
        if spec is not None:
            ls = derive_link_stats(point_params(spec, spec.grid[-1]))
            p_j = power_outage_prob("jammer", ls)
            lines.append(f"  predicted FJ/WoJ ratio 2(1 - P_J/2) = {2 * (1 - p_j / 2):.4f}"
                         f"; S_inf WoJ/FJ/GNJ = {high_snr_slope(Scenario.WOJ, ls):.4f}/"
                         f"{high_snr_slope(Scenario.FJ, ls):.4f}/{high_snr_slope(Scenario.GNJ, ls):.4f}")
    flagged: dict[str, list] = {}
    for r in rows:
        for f in r.flags:
            if f.startswith(("F:quadrature", "degenerate", "error")):
                flagged.setdefault(f, [])
                if r.value not in flagged[f]:
                    flagged[f].append(r.value)
    for f, vals in flagged.items():
        lines.append(f"  flag {f}: {len(vals)} grid points ({', '.join(f'{v:g}' for v in vals[:8])}"
                     f"{', ...' if len(vals) > 8 else ''})")
    return "\n".join(lines)


# ------------------------------------------------------------- presets

def _grid(start, stop, step):
    return _arange(start, stop, step)


def preset_specs(name: str, mc_blocks: int = 1_000_000, seed: int | None = None) -> dict[str, SweepSpec]:
    """Figure presets keyed by output suffix ('' for single-curve presets)."""
    if name == "fig3":
        s = 3 if seed is None else seed
        return {"": SweepSpec("rho_db", _grid(10, 80, 5), engines=ENGINES,
                              mc_blocks=mc_blocks, seed=s)}
    if name == "fig4":
        s = 4 if seed is None else seed
        g = _grid(0.02, 0.98, 0.02)
        return {f"_d{d}": SweepSpec("alpha", g, mc_blocks=mc_blocks, seed=s,
                                    base=SystemParams(d_s1r=d, d_s2r=d, d_s1j=d, d_s2j=d, d_rj=d))
                for d in (3, 5)}
    if name == "fig5":
        s = 5 if seed is None else seed
        g = _grid(0.05, 0.95, 0.05)
        out = {}
        for d1, d2 in ((3, 3), (5, 1)):
            base = SystemParams(d_s1r=d1, d_s1j=d1, d_s2r=d2, d_s2j=d2, d_rj=1.5)
            out[f"_d{d1}{d2}"] = SweepSpec("lambda", g, mc_blocks=mc_blocks, seed=s, base=base)
        return out
    if name == "fig6":
        s = 6 if seed is None else seed
        g = _grid(2.0, 4.0, 0.2)
        return {f"_drj{str(d).replace('.', 'p')}": SweepSpec("kappa", g, mc_blocks=mc_blocks, seed=s,
                                                             base=SystemParams(d_rj=d))
                for d in (1.5, 3.0)}
    raise ValueError(f"unknown preset {name!r}")
