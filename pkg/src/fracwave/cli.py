"""Command-line experiment runner.

Each subcommand reads an optional YAML or JSON config, applies flag
overrides, validates everything up front, runs the sweep and writes

* ``<command>.csv``: the result table (floats in shortest round-trip form),
* ``<command>_plot.csv``: the same data in long format with log2 columns,
* ``manifest.json``: config hash, version, seed, timestamps and row provenance,

into the output directory (``--out``, else ``$FRACWAVE_OUT``, else
``./fracwave-out``). Failures write ``error.json`` and exit with status 2.
"""

import argparse
import csv
import hashlib
import json
import math
import numbers
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import yaml

from . import __version__
from .errors import ComputeError, ConfigError, DegenerateInput, FracWaveError
from .field_sim import SimulationConfig, estimate_pairing_moment, pairing_moment_cell_sum
from .levy_area import LevyAreaConfig, levy_m_split, levy_second_moment
from .quadrature import divergence_verdict
from .spectral_core import HurstVector
from .wave_moments import (
    ClassETestFunction,
    RegimeLabel,
    cherry_moment_ia,
    cherry_moment_ib,
    classify_regime,
    divergence_functional_with_error,
    divergence_split,
    threshold_scan,
    valid_exponent_range,
)

OUT_ENV = "FRACWAVE_OUT"
DEFAULT_OUT = "fracwave-out"
MANIFEST_SCHEMA = 1
COMMANDS = ("levy-scan", "wave-moment", "diverge", "threshold-scan", "simulate", "classify")


# ------------------------------------------------------------------- config

@dataclass
class ExperimentConfig:
    kind: str
    d: int = 1
    hurst: list = field(default_factory=list)
    hurst_grid: list = field(default_factory=list)
    n: tuple = (4, 8)
    t: float = 1.0
    exponent: float = None      # gamma (regular regime) or alpha (Wick regime)
    replicas: int = 1000
    seed: int = 0
    tol: float = 1e-3
    count: int = 200_000
    cells_xi: int = 12
    cells_eta: int = 16
    split: bool = False
    out: str = None
    threads: int = 1

    def as_dict(self):
        return asdict(self)

    def content_hash(self):
        body = {k: v for k, v in self.as_dict().items() if k not in ("out", "threads")}
        text = json.dumps(body, sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()


def parse_n_range(text, name="n"):
    """'4..12' or '7' -> (lo, hi)."""
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split("..")
    try:
        vals = [int(p) for p in parts]
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected A..B with integers, got {text!r}") from None
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2 or vals[0] > vals[1] or vals[0] < 1:
        raise ConfigError(name, f"expected 1 <= A <= B, got {text!r}")
    return tuple(vals)


def parse_hurst(value, name="hurst"):
    if isinstance(value, str):
        try:
            value = [float(x) for x in value.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(name, f"not a comma-separated list of numbers: {value!r}") from None
    try:
        return [float(x) for x in value]
    except (TypeError, ValueError):
        raise ConfigError(name, f"not a list of numbers: {value!r}") from None


def parse_hurst_grid(value):
    if isinstance(value, str):
        value = [row for row in value.split(";") if row.strip()]
    return [parse_hurst(row, f"hurst_grid[{i}]") for i, row in enumerate(value)]


def load_config_file(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text) or {}   # JSON is a subset of YAML
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a mapping")
    return data


_FIELDS = {f for f in ExperimentConfig.__dataclass_fields__ if f != "kind"}


def build_config(kind, file_data, overrides):
    data = {}
    for key, val in (file_data or {}).items():
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(key, "unknown config key")
        data[key] = val
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(kind=kind)
    for key, val in data.items():
        setattr(cfg, key, val)
    return validate(cfg)


def _as_int(cfg, name, lo=None):
    try:
        val = int(getattr(cfg, name))
    except (TypeError, ValueError):
        raise ConfigError(name, "must be an integer") from None
    if lo is not None and val < lo:
        raise ConfigError(name, f"must be at least {lo}")
    setattr(cfg, name, val)


def _check_hurst(h, d, name):
    if len(h) != d + 1:
        raise ConfigError(name, f"needs d + 1 = {d + 1} entries, got {len(h)}")
    try:
        return HurstVector(tuple(h))
    except FracWaveError as exc:
        raise ConfigError(name, str(exc)) from None


def validate(cfg):
    """Check every field before any computation; raises ConfigError naming the field."""
    if cfg.kind not in COMMANDS:
        raise ConfigError("kind", f"unknown experiment {cfg.kind!r}")
    _as_int(cfg, "d", 1)
    _as_int(cfg, "replicas", 2)
    _as_int(cfg, "seed", 0)
    _as_int(cfg, "count", 2)
    _as_int(cfg, "threads", 1)
    _as_int(cfg, "cells_xi", 2)
    _as_int(cfg, "cells_eta", 2)
    cfg.n = parse_n_range(cfg.n)
    for name in ("t", "tol"):
        try:
            setattr(cfg, name, float(getattr(cfg, name)))
        except (TypeError, ValueError):
            raise ConfigError(name, "must be a number") from None
    if cfg.t < 0:
        raise ConfigError("t", "must be nonnegative")
    if not cfg.tol > 0:
        raise ConfigError("tol", "must be positive")
    if cfg.kind == "threshold-scan":
        cfg.hurst_grid = parse_hurst_grid(cfg.hurst_grid)
        for i, h in enumerate(cfg.hurst_grid):
            _check_hurst(h, cfg.d, f"hurst_grid[{i}]")
    elif cfg.kind == "levy-scan":
        cfg.hurst = parse_hurst(cfg.hurst)
        if len(cfg.hurst) != 1 or not 0 < cfg.hurst[0] < 1:
            raise ConfigError("hurst", "levy-scan takes one Hurst index in (0, 1)")
    else:
        cfg.hurst = parse_hurst(cfg.hurst)
        H = _check_hurst(cfg.hurst, cfg.d, "hurst")
        if cfg.kind != "classify" and cfg.d > 2:
            raise ConfigError("d", "numerical experiments support d = 1 and d = 2")
        if cfg.kind == "wave-moment":
            if classify_regime(cfg.d, H) is RegimeLabel.ILL_POSED:
                raise ConfigError("hurst", "no Sobolev moment exists in the ill-posed regime")
            if cfg.exponent is None:
                raise ConfigError("exponent", "wave-moment needs gamma or alpha")
            lo, hi = valid_exponent_range(cfg.d, H)
            upper = hi if classify_regime(cfg.d, H) is RegimeLabel.REGULAR_NO_RENORM else math.inf
            if not lo < float(cfg.exponent) < upper:
                raise ConfigError("exponent", f"must lie in ({lo}, {upper})")
        if cfg.kind == "simulate" and cfg.cells_xi * cfg.cells_eta ** cfg.d > 4096:
            raise ConfigError("cells_eta", "grid larger than 4096 cells")
    return cfg


# ------------------------------------------------------------------ results

@dataclass
class ResultTable:
    name: str
    columns: list
    rows: list = field(default_factory=list)
    provenance: str = "deterministic"


def format_cell(v):
    """Shortest round-trip text for numbers, enum values for labels, '' for missing."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Enum):
        return str(v.value)
    if isinstance(v, numbers.Integral):
        return str(int(v))
    if isinstance(v, numbers.Real):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([format_cell(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def _parse_cell(text):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_table(path):
    """Read a CSV written by this module back into (columns, rows)."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        columns = next(r)
        return columns, [[_parse_cell(c) for c in row] for row in r]


def _log2(v):
    return math.log2(v) if isinstance(v, (int, float)) and v > 0 else None


def long_format(table):
    """Melt an n-indexed sweep into (n, log2_n, quantity, value, log2_value)."""
    if table.name == "threshold-scan":
        return table.columns[:5], [row[:5] for row in table.rows]
    if "n" not in table.columns:   # not a sweep; keep as is
        return list(table.columns), [list(r) for r in table.rows]
    cols = ["n", "log2_n", "quantity", "value", "log2_value"]
    idx = table.columns.index("n")
    out = []
    for row in table.rows:
        n = row[idx]
        if not isinstance(n, int):
            continue
        for c, v in zip(table.columns, row):
            if c == "n" or isinstance(v, (str, bool)) or v is None:
                continue
            out.append([n, math.log2(n), c, float(v), _log2(float(v))])
    return cols, out


def emit_plot_data(table, out_dir):
    """Write the long-format plot table; refuses empty results."""
    if not table.rows:
        raise DegenerateInput(f"no rows to emit for {table.name}")
    cols, rows = long_format(table)
    if not rows:
        raise DegenerateInput(f"no numeric observations in {table.name}")
    return write_csv(Path(out_dir) / f"{table.name}_plot.csv", cols, rows)


# --------------------------------------------------------------- experiments

def _parallel_map(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))   # order preserved, merge is deterministic


def _levy_point(args):
    h, n, tol = args
    cfg = LevyAreaConfig(h, tol=tol)
    res = levy_second_moment(cfg, n)
    jm, jmr = levy_m_split(cfg, n)
    return [n, res.value, res.abs_error_estimate, jm, jmr]


def run_levy_scan(cfg, table):
    lo, hi = cfg.n
    h = cfg.hurst[0]
    for row in _parallel_map(_levy_point, [(h, n, cfg.tol) for n in range(lo, hi + 1)], cfg.threads):
        table.rows.append(["value"] + row)
    _append_fit(table, [(r[1], r[2]) for r in table.rows])


def _append_fit(table, values):
    if len(values) >= 3:
        diverges, fit, reason = divergence_verdict(values)
        pad = [None] * (len(table.columns) - 5)
        table.rows.append(["fit", None, fit.slope, fit.residual] + pad + [reason if diverges else "bounded"])


def _moment_point(args):
    d, h, t, exponent, n, count, seed = args
    H = HurstVector(tuple(h))
    if classify_regime(d, H) is RegimeLabel.REGULAR_NO_RENORM:
        m = cherry_moment_ia(d, H, t, exponent, n, count=count, seed=seed)
        return [n, "ia", m.first, m.second, m.total, m.std_error]
    return [n, "ib", None, None, cherry_moment_ib(d, H, t, exponent, n, count=count, seed=seed), None]


def run_wave_moment(cfg, table):
    lo, hi = cfg.n
    args = [(cfg.d, cfg.hurst, cfg.t, cfg.exponent, n, cfg.count, cfg.seed) for n in range(lo, hi + 1)]
    table.rows.extend(_parallel_map(_moment_point, args, cfg.threads))
    if cfg.d == 2:
        table.provenance = "monte-carlo"


def _diverge_point(args):
    d, h, n, count, seed, split = args
    H = HurstVector(tuple(h))
    val, err = divergence_functional_with_error(d, H, None, n, count=count, seed=seed)
    row = [n, val, err]
    if split:
        row += list(divergence_split(d, H, None, n, count=count, seed=seed))
    else:
        row += [None, None, None]
    return row


def run_diverge(cfg, table):
    lo, hi = cfg.n
    args = [(cfg.d, cfg.hurst, n, cfg.count, cfg.seed, cfg.split) for n in range(lo, hi + 1)]
    for row in _parallel_map(_diverge_point, args, cfg.threads):
        table.rows.append(["value"] + row)
    _append_fit(table, [(r[1], r[2]) for r in table.rows])
    if cfg.d == 2:
        table.provenance = "monte-carlo"


def run_threshold_scan(cfg, table):
    lo, hi = cfg.n
    kwargs = {"count": cfg.count, "seed": cfg.seed} if cfg.d == 2 else {}
    for rec in threshold_scan(cfg.d, cfg.hurst_grid, None, range(lo, hi + 1), **kwargs):
        h0 = rec.H[0] if rec.H else None
        h_plus = math.fsum(rec.H[1:]) if rec.H else None
        table.rows.append([h0, h_plus, rec.label, rec.slope, rec.residual, rec.diverges,
                           rec.agrees, rec.error])


def run_simulate(cfg, table):
    lo, hi = cfg.n
    sim = SimulationConfig(tuple(cfg.hurst), ClassETestFunction(cfg.d),
                           cells_xi=cfg.cells_xi, cells_eta=cfg.cells_eta)
    for n in range(lo, hi + 1):
        grid = sim.grid(n)
        em = estimate_pairing_moment(sim, n, cfg.replicas, cfg.seed)
        exact = 2.0 * pairing_moment_cell_sum(grid, sim.Phi)
        table.rows.append([n, em.replicas, em.mean, em.std_error, exact, em.seed, grid.spec_hash()])
    table.provenance = "monte-carlo"


def run_classify(cfg, table):
    label = classify_regime(cfg.d, HurstVector(tuple(cfg.hurst)))
    table.rows.append([cfg.d, math.fsum(cfg.hurst), label])
    print(label.value)


RUNNERS = {
    "levy-scan": (run_levy_scan, ["record", "n", "A_n", "A_err", "J_M", "J_MR", "verdict"]),
    "wave-moment": (run_wave_moment, ["n", "regime", "first", "second", "total", "std_error"]),
    "diverge": (run_diverge, ["record", "n", "value", "std_error", "J_M", "J_R", "J_MR", "verdict"]),
    "threshold-scan": (run_threshold_scan, ["H0", "H_plus", "regime", "slope", "residual",
                                            "diverges", "agrees", "error"]),
    "simulate": (run_simulate, ["n", "replicas", "mean", "std_error", "cell_sum", "seed", "grid_hash"]),
    "classify": (run_classify, ["d", "sum", "regime"]),
}


def out_dir_for(cfg):
    return Path(cfg.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def write_manifest(path, cfg, table, started, finished, status):
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "tool_version": __version__,
        "command": cfg.kind,
        "config_hash": cfg.content_hash(),
        "config": cfg.as_dict(),
        "seed": cfg.seed,
        "started": started,
        "finished": finished,
        "status": status,
        "rows": len(table.rows),
        "provenance": table.provenance,
        "table": f"{table.name}.csv",
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=list) + "\n")


def execute(cfg, write=True):
    """Run one validated config; returns the result table."""
    runner, columns = RUNNERS[cfg.kind]
    table = ResultTable(cfg.kind, columns)
    out = out_dir_for(cfg)
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    try:
        runner(cfg, table)
    except FracWaveError as exc:
        if write:
            _flush(out, cfg, table, started, "failed")
        raise ComputeError(f"{type(exc).__name__}: {exc}") from exc
    for row in table.rows:
        row.extend([None] * (len(columns) - len(row)))
    if write:
        _flush(out, cfg, table, started, "ok")
    return table


def _flush(out, cfg, table, started, status):
    out.mkdir(parents=True, exist_ok=True)
    for row in table.rows:
        row.extend([None] * (len(table.columns) - len(row)))
    write_csv(out / f"{table.name}.csv", table.columns, table.rows)
    if table.rows and status == "ok":
        try:
            emit_plot_data(table, out)
        except DegenerateInput:
            pass
    write_manifest(out / "manifest.json", cfg, table, started, time.strftime("%Y-%m-%dT%H:%M:%S%z"), status)


def write_error(out, exc):
    record = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        record["field"] = exc.field
        record["message"] = exc.message
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(json.dumps(record, sort_keys=True) + "\n")
    except OSError:
        pass
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


# ---------------------------------------------------------------------- argv

def build_parser():
    parser = argparse.ArgumentParser(prog="fracwave", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"fracwave {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML or JSON config file")
        p.add_argument("--d", type=int)
        p.add_argument("--hurst", help="comma-separated H0,H1,...")
        p.add_argument("--n", help="regularization range A..B")
        p.add_argument("--replicas", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        p.add_argument("--threads", type=int, help="worker processes for sweeps")
        if name == "threshold-scan":
            p.add_argument("--hurst-grid", dest="hurst_grid", help="rows separated by ';'")
        if name == "wave-moment":
            p.add_argument("--exponent", type=float, help="gamma (regular) or alpha (Wick regime)")
            p.add_argument("--t", type=float)
        if name in ("wave-moment", "diverge", "threshold-scan"):
            p.add_argument("--count", type=int, help="Monte Carlo points (d = 2)")
        if name == "diverge":
            p.add_argument("--split", action="store_true", default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    try:
        file_data = load_config_file(args.config) if args.config else {}
        cfg = build_config(args.command, file_data, overrides)
        out = out_dir_for(cfg)
        write = args.command != "classify" or bool(cfg.out or os.environ.get(OUT_ENV))
        execute(cfg, write=write)
    except (ConfigError, ComputeError) as exc:
        write_error(out, exc)
        return 2
    except OSError as exc:
        write_error(out, exc)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
