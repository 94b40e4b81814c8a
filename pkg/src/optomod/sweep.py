"""Parameter sweeps over the full pipeline (orbit, covariance, metrics).

Cells are independent; results are written into an index-keyed buffer so the
output order (row-major over the grid) never depends on completion order.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .classical import find_periodic_orbit
from .covariance import routh_hurwitz_stable, steady_periodic_covariance, symplectic_eigenvalues
from .errors import (FixedPointError, InstabilityError, InvalidParameterError,
                     NonConvergenceError, OptomodError)
from .metrics import CONVENTIONS, MetricsSummary, period_extrema
from .params import Config, ModulationSpec, derive

AXES = ("omega_over_omega_m", "epsilon", "eta", "phi_over_pi")
STATUSES = ("ok", "unstable", "non-converged")
METRICS = MetricsSummary.FIELDS


@dataclass(frozen=True)
class SweepGrid:
    axis1: str
    values1: tuple
    axis2: str | None = None
    values2: tuple = ()

    def __post_init__(self):
        for name, vals in ((self.axis1, self.values1), (self.axis2, self.values2)):
            if name is None:
                continue
            if name not in AXES:
                raise InvalidParameterError(f"unknown sweep axis {name!r}; choose from {AXES}")
            v = np.asarray(vals, dtype=float)
            if v.size < 1 or np.any(np.diff(v) <= 0):
                raise InvalidParameterError(f"axis {name} values must be strictly increasing")
        if self.axis2 is None and len(self.values2):
            raise InvalidParameterError("values2 given without axis2")
        if self.axis2 is not None and self.axis2 == self.axis1:
            raise InvalidParameterError("the two axes must differ")
        object.__setattr__(self, "values1", tuple(float(v) for v in self.values1))
        object.__setattr__(self, "values2", tuple(float(v) for v in self.values2))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.values1), (len(self.values2) if self.axis2 else 1)

    @property
    def size(self) -> int:
        n, m = self.shape
        return n * m

    def coords(self, index: int) -> dict:
        """Axis values of cell ``index``; row-major with axis2 varying slowest."""
        n, _ = self.shape
        i, j = index % n, index // n
        out = {self.axis1: self.values1[i]}
        if self.axis2:
            out[self.axis2] = self.values2[j]
        return out

    def ij(self, index: int) -> tuple[int, int]:
        n, _ = self.shape
        return index % n, index // n

    @classmethod
    def linspace(cls, axis1, range1, n1, axis2=None, range2=None, n2=1):
        v1 = tuple(np.linspace(range1[0], range1[1], n1)) if n1 > 1 else (float(range1[0]),)
        if axis2 is None:
            return cls(axis1, v1)
        v2 = tuple(np.linspace(range2[0], range2[1], n2)) if n2 > 1 else (float(range2[0]),)
        return cls(axis1, v1, axis2, v2)


@dataclass(frozen=True)
class SweepCell:
    index: int
    coords: dict
    status: str
    reason: str = ""
    metrics: MetricsSummary | None = None
    settle_time: float = float("nan")
    rh_margin: float = float("nan")
    closure_gap: float = float("nan")

    def __post_init__(self):
        if self.status not in STATUSES:
            raise InvalidParameterError(f"bad status {self.status!r}")
        if (self.status == "ok") != (self.metrics is not None):
            raise InvalidParameterError("metrics are present exactly when status is ok")


def cell_modulation(config: Config, coords: dict) -> ModulationSpec:
    base = config.modulation
    om = base.omega if base.omega > 0 else 2.0 * config.system.omega_m
    fields = {"epsilon": base.epsilon, "eta": base.eta, "omega": om, "phi": base.phi}
    for name, value in coords.items():
        if name == "omega_over_omega_m":
            fields["omega"] = value * config.system.omega_m
        elif name == "phi_over_pi":
            fields["phi"] = value * math.pi
        else:
            fields[name] = value
    return ModulationSpec(epsilon=fields["epsilon"], omega1=fields["omega"], eta=fields["eta"],
                          omega2=fields["omega"], phi=fields["phi"])


def run_cell(config: Config, coords: dict, index: int = 0) -> SweepCell:
    """Orbit, stability, covariance and metrics for one parameter point; never raises."""
    run = config.run
    opts = dict(rtol=run["rtol"], settle_tol=run["settle_tol"],
                min_periods=run["min_settle_periods"], max_periods=run["max_settle_periods"])
    n = int(run["n_samples"])
    coupling = run["drift_coupling"]
    cell = dict(index=index, coords=dict(coords))
    try:
        mod = cell_modulation(config, coords)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            dp = derive(config.system)
        orbit = find_periodic_orbit(dp, config.system, mod, n, **opts)
    except (InstabilityError, FixedPointError) as exc:
        return SweepCell(status="unstable", reason=f"classical: {exc}", **cell)
    except NonConvergenceError as exc:
        return SweepCell(status="non-converged", reason=f"classical: {exc}",
                         closure_gap=exc.gap, **cell)
    except OptomodError as exc:
        return SweepCell(status="non-converged", reason=f"classical: {exc}", **cell)
    rh = routh_hurwitz_stable(dp, config.system, mod, orbit, coupling)
    if not rh.stable:
        return SweepCell(status="unstable", reason="routh-hurwitz", rh_margin=rh.worst_margin,
                         settle_time=orbit.settle_time, **cell)
    try:
        cov = steady_periodic_covariance(dp, config.system, mod, n, orbit=orbit,
                                         coupling=coupling, interpolation=run["interpolation"],
                                         **opts)
    except InstabilityError as exc:
        return SweepCell(status="unstable", reason=f"parametric: {exc}",
                         rh_margin=rh.worst_margin, **cell)
    except NonConvergenceError as exc:
        return SweepCell(status="non-converged", reason=f"covariance: {exc}",
                         rh_margin=rh.worst_margin, closure_gap=exc.gap, **cell)
    nu_min = float(np.min(symplectic_eigenvalues(cov.matrices)[0]))
    if nu_min < 0.5 - 1e-9:
        return SweepCell(status="non-converged",
                         reason=f"unphysical covariance (symplectic eigenvalue {nu_min:.6g})",
                         rh_margin=rh.worst_margin, **cell)
    try:
        summary = period_extrema(cov, run["discord_measured"])
    except OptomodError as exc:
        return SweepCell(status="non-converged", reason=f"metrics: {exc}",
                         rh_margin=rh.worst_margin, **cell)
    return SweepCell(status="ok", metrics=summary,
                     settle_time=max(orbit.settle_time, cov.settle_time),
                     rh_margin=rh.worst_margin,
                     closure_gap=max(orbit.closure_gap, cov.closure_gap), **cell)


def _task(args):
    config, coords, index = args
    return run_cell(config, coords, index)


class SweepInterrupted(Exception):
    def __init__(self, cells):
        super().__init__("sweep interrupted; completed cells are kept in .cells")
        self.cells = cells


def run_sweep(grid: SweepGrid, config: Config, workers: int = 1,
              progress=None) -> list[SweepCell]:
    """Run every cell; the returned list is in grid order for any worker count."""
    tasks = [(config, grid.coords(k), k) for k in range(grid.size)]
    buffer: list[SweepCell | None] = [None] * grid.size
    if workers <= 1:
        for t in tasks:
            buffer[t[2]] = _task(t)
            if progress:
                progress(t[2], buffer[t[2]])
        return buffer
    pool = ProcessPoolExecutor(max_workers=workers)
    try:
        futures = {pool.submit(_task, t): t[2] for t in tasks}
        for fut in as_completed(futures):
            k = futures[fut]
            buffer[k] = fut.result()
            if progress:
                progress(k, buffer[k])
    except KeyboardInterrupt:
        pool.shutdown(wait=False, cancel_futures=True)
        raise SweepInterrupted(buffer) from None
    pool.shutdown()
    return buffer


# ------------------------------------------------------------ reports

def connectivity_report(grid: SweepGrid, cells: list[SweepCell]) -> list[int]:
    """Unstable cells with no neighbour of small Routh-Hurwitz margin.

    A neighbour qualifies when it is itself non-ok or its margin is below a
    tenth of the median margin over ok cells. Returns the indices of isolated
    unstable cells and warns when there are any.
    """
    margins = [c.rh_margin for c in cells if c.status == "ok" and math.isfinite(c.rh_margin)]
    if not margins:
        return []
    limit = 0.1 * float(np.median(margins))
    n, m = grid.shape
    isolated = []
    for c in cells:
        if c.status != "unstable":
            continue
        i, j = grid.ij(c.index)
        found = False
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                ii, jj = i + di, j + dj
                if (di or dj) and 0 <= ii < n and 0 <= jj < m:
                    nb = cells[jj * n + ii]
                    if nb.status != "ok" or nb.rh_margin < limit:
                        found = True
        if not found:
            isolated.append(c.index)
    if isolated:
        warnings.warn(f"{len(isolated)} unstable cells look isolated (salt-and-pepper)",
                      RuntimeWarning, stacklevel=2)
    return isolated


def _num(v) -> str:
    return repr(float(v)) if v is not None and math.isfinite(v) else ""


def cells_csv(grid: SweepGrid, cells: list[SweepCell], config: Config) -> str:
    buf = io.StringIO()
    buf.write(f"# grid axis1={grid.axis1} n={grid.shape[0]}"
              + (f" axis2={grid.axis2} m={grid.shape[1]}" if grid.axis2 else "") + "\n")
    for note in config.unit_notes:
        buf.write(f"# {note}\n")
    buf.write(f"# drift_coupling={config.run['drift_coupling']} "
              f"discord_measured={config.run['discord_measured']} "
              f"n_samples={config.run['n_samples']}\n")
    buf.write("# " + " ".join(f"{k}={v}" for k, v in CONVENTIONS.items()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    axes = [grid.axis1] + ([grid.axis2] if grid.axis2 else [])
    w.writerow(["index", *axes, "status", "reason", *METRICS,
                *(f"t_{m}" for m in METRICS), "settle_time", "rh_margin", "closure_gap"])
    for c in cells:
        vals = [_num(c.coords[a]) for a in axes]
        if c.metrics is not None:
            mv = c.metrics.csv_row()
        else:
            mv = [""] * (2 * len(METRICS))
        w.writerow([c.index, *vals, c.status, c.reason.splitlines()[0] if c.reason else "",
                    *mv, _num(c.settle_time), _num(c.rh_margin), _num(c.closure_gap)])
    return buf.getvalue()


# ------------------------------------------------------------ SVG

_PALETTE = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)]


def color(x: float) -> str:
    """Linear colour map on [0, 1] through a perceptual five-stop palette."""
    x = min(max(x, 0.0), 1.0) * (len(_PALETTE) - 1)
    i = min(int(x), len(_PALETTE) - 2)
    f = x - i
    rgb = [round(a + (b - a) * f) for a, b in zip(_PALETTE[i], _PALETTE[i + 1])]
    return "#%02x%02x%02x" % tuple(rgb)


def heatmap_svg(grid: SweepGrid, cells: list[SweepCell], metric: str, cell_px: int = 12) -> str:
    n, m = grid.shape
    vals = [getattr(c.metrics, metric) for c in cells if c.status == "ok"]
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    left, top, bar = 70, 30, 20
    width = left + n * cell_px + 3 * bar + 60
    height = top + m * cell_px + 50
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<metadata>metric={metric} min={lo!r} max={hi!r} scale=linear '
           f'unstable=white</metadata>',
           f'<text x="{left}" y="18" font-size="12" font-family="sans-serif">{metric}</text>']
    for c in cells:
        i, j = grid.ij(c.index)
        x = left + i * cell_px
        y = top + (m - 1 - j) * cell_px
        fill = "#ffffff" if c.status != "ok" else color((getattr(c.metrics, metric) - lo) / span)
        out.append(f'<rect x="{x}" y="{y}" width="{cell_px}" height="{cell_px}" '
                   f'fill="{fill}" data-status="{c.status}"/>')
    gy = top + m * cell_px
    out.append(f'<text x="{left}" y="{gy + 16}" font-size="10" font-family="sans-serif">'
               f'{grid.axis1}: {grid.values1[0]:.3g} .. {grid.values1[-1]:.3g}</text>')
    if grid.axis2:
        out.append(f'<text x="4" y="{top + 10}" font-size="10" font-family="sans-serif">'
                   f'{grid.axis2}: {grid.values2[0]:.3g} .. {grid.values2[-1]:.3g}</text>')
    bx = left + n * cell_px + bar
    steps = 32
    bh = max(m * cell_px, 64) / steps
    for k in range(steps):
        out.append(f'<rect x="{bx}" y="{top + (steps - 1 - k) * bh:.2f}" width="{bar}" '
                   f'height="{bh:.2f}" fill="{color((k + 0.5) / steps)}"/>')
    out.append(f'<text x="{bx + bar + 4}" y="{top + 8}" font-size="9">{hi:.3g}</text>')
    out.append(f'<text x="{bx + bar + 4}" y="{top + steps * bh}" font-size="9">{lo:.3g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_svg(xs, series: dict[str, list], refs: dict[str, float], title: str,
             xlabel: str) -> str:
    """Line plot of one metric with optional horizontal reference lines."""
    w, h, pad = 420, 260, 45
    pts = [v for vals in series.values() for v in vals if v is not None] + \
          [v for v in refs.values() if v is not None and math.isfinite(v)]
    lo, hi = (min(pts), max(pts)) if pts else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1.0
    x0, x1 = xs[0], xs[-1] if xs[-1] > xs[0] else xs[0] + 1.0

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (w - 2 * pad)

    def py(y):
        return h - pad - (y - lo) / (hi - lo) * (h - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
           f'<metadata>{title} min={lo!r} max={hi!r}</metadata>',
           f'<text x="{pad}" y="16" font-size="12" font-family="sans-serif">{title}</text>',
           f'<rect x="{pad}" y="{pad}" width="{w - 2 * pad}" height="{h - 2 * pad}" '
           'fill="none" stroke="#888"/>']
    styles = ["#1f4e9c", "#c0392b", "#2e8b57"]
    for k, (name, vals) in enumerate(series.items()):
        seg = []
        for x, y in zip(xs, vals):
            if y is None:
                if len(seg) > 1:
                    out.append(f'<polyline fill="none" stroke="{styles[k % 3]}" '
                               f'points="{" ".join(seg)}"/>')
                seg = []
            else:
                seg.append(f"{px(x):.2f},{py(y):.2f}")
        if len(seg) > 1:
            out.append(f'<polyline fill="none" stroke="{styles[k % 3]}" points="{" ".join(seg)}"/>')
    dashes = ["", ' stroke-dasharray="6,4"']
    for k, (name, v) in enumerate(refs.items()):
        if v is None or not math.isfinite(v):
            continue
        out.append(f'<line x1="{pad}" x2="{w - pad}" y1="{py(v):.2f}" y2="{py(v):.2f}" '
                   f'stroke="{styles[(k + 1) % 3]}"{dashes[k % 2]}><title>{name}</title></line>')
    out.append(f'<text x="{pad}" y="{h - 12}" font-size="10">{xlabel}: {x0:.3g} .. {x1:.3g}'
               f'   range {lo:.4g} .. {hi:.4g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def gnuplot_script(grid: SweepGrid, csv_name: str) -> str:
    axes = [grid.axis1] + ([grid.axis2] if grid.axis2 else [])
    first_metric = 2 + len(axes) + 2
    lines = ["# heatmaps of the sweep metrics; run with: gnuplot <this file>",
             "set datafile separator ','",
             "set datafile missing ''",
             "set terminal pngcairo size 640,480",
             f"set xlabel '{grid.axis1}'"]
    if grid.axis2:
        lines += [f"set ylabel '{grid.axis2}'", "set view map"]
    for k, metric in enumerate(METRICS):
        col = first_metric + k
        lines.append(f"set output '{metric}.png'")
        lines.append(f"set title '{metric}'")
        if grid.axis2:
            lines.append(f"plot '{csv_name}' every ::1 using 2:3:(column({col})) "
                         "with points pointtype 5 pointsize 1 palette notitle")
        else:
            lines.append(f"plot '{csv_name}' every ::1 using 2:(column({col})) "
                         "with linespoints notitle")
    return "\n".join(lines) + "\n"


def emit(grid: SweepGrid, cells: list[SweepCell], config: Config, out_dir, stem: str,
         formats=("csv", "svg", "gnuplot")) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    csv_name = f"{stem}.csv"
    if "csv" in formats or "gnuplot" in formats:
        p = out_dir / csv_name
        p.write_text(cells_csv(grid, cells, config))
        written.append(p)
    if "svg" in formats:
        for metric in METRICS:
            p = out_dir / f"{stem}_{metric}.svg"
            if grid.axis2:
                p.write_text(heatmap_svg(grid, cells, metric))
            else:
                vals = [getattr(c.metrics, metric) if c.metrics else None for c in cells]
                p.write_text(line_svg(list(grid.values1), {metric: vals}, {}, metric,
                                      grid.axis1))
            written.append(p)
    if "gnuplot" in formats:
        p = out_dir / f"{stem}.gp"
        p.write_text(gnuplot_script(grid, csv_name))
        written.append(p)
    return written


# ------------------------------------------------------------ standard sweeps

def fig3_grid(config: Config) -> SweepGrid:
    n, m = config.run["grid_shape"]
    return SweepGrid.linspace("omega_over_omega_m", config.run["omega_range"], int(n),
                              "epsilon", config.run["epsilon_range"], int(m))


def sweep2d(config: Config, workers: int = 1, grid: SweepGrid | None = None):
    """(Omega, epsilon) sweep with the drive modulation switched off."""
    grid = fig3_grid(config) if grid is None else grid
    cfg = config.with_modulation(replace(config.modulation, eta=0.0))
    return grid, run_sweep(grid, cfg, workers)


@dataclass
class PhaseSweep:
    grid: SweepGrid
    cells: list
    references: dict = field(default_factory=dict)


def phase_config(config: Config) -> Config:
    """Defaults of the interference study unless the config sets both strengths."""
    mod = config.modulation
    if mod.epsilon > 0 and mod.eta > 0:
        return config
    om = 2.0 * config.system.omega_m
    return config.with_modulation(ModulationSpec.double(0.3, 0.9, om, 0.0))


def phase_sweep(config: Config, n_points: int | None = None, workers: int = 1) -> PhaseSweep:
    """Sweep phi over [0, 2 pi) and add the two single-modulation reference runs."""
    cfg = phase_config(config)
    n_points = int(cfg.run["phase_points"] if n_points is None else n_points)
    grid = SweepGrid("phi_over_pi", tuple(2.0 * np.arange(n_points) / n_points))
    cells = run_sweep(grid, cfg, workers)
    refs = {
        "epsilon_only": run_cell(cfg, {"eta": 0.0}),
        "eta_only": run_cell(cfg, {"epsilon": 0.0}),
    }
    return PhaseSweep(grid, cells, refs)


def emit_phase(ps: PhaseSweep, config: Config, out_dir, stem: str = "phase",
               formats=("csv", "svg", "gnuplot")) -> list[Path]:
    written = emit(ps.grid, ps.cells, config, out_dir, stem,
                   tuple(f for f in formats if f != "svg"))
    out_dir = Path(out_dir)
    ref_grid = SweepGrid("phi_over_pi", (0.0,))
    rows = []
    for name, cell in ps.references.items():
        text = cells_csv(ref_grid, [replace(cell, coords={"phi_over_pi": float("nan")})], config)
        rows.append((name, text.splitlines()[-1]))
    p = out_dir / f"{stem}_reference.csv"
    header = cells_csv(ref_grid, [], config).splitlines()[-1]
    p.write_text("reference," + header + "\n"
                 + "".join(f"{n},{r}\n" for n, r in rows))
    written.append(p)
    if "svg" in formats:
        xs = list(ps.grid.values1)
        for metric in METRICS:
            vals = [getattr(c.metrics, metric) if c.metrics else None for c in ps.cells]
            refs = {n: (getattr(c.metrics, metric) if c.metrics else None)
                    for n, c in ps.references.items()}
            p = out_dir / f"{stem}_{metric}.svg"
            p.write_text(line_svg(xs, {metric: vals}, refs, metric, "phi/pi"))
            written.append(p)
    return written
