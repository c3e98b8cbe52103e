"""Core/shell design sweeps of the background-index sensitivity eta.

The grid is traversed by continuation. A spine column (fixed core radius)
is walked first, starting from a particle where the pole or zero is known;
each shell-thickness row is then walked outwards from the spine in both
directions. Rows depend only on the spine, so they are independent work
items and the result does not depend on the number of workers.

Every finished cell is appended to a JSON-lines journal as one complete
line. A rerun with the same journal skips finished cells and reuses their
roots as continuation seeds.
"""
from __future__ import annotations

import json
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import complexplane as cp
from .direct import pole_shift_direct
from .gws import locate_sphere, sensitivity_eta, sphere_function
from .materials import MIXED, default_library
from .mie import LayeredSphere

__all__ = ["SweepConfig", "CellResult", "HeatmapResult", "run_sweep", "POLE_DEFAULTS",
           "ZERO_DEFAULTS"]

NM = 1e-9

POLE_DEFAULTS = dict(target="pole", r_c_range=(1 * NM, 65 * NM), r_c_steps=65,
                     d_s_range=(0.5 * NM, 6.5 * NM), d_s_steps=61,
                     seed=complex(0.715e7, -0.0744e7), seed_r_c=60 * NM, seed_d_s=10 * NM)
ZERO_DEFAULTS = dict(target="zero", r_c_range=(1 * NM, 250 * NM), r_c_steps=125,
                     d_s_range=(0.2 * NM, 5 * NM), d_s_steps=49,
                     seed=complex(1.2381e7, -0.01275e7), seed_r_c=60 * NM, seed_d_s=10 * NM)


@dataclass
class SweepConfig:
    target: str = "pole"
    r_c_range: tuple = POLE_DEFAULTS["r_c_range"]
    r_c_steps: int = 20
    d_s_range: tuple = POLE_DEFAULTS["d_s_range"]
    d_s_steps: int = 16
    seed: complex = POLE_DEFAULTS["seed"]
    seed_r_c: float = 60 * NM
    seed_d_s: float = 10 * NM
    param: str = "n_b"
    order: int = 1
    core: str = "silica"
    shell: str = "gold"
    background: str = "water"
    cross_check_fraction: float = 0.05
    cross_check_delta: float = 1e-4
    rng_seed: int = 0

    def __post_init__(self):
        if self.target not in ("pole", "zero"):
            raise ValueError("target must be 'pole' or 'zero'")
        for name in ("r_c_range", "d_s_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo < hi):
                raise ValueError(f"{name} must satisfy 0 < lo < hi")
            setattr(self, name, (float(lo), float(hi)))
        if self.r_c_steps < 2 or self.d_s_steps < 2:
            raise ValueError("grids need at least 2 steps per axis")
        if not 0 <= self.cross_check_fraction <= 1:
            raise ValueError("cross_check_fraction must lie in [0, 1]")
        self.seed = complex(self.seed)

    @property
    def r_c_axis(self) -> np.ndarray:
        return np.linspace(*self.r_c_range, self.r_c_steps)

    @property
    def d_s_axis(self) -> np.ndarray:
        return np.linspace(*self.d_s_range, self.d_s_steps)


@dataclass
class CellResult:
    i: int  # r_c index
    j: int  # d_s index
    r_c: float
    d_s: float
    ok: bool
    k_re: float = math.nan
    k_im: float = math.nan
    eta_re: float = math.nan
    eta_im: float = math.nan
    winding: int = 0
    iterations: int = 0
    direct_eta_re: float = math.nan
    direct_eta_im: float = math.nan
    error: str = ""

    @property
    def k(self) -> complex:
        return complex(self.k_re, self.k_im)

    @property
    def eta(self) -> complex:
        return complex(self.eta_re, self.eta_im)


CSV_COLUMNS = ("i", "j", "r_c_m", "d_s_m", "ok", "k_re_per_m", "k_im_per_m", "eta_re",
               "eta_im", "abs_re_eta", "abs_im_eta", "q_factor", "winding", "direct_eta_re",
               "direct_eta_im", "error")


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


@dataclass
class HeatmapResult:
    config: SweepConfig
    cells: dict = field(default_factory=dict)  # (i, j) -> CellResult

    def grid(self, attr: str) -> np.ndarray:
        """Array of shape (d_s_steps, r_c_steps) of a cell attribute (nan if failed)."""
        out = np.full((self.config.d_s_steps, self.config.r_c_steps), np.nan)
        for (i, j), c in self.cells.items():
            if c.ok:
                if attr == "abs_re_eta":
                    out[j, i] = abs(c.eta_re)
                elif attr == "abs_im_eta":
                    out[j, i] = abs(c.eta_im)
                else:
                    out[j, i] = getattr(c, attr)
        return out

    @property
    def failures(self) -> list:
        return [c for c in self.cells.values() if not c.ok]

    def argmax(self, attr: str):
        g = self.grid(attr)
        if np.all(np.isnan(g)):
            return None
        j, i = np.unravel_index(np.nanargmax(g), g.shape)
        c = self.cells[(int(i), int(j))]
        return {"i": int(i), "j": int(j), "r_c_m": c.r_c, "d_s_m": c.d_s, "value": float(g[j, i])}

    def rows(self):
        for key in sorted(self.cells, key=lambda ij: (ij[1], ij[0])):
            c = self.cells[key]
            k = c.k
            q = k.real / (2 * abs(k.imag)) if c.ok and k.imag != 0 else math.nan
            yield (c.i, c.j, c.r_c, c.d_s, c.ok, c.k_re, c.k_im, c.eta_re, c.eta_im,
                   abs(c.eta_re), abs(c.eta_im), q, c.winding, c.direct_eta_re,
                   c.direct_eta_im, c.error)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for row in self.rows():
                fh.write(",".join(_fmt(v).replace(",", ";") for v in row) + "\n")

    def summary(self) -> dict:
        checks = [c for c in self.cells.values() if c.ok and not math.isnan(c.direct_eta_re)]
        gaps = [abs(c.eta - complex(c.direct_eta_re, c.direct_eta_im)) / max(abs(c.eta), 1e-300)
                for c in checks]
        im = self.grid("abs_im_eta")
        return {
            "target": self.config.target,
            "param": self.config.param,
            "grid": {"r_c_steps": self.config.r_c_steps, "d_s_steps": self.config.d_s_steps,
                     "r_c_range_m": list(self.config.r_c_range),
                     "d_s_range_m": list(self.config.d_s_range)},
            "cells": len(self.cells),
            "failed_cells": len(self.failures),
            "argmax_abs_re_eta": self.argmax("abs_re_eta"),
            "argmax_abs_im_eta": self.argmax("abs_im_eta"),
            "cells_abs_im_eta_below_0.05": int(np.sum(im < 0.05)),
            "direct_cross_checks": len(checks),
            "direct_max_relative_gap": max(gaps) if gaps else None,
        }


class _Journal:
    def __init__(self, path):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()

    def load(self) -> dict:
        done = {}
        if self.path is None or not self.path.exists():
            return done
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                if not line.endswith("\n"):
                    break  # torn final record from an interrupted run
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue
                c = CellResult(**rec)
                done[(c.i, c.j)] = c
        return done

    def append(self, cell: CellResult) -> None:
        if self.path is None:
            return
        line = json.dumps(asdict(cell), sort_keys=True, allow_nan=True) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())


class _Solver:
    def __init__(self, cfg: SweepConfig, library):
        self.cfg = cfg
        self.lib = library if library is not None else default_library()
        sphere = LayeredSphere.core_shell(cfg.seed_r_c, cfg.seed_d_s, cfg.core, cfg.shell,
                                          cfg.background)
        self.template = sphere_function(sphere, cfg.order, "a", self.lib, MIXED,
                                        k_ref=cfg.seed.real)

    def function(self, r_c, d_s, k_ref):
        return self.template.with_params(r_c=float(r_c), d_s=float(d_s), k_ref=float(k_ref))

    def move(self, p_from, k_from, p_to):
        """Continue the root from parameters p_from to p_to, then polish it."""
        kind = self.cfg.target
        k_ref = k_from.real

        def family(p):
            fn = self.function(p[0], p[1], k_ref)
            return fn.pole_function() if kind == "pole" else fn.zero_function()

        path = [np.asarray(p_from, float), np.asarray(p_to, float)]
        recs = cp.track(family, path, k_from, kind=kind, tol=1e-11, max_refine=10)
        rec, fn = locate_sphere(self.function(p_to[0], p_to[1], recs[-1].location.real),
                                recs[-1].location, kind, verify=True)
        # the polish must not hop to a different root: follow the tracked root
        # along the freeze point and require it to land on the polished one
        def along_ref(x):
            f = self.function(p_to[0], p_to[1], x)
            return f.pole_function() if kind == "pole" else f.zero_function()

        refs = np.linspace(k_ref, fn.params["k_ref"], 9)
        end = cp.track(along_ref, refs, recs[-1].location, kind=kind, tol=1e-11,
                       max_refine=10)[-1].location
        if abs(end - rec.location) > 1e-6 * abs(rec.location):
            raise cp.LostTrack("self-consistent polish moved away from the tracked root")
        return rec, fn

    def cell(self, i, j, p_from, k_from, check):
        cfg = self.cfg
        r_c, d_s = cfg.r_c_axis[i], cfg.d_s_axis[j]
        try:
            rec, fn = self.move(p_from, k_from, (r_c, d_s))
            if rec.winding != -1:
                raise cp.LostTrack(f"winding {rec.winding} at the located {cfg.target}")
            eta = sensitivity_eta(fn, rec, cfg.param).eta
            out = CellResult(i, j, float(r_c), float(d_s), True, rec.location.real,
                             rec.location.imag, eta.real, eta.imag, rec.winding, rec.iterations)
            if check:
                d = pole_shift_direct(fn, rec.location, cfg.param, cfg.cross_check_delta,
                                      kind=cfg.target)
                de = d.delta_k / cfg.cross_check_delta / abs(rec.location.imag)
                out.direct_eta_re, out.direct_eta_im = de.real, de.imag
            return out
        except (ArithmeticError, ValueError) as exc:
            return CellResult(i, j, float(r_c), float(d_s), False,
                              error=f"{type(exc).__name__}: {exc}"[:300])


def run_sweep(cfg: SweepConfig, journal_path=None, threads: int = 1, library=None,
              progress=None) -> HeatmapResult:
    """Run (or resume) a sweep and return every cell.

    ``progress`` is an optional callable receiving each finished cell.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    solver = _Solver(cfg, library)
    journal = _Journal(journal_path)
    done = journal.load()
    result = HeatmapResult(cfg, dict(done))
    nr, nd = cfg.r_c_steps, cfg.d_s_steps
    rng = np.random.default_rng(cfg.rng_seed)
    n_check = int(round(cfg.cross_check_fraction * nr * nd))
    check_cells = set()
    if n_check:
        flat = rng.choice(nr * nd, size=n_check, replace=False)
        check_cells = {(int(f % nr), int(f // nr)) for f in flat}

    def record(cell):
        if (cell.i, cell.j) not in done:
            journal.append(cell)
        result.cells[(cell.i, cell.j)] = cell
        if progress:
            progress(cell)

    r_axis, d_axis = cfg.r_c_axis, cfg.d_s_axis
    spine_i = int(np.argmin(np.abs(r_axis - cfg.seed_r_c)))
    # spine: from the seed particle to the thickest-shell cell of the spine column, then down
    p_prev, k_prev = (cfg.seed_r_c, cfg.seed_d_s), cfg.seed
    spine = {}
    for j in reversed(range(nd)):
        key = (spine_i, j)
        if key in done and done[key].ok:
            cell = done[key]
        else:
            cell = done.get(key) or solver.cell(spine_i, j, p_prev, k_prev, key in check_cells)
            record(cell)
        if cell.ok:
            spine[j] = cell
            p_prev, k_prev = (cell.r_c, cell.d_s), cell.k

    def walk_row(j):
        out = []
        if j not in spine:
            # spine failed here: borrow the nearest successful spine cell
            if not spine:
                return [CellResult(i, j, float(r_axis[i]), float(d_axis[j]), False,
                                   error="LostTrack: no spine cell solved")
                        for i in range(nr) if i != spine_i and (i, j) not in done]
            jj = min(spine, key=lambda s: abs(s - j))
            start = spine[jj]
        else:
            start = spine[j]
        for direction in (1, -1):
            p, k = (start.r_c, start.d_s), start.k
            i = spine_i + direction
            while 0 <= i < nr:
                key = (i, j)
                if key in done:
                    cell = done[key]
                else:
                    cell = solver.cell(i, j, p, k, key in check_cells)
                    out.append(cell)
                    journal.append(cell)
                if cell.ok:
                    p, k = (cell.r_c, cell.d_s), cell.k
                i += direction
        return out

    if threads == 1:
        rows = [walk_row(j) for j in range(nd)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(walk_row, range(nd)))
    for row in rows:
        for cell in row:
            result.cells[(cell.i, cell.j)] = cell
            if progress:
                progress(cell)
    return result
