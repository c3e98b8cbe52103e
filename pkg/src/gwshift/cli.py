"""Command-line front end.

    gwshift [--config run.toml] [--out DIR] [--threads N] [--format csv|json] VERB ...

Verbs: spectrum, polemap, sweep, shift, verify, trajectory. Exit codes:
0 success, 1 verification failure, 2 configuration error, 3 numerical
failure. Every JSON file carries ``schema_version``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import complexplane as cp
from . import gws
from .direct import pole_shift_direct
from .materials import FROZEN, MIXED, Constant, MaterialLibrary, default_library
from .mie import LayeredSphere, cross_sections, layered_fg
from .sweep import POLE_DEFAULTS, ZERO_DEFAULTS, SweepConfig, run_sweep

SCHEMA_VERSION = 1
NM = 1e-9

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_SEEDS = {"pole": POLE_DEFAULTS["seed"], "zero": ZERO_DEFAULTS["seed"]}

# accepted keys per config table; anything else is a configuration error
_SCHEMA = {
    "": {"rng_seed", "materials", "particle", "spectrum", "polemap", "sweep", "shift",
         "trajectory", "verify"},
    "particle": {"r_c_nm", "d_s_nm", "core", "shell", "background", "order", "coefficient"},
    "spectrum": {"k_min", "k_max", "points"},
    "polemap": {"re_min", "re_max", "im_min", "im_max", "nx", "ny"},
    "sweep": {"target", "r_c_range_nm", "r_c_steps", "d_s_range_nm", "d_s_steps", "seed",
              "seed_r_c_nm", "seed_d_s_nm", "param", "cross_check_fraction",
              "cross_check_delta", "journal"},
    "shift": {"target", "param", "delta", "seed"},
    "trajectory": {"target", "param", "start", "stop", "steps", "seed"},
    "verify": {"slabs"},
}


class ConfigError(ValueError):
    pass


# -- configuration --------------------------------------------------------------------

def _toml_load(path: Path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def load_config(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    cfg = _toml_load(path)
    for key in cfg:
        if key not in _SCHEMA[""]:
            raise ConfigError(f"unknown config key {key!r}")
    for table, allowed in _SCHEMA.items():
        if not table or table not in cfg:
            continue
        if not isinstance(cfg[table], dict):
            raise ConfigError(f"[{table}] must be a table")
        extra = set(cfg[table]) - allowed
        if extra:
            raise ConfigError(f"unknown keys in [{table}]: {sorted(extra)}")
    mats = cfg.get("materials", {})
    base = path.parent
    cfg["materials"] = {k: str(base / v) if not Path(v).is_absolute() else v
                        for k, v in mats.items()}
    return cfg


def _complex(value, what) -> complex:
    try:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError
            return complex(float(value[0]), float(value[1]))
        return complex(str(value).replace(" ", ""))
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: expected [re, im] or a complex literal, got {value!r}") from None


def _library(cfg) -> MaterialLibrary:
    lib = default_library()
    mats = cfg.get("materials", {})
    if mats:
        extra = MaterialLibrary.from_files(mats)
        lib = lib.with_entries(**{k: extra[k] for k in extra})
    return lib


def _particle(cfg, lib):
    p = cfg.get("particle", {})
    r_c = float(p.get("r_c_nm", 60.0)) * NM
    d_s = float(p.get("d_s_nm", 10.0)) * NM
    if r_c <= 0 or d_s < 0:
        raise ConfigError("particle needs r_c_nm > 0 and d_s_nm >= 0")
    sphere = LayeredSphere.core_shell(r_c, d_s, p.get("core", "silica"), p.get("shell", "gold"),
                                      p.get("background", "water"))
    for name in (*sphere.materials, sphere.background):
        lib[name]  # raises KeyError for unknown ids
    order = int(p.get("order", 1))
    coeff = p.get("coefficient", "a")
    if order < 1 or coeff not in ("a", "b"):
        raise ConfigError("particle order must be >= 1 and coefficient 'a' or 'b'")
    return sphere, order, coeff


def _target(value):
    if value not in ("pole", "zero"):
        raise ConfigError(f"target must be 'pole' or 'zero', got {value!r}")
    return value


# -- output helpers ---------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if math.isnan(x) else x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path, payload: dict) -> None:
    body = {"schema_version": SCHEMA_VERSION, **payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(body), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def write_table(path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_num(v) for v in row) + "\n")


def _emit(args, stem, columns, rows, extra=None):
    """Write a table as CSV or JSON (per --format) and return its path."""
    out = Path(args.out)
    if args.format == "json":
        path = out / f"{stem}.json"
        write_json(path, {"columns": list(columns), "rows": [list(r) for r in rows],
                          **(extra or {})})
    else:
        path = out / f"{stem}.csv"
        write_table(path, columns, rows)
    return path


# -- verbs --------------------------------------------------------------------------

SPECTRUM_COLUMNS = ("k_per_m", "sigma_ext_m2", "sigma_sca_m2", "sigma_abs_m2")


def spectrum_rows(sphere, k_axis, lib):
    ext, sca, ab = cross_sections(sphere, np.asarray(k_axis, float), library=lib)
    return [tuple(float(v) for v in row) for row in zip(k_axis, ext, sca, ab)]


def cmd_spectrum(args, cfg):
    lib = _library(cfg)
    sphere, _, _ = _particle(cfg, lib)
    s = cfg.get("spectrum", {})
    k_min, k_max = float(s.get("k_min", 0.4e7)), float(s.get("k_max", 1.3e7))
    points = int(s.get("points", 451))
    if not 0 < k_min < k_max or points < 2:
        raise ConfigError("spectrum needs 0 < k_min < k_max and points >= 2")
    k_axis = np.linspace(k_min, k_max, points)

    def run():
        rows = spectrum_rows(sphere, k_axis, lib)
        path = _emit(args, "spectrum", SPECTRUM_COLUMNS, rows)
        from .plotting import spectrum_svg
        arr = np.array(rows)
        spectrum_svg(Path(args.out) / "spectrum.svg", arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])
        peak = arr[np.argmax(arr[:, 1]), 0]
        print(f"wrote {path} ({points} rows); extinction peak at k = {peak:.6e} 1/m")
        return EXIT_OK
    return run


def _grid_indices(model, K):
    if model.supports_analytic:
        return np.asarray(model.index(K, "analytic_continuation"), dtype=complex) * np.ones_like(K)
    return np.asarray(model.index(np.real(K), FROZEN), dtype=complex)


def polemap_grid(sphere, order, coeff, lib, re_axis, im_axis):
    """log10 |coefficient| over a complex-k grid (tabulated data frozen at Re k)."""
    K = re_axis[None, :] + 1j * im_axis[:, None]
    n_b = _grid_indices(lib[sphere.background], K)
    rel = [_grid_indices(lib[m], K) / n_b for m in sphere.materials]
    xs = [K * n_b * r for r in sphere.radii]
    f, g = layered_fg(order, xs, rel, coeff)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log10(np.abs(f / g))


def find_markers(sphere, order, coeff, lib, re_axis, im_axis, log_abs, max_candidates=48):
    """Winding-verified poles and zeros seeded from local extrema of the map."""
    fn0 = gws.sphere_function(sphere, order, coeff, lib, MIXED)
    z = np.where(np.isfinite(log_abs), log_abs, np.nan)
    cands = []
    ny, nx = z.shape
    for j in range(1, ny - 1):
        for i in range(1, nx - 1):
            win = z[j - 1:j + 2, i - 1:i + 2]
            if np.isnan(win).any():
                continue
            if z[j, i] == win.max():
                cands.append((-(z[j, i] - np.median(win)), "pole", j, i))
            elif z[j, i] == win.min():
                cands.append((z[j, i] - np.median(win), "zero", j, i))
    cands.sort()
    found = []
    lo_re, hi_re, lo_im, hi_im = re_axis[0], re_axis[-1], im_axis[0], im_axis[-1]
    for _, kind, j, i in cands[:max_candidates]:
        seed = complex(re_axis[i], im_axis[j])
        try:
            rec, _ = gws.locate_sphere(fn0.with_params(k_ref=seed.real), seed, kind)
        except (ArithmeticError, ValueError):
            continue
        k = rec.location
        if rec.winding != -1 or not (lo_re <= k.real <= hi_re and lo_im <= k.imag <= hi_im):
            continue
        if any(f["kind"] == kind and abs(f["k"] - k) <= 1e-6 * abs(k) for f in found):
            continue
        found.append({"kind": kind, "k": k})
    found.sort(key=lambda f: (f["kind"], f["k"].real))
    return [{"kind": f["kind"], "k_re_per_m": f["k"].real, "k_im_per_m": f["k"].imag,
             "q_factor": f["k"].real / (2 * abs(f["k"].imag)) if f["k"].imag else math.inf,
             "winding": -1} for f in found]


def cmd_polemap(args, cfg):
    lib = _library(cfg)
    sphere, order, coeff = _particle(cfg, lib)
    p = cfg.get("polemap", {})
    re_axis = np.linspace(float(p.get("re_min", 0.3e7)), float(p.get("re_max", 1.4e7)),
                          int(p.get("nx", 111)))
    im_axis = np.linspace(float(p.get("im_min", -0.25e7)), float(p.get("im_max", 0.0)),
                          int(p.get("ny", 51)))
    if re_axis[0] <= 0 or re_axis[-1] <= re_axis[0] or im_axis[-1] <= im_axis[0]:
        raise ConfigError("polemap needs 0 < re_min < re_max and im_min < im_max")

    def run():
        log_abs = polemap_grid(sphere, order, coeff, lib, re_axis, im_axis)
        rows = [(float(re_axis[i]), float(im_axis[j]), float(log_abs[j, i]))
                for j in range(len(im_axis)) for i in range(len(re_axis))]
        path = _emit(args, "polemap", ("k_re_per_m", "k_im_per_m", "log10_abs_coefficient"),
                     rows)
        markers = find_markers(sphere, order, coeff, lib, re_axis, im_axis, log_abs)
        write_table(Path(args.out) / "polemap_markers.csv",
                    ("kind", "k_re_per_m", "k_im_per_m", "q_factor", "winding"),
                    [(m["kind"], m["k_re_per_m"], m["k_im_per_m"], m["q_factor"], m["winding"])
                     for m in markers])
        write_json(Path(args.out) / "polemap_summary.json", {"markers": markers})
        from .plotting import polemap_svg
        polemap_svg(Path(args.out) / "polemap.svg", re_axis, im_axis, log_abs, markers)
        print(f"wrote {path}; {len(markers)} verified singularities")
        for m in markers:
            print(f"  {m['kind']:4s} k = {m['k_re_per_m']:.7e} {m['k_im_per_m']:+.7e}i"
                  f"  Q = {m['q_factor']:.3f}")
        return EXIT_OK
    return run


def sweep_config(cfg, overrides) -> SweepConfig:
    s = dict(cfg.get("sweep", {}))
    target = _target(overrides.get("target") or s.get("target", "pole"))
    base = POLE_DEFAULTS if target == "pole" else ZERO_DEFAULTS
    p = cfg.get("particle", {})
    kw = dict(target=target,
              r_c_range=tuple(x * NM for x in s.get("r_c_range_nm",
                                                     [v / NM for v in base["r_c_range"]])),
              d_s_range=tuple(x * NM for x in s.get("d_s_range_nm",
                                                     [v / NM for v in base["d_s_range"]])),
              r_c_steps=int(s.get("r_c_steps", 20)), d_s_steps=int(s.get("d_s_steps", 16)),
              seed=_complex(s["seed"], "sweep.seed") if "seed" in s else base["seed"],
              seed_r_c=float(s.get("seed_r_c_nm", 60.0)) * NM,
              seed_d_s=float(s.get("seed_d_s_nm", 10.0)) * NM,
              param=s.get("param", "n_b"), order=int(p.get("order", 1)),
              core=p.get("core", "silica"), shell=p.get("shell", "gold"),
              background=p.get("background", "water"),
              cross_check_fraction=float(s.get("cross_check_fraction", 0.05)),
              cross_check_delta=float(s.get("cross_check_delta", 1e-4)),
              rng_seed=int(cfg.get("rng_seed", 0)))
    if overrides.get("full"):
        kw["r_c_steps"], kw["d_s_steps"] = base["r_c_steps"], base["d_s_steps"]
    if overrides.get("steps"):
        kw["r_c_steps"], kw["d_s_steps"] = overrides["steps"]
    if len(kw["r_c_range"]) != 2 or len(kw["d_s_range"]) != 2:
        raise ConfigError("sweep ranges must be [lo, hi] pairs")
    return SweepConfig(**kw)


def cmd_sweep(args, cfg):
    lib = _library(cfg)
    scfg = sweep_config(cfg, {"target": args.target, "steps": args.steps, "full": args.full})
    for name in (scfg.core, scfg.shell, scfg.background):
        lib[name]
    journal = args.journal or cfg.get("sweep", {}).get("journal")
    out = Path(args.out)
    journal = Path(journal) if journal else out / f"sweep_{scfg.target}_journal.jsonl"

    def run():
        t0 = time.perf_counter()
        res = run_sweep(scfg, journal_path=journal, threads=args.threads, library=lib)
        stem = f"sweep_{scfg.target}"
        if args.format == "json":
            from .sweep import CSV_COLUMNS
            write_json(out / f"{stem}.json", {"columns": list(CSV_COLUMNS),
                                              "rows": [list(r) for r in res.rows()]})
        else:
            res.to_csv(out / f"{stem}.csv")
        summary = res.summary()
        write_json(out / f"{stem}_summary.json", summary)
        from .plotting import heatmap_svg
        heatmap_svg(out / f"{stem}_abs_re_eta.svg", scfg.r_c_axis, scfg.d_s_axis,
                    res.grid("abs_re_eta"), r"$|\mathrm{Re}\,\eta_b|$")
        heatmap_svg(out / f"{stem}_abs_im_eta.svg", scfg.r_c_axis, scfg.d_s_axis,
                    res.grid("abs_im_eta"), r"$|\mathrm{Im}\,\eta_b|$")
        a, b = summary["argmax_abs_re_eta"], summary["argmax_abs_im_eta"]
        print(f"{scfg.target} sweep {scfg.r_c_steps}x{scfg.d_s_steps}: "
              f"{summary['failed_cells']} failed cells, {time.perf_counter() - t0:.1f} s")
        for label, m in (("|Re eta|", a), ("|Im eta|", b)):
            if m:
                print(f"  max {label} = {m['value']:.4g} at r_c = {m['r_c_m'] / NM:.2f} nm, "
                      f"d_s = {m['d_s_m'] / NM:.2f} nm")
        return EXIT_OK
    return run


def _scattering_setup(cfg, section, args):
    lib = _library(cfg)
    sphere, order, coeff = _particle(cfg, lib)
    s = cfg.get(section, {})
    target = _target(args.target or s.get("target", "pole"))
    param = args.param or s.get("param", "n_b")
    seed_raw = args.seed if args.seed is not None else s.get("seed")
    seed = _complex(seed_raw, f"{section}.seed") if seed_raw is not None else DEFAULT_SEEDS[target]
    M = gws.sphere_function(sphere, order, coeff, lib, MIXED, k_ref=seed.real)
    if param not in M.params or param == "k_ref":
        raise ConfigError(f"unknown parameter {param!r}; choose from "
                          f"{sorted(p for p in M.params if p != 'k_ref')}")
    return lib, sphere, M, target, param, seed


def shift_table(M, k, target, param, delta, analytic=None):
    """Rows (method, delta_k) plus pairwise relative gaps."""
    shift = gws.pole_shift if target == "pole" else gws.zero_shift
    out = {"gws_residue": shift(M, k, param, delta, "gws_residue").delta_k,
           "ratio_form": shift(M, k, param, delta, "ratio_form").delta_k,
           "direct": pole_shift_direct(M, k, param, delta, kind=target).delta_k}
    if analytic is not None:
        out["analytic"] = analytic
    gaps = {}
    names = list(out)
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            x, y = out[names[a]], out[names[b]]
            scale = max(abs(x), abs(y))
            gaps[f"{names[a]}_vs_{names[b]}"] = 0.0 if scale == 0 else abs(x - y) / scale
    return out, gaps


def cmd_shift(args, cfg):
    lib, sphere, M, target, param, seed = _scattering_setup(cfg, "shift", args)
    s = cfg.get("shift", {})
    delta = float(args.delta if args.delta is not None else s.get("delta", 1e-4))

    def run():
        rec, fn = gws.locate_sphere(M, seed, target)
        if rec.winding != -1:
            raise cp.LostTrack(f"{target} at {rec.location} is not simple (winding {rec.winding})")
        analytic = None
        if (param == "r_c" and len(sphere.radii) == 1
                and all(isinstance(lib[m], Constant) for m in (*sphere.materials,
                                                                sphere.background))):
            analytic = gws.radius_sensitivity_analytic(rec.location, sphere.core_radius) * delta
        shifts, gaps = shift_table(fn, rec.location, target, param, delta, analytic)
        rows = [(m, v.real, v.imag) for m, v in shifts.items()]
        path = _emit(args, "shift", ("method", "delta_k_re_per_m", "delta_k_im_per_m"), rows,
                     {"k": rec.location, "gaps": gaps})
        write_json(Path(args.out) / "shift_summary.json",
                   {"target": target, "param": param, "delta": delta, "k": rec.location,
                    "shifts": shifts, "relative_gaps": gaps})
        print(f"{target} at k = {rec.location.real:.9e} {rec.location.imag:+.9e}i, "
              f"{param} += {delta:g}")
        for m, v in shifts.items():
            print(f"  {m:12s} dk = {v.real:+.9e} {v.imag:+.9e}i")
        for name, g in gaps.items():
            print(f"  {name:28s} {g:.3e}")
        print(f"wrote {path}")
        return EXIT_OK
    return run


def trace(M, target, param, values, seed, max_depth=8):
    """Self-consistent root at each parameter value, bisecting big steps."""
    out = []
    k = complex(seed)
    prev = None
    for v in values:
        todo = [(prev, v, 0)] if prev is not None else [(v, v, 0)]
        while todo:
            a, b, depth = todo.pop()
            try:
                rec, _ = gws.locate_sphere(M.with_params(**{param: b}, k_ref=k.real), k, target)
                jump = abs(rec.location - k)
                ok = rec.winding == -1 and (prev is None or jump <= 0.5 * max(abs(k.imag),
                                                                              1e-3 * abs(k)))
            except ArithmeticError:
                ok = False
            if ok:
                k = rec.location
                continue
            if depth >= max_depth or prev is None:
                raise cp.LostTrack(f"lost the {target} near {param} = {b!r}")
            mid = 0.5 * (a + b)
            todo.append((mid, b, depth + 1))
            todo.append((a, mid, depth + 1))
        out.append((float(v), k, rec.winding))
        prev = v
    return out


def cmd_trajectory(args, cfg):
    lib, sphere, M, target, param, seed = _scattering_setup(cfg, "trajectory", args)
    s = cfg.get("trajectory", {})
    nominal = M.params[param]
    start = float(s.get("start", nominal))
    stop = float(s.get("stop", nominal * 1.25 if nominal else 0.05))
    steps = int(s.get("steps", 21))
    if steps < 2:
        raise ConfigError("trajectory needs steps >= 2")
    values = np.linspace(start, stop, steps)

    def run():
        pts = trace(M, target, param, values, seed)
        rows = [(v, k.real, k.imag, k.real / (2 * abs(k.imag)), w) for v, k, w in pts]
        path = _emit(args, "trajectory", (param, "k_re_per_m", "k_im_per_m", "q_factor",
                                          "winding"), rows)
        from .plotting import trajectory_svg
        trajectory_svg(Path(args.out) / "trajectory.svg", [k for _, k, _ in pts],
                       [v for v, _, _ in pts], param)
        print(f"wrote {path} ({len(rows)} points)")
        return EXIT_OK
    return run


def cmd_verify(args, cfg):
    from . import verification
    n_slabs = int(cfg.get("verify", {}).get("slabs", 100))
    seed = int(cfg.get("rng_seed", 0))
    lib = _library(cfg)

    def run():
        report = verification.run_suite(args.suite, n_slabs=n_slabs, seed=seed, library=lib)
        for c in report["checks"]:
            flag = "PASS" if c["ok"] else "FAIL"
            print(f"[{flag}] {c['name']}: {c['value']:.3e} (limit {c['limit']:.1e})")
        write_json(Path(args.out) / f"verify_{args.suite}.json", report)
        print(f"suite {args.suite}: {'passed' if report['passed'] else 'FAILED'}")
        return EXIT_OK if report["passed"] else EXIT_VERIFY
    return run


# -- entry point ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="TOML run configuration")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="gwshift", parents=[common],
                                     description="Pole and zero shifts of scattering functions")
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("spectrum", parents=[common], help="cross sections over real k")
    sub.add_parser("polemap", parents=[common], help="log|a| over complex k with singularities")
    sp = sub.add_parser("sweep", parents=[common], help="eta over a core/shell grid")
    sp.add_argument("--target", choices=("pole", "zero"))
    sp.add_argument("--steps", type=int, nargs=2, metavar=("R_C", "D_S"))
    sp.add_argument("--full", action="store_true", help="use the dense default grid")
    sp.add_argument("--journal", help="journal path (default: inside --out)")
    for name, helptext in (("shift", "compare first-order and direct shifts"),
                           ("trajectory", "follow a singularity along a parameter")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--target", choices=("pole", "zero"))
        p.add_argument("--param")
        p.add_argument("--seed", help="complex seed such as 0.715e7-0.0744e7j")
        if name == "shift":
            p.add_argument("--delta", type=float)
    vp = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    vp.add_argument("suite", choices=("slab", "identities", "analytic-sphere", "residues"))
    return parser


VERBS = {"spectrum": cmd_spectrum, "polemap": cmd_polemap, "sweep": cmd_sweep,
         "shift": cmd_shift, "verify": cmd_verify, "trajectory": cmd_trajectory}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    for name, default in (("config", None), ("out", "."), ("threads", 1), ("format", "csv")):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        run = VERBS[args.verb](args, cfg)
    except (ConfigError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run()
    except (ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
