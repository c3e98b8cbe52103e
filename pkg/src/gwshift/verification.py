"""Invariant suites shared by ``gwshift verify`` and the test-suite.

Each suite returns ``{"suite", "passed", "checks"}`` where every check is a
dict with ``name``, ``value``, ``limit`` and ``ok`` (value <= limit).
"""
from __future__ import annotations

import numpy as np

from . import gws
from . import slab1d as sl
from .direct import pole_shift_direct
from .materials import Constant, MIXED, default_library
from .mie import LayeredSphere

__all__ = ["SUITES", "run_suite", "nondispersive_sphere", "lspr_pole", "trace_radius"]

SUITES = ("slab", "identities", "analytic-sphere", "residues")

ND_RADIUS = 100e-9
ND_SEED = complex(9.4557e6, -6.52e6)


def _check(name, value, limit):
    value = float(value)
    return {"name": name, "value": value, "limit": float(limit), "ok": bool(value <= limit)}


def nondispersive_sphere(library=None, radius=ND_RADIUS, n_core=2.0, n_b=1.33):
    """Sphere of constant index n_core in a constant medium n_b, as (M, pole record)."""
    lib = (library or default_library()).with_entries(nd_core=Constant(n_core),
                                                      nd_medium=Constant(n_b))
    sphere = LayeredSphere((radius,), ("nd_core",), "nd_medium")
    M = gws.sphere_function(sphere, 1, "a", lib, MIXED)
    rec = gws.locate(M, ND_SEED * ND_RADIUS / radius)
    return M, rec


def lspr_pole(library=None, r_c=60e-9, d_s=10e-9, seed=complex(0.715e7, -0.0744e7)):
    sphere = LayeredSphere.core_shell(r_c, d_s)
    M = gws.sphere_function(sphere, 1, "a", library, MIXED, k_ref=seed.real)
    return gws.locate_sphere(M, seed, "pole")


def trace_radius(M, k0, r0, factors):
    """Continue the pole of M in r_c over r0*factors (ordered outward from 1)."""
    fam = lambda r: M.with_params(r_c=float(r)).pole_function()  # noqa: E731
    out = {}
    for side in (factors[factors >= 1], factors[factors <= 1][::-1]):
        path = np.concatenate(([1.0], side)) * r0
        recs = gws.cp.track(fam, path, k0, kind="pole", tol=1e-14)
        for r, rec in zip(path[1:], recs[1:]):
            out[float(r)] = rec.location
    out[float(r0)] = k0
    return out


def suite_slab(n_slabs=100, seed=0, library=None):
    rng = np.random.default_rng(seed)
    checks = []
    empty = sl.Slab1D((), 2.25)
    S0 = sl.slab_smatrix(empty, 1.3e7 - 0.2e7j)
    checks.append(_check("zero-thickness slab S = [[0,1],[1,0]]",
                         np.abs(S0 - np.array([[0, 1], [1, 0]])).max(), 1e-15))
    for ident in sl.IDENTITIES:
        r = sl.verify_identity(empty, 1.1e7 + 0.1e7j, ident, "omega")
        checks.append(_check(f"zero-thickness slab identity {ident}", r.residual, 1e-15))
    recip = unit = cont = 0.0
    for _ in range(n_slabs):
        slab = sl.random_slab(rng)
        w = complex(rng.uniform(0.5e7, 2e7), rng.uniform(-0.2, 0.2) * 1e7)
        S = sl.slab_smatrix(slab, w)
        recip = max(recip, abs(S[0, 1] - S[1, 0]) / np.abs(S).max())
        f = sl.internal_fields(slab, w, int(rng.integers(0, 2)))
        cont = max(cont, f.continuity_residual(), f.port_residual())
        lossless = sl.random_slab(rng, lossy=False)
        S = sl.slab_smatrix(lossless, float(rng.uniform(0.5e7, 2e7)))
        unit = max(unit, np.abs(S.conj().T @ S - np.eye(2)).max())
    checks.append(_check("reciprocity |S12 - S21|/max|S|", recip, 1e-12))
    checks.append(_check("lossless unitarity |S^+S - I|", unit, 1e-12))
    checks.append(_check("field continuity and port matching", cont, 1e-10))
    return checks


def suite_identities(n_slabs=100, seed=0, library=None):
    rng = np.random.default_rng(seed)
    worst = {i: 0.0 for i in sl.IDENTITIES}
    for _ in range(n_slabs):
        slab = sl.random_slab(rng)
        nl = len(slab.layers)
        w = complex(rng.uniform(0.5e7, 2e7), 0.0)
        w += 1j * rng.uniform(-0.2, 0.2) * w.real
        params = ["omega", f"eps_scale:{rng.integers(nl)}", f"deps:{rng.integers(nl)}"]
        if nl > 1:
            params.append(f"thickness:{rng.integers(nl - 1)}")
        for ident in ("C", "A"):
            worst[ident] = max(worst[ident], sl.verify_identity(slab, w, ident).residual)
        for xi in params:
            for ident in ("D", "B"):
                worst[ident] = max(worst[ident],
                                   sl.verify_identity(slab, w, ident, xi).residual)
    return [_check("identity C (unconjugated products)", worst["C"], 1e-8),
            _check("identity D (unconjugated derivative)", worst["D"], 1e-6),
            _check("identity A (conjugated products)", worst["A"], 1e-8),
            _check("identity B (conjugated derivative)", worst["B"], 1e-6)]


def suite_analytic_sphere(library=None, **_):
    M, rec = nondispersive_sphere(library)
    k, r = rec.location, ND_RADIUS
    law = gws.radius_sensitivity_analytic(k, r)
    checks = []
    for method in ("gws_residue", "ratio_form"):
        got = gws.pole_shift(M, k, "r_c", 1.0, method).delta_k
        checks.append(_check(f"{method} dk/dr_c vs -k_p/r_c", abs(got - law) / abs(law), 1e-6))
    h = 1e-4 * r
    up = pole_shift_direct(M, k, "r_c", h).k_after
    down = pole_shift_direct(M, k, "r_c", -h).k_after
    direct = (up - down) / (2 * h)
    checks.append(_check("direct dk/dr_c vs -k_p/r_c", abs(direct - law) / abs(law), 1e-6))
    traced = trace_radius(M, k, r, np.linspace(0.8, 1.25, 10))
    inv = [kk * rr for rr, kk in traced.items()]
    spread = max(abs(v - k * r) for v in inv) / abs(k * r)
    checks.append(_check("k_p r_c constant over [0.8, 1.25] r_c", spread, 1e-8))
    return checks


def suite_residues(library=None, **_):
    checks = []
    rec, fn = lspr_pole(library)
    res = gws.residue_of_log_derivative(fn, "k", rec.location)
    checks.append(_check("Res L_k = i at the 60/10 nm LSPR pole", abs(res - 1j), 1e-6))
    M, rec = nondispersive_sphere(library)
    res = gws.residue_of_log_derivative(M, "k", rec.location)
    checks.append(_check("Res L_k = i at the nondispersive sphere pole", abs(res - 1j), 1e-6))
    zrec, zfn = gws.locate_sphere(fn, complex(1.2381e7, -0.01275e7), "zero")
    res = gws.residue_of_log_derivative(zfn.inverse(), "k", zrec.location)
    checks.append(_check("Res of L_k for 1/a = i at the tracked zero", abs(res - 1j), 1e-6))
    return checks


_RUNNERS = {"slab": suite_slab, "identities": suite_identities,
            "analytic-sphere": suite_analytic_sphere, "residues": suite_residues}


def run_suite(name: str, n_slabs: int = 100, seed: int = 0, library=None) -> dict:
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    checks = _RUNNERS[name](n_slabs=n_slabs, seed=seed, library=library)
    return {"suite": name, "passed": all(c["ok"] for c in checks), "checks": checks}
