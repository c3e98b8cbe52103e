"""Logarithmic-derivative (Wigner-Smith type) shift predictions.

For a scalar scattering function M(k; alpha) the operator

    L_alpha(k) = -i M(k)^-1 dM/dalpha

has a simple pole at every simple pole k_p of M, and the first-order
shift of that pole under alpha -> alpha + d_alpha is

    d_k_p = i d_alpha Res_{k_p} L_alpha.

Only the residue enters, so any analytic non-vanishing prefactor of M (or
a normalisation of the underlying fields) drops out. Zeros of M are
handled by applying the same machinery to 1/M.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from . import complexplane as cp
from .materials import MIXED, default_library, index_for_pole_search
from .mie import LayeredSphere, layered_fg

__all__ = [
    "ZeroValue",
    "SimplePoleViolation",
    "RealAxisPole",
    "ScatteringFunction",
    "ShiftPrediction",
    "SensitivityMetric",
    "sphere_function",
    "log_derivative",
    "pole_shift",
    "zero_shift",
    "sensitivity_eta",
    "radius_sensitivity_analytic",
    "default_contour",
    "residue_of_log_derivative",
    "locate",
    "locate_sphere",
    "FD_REL_STEP",
    "CONTOUR_RADIUS_REL",
]

FD_REL_STEP = 1e-6
CONTOUR_RADIUS_REL = 1e-3


class ZeroValue(ArithmeticError):
    """M vanishes (or underflows) where a logarithmic derivative was requested."""


class SimplePoleViolation(ArithmeticError):
    """The point is not an isolated simple pole of the function."""


class RealAxisPole(ArithmeticError):
    """Sensitivity metric undefined for a singularity on the real axis."""


@dataclass(frozen=True)
class ScatteringFunction:
    """A scalar meromorphic function M(k; params) with named parameters.

    ``parts(k, params)`` returns a (numerator, denominator) pair with
    M = numerator / denominator. Poles are searched as zeros of the
    denominator, zeros as zeros of the numerator. ``inverted`` swaps the
    roles, giving M' = 1/M.
    """

    parts: Callable
    params: Mapping = field(default_factory=dict)
    units: Mapping = field(default_factory=dict)
    scales: Mapping = field(default_factory=dict)
    label: str = ""
    inverted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        object.__setattr__(self, "units", MappingProxyType(dict(self.units)))
        object.__setattr__(self, "scales", MappingProxyType(dict(self.scales)))
        for name, value in self.params.items():
            if not np.isfinite(value):
                raise ValueError(f"parameter {name} must be finite")

    def numden(self, k, params=None):
        p = self.params if params is None else params
        num, den = self.parts(k, p)
        return (den, num) if self.inverted else (num, den)

    def __call__(self, k, params=None):
        num, den = self.numden(k, params)
        return num / den

    def pole_function(self) -> Callable:
        """k -> denominator of M; its zeros are the poles of M."""
        return lambda k: self.numden(k)[1]

    def zero_function(self) -> Callable:
        return lambda k: self.numden(k)[0]

    def inverse(self) -> "ScatteringFunction":
        return replace(self, inverted=not self.inverted,
                       label=(self.label[2:] if self.label.startswith("1/") else "1/" + self.label))

    def with_params(self, **updates) -> "ScatteringFunction":
        unknown = set(updates) - set(self.params)
        if unknown:
            raise KeyError(f"unknown parameter(s) {sorted(unknown)}; known: {sorted(self.params)}")
        merged = dict(self.params)
        merged.update(updates)
        return replace(self, params=merged)

    def shifted(self, name: str, delta: float) -> "ScatteringFunction":
        return self.with_params(**{name: self.params[name] + delta})

    def fd_step(self, name: str, rel: float = FD_REL_STEP) -> float:
        scale = self.scales.get(name, 1.0)
        return rel * max(abs(self.params[name]), scale)


@dataclass(frozen=True)
class ShiftPrediction:
    k_p: complex
    delta_alpha: float
    delta_k: complex
    method: str
    residue: complex = complex("nan")
    error_estimate: float = 0.0
    param: str = ""


@dataclass(frozen=True)
class SensitivityMetric:
    eta: complex
    kind: str = "pole"

    @property
    def abs_re(self) -> float:
        return abs(self.eta.real)

    @property
    def abs_im(self) -> float:
        return abs(self.eta.imag)


def _param_derivative(M: ScatteringFunction, name: str, k, rel: float = FD_REL_STEP):
    """dM/dalpha by central differences with one Richardson halving."""
    if name not in M.params:
        raise KeyError(f"unknown parameter {name!r}; known: {sorted(M.params)}")
    h = M.fd_step(name, rel)
    base = dict(M.params)

    def at(delta):
        p = dict(base)
        p[name] = base[name] + delta
        return M(k, p)

    d1 = (at(h) - at(-h)) / (2 * h)
    d2 = (at(h / 2) - at(-h / 2)) / h
    return (4 * d2 - d1) / 3


def _k_derivative(M: ScatteringFunction, k, rel: float = FD_REL_STEP):
    k = np.asarray(k, dtype=complex)
    h = rel * np.abs(k)
    d1 = (M(k + h) - M(k - h)) / (2 * h)
    d2 = (M(k + h / 2) - M(k - h / 2)) / h
    return (4 * d2 - d1) / 3


def log_derivative(M: ScatteringFunction, param: str, k, rel: float = FD_REL_STEP):
    """L_param(k) = -i M^-1 dM/dparam; ``param='k'`` gives L_k.

    Accepts scalar or array k.
    """
    value = np.asarray(M(k), dtype=complex)
    if np.any(np.abs(value) < 1e-300) or not np.all(np.isfinite(value)):
        raise ZeroValue(f"M is zero or singular at k={k}")
    if param == "k":
        dm = _k_derivative(M, k, rel)
    else:
        dm = _param_derivative(M, param, k, rel)
    out = -1j * dm / value
    return complex(out) if np.ndim(out) == 0 else out


def default_contour(k_p: complex, radius_rel: float = CONTOUR_RADIUS_REL,
                    samples: int = 32) -> cp.ContourSpec:
    """Circle of radius rel*|k_p|, capped at |Im k_p|/4.

    The cap keeps the mirror-image zero of a high-Q pole (at roughly the
    conjugate position) outside the contour.
    """
    k_p = complex(k_p)
    radius = radius_rel * abs(k_p)
    if k_p.imag != 0:
        radius = min(radius, 0.25 * abs(k_p.imag))
    return cp.ContourSpec(k_p, radius, samples)


def _check_simple_pole(M, contour):
    try:
        w = cp.winding_number(M, contour)
    except cp.IllConditioned as exc:
        raise SimplePoleViolation(f"winding check failed: {exc}") from exc
    if w != -1:
        raise SimplePoleViolation(
            f"expected one simple pole inside the contour (winding -1), got winding {w}")


def residue_of_log_derivative(M: ScatteringFunction, param: str, k_p: complex,
                              contour: cp.ContourSpec | None = None, rel: float = FD_REL_STEP,
                              check: bool = True, rtol: float = 1e-9,
                              return_error: bool = False):
    """Res_{k_p} L_param, by trapezoidal quadrature on a small circle.

    The contour is shrunk (up to three times) if the quadrature reports
    a second singularity close by. With ``return_error`` the last change
    under sample doubling is returned as well.
    """
    contour = contour or default_contour(k_p)
    last_exc = None
    for _ in range(4):
        try:
            if check:
                _check_simple_pole(M, contour)
            res, _, err = cp.residue(lambda k: log_derivative(M, param, k, rel), contour,
                                     rtol=rtol, return_info=True)
            return (res, err) if return_error else res
        except cp.MultipleSingularities as exc:
            last_exc = exc
            contour = replace(contour, radius=contour.radius / 4)
    raise last_exc


def pole_shift(M: ScatteringFunction, k_p: complex, param: str, delta_alpha: float,
               method: str = "gws_residue", contour: cp.ContourSpec | None = None,
               rel: float = FD_REL_STEP) -> ShiftPrediction:
    """First-order shift of a simple pole of M under param -> param + delta_alpha.

    ``gws_residue``: delta_k = i delta_alpha Res L_param.
    ``ratio_form``: delta_k = -delta_alpha L_param/L_k. The ratio is
    analytic at the pole, so its average over the contour samples equals
    its value at k_p; the change against the mean over every other sample
    is reported as the error estimate.
    """
    contour = contour or default_contour(k_p)
    _check_simple_pole(M, contour)
    if method == "gws_residue":
        res, err = residue_of_log_derivative(M, param, k_p, contour, rel, check=False,
                                             return_error=True)
        dk = 1j * delta_alpha * res
        return ShiftPrediction(complex(k_p), delta_alpha, complex(dk), method, complex(res),
                               error_estimate=abs(delta_alpha) * err, param=param)
    if method == "ratio_form":
        pts = contour.points()
        ratio = -log_derivative(M, param, pts, rel) / log_derivative(M, "k", pts, rel)
        mean = ratio.mean()
        spread = float(abs(mean - ratio[::2].mean()))
        return ShiftPrediction(complex(k_p), delta_alpha, complex(delta_alpha * mean), method,
                               complex(-1j * mean), error_estimate=abs(delta_alpha) * spread,
                               param=param)
    raise ValueError(f"unknown method {method!r}; expected 'gws_residue' or 'ratio_form'")


def zero_shift(M: ScatteringFunction, k_z: complex, param: str, delta_alpha: float,
               method: str = "gws_residue", contour: cp.ContourSpec | None = None,
               rel: float = FD_REL_STEP) -> ShiftPrediction:
    """First-order shift of a simple zero of M (a pole of 1/M)."""
    return pole_shift(M.inverse(), k_z, param, delta_alpha, method, contour, rel)


def sensitivity_eta(M: ScatteringFunction, record: cp.PoleRecord, param: str = "n_b",
                    contour: cp.ContourSpec | None = None) -> SensitivityMetric:
    """eta = i Res L_param / |Im k|, the shift per unit parameter in half-widths."""
    k = complex(record.location)
    if k.imag == 0:
        raise RealAxisPole(f"{record.kind} at k={k} lies on the real axis")
    fn = M
    if (record.kind == "zero") != M.inverted:
        fn = M.inverse()
    res = residue_of_log_derivative(fn, param, k, contour)
    return SensitivityMetric(1j * res / abs(k.imag), record.kind)


def radius_sensitivity_analytic(k_p: complex, r_c: float) -> complex:
    """d k_p / d r_c = -k_p / r_c for a sphere of fixed relative index."""
    return -complex(k_p) / r_c


# -- spheres ------------------------------------------------------------------

def sphere_function(sphere: LayeredSphere, order: int = 1, kind: str = "a", library=None,
                    rule: str = MIXED, k_ref: float | None = None) -> ScatteringFunction:
    """Mie coefficient of a layered sphere as a ScatteringFunction.

    Parameters: ``n_b`` (additive shift of the background index, nominal
    0), ``r_c`` (core radius, m), ``d_s`` (shell thickness, m; two or more
    layers only). Outer layers keep their thickness when r_c or d_s change.
    ``k_ref`` is the wavenumber at which tabulated materials are frozen.
    """
    lib = library if library is not None else default_library()
    radii = sphere.radii
    thick = [b - a for a, b in zip(radii, radii[1:])]
    params = {"n_b": 0.0, "r_c": radii[0]}
    units = {"n_b": "1", "r_c": "m"}
    scales = {"n_b": 1.0, "r_c": radii[0]}
    if len(radii) > 1:
        params["d_s"] = thick[0]
        units["d_s"] = "m"
        scales["d_s"] = radii[-1]
    if k_ref is None:
        k_ref = 1e7
    params["k_ref"] = float(k_ref)
    units["k_ref"] = "1/m"
    scales["k_ref"] = float(k_ref)
    models = [lib[name] for name in sphere.materials]
    background = lib[sphere.background]

    def parts(k, p):
        k = np.asarray(k, dtype=complex)
        r = [p["r_c"]]
        if len(radii) > 1:
            r.append(r[0] + p["d_s"])
            for t in thick[1:]:
                r.append(r[-1] + t)
        kr = p["k_ref"]
        n_b = index_for_pole_search(background, k, kr, rule) + p["n_b"]
        rel = [index_for_pole_search(mod, k, kr, rule) / n_b for mod in models]
        xs = [k * n_b * ri for ri in r]
        f, g = layered_fg(order, xs, rel, kind)
        if np.ndim(f) == 0:
            return complex(f), complex(g)
        return f, g

    mats = "/".join(sphere.materials)
    label = f"{kind}_{order}[{mats} in {sphere.background}]"
    return ScatteringFunction(parts, params, units, scales, label)


def locate(M: ScatteringFunction, seed: complex, kind: str = "pole", tol: float = 1e-13,
           max_iter: int = 60) -> cp.PoleRecord:
    """Newton search for a pole (zero of the denominator) or zero of M."""
    fn = M.pole_function() if kind == "pole" else M.zero_function()
    root, it, step = cp.newton_root(fn, seed, tol=tol, max_iter=max_iter, return_info=True)
    return cp.PoleRecord(root, kind, iterations=it, final_step=step)


def locate_sphere(M: ScatteringFunction, seed: complex, kind: str = "pole", tol: float = 1e-13,
                  max_outer: int = 20, verify: bool = True):
    """Locate a pole/zero with tabulated materials frozen at the root itself.

    The freeze point ``k_ref`` is iterated to Re(k) of the root. Returns
    (record, M_at_root) where M_at_root carries the converged ``k_ref``.
    The winding number of M (or 1/M for zeros) is recorded when
    ``verify`` is set; it must be -1 for a simple singularity.
    """
    # Solve F(x) = x, F(x) = Re of the root with tabulated data frozen at x.
    # Plain iteration contracts slowly (or oscillates) where the tabulated
    # index is strongly dispersive, so secant steps are used after the first.
    k = complex(seed)
    x = k.real
    fn = M.with_params(k_ref=x)
    rec = locate(fn, k, kind, tol)
    h_prev, x_prev = rec.location.real - x, x
    x = rec.location.real
    for _ in range(max_outer):
        k = rec.location
        fn = M.with_params(k_ref=x)
        rec = locate(fn, k, kind, tol)
        h = rec.location.real - x
        if abs(h) <= 1e-10 * abs(rec.location):
            break
        if h != h_prev:
            x_new = x - h * (x - x_prev) / (h - h_prev)
        else:
            x_new = x + h
        # keep each update within a few linewidths of the plain iterate
        limit = 2 * abs(rec.location.imag) + abs(h)
        x_new = min(max(x_new, x + h - limit), x + h + limit)
        x_prev, h_prev, x = x, h, x_new
    else:
        raise cp.NoConvergence("self-consistent reference wavenumber did not converge")
    k = rec.location
    if verify:
        check = fn if kind == "pole" else fn.inverse()
        rec.winding = cp.winding_number(check, default_contour(k))
    return rec, fn
