"""Mie coefficients for homogeneous and concentric multilayer spheres.

Every coefficient is returned as a numerator/denominator pair (f, g) with
a = f/g, so that resonances can be located as zeros of g and scattering
zeros as zeros of f without dividing near-singular numbers.

Multilayer spheres use an inside-out recursion on the radial functions.
In layer l the radial function is psi(k n_l r) + T_l xi(k n_l r); at each
interface the ratio R/R' is matched with a weight n_in/n_out (electric
multipoles) or n_out/n_in (magnetic multipoles). The inner-layer
denominators are multiplied through, so f and g stay free of poles from
inner interfaces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .materials import MIXED, MaterialLibrary, default_library, index_for_pole_search
from .specfun import MAX_ORDER, riccati_arrays

__all__ = [
    "S_MATRIX_SIGN",
    "NonConvergence",
    "LayeredSphere",
    "MieEvaluation",
    "mie_a",
    "mie_b",
    "layered_fg",
    "coated_a",
    "coated_b",
    "layer_indices",
    "nu_max_for",
    "cross_sections",
]

# S_nu = 1 + S_MATRIX_SIGN * 2 a_nu; pinned by |1 - 2 a_nu| = 1 for lossless spheres
S_MATRIX_SIGN = -1

_UNDERFLOW = 1e-290


class NonConvergence(ArithmeticError):
    """Multipole sum not converged at the requested truncation order."""


@dataclass(frozen=True)
class LayeredSphere:
    """Concentric layers given by outer radii (m), innermost first."""

    radii: tuple
    materials: tuple
    background: str = "water"

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        mats = tuple(self.materials)
        if len(radii) == 0:
            raise ValueError("a sphere needs at least one layer")
        if len(radii) != len(mats):
            raise ValueError("one material per layer is required")
        if radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError(f"radii must be positive and strictly increasing, got {radii}")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "materials", mats)

    @classmethod
    def core_shell(cls, r_core, d_shell, core="silica", shell="gold", background="water"):
        if d_shell == 0:
            return cls((r_core,), (core,), background)
        return cls((r_core, r_core + d_shell), (core, shell), background)

    @property
    def core_radius(self) -> float:
        return self.radii[0]

    @property
    def shell_thickness(self) -> float:
        if len(self.radii) < 2:
            return 0.0
        return self.radii[1] - self.radii[0]

    @property
    def outer_radius(self) -> float:
        return self.radii[-1]


@dataclass(frozen=True)
class MieEvaluation:
    order: int
    x: complex
    m: complex
    value: complex
    numerator: complex
    denominator: complex
    near_pole: bool = False


def _evaluation(order, x, m, f, g):
    f = complex(f)
    g = complex(g)
    near = abs(g) < _UNDERFLOW * max(1.0, abs(f))
    value = complex("inf") if near else f / g
    return MieEvaluation(order, complex(x), complex(m), value, f, g, near)


def layered_fg(order, x_layers, rel_indices, kind="a"):
    """Numerator and denominator of a multilayer Mie coefficient.

    Parameters
    ----------
    order : int
        Multipole order (>= 1).
    x_layers : sequence of complex or arrays
        Size parameters k n_b r_l of each interface, innermost first.
    rel_indices : sequence of complex or arrays
        Layer indices relative to the background, innermost first.
    kind : {'a', 'b'}
        Electric ('a') or magnetic ('b') multipole.

    Returns
    -------
    f, g : complex or ndarray
    """
    if kind not in ("a", "b"):
        raise ValueError(f"kind must be 'a' or 'b', got {kind!r}")
    if order < 1:
        raise ValueError("multipole order must be >= 1")
    xs = [np.asarray(x, dtype=complex) for x in x_layers]
    ms = [np.asarray(m, dtype=complex) for m in rel_indices]
    if len(xs) != len(ms):
        raise ValueError("need one relative index per layer")
    nlay = len(ms)

    def weight(m_in, m_out):
        return m_in / m_out if kind == "a" else m_out / m_in

    psi, dpsi, _, _ = riccati_arrays(order, ms[0] * xs[0])
    num, den = psi[order], dpsi[order]
    for j in range(nlay - 1):
        m_in, m_out = ms[j], ms[j + 1]
        w = weight(m_in, m_out)
        p, dp, xi, dxi = (a[order] for a in riccati_arrays(order, m_out * xs[j]))
        t_num = w * num * dp - den * p
        t_den = den * xi - w * num * dxi
        p2, dp2, xi2, dxi2 = (a[order] for a in riccati_arrays(order, m_out * xs[j + 1]))
        num, den = p2 * t_den + t_num * xi2, dp2 * t_den + t_num * dxi2
    w = weight(ms[-1], 1.0)
    p, dp, xi, dxi = (a[order] for a in riccati_arrays(order, xs[-1]))
    f = w * num * dp - den * p
    g = w * num * dxi - den * xi
    return f, g


def mie_a(order: int, x: complex, m: complex) -> MieEvaluation:
    """Electric multipole coefficient of a homogeneous sphere.

    f = m psi(mx) psi'(x) - psi(x) psi'(mx),  g = m psi(mx) xi'(x) - xi(x) psi'(mx)
    """
    f, g = layered_fg(order, [x], [m], "a")
    return _evaluation(order, x, m, f, g)


def mie_b(order: int, x: complex, m: complex) -> MieEvaluation:
    """Magnetic multipole coefficient of a homogeneous sphere."""
    f, g = layered_fg(order, [x], [m], "b")
    return _evaluation(order, x, m, f, g)


def layer_indices(sphere: LayeredSphere, k, library: MaterialLibrary | None = None,
                  rule: str = MIXED, k_ref=None, n_b_shift: float = 0.0):
    """Resolve (n_layers, n_b) for a sphere at wavenumber(s) ``k``.

    Models that are frozen under ``rule`` are evaluated at ``k_ref``
    (default: the real part of k).
    """
    lib = library if library is not None else default_library()
    if k_ref is None:
        k_ref = np.real(k)
    n_b = index_for_pole_search(lib[sphere.background], k, k_ref, rule) + n_b_shift
    n_layers = tuple(index_for_pole_search(lib[name], k, k_ref, rule) for name in sphere.materials)
    return n_layers, n_b


def _coated(kind, order, sphere, k, library, rule, k_ref, n_b_shift):
    n_layers, n_b = layer_indices(sphere, k, library, rule, k_ref, n_b_shift)
    x_layers = [k * n_b * r for r in sphere.radii]
    rel = [n / n_b for n in n_layers]
    f, g = layered_fg(order, x_layers, rel, kind)
    return _evaluation(order, x_layers[-1], rel[-1], f, g)


def coated_a(order: int, sphere: LayeredSphere, k: complex, library=None, rule=MIXED,
             k_ref=None, n_b_shift: float = 0.0) -> MieEvaluation:
    """Electric multipole coefficient of a layered sphere at vacuum wavenumber k.

    Reduces to :func:`mie_a` for a single layer. Tabulated materials are
    frozen at ``k_ref`` (default Re(k)); ``n_b_shift`` is added to the
    background index.
    """
    if k == 0:
        raise ValueError("k must be non-zero")
    return _coated("a", order, sphere, complex(k), library, rule, k_ref, n_b_shift)


def coated_b(order: int, sphere: LayeredSphere, k: complex, library=None, rule=MIXED,
             k_ref=None, n_b_shift: float = 0.0) -> MieEvaluation:
    if k == 0:
        raise ValueError("k must be non-zero")
    return _coated("b", order, sphere, complex(k), library, rule, k_ref, n_b_shift)


def nu_max_for(x: float) -> int:
    """Truncation order ceil(x + 4 x^(1/3) + 2), clamped to [3, MAX_ORDER]."""
    x = abs(x)
    return int(min(MAX_ORDER, max(3, math.ceil(x + 4 * x ** (1 / 3) + 2))))


def cross_sections(sphere: LayeredSphere, k, nu_max: int | None = None,
                   library=None, rule=MIXED, conv_tol: float = 1e-8):
    """Extinction, scattering and absorption cross sections (m^2) at real k.

    ``k`` may be a scalar or an array; the truncation order is chosen for
    the largest size parameter when not given.

    Returns
    -------
    (sigma_ext, sigma_sca, sigma_abs)
    """
    scalar = np.ndim(k) == 0
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(k <= 0) or np.iscomplexobj(k):
        raise ValueError("cross sections need real k > 0")
    n_layers, n_b = layer_indices(sphere, k, library, rule)
    nb = np.real(np.asarray(n_b, dtype=complex))
    kb = k * nb
    if nu_max is None:
        nu_max = nu_max_for(float(np.max(kb)) * sphere.outer_radius)
    if nu_max < 1:
        raise ValueError("nu_max must be >= 1")
    x_layers = [kb * r for r in sphere.radii]
    rel = [np.asarray(n, dtype=complex) / nb for n in n_layers]
    ext = np.zeros_like(k)
    sca = np.zeros_like(k)
    last = np.zeros_like(k)
    for nu in range(1, nu_max + 1):
        fa, ga = layered_fg(nu, x_layers, rel, "a")
        fb, gb = layered_fg(nu, x_layers, rel, "b")
        a = fa / ga
        b = fb / gb
        term_ext = (2 * nu + 1) * (a.real + b.real)
        term_sca = (2 * nu + 1) * (np.abs(a) ** 2 + np.abs(b) ** 2)
        ext += term_ext
        sca += term_sca
        last = np.abs(term_ext) + term_sca
    scale = 2 * np.pi / kb**2
    size = np.maximum(np.maximum(np.abs(ext), sca), 1e-300)
    bad = (last > conv_tol * size) & ((ext != 0) | (sca != 0))
    if np.any(bad) and nu_max < MAX_ORDER:
        raise NonConvergence(f"multipole sum not converged at nu_max={nu_max}")
    sigma_ext = scale * ext
    sigma_sca = scale * sca
    out = (sigma_ext, sigma_sca, sigma_ext - sigma_sca)
    if scalar:
        return tuple(float(v[0]) for v in out)
    return out
