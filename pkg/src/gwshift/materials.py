"""Dispersion models for the refractive index of the particle materials.

All models are expressed against the complex *vacuum* wavenumber k (1/m).
The exp(-i omega t) convention is used throughout, so passive media have
Im(eps) >= 0 and Im(n) >= 0.

Rules for complex k:

``FROZEN``
    the index is evaluated at the real wavelength 2*pi/Re(k). Inside a
    scattering function the wavelength is taken from a fixed reference
    wavenumber, so the material becomes a constant and the function stays
    analytic in k.
``ANALYTIC``
    the closed-form model is evaluated at complex argument (Sellmeier,
    Drude-Lorentz and constant models only).
``MIXED``
    per-model choice used for pole searches: analytic where possible,
    frozen at the reference wavenumber for tabulated data. Freezing the
    gold model would remove the frequency dependence that sets the
    plasmon linewidth, so it is only done where nothing else is possible.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Sequence, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = [
    "RangeError",
    "UnsupportedError",
    "FROZEN",
    "ANALYTIC",
    "Constant",
    "Sellmeier",
    "DrudeLorentz",
    "Tabulated",
    "DispersionModel",
    "MaterialLibrary",
    "MIXED",
    "refractive_index",
    "permittivity",
    "index_for_pole_search",
    "wavelength_um",
    "load_model",
    "load_tabulated_csv",
    "default_library",
]

FROZEN = "frozen_at_real_part"
ANALYTIC = "analytic_continuation"
_RULES = (FROZEN, ANALYTIC)
# sphere-level policy: continue analytic models, freeze tabulated ones at a reference k
MIXED = "analytic_where_supported"

HC_EV_UM = 1.239841984  # h*c in eV*um


class RangeError(ValueError):
    """Wavelength outside the validity range of a dispersion model."""


class UnsupportedError(ValueError):
    """Evaluation rule not supported by a dispersion model."""


def wavelength_um(k):
    """Vacuum wavelength in micrometres for the real part of k (1/m)."""
    kr = np.real(k)
    if np.any(kr <= 0):
        raise RangeError(f"Re(k) must be positive to define a wavelength, got {np.min(kr)}")
    lam = 2 * np.pi / kr * 1e6
    return float(lam) if np.ndim(lam) == 0 else lam


def _out(value):
    return complex(value) if np.ndim(value) == 0 else np.asarray(value, dtype=complex)


def _check_rule(rule):
    if rule not in _RULES:
        raise ValueError(f"unknown evaluation rule {rule!r}; expected one of {_RULES}")


def _check_range(lam, lo, hi, name):
    lam = np.asarray(lam)
    if np.any(lam < lo) or np.any(lam > hi):
        bad = lam[(lam < lo) | (lam > hi)].flat[0]
        raise RangeError(f"{name}: wavelength {bad:.6g} um outside [{lo}, {hi}] um")


@dataclass(frozen=True)
class Constant:
    n: complex

    supports_analytic = True

    def index(self, k, rule=FROZEN):
        _check_rule(rule)
        return _out(np.full(np.shape(k), complex(self.n)))


@dataclass(frozen=True)
class Sellmeier:
    """n^2 = 1 + sum_i B_i lam^2 / (lam^2 - C_i), lam in um, C_i in um^2."""

    coefficients: tuple
    range_um: tuple = (0.21, 6.7)
    name: str = "Sellmeier"
    supports_analytic = True

    def eps(self, k, rule=FROZEN) -> complex:
        _check_rule(rule)
        lam = wavelength_um(k)
        _check_range(lam, *self.range_um, self.name)
        if rule == FROZEN:
            lam2 = np.asarray(lam) ** 2
        else:
            lam2 = (2 * np.pi / np.asarray(k, dtype=complex) * 1e6) ** 2
        eps = 1.0 + sum(b * lam2 / (lam2 - c) for b, c in self.coefficients)
        return _out(eps)

    def index(self, k, rule=FROZEN):
        return _out(np.sqrt(np.asarray(self.eps(k, rule), dtype=complex)))


@dataclass(frozen=True)
class DrudeLorentz:
    """Drude term plus Lorentz oscillators, photon energies in eV.

    eps = eps_inf - f0 wp^2 / (w (w + i g0)) + sum_j f_j wp^2 / (w_j^2 - w^2 - i w g_j)
    """

    eps_inf: float
    plasma_ev: float
    drude_strength: float
    damping_ev: float
    oscillators: tuple = ()  # (strength, center_ev, width_ev)
    range_um: tuple = (0.2, 12.4)
    name: str = "DrudeLorentz"
    supports_analytic = True

    def eps(self, k, rule=FROZEN) -> complex:
        _check_rule(rule)
        lam = wavelength_um(k)
        _check_range(lam, *self.range_um, self.name)
        if rule == FROZEN:
            w = HC_EV_UM / np.asarray(lam)
        else:
            w = HC_EV_UM * np.asarray(k, dtype=complex) * 1e-6 / (2 * np.pi)
        wp2 = self.plasma_ev**2
        eps = self.eps_inf - self.drude_strength * wp2 / (w * (w + 1j * self.damping_ev))
        for f, w0, g in self.oscillators:
            eps = eps + f * wp2 / (w0**2 - w**2 - 1j * w * g)
        return _out(eps)

    def index(self, k, rule=FROZEN):
        return _out(np.sqrt(np.asarray(self.eps(k, rule), dtype=complex)))


@dataclass(frozen=True)
class Tabulated:
    """Sampled (lambda, n, kappa) data with monotone cubic interpolation."""

    lambda_um: tuple
    n: tuple
    kappa: tuple
    name: str = "Tabulated"
    _interp: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.lambda_um, dtype=float)
        if lam.ndim != 1 or lam.size < 2:
            raise ValueError("tabulated model needs at least two samples")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("tabulated wavelengths must be strictly increasing")
        object.__setattr__(
            self,
            "_interp",
            (PchipInterpolator(lam, np.asarray(self.n, float)),
             PchipInterpolator(lam, np.asarray(self.kappa, float))),
        )

    supports_analytic = False

    def index(self, k, rule=FROZEN):
        _check_rule(rule)
        if rule == ANALYTIC:
            raise UnsupportedError(f"{self.name}: tabulated data cannot be continued to complex k")
        lam = wavelength_um(k)
        _check_range(lam, self.lambda_um[0], self.lambda_um[-1], self.name)
        fn, fk = self._interp
        return _out(fn(lam) + 1j * fk(lam))


DispersionModel = Union[Constant, Sellmeier, DrudeLorentz, Tabulated]


def refractive_index(model: DispersionModel, k, rule: str = FROZEN) -> complex:
    """Complex refractive index n + i kappa of ``model`` at vacuum wavenumber k."""
    return model.index(k, rule)


def permittivity(model: DispersionModel, k, rule: str = FROZEN) -> complex:
    """Relative permittivity eps = n^2."""
    if hasattr(model, "eps"):
        return model.eps(k, rule)
    return model.index(k, rule) ** 2


def index_for_pole_search(model: DispersionModel, k, k_ref, rule: str = MIXED):
    """Index used inside analytic scattering functions.

    ``MIXED`` continues Sellmeier/Drude-Lorentz/constant models to complex k
    and freezes tabulated models at ``k_ref``. ``FROZEN`` freezes every model
    at ``k_ref``; ``ANALYTIC`` continues every model (fails for tables).
    """
    if rule == MIXED:
        rule = ANALYTIC if model.supports_analytic else FROZEN
    if rule == FROZEN:
        n = model.index(np.real(k_ref), FROZEN)
        return _out(np.full(np.shape(k), n)) if np.ndim(k) else complex(n)
    return model.index(k, rule)


# -- file formats -----------------------------------------------------------

def load_tabulated_csv(path, name: str | None = None) -> Tabulated:
    """Read a ``lambda_um,n,k`` CSV file."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["lambda_um", "n", "k"]:
            raise ValueError(f"{path}: expected header 'lambda_um,n,k', got {reader.fieldnames}")
        rows = [(float(r["lambda_um"]), float(r["n"]), float(r["k"])) for r in reader]
    lam, n, kap = zip(*rows)
    return Tabulated(lam, n, kap, name=name or path.stem)


def _model_from_dict(spec: Mapping, name: str, base: Path | None = None) -> DispersionModel:
    kind = spec["type"]
    p = spec.get("params", {})
    if kind == "Constant":
        n = p["n"]
        if isinstance(n, (list, tuple)):
            n = complex(n[0], n[1])
        return Constant(complex(n))
    if kind == "Sellmeier":
        coeffs = tuple((float(b), float(c)) for b, c in p["coefficients"])
        return Sellmeier(coeffs, tuple(p.get("range_um", (0.21, 6.7))), name=name)
    if kind == "DrudeLorentz":
        osc = tuple(
            (float(o["strength"]), float(o["center_ev"]), float(o["width_ev"]))
            for o in p.get("oscillators", [])
        )
        return DrudeLorentz(
            eps_inf=float(p.get("eps_inf", 1.0)),
            plasma_ev=float(p["plasma_ev"]),
            drude_strength=float(p.get("drude_strength", 1.0)),
            damping_ev=float(p["damping_ev"]),
            oscillators=osc,
            range_um=tuple(p.get("range_um", (0.2, 12.4))),
            name=name,
        )
    if kind == "Tabulated":
        csv_path = Path(p["file"])
        if base is not None and not csv_path.is_absolute():
            csv_path = base / csv_path
        return load_tabulated_csv(csv_path, name=name)
    raise ValueError(f"unknown dispersion model type {kind!r}")


def load_model(path, name: str | None = None) -> DispersionModel:
    """Load a model from a JSON ``{type, params, source}`` file or a CSV table."""
    path = Path(path)
    name = name or path.stem
    if path.suffix.lower() == ".csv":
        return load_tabulated_csv(path, name=name)
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    return _model_from_dict(spec, name, base=path.parent)


class MaterialLibrary(Mapping):
    """Immutable mapping from material id to dispersion model."""

    def __init__(self, models: Mapping[str, DispersionModel], sources: Mapping[str, str] | None = None):
        self._models = MappingProxyType(dict(models))
        self._sources = MappingProxyType(dict(sources or {}))

    def __getitem__(self, key):
        try:
            return self._models[key]
        except KeyError:
            raise KeyError(f"unknown material {key!r}; known: {sorted(self._models)}") from None

    def __iter__(self):
        return iter(self._models)

    def __len__(self):
        return len(self._models)

    def source(self, key) -> str:
        return self._sources.get(key, "")

    def with_entries(self, **models: DispersionModel) -> "MaterialLibrary":
        merged = dict(self._models)
        merged.update(models)
        return MaterialLibrary(merged, self._sources)

    @classmethod
    def from_files(cls, entries: Mapping[str, Union[str, Path]]) -> "MaterialLibrary":
        models, sources = {}, {}
        for key, path in entries.items():
            models[key] = load_model(path, name=key)
            sources[key] = str(path)
        return cls(models, sources)


_DEFAULT = None


def default_library() -> MaterialLibrary:
    """Water (tabulated), fused silica (Sellmeier) and gold (Drude-Lorentz)."""
    global _DEFAULT
    if _DEFAULT is None:
        data = resources.files("gwshift") / "data"
        with resources.as_file(data) as d:
            d = Path(d)
            lib = MaterialLibrary.from_files({
                "water": d / "water_hale_querry_1973.csv",
                "silica": d / "silica_malitson_1965.json",
                "gold": d / "gold_rakic_1998_ld.json",
            })
        _DEFAULT = lib
    return _DEFAULT
