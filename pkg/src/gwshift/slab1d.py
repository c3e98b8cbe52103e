"""Two-port planar multilayer slab with closed-form internal-field integrals.

Units: c = mu0 = eps0 = 1, so the angular frequency omega coincides with
the vacuum wavenumber k (1/m) and lengths are in metres. Fields are
E = x E(z), H = y H(z) under exp(-i omega t), which gives

    E' = i omega H,     H' = i omega eps E.

Port convention (unit-amplitude modes in a lossless background of index
n_b, local coordinate pointing away from the slab):

    left  (z = 0):  E = delta_lp + S_lp,  H =  n_b (delta_lp - S_lp)
    right (z = L):  E = delta_rp + S_rp,  H = -n_b (delta_rp - S_rp)

With this normalisation the unconjugated port flux E h/2 equals n_b/2
instead of one; the 1/n_b prefactors below absorb that constant.

Identities verified by :func:`verify_identity` (p = illuminated port):

    C:  (S^T S)_qp = delta_qp + (i omega / n_b) int (eps E_p E_q + H_p H_q)
    D:  (-i S^T dS)_qp = (1/2n_b) int [d(omega eps) E_p E_q + d(omega) H_p H_q
                          + 2 omega (eps dE_p E_q + dH_p H_q)]
    A:  (S^+ S)_qp = delta_qp - (1/n_b) int [Im(omega eps) E_p E_q* + Im(omega) H_p H_q*]
    B:  (-i S^+ dS)_qp = (1/2n_b) int [d(omega eps) E_p E_q* + d(omega) H_p H_q*
                          + 2i Im(omega eps) dE_p E_q* + 2i Im(omega) dH_p H_q*]

where d = d/dxi at fixed position z. All integrals are evaluated layer by
layer in closed form (products of exponentials times low-order
polynomials), so identity residuals carry no quadrature error.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import complexplane as cp
from .direct import pole_shift_direct
from .gws import ScatteringFunction, default_contour, locate, pole_shift
from .materials import ANALYTIC, FROZEN, default_library, permittivity

__all__ = [
    "SingularTransfer",
    "Layer",
    "Slab1D",
    "PortBasis",
    "FieldSolution",
    "OperatorIdentityReport",
    "PerturbationComparison",
    "IDENTITIES",
    "slab_smatrix",
    "internal_fields",
    "qnm_field",
    "verify_identity",
    "slab_function",
    "locate_slab_pole",
    "perturb_compare",
    "load_slab",
    "random_slab",
]

IDENTITIES = ("C", "D", "A", "B")
_FD_REL = 1e-5


class SingularTransfer(ArithmeticError):
    """The port boundary-value problem is singular (omega sits on a pole)."""


@dataclass(frozen=True)
class Layer:
    thickness: float
    eps: complex | None = None
    material: str | None = None

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError(f"layer thickness must be positive, got {self.thickness}")
        if (self.eps is None) == (self.material is None):
            raise ValueError("a layer needs exactly one of eps or material")


@dataclass(frozen=True)
class Slab1D:
    """Layers ordered from the left port; an empty stack is a zero-thickness slab."""

    layers: tuple = ()
    background_eps: float = 1.0
    k_ref: float | None = None  # freeze point for tabulated materials

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        bg = complex(self.background_eps)
        if bg.imag != 0 or bg.real <= 0:
            raise ValueError("background must be lossless with positive permittivity")
        object.__setattr__(self, "background_eps", bg.real)

    @property
    def n_b(self) -> float:
        return math.sqrt(self.background_eps)

    @property
    def length(self) -> float:
        return float(sum(l.thickness for l in self.layers))

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([l.thickness for l in self.layers])])

    def with_layer(self, j: int, **changes) -> "Slab1D":
        layers = list(self.layers)
        layers[j] = replace(layers[j], **changes)
        return replace(self, layers=tuple(layers))

    @classmethod
    def from_records(cls, records: Sequence[dict], background_eps: float = 1.0, k_ref=None):
        layers = []
        for rec in records:
            if "material_id" in rec:
                layers.append(Layer(float(rec["thickness_m"]), material=str(rec["material_id"])))
            else:
                eps = complex(float(rec["eps_re"]), float(rec.get("eps_im", 0.0)))
                layers.append(Layer(float(rec["thickness_m"]), eps=eps))
        return cls(tuple(layers), background_eps, k_ref)


def load_slab(path, background_eps: float = 1.0, k_ref=None) -> Slab1D:
    """Read a JSON list of ``{thickness_m, eps_re, eps_im | material_id}``.

    An object with keys ``layers`` and optionally ``background_eps`` is
    accepted as well.
    """
    with open(Path(path), encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        background_eps = float(data.get("background_eps", background_eps))
        k_ref = data.get("k_ref", k_ref)
        data = data["layers"]
    return Slab1D.from_records(data, background_eps, k_ref)


@dataclass(frozen=True)
class PortBasis:
    """Port modes of the lossless background.

    ``amplitude`` is the electric amplitude for which the unconjugated
    flux integral of one mode against itself is exactly one; the solver
    itself uses unit amplitude.
    """

    n_b: float

    @property
    def amplitude(self) -> float:
        return math.sqrt(2.0 / self.n_b)

    def flux(self, p: int, q: int) -> float:
        """(1/2) e_p h_q for port modes normalised with ``amplitude``."""
        return 0.5 * self.amplitude * (self.amplitude * self.n_b) if p == q else 0.0


# -- layer resolution -----------------------------------------------------------

def _layer_eps(slab: Slab1D, omega, library=None, deps=None, scale=None):
    """Permittivity of every layer at omega, with optional additive/scale changes."""
    out = []
    lib = None
    for j, layer in enumerate(slab.layers):
        if layer.eps is not None:
            e = np.asarray(complex(layer.eps)) + 0 * np.asarray(omega)
        else:
            lib = lib or (library if library is not None else default_library())
            model = lib[layer.material]
            if getattr(model, "supports_analytic", False):
                e = permittivity(model, omega, ANALYTIC)
            else:
                k_ref = slab.k_ref if slab.k_ref is not None else np.real(omega)
                e = permittivity(model, k_ref, FROZEN) + 0 * np.asarray(omega)
        if scale is not None:
            e = e * (1.0 + scale.get(j, 0.0))
        if deps is not None:
            e = e + deps.get(j, 0.0)
        out.append(e)
    return out


def _sqrt_eps(e):
    return np.sqrt(np.asarray(e, dtype=complex))


def _layer_matrix(n, kappa_d):
    c = np.cos(kappa_d)
    s = np.sin(kappa_d)
    return c, 1j * s / n, 1j * n * s, c


def _matmul(a, b):
    return (a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3])


def _total_transfer(ns, ds, omega):
    m = (1.0 + 0j, 0j, 0j, 1.0 + 0j)
    for n, d in zip(ns, ds):
        m = _matmul(_layer_matrix(n, n * omega * d), m)
    return m


def _port_system(m, n_b):
    """Linear system K x = R for x = (S_lp, S_rp); columns of R are p = left, right."""
    m11, m12, m21, m22 = m
    k = ((m11 - n_b * m12, -1.0 + 0 * m11), (m21 - n_b * m22, -n_b + 0 * m11))
    r = ((-m11 - n_b * m12, 1.0 + 0 * m11), (-m21 - n_b * m22, -n_b + 0 * m11))
    return k, r


def _det2(a):
    return a[0][0] * a[1][1] - a[0][1] * a[1][0]


def _smatrix_from(ns, ds, omega, n_b):
    m = _total_transfer(ns, ds, omega)
    k, r = _port_system(m, n_b)
    det_k = _det2(k)
    if np.any(det_k == 0) or not np.all(np.isfinite(det_k)):
        raise SingularTransfer("port system is singular at this frequency")
    # Cramer's rule for both illumination columns
    s = np.empty((2, 2) + np.shape(omega), dtype=complex)
    for p in range(2):
        b0, b1 = r[0][p], r[1][p]
        s[0, p] = (b0 * k[1][1] - k[0][1] * b1) / det_k
        s[1, p] = (k[0][0] * b1 - b0 * k[1][0]) / det_k
    return s


def slab_smatrix(slab: Slab1D, omega, library=None, deps=None, scale=None, thickness=None):
    """2x2 scattering matrix, indices (outgoing port, illuminated port); 0 = left.

    ``deps``/``scale`` map layer index to an additive change / relative
    scale of its permittivity; ``thickness`` overrides layer thicknesses.
    """
    omega = np.asarray(omega, dtype=complex)
    if np.any(omega == 0):
        raise ValueError("omega must be non-zero")
    eps = _layer_eps(slab, omega, library, deps, scale)
    ds = thickness if thickness is not None else [l.thickness for l in slab.layers]
    s = _smatrix_from([_sqrt_eps(e) for e in eps], ds, omega, slab.n_b)
    return s if s.ndim > 2 else s.reshape(2, 2)


# -- fields ---------------------------------------------------------------------

@dataclass
class FieldSolution:
    """Per-layer plane-wave coefficients for one illuminated port.

    In layer j, with u = z - ref[j],

        E = A_j exp(i kappa_j u) + B_j exp(-i kappa_j u),  kappa_j = n_j omega
        H = n_j (A_j exp(i kappa_j u) - B_j exp(-i kappa_j u)).
    """

    omega: complex
    port: int
    edges: np.ndarray
    refs: np.ndarray
    n: np.ndarray
    eps: np.ndarray
    A: np.ndarray
    B: np.ndarray
    S: np.ndarray
    n_b: float

    def _layer_of(self, z):
        j = np.searchsorted(self.edges, z, side="right") - 1
        return int(np.clip(j, 0, len(self.n) - 1))

    def E(self, z, layer=None):
        j = self._layer_of(z) if layer is None else layer
        kap = self.n[j] * self.omega
        u = z - self.refs[j]
        return self.A[j] * np.exp(1j * kap * u) + self.B[j] * np.exp(-1j * kap * u)

    def H(self, z, layer=None):
        j = self._layer_of(z) if layer is None else layer
        kap = self.n[j] * self.omega
        u = z - self.refs[j]
        return self.n[j] * (self.A[j] * np.exp(1j * kap * u) - self.B[j] * np.exp(-1j * kap * u))

    def continuity_residual(self) -> float:
        """Largest relative jump of E or H across internal interfaces."""
        worst = 0.0
        for j in range(len(self.n) - 1):
            z = self.edges[j + 1]
            for f in (self.E, self.H):
                a, b = f(z, j), f(z, j + 1)
                worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
        return worst

    def port_residual(self) -> float:
        """Mismatch between the boundary fields and the port ansatz."""
        if len(self.n) == 0:
            return 0.0
        p, S, nb = self.port, self.S, self.n_b
        d = [1.0 if p == m else 0.0 for m in (0, 1)]
        L = self.edges[-1]
        errs = [
            abs(self.E(0.0, 0) - (d[0] + S[0, p])),
            abs(self.H(0.0, 0) - nb * (d[0] - S[0, p])),
            abs(self.E(L, len(self.n) - 1) - (d[1] + S[1, p])),
            abs(self.H(L, len(self.n) - 1) + nb * (d[1] - S[1, p])),
        ]
        scale = max(1.0, float(np.max(np.abs(S))))
        return max(errs) / scale


def _solve_coefficients(ns, ds, omega, n_b, refs_right=frozenset(), start=None):
    """Coefficients (A, B) of both illuminations, plus S.

    Layers listed in ``refs_right`` use their right edge as phase reference.
    ``start`` optionally gives the (E, H) state at z = 0 directly (one column).
    """
    edges = np.concatenate([[0.0], np.cumsum(ds)])
    if start is None:
        S = _smatrix_from(ns, ds, omega, n_b)
        states = [((1.0 if p == 0 else 0.0) + S[0, p], n_b * ((1.0 if p == 0 else 0.0) - S[0, p]))
                  for p in range(2)]
    else:
        S = None
        states = [start]
    nl = len(ns)
    A = np.zeros((len(states), nl), dtype=complex)
    B = np.zeros_like(A)
    for col, (e, h) in enumerate(states):
        for j in range(nl):
            n = ns[j]
            kd = n * omega * ds[j]
            if j in refs_right:
                m = _layer_matrix(n, kd)
                e_r, h_r = m[0] * e + m[1] * h, m[2] * e + m[3] * h
                A[col, j] = 0.5 * (e_r + h_r / n)
                B[col, j] = 0.5 * (e_r - h_r / n)
                e, h = e_r, h_r
            else:
                A[col, j] = 0.5 * (e + h / n)
                B[col, j] = 0.5 * (e - h / n)
                m = _layer_matrix(n, kd)
                e, h = m[0] * e + m[1] * h, m[2] * e + m[3] * h
    refs = np.array([edges[j + 1] if j in refs_right else edges[j] for j in range(nl)])
    return A, B, S, edges, refs


def internal_fields(slab: Slab1D, omega: complex, port: int, library=None) -> FieldSolution:
    """Internal field of the slab illuminated from ``port`` (0 = left, 1 = right)."""
    if port not in (0, 1):
        raise ValueError("port must be 0 (left) or 1 (right)")
    omega = complex(omega)
    eps = [complex(e) for e in _layer_eps(slab, omega, library)]
    ns = [complex(_sqrt_eps(e)) for e in eps]
    ds = [l.thickness for l in slab.layers]
    A, B, S, edges, refs = _solve_coefficients(ns, ds, omega, slab.n_b)
    return FieldSolution(omega, port, edges, refs, np.array(ns), np.array(eps),
                         A[port], B[port], S, slab.n_b)


def qnm_field(slab: Slab1D, omega_p: complex, library=None) -> FieldSolution:
    """Outgoing-wave field at a pole, scaled to E(0) = 1."""
    omega_p = complex(omega_p)
    eps = [complex(e) for e in _layer_eps(slab, omega_p, library)]
    ns = [complex(_sqrt_eps(e)) for e in eps]
    ds = [l.thickness for l in slab.layers]
    A, B, _, edges, refs = _solve_coefficients(ns, ds, omega_p, slab.n_b,
                                               start=(1.0 + 0j, -slab.n_b + 0j))
    return FieldSolution(omega_p, -1, edges, refs, np.array(ns), np.array(eps), A[0], B[0],
                         np.full((2, 2), np.nan + 0j), slab.n_b)


# -- closed-form integrals -------------------------------------------------------

def _phi(k_index: int, x: complex) -> complex:
    """phi_k(x) = sum_j x^j/(j+k)!, so that int_0^d t^m e^{st} dt = d^{m+1} m! e^{sd} phi_{m+1}(-sd)."""
    if abs(x) < 1.0:
        term = 1.0 / math.factorial(k_index)
        total = term
        for j in range(1, 40):
            term *= x / (j + k_index)
            total += term
            if abs(term) < 1e-17 * abs(total):
                break
        return total
    tail = sum(x**j / math.factorial(j) for j in range(k_index))
    return (np.exp(x) - tail) / x**k_index


def _int_poly_exp(coeffs, s, u0, u1):
    """Integral over [u0, u1] of (c0 + c1 u + c2 u^2) exp(s u)."""
    d = u1 - u0
    x = s * d
    e0 = np.exp(s * u0)
    # moments in t = u - u0
    ex = np.exp(x)
    t0 = d * ex * _phi(1, -x)
    t1 = d**2 * ex * _phi(2, -x)
    t2 = 2 * d**3 * ex * _phi(3, -x)
    c0, c1, c2 = (list(coeffs) + [0, 0, 0])[:3]
    # rewrite in t: u = t + u0
    a0 = c0 + c1 * u0 + c2 * u0**2
    a1 = c1 + 2 * c2 * u0
    a2 = c2
    return e0 * (a0 * t0 + a1 * t1 + a2 * t2)


def _terms_E(A, B, kap, dA=0, dB=0, dkap=0):
    """E (or dE/dxi) as [(poly, exponent)] with poly coefficients in u."""
    return [((A, 0j), 1j * kap), ((B, 0j), -1j * kap)], \
        [((dA, 1j * dkap * A), 1j * kap), ((dB, -1j * dkap * B), -1j * kap)]


def _terms_H(A, B, n, kap, dA=0, dB=0, dn=0, dkap=0):
    h = [((n * A, 0j), 1j * kap), ((-n * B, 0j), -1j * kap)]
    dh = [((dn * A + n * dA, 1j * n * dkap * A), 1j * kap),
          ((-dn * B - n * dB, 1j * n * dkap * B), -1j * kap)]
    return h, dh


def _conj_terms(terms):
    return [((np.conj(p[0]), np.conj(p[1])), np.conj(s)) for p, s in terms]


def _product_integral(f, g, u0, u1):
    total = 0j
    for (fp, fs) in f:
        for (gp, gs) in g:
            poly = (fp[0] * gp[0], fp[0] * gp[1] + fp[1] * gp[0], fp[1] * gp[1])
            if poly == (0, 0, 0):
                continue
            total += _int_poly_exp(poly, fs + gs, u0, u1)
    return total


def _value_at(terms, u):
    return sum((p[0] + p[1] * u) * np.exp(s * u) for p, s in terms)


# -- identities -----------------------------------------------------------------

@dataclass(frozen=True)
class OperatorIdentityReport:
    identity: str
    lhs: np.ndarray
    rhs: np.ndarray
    residual: float
    xi: str = ""
    omega: complex = 0j


def _residual(lhs, rhs):
    a, b = np.linalg.norm(lhs), np.linalg.norm(rhs)
    scale = max(a, b)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(lhs - rhs) / scale)


def _parse_xi(xi: str, nl: int):
    """'omega', 'eps_scale:j', 'deps:j' or 'thickness:j' (moves the interface after layer j)."""
    if xi == "omega":
        return "omega", None
    kind, _, idx = xi.partition(":")
    if kind not in ("eps_scale", "deps", "thickness") or not idx:
        raise ValueError(f"unknown parameter {xi!r}")
    j = int(idx)
    limit = nl - 1 if kind == "thickness" else nl
    if not 0 <= j < limit:
        raise ValueError(f"layer index {j} out of range for parameter {kind}")
    return kind, j


def _state(slab, omega, library, kind, j, xi_val):
    """(ns, eps, ds, omega) of the slab with parameter value xi_val applied."""
    w = omega + (xi_val if kind == "omega" else 0.0)
    deps = {j: xi_val} if kind == "deps" else None
    scale = {j: xi_val} if kind == "eps_scale" else None
    eps = [complex(e) for e in _layer_eps(slab, w, library, deps, scale)]
    ds = [l.thickness for l in slab.layers]
    if kind == "thickness":
        ds = list(ds)
        ds[j] += xi_val
        ds[j + 1] -= xi_val
    return [complex(_sqrt_eps(e)) for e in eps], eps, ds, w


def verify_identity(slab: Slab1D, omega: complex, identity: str, xi: str = "omega",
                    library=None, fd_rel: float = _FD_REL) -> OperatorIdentityReport:
    """Compare an S-matrix expression with its internal-field integral form.

    ``identity`` is one of 'C', 'D' (unconjugated products) or 'A', 'B'
    (conjugated products). D and B need a parameter ``xi``: 'omega',
    'eps_scale:j', 'deps:j' or 'thickness:j'. Parameter derivatives of S
    and of the layer coefficients are central differences with one
    Richardson step.
    """
    if identity not in IDENTITIES:
        raise ValueError(f"identity must be one of {IDENTITIES}")
    omega = complex(omega)
    nl = len(slab.layers)
    n_b = slab.n_b
    kind, j = _parse_xi(xi, nl) if identity in ("D", "B") else ("omega", None)
    refs_right = frozenset(range(j + 1, nl)) if kind == "thickness" else frozenset()

    ns, eps, ds, _ = _state(slab, omega, library, kind, j, 0.0)
    if nl:
        A, B, S, edges, refs = _solve_coefficients(ns, ds, omega, n_b, refs_right)
    else:
        S = _smatrix_from([], [], omega, n_b)
        A = B = np.zeros((2, 0), dtype=complex)
        edges, refs = np.array([0.0]), np.array([])

    if identity in ("C", "A"):
        rhs = np.eye(2, dtype=complex)
        for q in range(2):
            for p in range(2):
                acc = 0j
                for l in range(nl):
                    kap = ns[l] * omega
                    u0, u1 = edges[l] - refs[l], edges[l + 1] - refs[l]
                    Ep, _ = _terms_E(A[p, l], B[p, l], kap)
                    Eq, _ = _terms_E(A[q, l], B[q, l], kap)
                    Hp, _ = _terms_H(A[p, l], B[p, l], ns[l], kap)
                    Hq, _ = _terms_H(A[q, l], B[q, l], ns[l], kap)
                    if identity == "C":
                        acc += (1j * omega / n_b) * (
                            eps[l] * _product_integral(Ep, Eq, u0, u1)
                            + _product_integral(Hp, Hq, u0, u1))
                    else:
                        acc -= (1.0 / n_b) * (
                            (omega * eps[l]).imag * _product_integral(Ep, _conj_terms(Eq), u0, u1)
                            + omega.imag * _product_integral(Hp, _conj_terms(Hq), u0, u1))
                rhs[q, p] += acc
        lhs = S.T @ S if identity == "C" else S.conj().T @ S
        return OperatorIdentityReport(identity, lhs, rhs, _residual(lhs, rhs), "", omega)

    # derivative identities
    if kind == "omega":
        h = fd_rel * abs(omega)
    elif kind == "thickness":
        h = fd_rel * min(ds[j], ds[j + 1])
    else:
        h = fd_rel

    def solve(x):
        ns_x, eps_x, ds_x, w_x = _state(slab, omega, library, kind, j, x)
        if nl:
            A_x, B_x, S_x, _, _ = _solve_coefficients(ns_x, ds_x, w_x, n_b, refs_right)
        else:
            S_x, A_x, B_x = _smatrix_from([], [], w_x, n_b), A, B
        weps = np.array([w_x * e for e in eps_x], dtype=complex)
        return S_x, A_x, B_x, np.array(ns_x), weps

    def deriv(idx):
        plus, minus = solve(h), solve(-h)
        plus2, minus2 = solve(h / 2), solve(-h / 2)
        d1 = (plus[idx] - minus[idx]) / (2 * h)
        d2 = (plus2[idx] - minus2[idx]) / h
        return (4 * d2 - d1) / 3

    dS, dA, dB, dn, dweps = (deriv(i) for i in range(5))
    domega = 1.0 if kind == "omega" else 0.0
    if kind == "thickness":
        dweps = np.zeros(nl, dtype=complex)  # replaced by the interface term below

    conj = identity == "B"
    rhs = np.zeros((2, 2), dtype=complex)
    for q in range(2):
        for p in range(2):
            acc = 0j
            for l in range(nl):
                kap = ns[l] * omega
                dkap = dn[l] * omega + ns[l] * domega
                u0, u1 = edges[l] - refs[l], edges[l + 1] - refs[l]
                Ep, dEp = _terms_E(A[p, l], B[p, l], kap, dA[p, l], dB[p, l], dkap)
                Hp, dHp = _terms_H(A[p, l], B[p, l], ns[l], kap, dA[p, l], dB[p, l], dn[l], dkap)
                Eq, _ = _terms_E(A[q, l], B[q, l], kap)
                Hq, _ = _terms_H(A[q, l], B[q, l], ns[l], kap)
                if conj:
                    Eq, Hq = _conj_terms(Eq), _conj_terms(Hq)
                    we = 2j * (omega * eps[l]).imag
                    wh = 2j * omega.imag
                else:
                    we = 2 * omega * eps[l]
                    wh = 2 * omega
                acc += (dweps[l] * _product_integral(Ep, Eq, u0, u1)
                        + domega * _product_integral(Hp, Hq, u0, u1)
                        + we * _product_integral(dEp, Eq, u0, u1)
                        + wh * _product_integral(dHp, Hq, u0, u1))
            if kind == "thickness":
                z = edges[j + 1]
                Ep, _ = _terms_E(A[p, j], B[p, j], ns[j] * omega)
                Eq, _ = _terms_E(A[q, j], B[q, j], ns[j] * omega)
                ep = _value_at(Ep, z - refs[j])
                eq = _value_at(Eq, z - refs[j])
                acc += omega * (eps[j] - eps[j + 1]) * ep * (np.conj(eq) if conj else eq)
            rhs[q, p] = acc / (2 * n_b)
    lhs = -1j * (S.conj().T if conj else S.T) @ dS
    return OperatorIdentityReport(identity, lhs, rhs, _residual(lhs, rhs), xi, omega)


# -- poles and perturbation comparison ----------------------------------------------

def slab_function(slab: Slab1D, library=None) -> ScatteringFunction:
    """det S of the slab as a ScatteringFunction of omega.

    Parameters ``deps{j}`` add to the permittivity of layer j. Poles of
    det S are the zeros of the port-system determinant.
    """
    nl = len(slab.layers)
    ds = [l.thickness for l in slab.layers]
    n_b = slab.n_b

    def parts(omega, p):
        omega = np.asarray(omega, dtype=complex)
        deps = {j: p[f"deps{j}"] for j in range(nl)}
        eps = _layer_eps(slab, omega, library, deps)
        m = _total_transfer([_sqrt_eps(e) for e in eps], ds, omega)
        k, r = _port_system(m, n_b)
        num, den = _det2(r), _det2(k)
        if np.ndim(num) == 0:
            return complex(num), complex(den)
        return num, den

    params = {f"deps{j}": 0.0 for j in range(nl)}
    return ScatteringFunction(parts, params, {k: "1" for k in params},
                              {k: 1.0 for k in params}, label="det S")


def locate_slab_pole(slab: Slab1D, seed: complex, library=None, tol: float = 1e-13) -> cp.PoleRecord:
    M = slab_function(slab, library)
    rec = locate(M, seed, "pole", tol)
    rec.winding = cp.winding_number(M, default_contour(rec.location))
    return rec


@dataclass(frozen=True)
class PerturbationComparison:
    omega_p: complex
    q_factor: float
    layer: int
    delta_eps: complex
    conjugated: complex
    unconjugated: complex
    gws: complex
    direct: complex

    def relative_error(self, name: str) -> float:
        ref = self.direct
        val = getattr(self, name)
        if ref == 0:
            return 0.0 if val == 0 else math.inf
        return abs(val - ref) / abs(ref)


def _field_integrals(sol: FieldSolution, layers=None):
    """Slab integrals of E^2, H^2, |E|^2, |H|^2 (optionally over selected layers)."""
    out = np.zeros((len(sol.n), 4), dtype=complex)
    for l in range(len(sol.n)):
        kap = sol.n[l] * sol.omega
        u0, u1 = sol.edges[l] - sol.refs[l], sol.edges[l + 1] - sol.refs[l]
        E, _ = _terms_E(sol.A[l], sol.B[l], kap)
        H, _ = _terms_H(sol.A[l], sol.B[l], sol.n[l], kap)
        out[l] = (_product_integral(E, E, u0, u1), _product_integral(H, H, u0, u1),
                  _product_integral(E, _conj_terms(E), u0, u1),
                  _product_integral(H, _conj_terms(H), u0, u1))
    return out


def perturb_compare(slab: Slab1D, omega_seed: complex, layer: int, delta_eps: float,
                    library=None) -> PerturbationComparison:
    """First-order pole shifts from four routes for eps_layer -> eps_layer + delta_eps.

    ``conjugated``: energy-normalised cavity formula with E.E*, using the
    real part of eps and the field inside the slab only.
    ``unconjugated``: E.E products with the outgoing-mode norm
    int (eps E^2 - H^2) dz over the slab, which equals the full
    outgoing-wave normalisation in 1D (the port contributions cancel).
    ``gws``: residue of the logarithmic derivative of det S.
    ``direct``: re-solved pole of the perturbed slab.
    """
    if not 0 <= layer < len(slab.layers):
        raise ValueError("layer index out of range")
    M = slab_function(slab, library)
    rec = locate(M, omega_seed, "pole")
    w = rec.location
    name = f"deps{layer}"
    g = pole_shift(M, w, name, delta_eps).delta_k
    d = pole_shift_direct(M, w, name, delta_eps).delta_k
    sol = qnm_field(slab, w, library)
    ints = _field_integrals(sol)
    eps = sol.eps
    norm_unconj = np.sum(eps * ints[:, 0] - ints[:, 1])
    energy = np.sum(eps.real * ints[:, 2].real + ints[:, 3].real)
    unconj = -w * delta_eps * ints[layer, 0] / norm_unconj
    conj = -w * delta_eps * ints[layer, 2].real / energy
    return PerturbationComparison(w, rec.q_factor, layer, delta_eps, complex(conj),
                                  complex(unconj), complex(g), complex(d))


def random_slab(rng: np.random.Generator, max_layers: int = 3, lossy: bool = True,
                thickness_range=(50e-9, 300e-9), background_eps: float = 1.0) -> Slab1D:
    """Random 1 to max_layers stack for property tests."""
    nl = int(rng.integers(1, max_layers + 1))
    layers = []
    for _ in range(nl):
        er = float(rng.uniform(1.2, 12.0))
        ei = float(rng.uniform(0.0, 1.0)) if lossy and rng.random() < 0.5 else 0.0
        layers.append(Layer(float(rng.uniform(*thickness_range)), eps=complex(er, ei)))
    return Slab1D(tuple(layers), background_eps)
