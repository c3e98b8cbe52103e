"""Riccati-Bessel and spherical Bessel functions of complex argument.

Conventions follow Bohren & Huffman:

    psi_n(z) = z j_n(z),     xi_n(z) = z h1_n(z) = psi_n(z) - i chi_n(z)

so that the outgoing wave under the exp(-i omega t) time dependence is
carried by xi. With this choice the Wronskian is

    psi_n xi_n' - psi_n' xi_n = i      for every order n.

psi is built from its logarithmic derivative, obtained by downward
recurrence seeded with a Lentz continued fraction; xi is built by upward
recurrence, which is stable for the outgoing solution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "MAX_ORDER",
    "WRONSKIAN",
    "RiccatiSet",
    "psi_log_derivative",
    "riccati_arrays",
    "riccati",
    "spherical_bessel",
]

MAX_ORDER = 60
WRONSKIAN = 1j

_CF_TOL = 1e-15
_CF_MAX_TERMS = 10_000
_TINY = 1e-300


class DomainError(ValueError):
    """Argument outside the supported domain (zero or negative real axis)."""


@dataclass(frozen=True)
class RiccatiSet:
    order: int
    z: complex
    psi: complex
    psi_prime: complex
    xi: complex
    xi_prime: complex

    @property
    def wronskian(self) -> complex:
        return self.psi * self.xi_prime - self.psi_prime * self.xi


def _check_args(nmax, z, max_order):
    if int(nmax) != nmax or nmax < 0:
        raise ValueError(f"order must be a non-negative integer, got {nmax!r}")
    if nmax > max_order:
        raise ValueError(f"order {nmax} exceeds configured maximum {max_order}")
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("Riccati-Bessel functions require z != 0")
    if np.any((z.imag == 0) & (z.real < 0)):
        raise DomainError("arguments on the negative real axis are rejected")
    return int(nmax), z


def _ratio_cf(n, z):
    """psi_{n-1}(z) / psi_n(z) by modified Lentz evaluation.

    psi_{n-1}/psi_n = b_0 - 1/(b_1 - 1/(b_2 - ...)),  b_j = (2n + 2j + 1)/z
    """
    f = (2 * n + 1) / z
    f = np.where(f == 0, _TINY, f)
    c = f.copy()
    d = np.zeros_like(z)
    done = np.zeros(z.shape, dtype=bool)
    for j in range(1, _CF_MAX_TERMS + 1):
        b = (2 * n + 2 * j + 1) / z
        d = b - d
        d = np.where(d == 0, _TINY, d)
        c = b - 1.0 / c
        c = np.where(c == 0, _TINY, c)
        d = 1.0 / d
        delta = c * d
        f = np.where(done, f, f * delta)
        done |= np.abs(delta - 1.0) < _CF_TOL
        if done.all():
            return f
    raise ArithmeticError(
        f"continued fraction for order {n} did not converge in {_CF_MAX_TERMS} terms"
    )


def psi_log_derivative(nmax: int, z, max_order: int = MAX_ORDER) -> np.ndarray:
    """D_n(z) = psi_n'(z)/psi_n(z) for n = 0..nmax, shape (nmax+1,) + z.shape."""
    nmax, z = _check_args(nmax, z, max_order)
    # seed one order above nmax so that the top of the table also comes out of
    # the downward recurrence
    top = nmax + 1
    d = np.empty((top + 1,) + z.shape, dtype=complex)
    d[top] = _ratio_cf(top, z) - top / z
    for n in range(top, 0, -1):
        d[n - 1] = n / z - 1.0 / (d[n] + n / z)
    return d[: nmax + 1]


def riccati_arrays(nmax: int, z, max_order: int = MAX_ORDER):
    """Return psi, psi', xi, xi' for orders 0..nmax.

    Each array has shape (nmax+1,) + z.shape.
    """
    nmax, z = _check_args(nmax, z, max_order)
    with np.errstate(over="raise", invalid="raise"):
        try:
            dlog = psi_log_derivative(nmax, z, max_order)
            psi = np.empty_like(dlog)
            xi = np.empty_like(dlog)
            psi_prev = np.cos(z)  # psi_{-1}
            psi[0] = np.sin(z)
            eiz = np.exp(1j * z)
            xi_prev = eiz  # xi_{-1}
            xi[0] = -1j * eiz
            for n in range(1, nmax + 1):
                psi[n] = psi[n - 1] / (dlog[n] + n / z)
            for n in range(1, nmax + 1):
                xi[n] = (2 * n - 1) / z * xi[n - 1] - (xi[n - 2] if n >= 2 else xi_prev)
            dpsi = np.empty_like(psi)
            dxi = np.empty_like(xi)
            dpsi[0] = psi_prev
            dxi[0] = xi_prev
            for n in range(1, nmax + 1):
                dpsi[n] = psi[n - 1] - n / z * psi[n]
                dxi[n] = xi[n - 1] - n / z * xi[n]
        except FloatingPointError as exc:
            raise OverflowError(
                "Riccati-Bessel evaluation overflowed (argument too deeply evanescent)"
            ) from exc
    for arr in (psi, dpsi, xi, dxi):
        if not np.all(np.isfinite(arr)):
            raise OverflowError(
                "Riccati-Bessel evaluation overflowed (argument too deeply evanescent)"
            )
    return psi, dpsi, xi, dxi


def riccati(order: int, z: complex, max_order: int = MAX_ORDER) -> RiccatiSet:
    psi, dpsi, xi, dxi = riccati_arrays(order, complex(z), max_order)
    return RiccatiSet(
        order=int(order),
        z=complex(z),
        psi=complex(psi[order]),
        psi_prime=complex(dpsi[order]),
        xi=complex(xi[order]),
        xi_prime=complex(dxi[order]),
    )


def spherical_bessel(kind: str, order: int, z, max_order: int = MAX_ORDER):
    """Spherical Bessel function of the given kind: 'j', 'y', 'h1' or 'h2'.

    Accepts scalar or array z; returns complex of matching shape.
    """
    if kind not in ("j", "y", "h1", "h2"):
        raise ValueError(f"unknown kind {kind!r}")
    zz = np.asarray(z, dtype=complex)
    psi, _, xi, _ = riccati_arrays(order, zz, max_order)
    j = psi[order] / zz
    h1 = xi[order] / zz
    if kind == "j":
        out = j
    elif kind == "h1":
        out = h1
    elif kind == "y":
        out = (h1 - j) / 1j
    else:
        out = 2 * j - h1
    return complex(out) if np.ndim(out) == 0 else out
