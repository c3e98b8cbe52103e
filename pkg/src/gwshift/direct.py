"""Finite-perturbation ground truth: re-solve for the moved pole or zero."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import complexplane as cp
from .gws import ScatteringFunction, default_contour

__all__ = ["DirectShiftResult", "pole_shift_direct", "SPLIT_FRACTION"]

# split the perturbation when the predicted move exceeds this fraction of
# the distance to the nearest other known singularity
SPLIT_FRACTION = 0.3


@dataclass(frozen=True)
class DirectShiftResult:
    k_before: complex
    k_after: complex
    delta_alpha: float
    delta_k: complex
    iterations_before: int
    iterations_after: int
    substeps: int = 1
    param: str = ""
    kind: str = "pole"


def _root_fn(M: ScatteringFunction, kind: str):
    return M.pole_function() if kind == "pole" else M.zero_function()


def _verify(M, kind, k):
    check = M if kind == "pole" else M.inverse()
    w = cp.winding_number(check, default_contour(k))
    if w != -1:
        raise cp.LostTrack(f"{kind} at {k} failed winding verification (winding {w})")


def pole_shift_direct(M: ScatteringFunction, k_p: complex, param: str, delta_alpha: float,
                      kind: str = "pole", tol: float = 1e-13, known: tuple = (),
                      max_substeps: int = 64, verify: bool = True) -> DirectShiftResult:
    """Move ``param`` by ``delta_alpha`` and re-solve for the singularity.

    The starting point is first polished on the unperturbed function so both
    endpoints carry the same solver bias. If a one-step Newton estimate of
    the move exceeds SPLIT_FRACTION of the distance to any singularity in
    ``known``, or the single solve fails, the perturbation is split into
    equal sub-steps and followed by continuation.
    """
    if param not in M.params:
        raise KeyError(f"unknown parameter {param!r}; known: {sorted(M.params)}")
    fn0 = _root_fn(M, kind)
    k0, it0, _ = cp.newton_root(fn0, k_p, tol=tol, return_info=True)
    if verify:
        _verify(M, kind, k0)
    if delta_alpha == 0:
        return DirectShiftResult(k0, k0, 0.0, 0j, it0, 0, 1, param, kind)

    alpha0 = M.params[param]
    M1 = M.with_params(**{param: alpha0 + delta_alpha})
    fn1 = _root_fn(M1, kind)

    n_sub = 1
    others = [complex(q) for q in known if abs(complex(q) - k0) > 1e-9 * abs(k0)]
    if others:
        h = 1e-7 * abs(k0)
        slope = (fn1(k0 + h) - fn1(k0 - h)) / (2 * h)
        estimate = abs(fn1(k0) / slope)
        nearest = min(abs(q - k0) for q in others)
        while estimate / n_sub > SPLIT_FRACTION * nearest and n_sub < max_substeps:
            n_sub *= 2

    def family(alpha):
        return _root_fn(M.with_params(**{param: alpha}), kind)

    while True:
        path = alpha0 + delta_alpha * np.linspace(0.0, 1.0, n_sub + 1)
        try:
            if n_sub == 1:
                k1, it1, _ = cp.newton_root(fn1, k0, tol=tol, return_info=True)
                if abs(k1 - k0) > 0.5 * max(abs(k0.imag), 1e-3 * abs(k0)):
                    raise cp.LostTrack("single-step re-solve jumped too far")
            else:
                recs = cp.track(family, path, k0, kind=kind, tol=tol)
                k1, it1 = recs[-1].location, recs[-1].iterations
            break
        except ArithmeticError as exc:
            if n_sub >= max_substeps:
                raise cp.LostTrack(f"direct re-solve failed after {n_sub} sub-steps: {exc}") from exc
            n_sub *= 2
    if verify:
        _verify(M1, kind, k1)
    return DirectShiftResult(k0, complex(k1), delta_alpha, complex(k1 - k0), it0, it1, n_sub,
                             param, kind)
