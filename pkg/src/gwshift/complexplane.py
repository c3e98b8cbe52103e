"""Seeded root finding and contour quadrature for meromorphic functions.

Functions passed to :func:`residue` and :func:`winding_number` may accept a
NumPy array of wavenumbers (preferred, one call per contour) or a scalar;
scalar-only callables are detected and evaluated point by point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "NoConvergence",
    "DivergedOutOfDomain",
    "MultipleRoot",
    "NonConvergence",
    "MultipleSingularities",
    "IllConditioned",
    "LostTrack",
    "ContourSpec",
    "PoleRecord",
    "newton_root",
    "residue",
    "winding_number",
    "track",
]


class NoConvergence(ArithmeticError):
    """Newton iteration did not converge within the iteration budget."""


class DivergedOutOfDomain(ArithmeticError):
    """Newton iterate left the domain where the function can be evaluated."""


class MultipleRoot(NoConvergence):
    """Converged point is not a simple root (winding number != 1)."""


class NonConvergence(ArithmeticError):
    """Contour quadrature did not converge under sample doubling."""


class MultipleSingularities(NonConvergence):
    """Quadrature behaves as if more than one singularity is near the contour."""


class IllConditioned(ArithmeticError):
    """Function magnitude on the contour spans too many orders of magnitude."""


class LostTrack(ArithmeticError):
    """Continuation failed even after refining the parameter path."""

    def __init__(self, message, last_good=None, records=None):
        super().__init__(message)
        self.last_good = last_good
        self.records = records or []


@dataclass(frozen=True)
class ContourSpec:
    center: complex
    radius: float
    samples: int = 32

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("contour radius must be positive")
        if self.samples < 16:
            raise ValueError("at least 16 contour samples are required")

    def points(self, n: int | None = None) -> np.ndarray:
        n = self.samples if n is None else n
        theta = 2 * np.pi * np.arange(n) / n
        return self.center + self.radius * np.exp(1j * theta)


@dataclass
class PoleRecord:
    """A located pole or zero in the complex wavenumber plane."""

    location: complex
    kind: str = "pole"
    residue_of_trace: complex = complex("nan")
    iterations: int = 0
    final_step: float = 0.0
    parameter: object = None
    winding: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def q_factor(self) -> float:
        im = abs(self.location.imag)
        return math.inf if im == 0 else self.location.real / (2 * im)

    @property
    def passive_sign_ok(self) -> bool:
        return self.location.imag < 0


def _evaluate(f, ks):
    """Evaluate f on an array of points, vectorized when possible."""
    try:
        out = np.asarray(f(ks), dtype=complex)
        if out.shape == ks.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([complex(f(complex(k))) for k in ks])


def newton_root(f: Callable, k0: complex, tol: float = 1e-12, max_iter: int = 60,
                df: Callable | None = None, fd_rel: float = 1e-7, ftol: float | None = None,
                check_simple: bool = False, return_info: bool = False):
    """Newton iteration for a root of f near k0.

    Converged when the step is below ``tol * |k|`` (and, if given,
    ``|f| <= ftol``). The derivative is a central difference with step
    ``max(fd_rel |k|, 1e-2 tol |k|)`` (``fd_rel`` at k = 0) unless ``df`` is
    supplied.

    With ``check_simple`` the root is certified by a unit winding number of
    f on a small circle; a multiple root raises :class:`MultipleRoot`.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    k = complex(k0)
    step = math.inf
    for it in range(1, max_iter + 1):
        try:
            fk = complex(f(k))
            if df is None:
                h = max(fd_rel * abs(k), 1e-2 * tol * abs(k)) if k != 0 else fd_rel
                dk = (complex(f(k + h)) - complex(f(k - h))) / (2 * h)
            else:
                dk = complex(df(k))
        except (ValueError, ArithmeticError) as exc:
            raise DivergedOutOfDomain(f"evaluation failed at k={k}: {exc}") from exc
        if fk == 0:
            step = 0.0
            break
        if dk == 0 or not np.isfinite(dk) or not np.isfinite(fk):
            raise DivergedOutOfDomain(f"derivative vanished or non-finite at k={k}")
        delta = fk / dk
        k = k - delta
        step = abs(delta)
        if not np.isfinite(k):
            raise DivergedOutOfDomain("iterate became non-finite")
        if step <= tol * max(abs(k), 1e-300):
            if ftol is None or abs(complex(f(k))) <= ftol:
                break
    else:
        raise NoConvergence(f"Newton did not converge in {max_iter} iterations (last step {step:.3e})")
    if check_simple:
        radius = max(1e-4 * abs(k), 1e3 * tol * abs(k))
        w = winding_number(f, ContourSpec(k, radius, 64))
        if w != 1:
            raise MultipleRoot(f"root at {k} has winding number {w}, not a simple root")
    if return_info:
        return k, it, step
    return k


def residue(f: Callable, contour: ContourSpec, rtol: float = 1e-9, max_samples: int = 8192,
            return_info: bool = False, floor_rtol: float = 1e-6):
    """(1/2 pi i) times the contour integral of f around a circle.

    Uses the trapezoidal rule on the circle, which converges geometrically
    for functions analytic in an annulus around the contour. The sample
    count is doubled until two successive estimates agree to ``rtol``.

    Integrands built from finite differences carry rounding noise, which
    stops the geometric decay at some floor. If the change stagnates
    (no longer halves per doubling) after at least 256 samples while
    already below ``floor_rtol``, the estimate is accepted and the last
    change is reported as its error (``return_info=True`` gives
    ``(value, samples, error)``).
    """
    n = contour.samples
    pts = contour.points(n)
    vals = _evaluate(f, pts)
    theta_weight = contour.radius * np.exp(1j * 2 * np.pi * np.arange(n) / n)
    est = np.sum(vals * theta_weight) / n
    changes = []
    while n < max_samples:
        n2 = 2 * n
        new_idx = np.arange(1, n2, 2)
        new_pts = contour.center + contour.radius * np.exp(1j * 2 * np.pi * new_idx / n2)
        new_vals = _evaluate(f, new_pts)
        new_sum = np.sum(new_vals * (new_pts - contour.center))
        est2 = (est * n + new_sum) / n2
        change = abs(est2 - est)
        scale = max(abs(est2), 1e-300)
        n = n2
        est = est2
        if not np.isfinite(est):
            raise NonConvergence("non-finite residue estimate (singularity on the contour?)")
        stagnant = len(changes) >= 1 and change > 0.5 * changes[-1]
        if change <= rtol * scale or (n >= 256 and stagnant and change <= floor_rtol * scale):
            if return_info:
                return complex(est), n, float(change)
            return complex(est)
        changes.append(change)
        if len(changes) >= 4 and changes[-1] >= changes[-2] >= changes[-3]:
            raise MultipleSingularities(
                "residue estimate does not settle under sample doubling; "
                "a singularity is probably close to the contour"
            )
    raise NonConvergence(f"residue not converged with {max_samples} samples")


def winding_number(f: Callable, contour: ContourSpec, max_samples: int = 4096,
                   max_orders: float = 12.0) -> int:
    """Number of zeros minus poles of f inside the contour.

    Computed as the total change of arg f around the circle divided by 2 pi,
    i.e. the argument-principle integral. Samples are doubled until no
    single phase increment exceeds pi/4.
    """
    n = max(contour.samples, 32)
    while True:
        vals = _evaluate(f, contour.points(n))
        mags = np.abs(vals)
        if np.any(mags == 0) or not np.all(np.isfinite(vals)):
            raise IllConditioned("function vanishes or is singular on the contour")
        if np.log10(mags.max() / mags.min()) > max_orders:
            raise IllConditioned(
                f"|f| varies by more than {max_orders:g} orders of magnitude on the contour"
            )
        dphi = np.angle(np.roll(vals, -1) / vals)
        if np.max(np.abs(dphi)) < np.pi / 4 or 2 * n > max_samples:
            break
        n *= 2
    total = dphi.sum() / (2 * np.pi)
    return int(round(total))


def track(family: Callable, path: Sequence, seed: complex, *, kind: str = "pole",
          tol: float = 1e-12, max_refine: int = 8, max_jump: Callable | float | None = None,
          predictor: Callable | None = None, interpolate: Callable | None = None):
    """Follow a root of ``family(p)`` along an ordered parameter path.

    Each solve is seeded from the previous root, or from
    ``predictor(p_prev, k_prev, p_next)`` when given (e.g. a first-order
    shift prediction). When a solve fails, or the root lands further than
    ``max_jump`` from the seed, the path segment is bisected (up to
    ``max_refine`` levels). Intermediate parameters are produced by
    ``interpolate(p0, p1, t)`` (linear by default).

    Returns one :class:`PoleRecord` per requested path sample.
    """
    if interpolate is None:
        def interpolate(p0, p1, t):
            return p0 + (p1 - p0) * t
    if max_jump is None:
        def max_jump(k):
            return 0.5 * max(abs(k.imag), 1e-3 * abs(k))
    elif not callable(max_jump):
        _mj = float(max_jump)

        def max_jump(k):
            return _mj

    def solve(p, seed_k):
        fun = family(p)
        root, it, step = newton_root(fun, seed_k, tol=tol, return_info=True)
        return root, it, step

    path = list(path)
    records = []
    k_prev = complex(seed)
    p_prev = None
    for idx, p in enumerate(path):
        if p_prev is None:
            try:
                root, it, step = solve(p, k_prev)
            except ArithmeticError as exc:
                raise LostTrack(f"initial solve failed: {exc}", None, records) from exc
            records.append(PoleRecord(root, kind, iterations=it, final_step=step, parameter=p))
            k_prev, p_prev = root, p
            continue
        # walk from p_prev to p, bisecting on failure
        stack = [(0.0, 1.0, 0)]
        k_cur, t_cur = k_prev, 0.0
        last = None
        while stack:
            t0, t1, depth = stack.pop()
            p_target = interpolate(p_prev, p, t1)
            p_from = interpolate(p_prev, p, t0)
            seed_k = predictor(p_from, k_cur, p_target) if predictor else k_cur
            try:
                root, it, step = solve(p_target, seed_k)
                ok = abs(root - seed_k) <= max_jump(k_cur)
            except ArithmeticError:
                ok = False
            if ok:
                k_cur, t_cur = root, t1
                last = (root, it, step)
                continue
            if depth >= max_refine:
                good = records[-1] if records else None
                raise LostTrack(
                    f"lost track between path samples {idx - 1} and {idx} "
                    f"(t={t0:.4g}..{t1:.4g})", good, records)
            tm = 0.5 * (t0 + t1)
            stack.append((tm, t1, depth + 1))
            stack.append((t0, tm, depth + 1))
        root, it, step = last
        records.append(PoleRecord(root, kind, iterations=it, final_step=step, parameter=p))
        k_prev, p_prev = root, p
    return records
