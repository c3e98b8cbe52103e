import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from gwshift import complexplane as cp
from gwshift import gws
from gwshift.direct import pole_shift_direct
from gwshift.mie import LayeredSphere

from conftest import LSPR_SEED, ZERO_SEED


def rational(zeros, poles, alpha_rate=None):
    """M(k; a) = prod(k - z_i) / prod(k - p_j(a)), with p_j(a) = p_j + c_j a."""
    rates = alpha_rate or [0.0] * len(poles)

    def parts(k, p):
        a = p["a"]
        k = np.asarray(k, dtype=complex)
        num = np.ones_like(k)
        den = np.ones_like(k)
        for z in zeros:
            num = num * (k - z)
        for pj, c in zip(poles, rates):
            den = den * (k - (pj + c * a))
        return num, den
    return gws.ScatteringFunction(parts, {"a": 0.0}, {"a": "1"}, {"a": 1.0}, "rational")


def test_log_derivative_of_exponential():
    M = gws.ScatteringFunction(lambda k, p: (np.exp(1j * p["a"] * k), 1.0), {"a": 0.3})
    for k in (0.5, 2 - 1j, 7.0 + 0.2j):
        assert gws.log_derivative(M, "a", k) == pytest.approx(k, rel=1e-9)
    ks = np.array([1.0, 2.0 + 1j])
    assert gws.log_derivative(M, "a", ks) == pytest.approx(ks, rel=1e-9)


def test_inverse_negates_log_derivative(lspr):
    rec, fn = lspr
    k = rec.location + 0.05 * abs(rec.location.imag)
    assert gws.log_derivative(fn.inverse(), "n_b", k) == pytest.approx(
        -gws.log_derivative(fn, "n_b", k), rel=1e-8)
    assert fn.inverse().inverse() == fn


def test_analytic_factor_does_not_change_residue():
    M = rational([3.0], [1 - 0.2j], [0.5])
    h = lambda k, a: np.exp(0.3 * a * k) * (2 + k)  # noqa: E731

    def parts(k, p):
        num, den = M.parts(k, p)
        return num * h(np.asarray(k), p["a"]), den
    Mh = gws.ScatteringFunction(parts, {"a": 0.0}, {"a": "1"}, {"a": 1.0})
    r1 = gws.residue_of_log_derivative(M, "a", 1 - 0.2j)
    r2 = gws.residue_of_log_derivative(Mh, "a", 1 - 0.2j)
    assert r2 == pytest.approx(r1, rel=1e-8)
    # the pole moves with rate 0.5, so i Res L_a = 0.5
    assert 1j * r1 == pytest.approx(0.5, rel=1e-8)


def test_zero_delta_gives_zero(lspr):
    rec, fn = lspr
    assert gws.pole_shift(fn, rec.location, "n_b", 0.0).delta_k == 0
    assert gws.pole_shift(fn, rec.location, "n_b", 0.0, "ratio_form").delta_k == 0


def test_radius_law(nd_sphere):
    M, rec = nd_sphere
    r = M.params["r_c"]
    law = gws.radius_sensitivity_analytic(rec.location, r)
    for method in ("gws_residue", "ratio_form"):
        got = gws.pole_shift(M, rec.location, "r_c", 1.0, method)
        assert abs(got.delta_k - law) / abs(law) < 1e-6
        assert got.error_estimate < 1e-6 * abs(law)
    assert gws.radius_sensitivity_analytic(1e7 - 1e6j, 100e-9) == pytest.approx(-(1e14 - 1e13j))


def test_background_index_shift_against_direct(lspr):
    rec, fn = lspr
    pred = gws.pole_shift(fn, rec.location, "n_b", 1e-4)
    direct = pole_shift_direct(fn, rec.location, "n_b", 1e-4)
    assert abs(pred.delta_k - direct.delta_k) / abs(direct.delta_k) < 1e-3
    ratio = gws.pole_shift(fn, rec.location, "n_b", 1e-4, "ratio_form")
    assert abs(ratio.delta_k - pred.delta_k) / abs(pred.delta_k) < 1e-7


def test_zero_shift_against_direct(tracked_zero):
    rec, fn = tracked_zero
    pred = gws.zero_shift(fn, rec.location, "n_b", 1e-4)
    direct = pole_shift_direct(fn, rec.location, "n_b", 1e-4, kind="zero")
    assert abs(pred.delta_k - direct.delta_k) / abs(direct.delta_k) < 1e-3


def test_synthetic_zero_shift_is_exact():
    c = 0.7 - 0.2j

    def parts(k, p):
        return k - (2 - 0.5j + c * p["a"]), k - (5 - 1j)
    M = gws.ScatteringFunction(parts, {"a": 0.0})
    for method in ("gws_residue", "ratio_form"):
        pred = gws.zero_shift(M, 2 - 0.5j, "a", 1e-3, method)
        assert pred.delta_k == pytest.approx(c * 1e-3, rel=1e-8)


def test_cancelled_pole_is_rejected():
    M = gws.ScatteringFunction(lambda k, p: (k - (2 - 1j), k - (2 - 1j)), {"a": 0.0})
    with pytest.raises(gws.SimplePoleViolation):
        gws.pole_shift(M, 2 - 1j, "a", 1e-3)


def test_errors(lspr):
    rec, fn = lspr
    with pytest.raises(KeyError):
        fn.with_params(bogus=1.0)
    with pytest.raises(KeyError):
        gws.log_derivative(fn, "bogus", rec.location + 1e5)
    with pytest.raises(ValueError):
        gws.pole_shift(fn, rec.location, "n_b", 1e-4, method="guess")
    with pytest.raises(ValueError):
        gws.ScatteringFunction(lambda k, p: (1, 1), {"a": float("nan")})
    M = gws.ScatteringFunction(lambda k, p: (k - 1.0, 1.0), {"a": 0.0})
    with pytest.raises(gws.ZeroValue):
        gws.log_derivative(M, "k", 1.0)
    with pytest.raises(gws.RealAxisPole):
        gws.sensitivity_eta(M, cp.PoleRecord(2.0), "a")


def test_default_contour_cap():
    c = gws.default_contour(1e7 - 1e3j)
    assert c.radius == pytest.approx(250)
    assert gws.default_contour(1e7 - 1e6j).radius == pytest.approx(1e-3 * abs(1e7 - 1e6j))


def test_lspr_location(lspr):
    rec, fn = lspr
    assert rec.winding == -1
    assert rec.location.real == pytest.approx(0.71e7, abs=0.04e7)
    assert rec.location.imag == pytest.approx(-0.07e7, abs=0.015e7)
    assert rec.q_factor == pytest.approx(4.8, abs=0.7)
    assert fn.params["k_ref"] == pytest.approx(rec.location.real, rel=1e-9)


def _eta(library, r_c, d_s, seed, kind, path=()):
    """eta after continuing from the 60/10 nm particle through ``path``."""
    M = gws.sphere_function(LayeredSphere.core_shell(60e-9, 10e-9), 1, "a", library,
                            k_ref=seed.real)
    k = seed
    for rc, ds in list(path) + [(r_c, d_s)]:
        rec, fn = gws.locate_sphere(M.with_params(r_c=rc, d_s=ds, k_ref=k.real), k, kind)
        k = rec.location
    return gws.sensitivity_eta(fn, rec).eta


def _walk(a, b, n):
    return [tuple(a[i] + (b[i] - a[i]) * t for i in range(2)) for t in np.linspace(0, 1, n)[1:]]


def test_pole_design_eta(library):
    path = _walk((60e-9, 10e-9), (60e-9, 1.2e-9), 12) + _walk((60e-9, 1.2e-9), (13.3e-9, 1.2e-9), 16)
    eta = _eta(library, 13.3e-9, 1.2e-9, LSPR_SEED, "pole", path)
    assert abs(eta.real) == pytest.approx(11.43, rel=0.25)


def test_zero_design_eta(library):
    path = _walk((60e-9, 10e-9), (60e-9, 0.2e-9), 25) + _walk((60e-9, 0.2e-9), (40e-9, 0.2e-9), 10)
    eta = _eta(library, 40e-9, 0.2e-9, ZERO_SEED, "zero", path)
    assert abs(eta.real) == pytest.approx(100, rel=0.3)


def test_dark_band_has_vanishing_width_sensitivity(library):
    # Im eta of the pole changes sign across a band near r_c ~ 38 nm at d_s = 5 nm
    d_s = 5e-9
    M = gws.sphere_function(LayeredSphere.core_shell(60e-9, 10e-9), 1, "a", library,
                            k_ref=LSPR_SEED.real)
    k = LSPR_SEED
    state = {}
    for rc, ds in _walk((60e-9, 10e-9), (60e-9, d_s), 6) + _walk((60e-9, d_s), (30e-9, d_s), 10):
        rec, _ = gws.locate_sphere(M.with_params(r_c=rc, d_s=ds, k_ref=k.real), k, "pole")
        k = rec.location
        state[rc] = k

    def im_eta(rc):
        seed = state[min(state, key=lambda r: abs(r - rc))]
        rec, fn = gws.locate_sphere(M.with_params(r_c=rc, d_s=d_s, k_ref=seed.real), seed)
        return gws.sensitivity_eta(fn, rec).eta.imag

    grid = sorted(state)
    vals = [im_eta(r) for r in grid]
    flips = [i for i in range(len(grid) - 1) if np.sign(vals[i]) != np.sign(vals[i + 1])]
    assert flips, "no dark band between 30 and 60 nm"
    i = flips[0]
    root = brentq(im_eta, grid[i], grid[i + 1], xtol=1e-13)
    assert abs(im_eta(root)) < 1e-3


@settings(max_examples=30, deadline=None)
@given(p_re=st.floats(1, 10), p_im=st.floats(-2, -0.05), rate_re=st.floats(-3, 3),
       rate_im=st.floats(-3, 3), other=st.floats(15, 30))
def test_pole_shift_of_rational_family(p_re, p_im, rate_re, rate_im, other):
    p = complex(p_re, p_im)
    rate = complex(rate_re, rate_im)
    M = rational([0.5 + 0.5j, other], [p, other + 3 - 1j], [rate, 0.0])
    for method in ("gws_residue", "ratio_form"):
        pred = gws.pole_shift(M, p, "a", 1e-3, method)
        assert pred.delta_k == pytest.approx(rate * 1e-3, rel=1e-6, abs=1e-12)
