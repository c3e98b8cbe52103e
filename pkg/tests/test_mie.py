import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import special

from gwshift.materials import Constant
from gwshift.mie import (S_MATRIX_SIGN, LayeredSphere, coated_a, coated_b, cross_sections,
                         layered_fg, mie_a, mie_b, nu_max_for)


def scipy_ab(n, x, m):
    """Homogeneous-sphere coefficients from scipy's spherical Bessel functions."""
    def psi(z):
        return z * special.spherical_jn(n, z)

    def dpsi(z):
        return special.spherical_jn(n, z) + z * special.spherical_jn(n, z, derivative=True)

    def xi(z):
        return z * (special.spherical_jn(n, z) + 1j * special.spherical_yn(n, z))

    def dxi(z):
        h = special.spherical_jn(n, z) + 1j * special.spherical_yn(n, z)
        dh = (special.spherical_jn(n, z, derivative=True)
              + 1j * special.spherical_yn(n, z, derivative=True))
        return h + z * dh

    mx = m * x
    a = (m * psi(mx) * dpsi(x) - psi(x) * dpsi(mx)) / (m * psi(mx) * dxi(x) - xi(x) * dpsi(mx))
    b = (psi(mx) * dpsi(x) - m * psi(x) * dpsi(mx)) / (psi(mx) * dxi(x) - m * xi(x) * dpsi(mx))
    return a, b


@pytest.mark.parametrize("n,x,m", [(1, 2.0, 1.5), (2, 5.0, 1.33 + 0.1j), (4, 10.0, 2.0 + 0.01j),
                                   (1, 0.7, 0.2 + 3.5j)])
def test_against_scipy(n, x, m):
    a_ref, b_ref = scipy_ab(n, x, m)
    assert mie_a(n, x, m).value == pytest.approx(a_ref, rel=1e-10)
    assert mie_b(n, x, m).value == pytest.approx(b_ref, rel=1e-10)


def test_index_matched_sphere_is_transparent():
    for n in (1, 2, 5):
        ev = mie_a(n, 3.3, 1.0)
        assert ev.numerator == 0
        assert mie_b(n, 3.3, 1.0).value == 0


def test_small_particle_series():
    x, m = 1e-3, 1.5
    a1 = mie_a(1, x, m).value
    assert a1 == pytest.approx(-(2j / 3) * (m**2 - 1) / (m**2 + 2) * x**3, rel=1e-5)
    assert abs(a1) == pytest.approx(1.96e-10, rel=1e-3)
    assert abs(mie_b(1, x, m).value) < 1e-5 * abs(a1)


def test_lossless_unitarity_sign():
    assert S_MATRIX_SIGN == -1
    assert abs(1 - 2 * mie_a(1, 5.0, 1.5).value) == pytest.approx(1, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(0.05, 30), m=st.floats(0.3, 4), n=st.integers(1, 12))
def test_unitarity_property(x, m, n):
    assume(abs(m - 1) > 1e-6)
    for ev in (mie_a(n, x, m), mie_b(n, x, m)):
        assert abs(1 - 2 * ev.value) == pytest.approx(1, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(0.1, 15), m_re=st.floats(1.1, 3), m_im=st.floats(0, 1),
       split=st.floats(0.1, 0.9), n=st.integers(1, 6))
def test_identical_layers_reduce_to_homogeneous(x, m_re, m_im, split, n):
    m = complex(m_re, m_im)
    for kind, single in (("a", mie_a), ("b", mie_b)):
        f, g = layered_fg(n, [split * x, x], [m, m], kind)
        assert complex(f / g) == pytest.approx(single(n, x, m).value, rel=1e-9, abs=1e-14)


def test_vanishing_shell_limit(library):
    lib = library.with_entries(c=Constant(1.5), s=Constant(0.3 + 4j), b=Constant(1.33))
    core = LayeredSphere((50e-9,), ("c",), "b")
    k = 1.1e7
    ref = coated_a(1, core, k, lib).value
    gaps = []
    for d in (1e-12, 1e-14):
        shelled = LayeredSphere((50e-9, 50e-9 + d), ("c", "s"), "b")
        gaps.append(abs(coated_a(1, shelled, k, lib).value - ref) / abs(ref))
    # first-order approach to the bare core
    assert gaps[1] < 1e-4
    assert gaps[0] / gaps[1] == pytest.approx(100, rel=0.01)
    assert LayeredSphere.core_shell(50e-9, 0.0, "c", "s", "b").radii == (50e-9,)


def test_sphere_validation():
    with pytest.raises(ValueError):
        LayeredSphere((), ())
    with pytest.raises(ValueError):
        LayeredSphere((2e-8, 1e-8), ("a", "b"))
    with pytest.raises(ValueError):
        LayeredSphere((1e-8,), ("a", "b"))
    with pytest.raises(ValueError):
        layered_fg(0, [1.0], [1.5])
    with pytest.raises(ValueError):
        layered_fg(1, [1.0], [1.5], "c")


def test_cross_sections_trivial_and_lossless(library):
    lib = library.with_entries(one=Constant(1.33), glass=Constant(1.6), b=Constant(1.33))
    ks = np.linspace(0.4e7, 1.3e7, 25)
    ext, sca, ab = cross_sections(LayeredSphere((60e-9,), ("one",), "b"), ks, library=lib)
    assert np.all(ext == 0) and np.all(sca == 0) and np.all(ab == 0)
    ext, sca, ab = cross_sections(LayeredSphere((200e-9,), ("glass",), "b"), ks, library=lib)
    assert np.all(np.abs(ab) <= 1e-10 * ext)


def test_coated_spectrum_shape(library):
    ks = np.linspace(0.4e7, 1.3e7, 451)
    ext, sca, ab = cross_sections(LayeredSphere.core_shell(60e-9, 10e-9), ks, library=library)
    assert np.allclose(ext, sca + ab, rtol=1e-12)
    for arr in (ext, sca, ab):
        assert ks[np.argmax(arr)] == pytest.approx(0.7e7, rel=0.05)
    scalar = cross_sections(LayeredSphere.core_shell(60e-9, 10e-9), float(ks[10]), library=library)
    assert scalar[0] == pytest.approx(ext[10], rel=1e-13)
    with pytest.raises(ValueError):
        cross_sections(LayeredSphere.core_shell(60e-9, 10e-9), -1.0)


def test_magnetic_coefficient_and_truncation(library):
    sphere = LayeredSphere.core_shell(60e-9, 10e-9)
    b = coated_b(1, sphere, 0.7e7, library).value
    a = coated_a(1, sphere, 0.7e7, library).value
    assert abs(b) < abs(a)
    assert nu_max_for(1e-9) == 3
    assert nu_max_for(10.0) == int(np.ceil(10 + 4 * 10 ** (1 / 3) + 2))
