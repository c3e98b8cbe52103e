import csv
import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gwshift.materials import (ANALYTIC, FROZEN, MIXED, Constant, MaterialLibrary, RangeError,
                               Tabulated, UnsupportedError, index_for_pole_search, load_model,
                               permittivity, refractive_index, wavelength_um)


def k_of(lam_um):
    return 2 * math.pi / (lam_um * 1e-6)


def test_constant_model():
    m = Constant(1.33)
    assert refractive_index(m, 1e7) == pytest.approx(1.33)
    assert refractive_index(m, 3e6 - 1e6j, ANALYTIC) == pytest.approx(1.33)
    assert permittivity(m, 1e7) == pytest.approx(1.7689)


def test_silica_against_published_coefficients(library):
    lam = 0.88
    # three-term fused-silica Sellmeier fit, resonance wavelengths in um
    terms = [(0.6961663, 0.0684043), (0.4079426, 0.1162414), (0.8974794, 9.896161)]
    n_ref = math.sqrt(1 + sum(b * lam**2 / (lam**2 - c**2) for b, c in terms))
    n = refractive_index(library["silica"], k_of(lam))
    assert n.real == pytest.approx(n_ref, rel=1e-7)
    assert n.real == pytest.approx(1.45, abs=0.01)


def test_water_against_table(library):
    data = resources.files("gwshift") / "data" / "water_hale_querry_1973.csv"
    with data.open() as fh:
        rows = [(float(r["lambda_um"]), float(r["n"]), float(r["k"])) for r in csv.DictReader(fh)]
    lam, n, kap = map(np.array, zip(*rows))
    n_lin = np.interp(0.66, lam, n)
    got = refractive_index(library["water"], k_of(0.66))
    assert got.real == pytest.approx(n_lin, abs=2e-3)
    assert got.real == pytest.approx(1.33, abs=0.005)
    assert 0 <= got.imag < 1e-6


def test_gold_is_metallic(library):
    eps = permittivity(library["gold"], k_of(0.88))
    assert eps.real < 0 and eps.imag > 0


def test_rules(library):
    water = library["water"]
    with pytest.raises(UnsupportedError):
        refractive_index(water, 1e7 - 1e5j, ANALYTIC)
    k = 1e7 - 3e5j
    frozen = index_for_pole_search(water, k, 1e7, MIXED)
    assert frozen == pytest.approx(refractive_index(water, 1e7))
    gold = library["gold"]
    cont = index_for_pole_search(gold, k, 1e7, MIXED)
    assert cont == pytest.approx(refractive_index(gold, k, ANALYTIC))
    assert cont != pytest.approx(refractive_index(gold, 1e7))
    with pytest.raises(ValueError):
        refractive_index(gold, 1e7, "guess")


def test_range_errors(library):
    with pytest.raises(RangeError):
        refractive_index(library["water"], k_of(20.0))
    with pytest.raises(RangeError):
        refractive_index(library["silica"], k_of(0.1))


def test_tabulated_validation():
    with pytest.raises(ValueError):
        Tabulated((0.5,), (1.3,), (0.0,))
    with pytest.raises(ValueError):
        Tabulated((0.6, 0.5), (1.3, 1.3), (0.0, 0.0))


def test_library_and_loading(tmp_path, library):
    p = tmp_path / "glass.json"
    p.write_text('{"type": "Constant", "params": {"n": [1.5, 0.01]}}')
    lib = MaterialLibrary.from_files({"glass": p})
    assert lib["glass"].n == 1.5 + 0.01j
    merged = library.with_entries(glass=lib["glass"])
    assert set(merged) == {"water", "silica", "gold", "glass"}
    with pytest.raises(KeyError, match="unknown material"):
        library["unobtainium"]
    t = tmp_path / "t.csv"
    t.write_text("lambda_um,n,k\n0.5,1.4,0\n0.7,1.38,0\n")
    m = load_model(t)
    assert refractive_index(m, k_of(0.6)).real == pytest.approx(1.39, abs=2e-3)
    bad = tmp_path / "bad.csv"
    bad.write_text("wl,n\n0.5,1.4\n")
    with pytest.raises(ValueError):
        load_model(bad)
    p.write_text('{"type": "Mystery", "params": {}}')
    with pytest.raises(ValueError):
        load_model(p)


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(0.25, 4.5))
def test_passivity(lam):
    from gwshift.materials import default_library
    lib = default_library()
    for name in ("water", "silica", "gold"):
        n = refractive_index(lib[name], k_of(lam))
        assert n.imag >= 0


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(0.3, 2.0), frac=st.floats(-0.1, 0.1))
def test_analytic_models_reduce_on_real_axis_and_conjugate(lam, frac):
    from gwshift.materials import default_library
    lib = default_library()
    k = k_of(lam)
    for name in ("silica", "gold"):
        m = lib[name]
        assert refractive_index(m, complex(k), ANALYTIC) == pytest.approx(
            refractive_index(m, k, FROZEN), rel=1e-12)
    # Sellmeier with real coefficients obeys eps(conj k) = conj eps(k)
    kc = complex(k, frac * k)
    e1 = permittivity(lib["silica"], kc, ANALYTIC)
    e2 = permittivity(lib["silica"], kc.conjugate(), ANALYTIC)
    assert e1 == pytest.approx(e2.conjugate(), rel=1e-12)


def test_wavelength_conversion():
    assert wavelength_um(k_of(0.5)) == pytest.approx(0.5)
