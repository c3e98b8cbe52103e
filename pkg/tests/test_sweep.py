import math

import numpy as np
import pytest

from gwshift import gws
from gwshift.materials import Constant, default_library
from gwshift.mie import LayeredSphere
from gwshift.sweep import CSV_COLUMNS, SweepConfig, run_sweep

NM = 1e-9


@pytest.fixture(scope="module")
def flat_library():
    return default_library().with_entries(c_core=Constant(1.5), c_shell=Constant(2.2),
                                          c_bg=Constant(1.33))


@pytest.fixture(scope="module")
def flat_config(flat_library):
    M = gws.sphere_function(LayeredSphere((60 * NM, 70 * NM), ("c_core", "c_shell"), "c_bg"),
                            1, "a", flat_library)
    seed = gws.locate(M, 1.2976e7 - 1.1715e7j).location
    return SweepConfig(target="pole", r_c_range=(55 * NM, 65 * NM), r_c_steps=3,
                       d_s_range=(8 * NM, 12 * NM), d_s_steps=2, seed=seed,
                       core="c_core", shell="c_shell", background="c_bg",
                       cross_check_fraction=0.5)


def test_small_constant_grid(flat_library, flat_config, tmp_path):
    res = run_sweep(flat_config, library=flat_library)
    assert len(res.cells) == 6 and not res.failures
    for c in res.cells.values():
        sphere = LayeredSphere((c.r_c, c.r_c + c.d_s), ("c_core", "c_shell"), "c_bg")
        M = gws.sphere_function(sphere, 1, "a", flat_library)
        rec = gws.locate(M, c.k)
        assert abs(rec.location - c.k) < 1e-9 * abs(c.k)
        assert c.winding == -1
        eta = gws.sensitivity_eta(M, rec).eta
        assert c.eta == pytest.approx(eta, rel=1e-6)
    s = res.summary()
    assert s["direct_cross_checks"] == 3
    assert s["direct_max_relative_gap"] < 1e-3
    path = tmp_path / "grid.csv"
    res.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) == 7


def test_resume_and_thread_determinism(flat_library, flat_config, tmp_path):
    journal = tmp_path / "j.jsonl"
    first = run_sweep(flat_config, journal, library=flat_library)
    seen = []
    again = run_sweep(flat_config, journal, library=flat_library, progress=seen.append)
    assert len(seen) == 0 and len(journal.read_text().splitlines()) == 6
    threaded = run_sweep(flat_config, None, threads=3, library=flat_library)
    paths = [tmp_path / f"{n}.csv" for n in "abc"]
    for res, path in zip((first, again, threaded), paths):
        res.to_csv(path)
    assert paths[0].read_bytes() == paths[1].read_bytes() == paths[2].read_bytes()


def test_failed_cells_are_recorded(flat_library, flat_config):
    bad = SweepConfig(**{**flat_config.__dict__, "seed": 1e3 + 1e9j})
    res = run_sweep(bad, library=flat_library)
    assert len(res.cells) == 6
    assert all(not c.ok and c.error for c in res.cells.values())
    assert res.argmax("abs_re_eta") is None
    assert np.all(np.isnan(res.grid("eta_re")))
    assert math.isnan(res.cells[(0, 0)].k_re)


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(target="both")
    with pytest.raises(ValueError):
        SweepConfig(r_c_range=(5 * NM, 1 * NM))
    with pytest.raises(ValueError):
        SweepConfig(r_c_steps=1)
    with pytest.raises(ValueError):
        run_sweep(SweepConfig(), threads=0)
