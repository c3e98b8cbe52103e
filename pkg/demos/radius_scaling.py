"""
Demo: a nondispersive sphere has k_p r = const.

Without material dispersion the only length scale is the radius, so the
pole moves on a hyperbola k_p(r) = k_p(r0) r0 / r and dk_p/dr = -k_p/r.
We check that the contour-integral sensitivity reproduces this exactly,
then trace the pole over a range of radii and save the trajectory.
"""
import sys

import numpy as np

from gwshift import gws
from gwshift.plotting import trajectory_svg
from gwshift.verification import nondispersive_sphere, trace_radius


def main(out="radius_scaling.svg"):
    M, rec = nondispersive_sphere()  # n = 2 sphere, r = 100 nm, in n = 1.33
    k, r = rec.location, M.params["r_c"]
    print(f"pole k_p = {k.real:.6e} {k.imag:+.6e}i 1/m at r = {r * 1e9:.0f} nm")

    law = gws.radius_sensitivity_analytic(k, r)
    for method in ("gws_residue", "ratio_form"):
        got = gws.pole_shift(M, k, "r_c", 1.0, method).delta_k
        print(f"  {method:12s} dk/dr = {got.real:+.6e} {got.imag:+.6e}i "
              f"(rel. dev. from -k/r: {abs(got - law) / abs(law):.1e})")

    factors = np.linspace(0.6, 1.6, 21)
    traced = trace_radius(M, k, r, factors)
    radii = np.array(sorted(traced))
    ks = np.array([traced[x] for x in radii])
    spread = np.max(np.abs(ks * radii - k * r)) / abs(k * r)
    print(f"  k_p r constant to {spread:.1e} over r = {radii[0] * 1e9:.0f}..{radii[-1] * 1e9:.0f} nm")

    trajectory_svg(out, ks, radii * 1e9, "r (nm)")
    print(f"wrote {out}")


if __name__ == "__main__":
    main(*sys.argv[1:])
