"""Static SVG figures with reproducible bytes.

matplotlib writes a creation date and random element ids into SVG files by
default; both are pinned here so identical data gives identical files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "gwshift", "svg.fonttype": "none", "font.size": 9}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def spectrum_svg(path, k, ext, sca, absn):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        ax.plot(k / 1e7, ext, "-", label="extinction")
        ax.plot(k / 1e7, sca, "--", label="scattering")
        ax.plot(k / 1e7, absn, "-.", label="absorption")
        ax.set_xlabel(r"$k$ ($10^7$ m$^{-1}$)")
        ax.set_ylabel(r"cross section (m$^2$)")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)


def polemap_svg(path, re_axis, im_axis, log_abs, markers):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.4, 3.6))
        mesh = ax.pcolormesh(re_axis / 1e7, im_axis / 1e7, log_abs, shading="nearest",
                             cmap="viridis")
        fig.colorbar(mesh, ax=ax, label=r"$\log_{10}|a_\nu|$")
        for m in markers:
            style = "wx" if m["kind"] == "pole" else "wo"
            ax.plot(m["k_re_per_m"] / 1e7, m["k_im_per_m"] / 1e7, style, mfc="none", ms=8)
        ax.set_xlabel(r"Re $k$ ($10^7$ m$^{-1}$)")
        ax.set_ylabel(r"Im $k$ ($10^7$ m$^{-1}$)")
        fig.tight_layout()
        _save(fig, path)


def heatmap_svg(path, r_c, d_s, values, label):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        mesh = ax.pcolormesh(r_c * 1e9, d_s * 1e9, np.ma.masked_invalid(values),
                             shading="nearest", cmap="magma")
        fig.colorbar(mesh, ax=ax, label=label)
        ax.set_xlabel(r"$r_c$ (nm)")
        ax.set_ylabel(r"$d_s$ (nm)")
        fig.tight_layout()
        _save(fig, path)


def trajectory_svg(path, ks, values, param):
    ks = np.asarray(ks)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.6, 3.6))
        sc = ax.scatter(ks.real / 1e7, ks.imag / 1e7, c=values, s=12, cmap="plasma")
        ax.plot(ks.real / 1e7, ks.imag / 1e7, "-", lw=0.6, color="0.5")
        fig.colorbar(sc, ax=ax, label=param)
        ax.set_xlabel(r"Re $k$ ($10^7$ m$^{-1}$)")
        ax.set_ylabel(r"Im $k$ ($10^7$ m$^{-1}$)")
        fig.tight_layout()
        _save(fig, path)
