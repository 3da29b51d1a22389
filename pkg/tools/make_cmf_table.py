"""Regenerate the bundled CIE 1931 2-degree observer table.

Writes src/hsipath/data/cie1931_2deg.txt: four whitespace-separated
columns (wavelength nm, xbar, ybar, zbar) on a 1 nm grid from 360 to
830 nm. Values come from the multi-lobe Gaussian fit of Wyman, Sloan
and Shirley ("Simple Analytic Approximations to the CIE XYZ Color
Matching Functions", JCGT 2013), which reproduces the measured 1931
observer to about 1e-3 absolute. The fit is clipped at zero so the
table satisfies the nonnegativity invariant of CmfTable.

Run from the repository root:

    python tools/make_cmf_table.py
"""

import os

import numpy as np


def _lobe(lam, peak, rate_lo, rate_hi):
    # piecewise Gaussian: different widths left and right of the peak
    rate = np.where(lam < peak, rate_lo, rate_hi)
    t = (lam - peak) * rate
    return np.exp(-0.5 * t * t)


def xbar(lam):
    return (
        0.362 * _lobe(lam, 442.0, 0.0624, 0.0374)
        + 1.056 * _lobe(lam, 599.8, 0.0264, 0.0323)
        - 0.065 * _lobe(lam, 501.1, 0.0490, 0.0382)
    )


def ybar(lam):
    return 0.821 * _lobe(lam, 568.8, 0.0213, 0.0247) + 0.286 * _lobe(
        lam, 530.9, 0.0613, 0.0322
    )


def zbar(lam):
    return 1.217 * _lobe(lam, 437.0, 0.0845, 0.0278) + 0.681 * _lobe(
        lam, 459.0, 0.0385, 0.0725
    )


def main():
    lam = np.arange(360, 831, dtype=np.float64)
    x = np.clip(xbar(lam), 0.0, None)
    y = np.clip(ybar(lam), 0.0, None)
    z = np.clip(zbar(lam), 0.0, None)
    here = os.path.dirname(os.path.abspath(__file__))
    out = os.path.join(here, "..", "src", "hsipath", "data", "cie1931_2deg.txt")
    out = os.path.normpath(out)
    with open(out, "w", encoding="ascii") as fh:
        fh.write("# CIE 1931 2-degree observer color matching functions\n")
        fh.write("# columns: wavelength_nm xbar ybar zbar (1 nm grid)\n")
        for i in range(lam.size):
            fh.write(
                "%d %.9f %.9f %.9f\n" % (int(lam[i]), x[i], y[i], z[i])
            )
    print("wrote", out, "(%d rows)" % lam.size)


if __name__ == "__main__":
    main()
