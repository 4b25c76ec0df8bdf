"""Figure output: gnuplot scripts (always) and PNG renderings (matplotlib).

matplotlib is imported inside the render functions so the numerical modules
never pay for it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def poles_gnuplot(poles_csv: str, potential_csv: str, png: str = "poles_gnuplot.png") -> str:
    return f"""# complex poles and the adiabatic barrier
set datafile separator ','
set terminal pngcairo size 1000,420
set output '{png}'
set multiplot layout 1,2
set xlabel 'X (bohr)'
set ylabel 'V_ad (hartree)'
plot '{potential_csv}' using 1:2 skip 1 with lines title 'V_ad'
set xlabel 'E (hartree)'
set ylabel '-Gamma/2 (hartree)'
plot '{poles_csv}' using 2:(-$3/2) skip 1 with points pt 7 title 'poles'
unset multiplot
"""


def scan_gnuplot(scan_csv: str, png: str = "scan_gnuplot.png") -> str:
    return f"""# polariton decay rate against field strength
set datafile separator ','
set datafile commentschars '#'
set terminal pngcairo size 700,480
set output '{png}'
set xlabel 'epsilon (a.u.)'
set ylabel 'Gamma_polariton (hartree)'
plot '{scan_csv}' using 1:2 skip 1 with linespoints pt 7 ps 0.5 title 'Gamma_pol'
"""


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_poles(path: Path, x, v_ad, poles) -> None:
    """Barrier with pole positions, and the poles in the complex plane."""
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.2))
    ax1.plot(x, v_ad, color="k", lw=1)
    for p in poles:
        ax1.axhline(p.energy, lw=0.6, ls="--", color="C3" if p.classification == "TS" else "C0")
    ax1.set_xlabel("X (bohr)")
    ax1.set_ylabel("V_ad (hartree)")
    for label, color in (("TS", "C3"), ("DB", "C0"), ("nonphysical", "0.6"), ("bound", "C2"), (None, "C1")):
        sel = [p for p in poles if p.classification == label]
        if sel:
            ax2.scatter(
                [p.energy for p in sel], [-p.width / 2 for p in sel], color=color, s=18,
                label=label or "unclassified",
            )
    ax2.set_xlabel("E (hartree)")
    ax2.set_ylabel("-Gamma/2 (hartree)")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_wavefunctions(path: Path, x, poles) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for p in poles:
        dens = np.abs(p.eigenvector) ** 2
        ax.plot(x, dens / dens.max(), lw=1, label=f"{p.classification or '?'} n={p.node_count}")
    ax.set_xlabel("X (bohr)")
    ax.set_ylabel("|psi|^2 (scaled)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_scan(path: Path, scan) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    eps = np.asarray(scan.epsilon)
    ax.plot(eps, scan.enhancement(), marker="o", ms=2, lw=1)
    if np.count_nonzero(eps) and eps[eps > 0].min() * 1e3 < eps.max():
        ax.set_xscale("symlog", linthresh=eps[eps > 0].min())
    ax.set_xlabel("epsilon (a.u.)")
    ax.set_ylabel("Gamma_polariton / Gamma_TS")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
