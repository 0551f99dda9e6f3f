"""The five figure kinds rendered from sweep CSVs.

phase   survival-fraction heatmap over a (lam, rho) grid
brw     minimal-displacement ratio M_n/n against depth, with the
        asymptotic speed constant as a reference line
subbox  good-box probability against sub-box depth k
shape   estimated d=2 limit shape from directional time constants
ssp     red-survival fraction against seed density

Images are deterministic for identical inputs: the Agg backend, a
fixed hash salt for SVG ids, and no embedded timestamps.
"""

import math

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "convfpp-plots"

import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaError, load_rows

REQUIRED = {
    "phase": ("lam", "rho", "survived_fraction", "capped_fraction"),
    "brw": ("n", "ratio", "gamma_star", "method"),
    "subbox": ("k", "epsilon", "lam", "p_good", "p_good_lo", "p_good_hi"),
    "shape": tuple(["t", "tc_axis", "tc_diagonal"]
                   + ["tc_theta_%02d" % i for i in range(1, 17)]),
    "ssp": ("p", "kappa", "red_survival_fraction",
            "red_survival_lo", "red_survival_hi"),
}

PLOT_KINDS = tuple(sorted(REQUIRED))


def _group(rows, keys):
    out = {}
    for row in rows:
        out.setdefault(tuple(row[k] for k in keys), []).append(row)
    return out


def _phase(rows, ax):
    lams = sorted({r["lam"] for r in rows})
    rhos = sorted({r["rho"] for r in rows})
    grid = np.full((len(rhos), len(lams)), np.nan)
    capped = np.zeros_like(grid)
    for r in rows:
        i, j = rhos.index(r["rho"]), lams.index(r["lam"])
        grid[i, j] = r["survived_fraction"]
        capped[i, j] = r["capped_fraction"]
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis",
                   vmin=0.0, vmax=1.0,
                   extent=(-0.5, len(lams) - 0.5, -0.5, len(rhos) - 0.5))
    ax.set_xticks(range(len(lams)), ["%g" % v for v in lams])
    ax.set_yticks(range(len(rhos)), ["%g" % v for v in rhos])
    ax.set_xlabel(r"$\lambda$")
    ax.set_ylabel(r"$\rho$")
    ax.set_title("survival fraction")
    for i in range(len(rhos)):
        for j in range(len(lams)):
            if capped[i, j] > 0.10:
                ax.text(j, i, "cap %d%%" % round(100 * capped[i, j]),
                        ha="center", va="center", fontsize=8, color="white")
    plt.colorbar(im, ax=ax)


def _brw(rows, ax):
    for (method,), grp in sorted(_group(rows, ("method",)).items()):
        grp = sorted(grp, key=lambda r: r["n"])
        ax.plot([r["n"] for r in grp], [r["ratio"] for r in grp],
                marker="o", label=str(method))
    ax.axhline(rows[0]["gamma_star"], linestyle="--", color="gray",
               label=r"$\gamma^*$")
    ax.set_xlabel("n")
    ax.set_ylabel(r"$M_n / n$")
    ax.set_title("minimal displacement per level")
    ax.legend()


def _subbox(rows, ax):
    for (eps, lam), grp in sorted(_group(rows, ("epsilon", "lam")).items()):
        grp = sorted(grp, key=lambda r: r["k"])
        k = [r["k"] for r in grp]
        p = np.array([r["p_good"] for r in grp])
        lo = np.array([r["p_good_lo"] for r in grp])
        hi = np.array([r["p_good_hi"] for r in grp])
        ax.errorbar(k, p, yerr=(p - lo, hi - p), marker="o", capsize=3,
                    label=r"$\varepsilon$=%g, $\lambda$=%g" % (eps, lam))
    ax.set_xlabel("k")
    ax.set_ylabel(r"$p_{\mathrm{good}}$")
    ax.set_title("good sub-box probability")
    ax.legend()


def _shape(rows, ax):
    labels = (["tc_axis"] + ["tc_theta_%02d" % i for i in range(1, 17)]
              + ["tc_diagonal"])
    theta = np.linspace(0.0, math.pi / 4.0, len(labels))
    for row in rows:
        tc = np.array([row[c] for c in labels])
        radius = 1.0 / tc
        # reflect the octant profile to the full circle
        full_t = [theta, math.pi / 2.0 - theta[::-1]]
        full_r = [radius, radius[::-1]]
        quarter_t = np.concatenate(full_t)
        quarter_r = np.concatenate(full_r)
        ts, rs = [], []
        for k in range(4):
            ts.append(quarter_t + k * math.pi / 2.0)
            rs.append(quarter_r)
        t = np.concatenate(ts + [ts[0][:1]])
        r = np.concatenate(rs + [rs[0][:1]])
        ax.plot(r * np.cos(t), r * np.sin(t), label="t=%g" % row["t"])
    ax.set_aspect("equal")
    ax.set_xlabel("x / t")
    ax.set_ylabel("y / t")
    ax.set_title("estimated limit shape")
    ax.legend()


def _ssp(rows, ax):
    for (kappa,), grp in sorted(_group(rows, ("kappa",)).items()):
        grp = sorted(grp, key=lambda r: r["p"])
        p = [r["p"] for r in grp]
        fr = [r["red_survival_fraction"] for r in grp]
        ax.fill_between(p, [r["red_survival_lo"] for r in grp],
                        [r["red_survival_hi"] for r in grp], alpha=0.2)
        ax.plot(p, fr, marker="o", label=r"$\kappa$=%g" % kappa)
    ax.set_xscale("log")
    ax.set_xlabel("seed density p")
    ax.set_ylabel("red survival fraction")
    ax.set_title("red survival against seed density")
    ax.legend()


_RENDERERS = {"phase": _phase, "brw": _brw, "subbox": _subbox,
              "shape": _shape, "ssp": _ssp}


def render(kind, paths, out, logx=False, logy=False):
    """Render one figure kind from sweep CSVs to a png or svg file."""
    if kind not in _RENDERERS:
        raise SchemaError("unknown plot kind {!r}; choose one of {}".format(
            kind, ", ".join(PLOT_KINDS)))
    if not str(out).endswith((".png", ".svg")):
        raise SchemaError("output must be a .png or .svg path")
    rows = load_rows(paths, REQUIRED[kind])
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    try:
        _RENDERERS[kind](rows, ax)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        fig.tight_layout()
        if str(out).endswith(".svg"):
            metadata = {"Date": None}
        else:
            metadata = {"Software": None}
        fig.savefig(out, dpi=100, metadata=metadata)
    finally:
        plt.close(fig)
