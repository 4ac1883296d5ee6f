"""Render FigureSpec jobs to SVG/PNG plus a sidecar value listing."""

import os

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .spec import FigureSpec, SchemaError, load_rows

# fixed salt so SVG ids do not depend on the process
matplotlib.rcParams["svg.hashsalt"] = "vortexfigures"


def _reference_curve(ns, anchor_n, anchor_v):
    """c N^{-1/2} ln(1+N) anchored so the curve passes through the anchor."""
    c = anchor_v / (anchor_n ** -0.5 * np.log1p(anchor_n))
    return c, c * ns ** -0.5 * np.log1p(ns)


def _select(rows, spec):
    t = spec.options.get("t")
    k = int(spec.options.get("k", 1))
    if t is None:
        t = max(r["t"] for r in rows)
    sel = [r for r in rows if r["t"] == float(t) and r["k"] == k]
    if not sel:
        raise SchemaError(f"no rows at t = {t}, k = {k}")
    return sel, float(t), k


def _rate_plot(ax, rows, spec, values):
    sel, t, k = _select(rows, spec)
    sel = sorted(sel, key=lambda r: r["N"])
    ns = np.array([r["N"] for r in sel])
    vs = np.array([r[spec.column] for r in sel])
    es = np.array([r[spec.column + "_err"] for r in sel])
    ax.errorbar(ns, vs, yerr=es, fmt="o-", capsize=3, label=spec.column)
    for n, v, e in zip(ns, vs, es):
        values.append(f"point N={n:g} {spec.column}={float(v)!r} err={float(e)!r}")
    if spec.reference_curve:
        c, ref = _reference_curve(ns, ns[-1], vs[-1])
        ax.plot(ns, ref, "k--", label=r"$c\,N^{-1/2}\ln(1+N)$")
        resid = float(np.sqrt(np.mean((np.log(vs) - np.log(ref)) ** 2)))
        for n, v in zip(ns, ref):
            values.append(f"reference N={n:g} value={float(v)!r}")
        values.append(f"reference prefactor={float(c)!r}")
        values.append(f"reference log_rms_residual={resid!r}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(spec.xlabel or "N")
    ax.set_ylabel(spec.ylabel or spec.column)
    ax.set_title(spec.title or f"{spec.column} vs N at t = {t:g} (k = {k})")
    ax.legend()


def _uniformity_plot(ax, rows, spec, values):
    k = int(spec.options.get("k", 1))
    ns = sorted({r["N"] for r in rows})
    for n in ns:
        sel = sorted([r for r in rows if r["N"] == n and r["k"] == k],
                     key=lambda r: r["t"])
        ts = np.array([r["t"] for r in sel])
        vs = np.array([r[spec.column] for r in sel])
        es = np.array([r[spec.column + "_err"] for r in sel])
        ax.errorbar(ts, vs, yerr=es, fmt="o-", capsize=3, label=f"N = {n:g}")
        for t, v, e in zip(ts, vs, es):
            values.append(f"point N={n:g} t={float(t)!r} {spec.column}={float(v)!r} err={float(e)!r}")
    ax.set_xlabel(spec.xlabel or "t")
    ax.set_ylabel(spec.ylabel or spec.column)
    ax.set_title(spec.title or f"{spec.column} vs t")
    ax.legend()


def _grid_from_rows(rows, col):
    n = int(round(np.sqrt(len(rows))))
    if n * n != len(rows):
        raise SchemaError(f"expected a square grid, got {len(rows)} rows")
    out = np.array([r[col] for r in rows]).reshape(n, n)
    x1 = np.array([r["x1"] for r in rows]).reshape(n, n)
    x2 = np.array([r["x2"] for r in rows]).reshape(n, n)
    return x1, x2, out


def _field_heatmap(ax, fig, rows, spec, values):
    x1, x2, v = _grid_from_rows(rows, "rho")
    im = ax.imshow(v.T, origin="lower", extent=(-0.5, 0.5, -0.5, 0.5),
                   cmap=spec.options.get("cmap", "viridis"))
    fig.colorbar(im, ax=ax)
    values.append(f"grid n={v.shape[0]}")
    values.append(f"min={float(v.min())!r} max={float(v.max())!r} mean={float(v.mean())!r}")
    ax.set_xlabel(spec.xlabel or "x1")
    ax.set_ylabel(spec.ylabel or "x2")
    ax.set_title(spec.title or "density")


def _kernel_quiver(ax, rows, spec, values):
    x1 = np.array([r["x1"] for r in rows])
    x2 = np.array([r["x2"] for r in rows])
    k1 = np.array([r["k1"] for r in rows])
    k2 = np.array([r["k2"] for r in rows])
    stride = max(1, int(round(np.sqrt(len(rows)) / spec.options.get("arrows", 24))))
    n = int(round(np.sqrt(len(rows))))
    idx = np.arange(len(rows)).reshape(n, n)[::stride, ::stride].ravel()
    ax.quiver(x1[idx], x2[idx], k1[idx], k2[idx], angles="xy")
    mag = np.hypot(k1, k2)
    values.append(f"arrows={idx.size} stride={stride}")
    values.append(f"magnitude min={float(mag.min())!r} max={float(mag.max())!r}")
    ax.set_aspect("equal")
    ax.set_xlabel(spec.xlabel or "x1")
    ax.set_ylabel(spec.ylabel or "x2")
    ax.set_title(spec.title or "interaction kernel")


def render(spec: FigureSpec):
    """Render one figure; returns the output path.

    All validation happens before anything is written, so a bad input
    leaves no partial output file behind.
    """
    all_rows = [load_rows(p, spec.kind) for p in spec.inputs]
    rows = [r for chunk in all_rows for r in chunk]
    values = [f"kind={spec.kind}", f"inputs={','.join(spec.inputs)}"]
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=100)
    try:
        if spec.kind == "rate_plot":
            _rate_plot(ax, rows, spec, values)
        elif spec.kind == "uniformity_plot":
            _uniformity_plot(ax, rows, spec, values)
        elif spec.kind == "field_heatmap":
            _field_heatmap(ax, fig, rows, spec, values)
        else:
            _kernel_quiver(ax, rows, spec, values)
        fig.tight_layout()
        os.makedirs(os.path.dirname(spec.out) or ".", exist_ok=True)
        # strip the timestamp so reruns give byte-identical files
        fig.savefig(spec.out, metadata={"Date": None} if spec.out.endswith(".svg")
                    else None)
    finally:
        plt.close(fig)
    sidecar = os.path.splitext(spec.out)[0] + ".values.txt"
    with open(sidecar, "w") as f:
        f.write("\n".join(values) + "\n")
    return spec.out
