"""Figure builders: information flow, heat flux with windows, loss/gain bars.

Each builder consumes only the CSV dialect written by the simulator and
renders deterministically for fixed inputs and style (Agg backend, fixed
rc settings, no timestamps in the image payload).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import SchemaError, load_heat_flux, load_info_flow, load_loss_gain

KINDS = ("info-flow", "heat-flux-with-windows", "loss-gain-bars")

_RC = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.25,
    "svg.hashsalt": "plotkit",
}

_CURVE_STYLES = [
    {"color": "#20639b", "linestyle": "-."},
    {"color": "#d7263d", "linestyle": "--"},
    {"color": "#e8a200", "linestyle": "-"},
    {"color": "#3caea3", "linestyle": ":"},
    {"color": "#5f4b8b", "linestyle": "-"},
    {"color": "#777777", "linestyle": "--"},
]


@dataclass
class FigureSpec:
    """Declarative description of one rendered figure.

    inputs:
      info-flow               {"curves": [{"path": .., "label": ..}, ...]}
      heat-flux-with-windows  {"panels": [{"plus": .., "minus": ..,
                                           "windows": .., "title": ..}, ...]}
      loss-gain-bars          {"bars": path}
    """

    kind: str
    inputs: dict
    output: str
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")


def _shade_windows(ax, t, flags):
    flags = np.asarray(flags, dtype=bool)
    k = 0
    while k < len(flags):
        if flags[k]:
            j = k
            while j + 1 < len(flags) and flags[j + 1]:
                j += 1
            ax.axvspan(t[k], t[j], color="0.82", zorder=0)
            k = j + 1
        else:
            k += 1


def _render_info_flow(spec: FigureSpec, fig):
    curves = spec.inputs.get("curves", [])
    if not curves:
        raise SchemaError("info-flow figure needs at least one input curve")
    ax = fig.subplots()
    for style, curve in zip(_CURVE_STYLES, curves):
        cols = load_info_flow(curve["path"])
        label = curve.get("label", Path(curve["path"]).stem)
        ax.plot(cols["t"], cols["Delta"], label=label, linewidth=1.3, **style)
        above = cols["Delta"] > 0
        if np.any(above):
            ax.plot(
                cols["t"][above],
                cols["Delta"][above],
                ".",
                color=style["color"],
                markersize=2.0,
            )
    ax.axhline(0.0, color="black", linestyle="--", linewidth=0.9)
    ax.set_xlabel("t")
    ax.set_ylabel("information flow dD/dt")
    ax.legend(loc="lower right")


def _render_heat_flux(spec: FigureSpec, fig):
    panels = spec.inputs.get("panels", [])
    if not panels:
        raise SchemaError("heat-flux figure needs at least one panel")
    ncols = 2 if len(panels) > 1 else 1
    nrows = (len(panels) + ncols - 1) // ncols
    axes = fig.subplots(nrows, ncols, squeeze=False, sharex=True)
    for k, panel in enumerate(panels):
        ax = axes[k // ncols][k % ncols]
        windows = load_info_flow(panel["windows"])
        _shade_windows(ax, windows["t"], windows["window_flag"])
        plus = load_heat_flux(panel["plus"])
        minus = load_heat_flux(panel["minus"])
        ax.plot(plus["t"], plus["jq"], color="#d7263d", linewidth=1.2, label="+ state")
        ax.plot(
            minus["t"], minus["jq"], color="#20639b", linestyle="--", linewidth=1.2,
            label="- state",
        )
        ax.axhline(0.0, color="black", linewidth=0.8)
        ax.set_title(panel.get("title", ""), fontsize=9)
        ax.set_xlabel("t")
        ax.set_ylabel("heat flux")
        if k == 0:
            ax.legend(loc="lower right")
    for k in range(len(panels), nrows * ncols):
        axes[k // ncols][k % ncols].set_visible(False)


def _render_loss_gain(spec: FigureSpec, fig):
    path = spec.inputs.get("bars")
    if not path:
        raise SchemaError("loss-gain figure needs the bar-data CSV")
    rows = load_loss_gain(path)
    if not rows:
        raise SchemaError(f"{path}: no bar rows")
    panels = sorted({r["panel"] for r in rows})
    axes = fig.subplots(2, len(panels), squeeze=False, sharex="col")
    palette = {
        ("x", False): "#123a63",
        ("y", False): "#20639b",
        ("z", False): "#7fb3d5",
        ("x", True): "#2e8b57",
        ("y", True): "#e8743b",
        ("z", True): "#e8c41c",
    }
    width = 0.12
    for col, panel in enumerate(panels):
        sub = [r for r in rows if r["panel"] == panel]
        values = sorted({r["sweep_value"] for r in sub})
        combos = sorted({(r["pair"], r["driven"]) for r in sub}, key=str)
        ax_gain, ax_loss = axes[0][col], axes[1][col]
        for j, (pair, driven) in enumerate(combos):
            offs = (j - (len(combos) - 1) / 2.0) * width
            xs, gains, losses = [], [], []
            for i, v in enumerate(values):
                match = [
                    r for r in sub if r["pair"] == pair and r["driven"] == driven
                    and r["sweep_value"] == v
                ]
                if match:
                    xs.append(i + offs)
                    gains.append(match[0]["info_gain"])
                    losses.append(match[0]["info_loss"])
            label = f"sigma_{pair}{' driven' if driven else ''}"
            color = palette.get((pair, driven), "#444444")
            ax_gain.bar(xs, gains, width=width, color=color, label=label)
            ax_loss.bar(xs, losses, width=width, color=color)
        param = sub[0]["sweep_param"]
        ax_gain.set_ylabel("information gain")
        ax_loss.set_ylabel("information loss")
        ax_loss.set_xlabel(param)
        ax_loss.set_xticks(range(len(values)))
        ax_loss.set_xticklabels([f"{v:g}" for v in values])
        ax_gain.set_title(f"panel {panel}: sweep over {param}", fontsize=9)
        if col == 0:
            ax_gain.legend(loc="upper right", fontsize=7)
    # loss and gain live on very different scales; keep the axes separate
    for col in range(len(panels)):
        axes[0][col].set_ylim(bottom=0.0)
        axes[1][col].set_ylim(top=0.0)


_BUILDERS = {
    "info-flow": _render_info_flow,
    "heat-flux-with-windows": _render_heat_flux,
    "loss-gain-bars": _render_loss_gain,
}


def render(spec: FigureSpec) -> str:
    """Render the figure described by ``spec`` and write the image file."""
    style = dict(_RC)
    style.update(spec.style.get("rc", {}))
    figsize = spec.style.get("figsize", (7.0, 4.5))
    with plt.rc_context(style):
        fig = plt.figure(figsize=figsize)
        try:
            _BUILDERS[spec.kind](spec, fig)
            fig.tight_layout()
            out = Path(spec.output)
            out.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out, metadata=_image_metadata(out.suffix))
        finally:
            plt.close(fig)
    return str(spec.output)


def _image_metadata(suffix):
    # strip writer timestamps so repeated renders are byte-identical
    if suffix == ".png":
        return {"Software": "plotkit"}
    if suffix == ".svg":
        return {"Date": None}
    return None
