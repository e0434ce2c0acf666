"""Command-line rendering: a JSON spec or per-figure shortcuts.

    plotkit render --spec figure.json
    plotkit fig2 --curve x.csv sigma_x --curve y.csv sigma_y --out fig2.png
    plotkit fig3 --panel plus.csv minus.csv windows.csv "sigma_z" --out fig3.png
    plotkit fig4 --bars loss_gain_bars.csv --out fig4.png
"""

from __future__ import annotations

import argparse
import json
import sys

from .figures import FigureSpec, render
from .schema import SchemaError


def _spec_from_json(path) -> FigureSpec:
    with open(path) as fh:
        payload = json.load(fh)
    return FigureSpec(
        kind=payload["kind"],
        inputs=payload["inputs"],
        output=payload["output"],
        style=payload.get("style", {}),
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_render = sub.add_parser("render", help="render a figure from a JSON spec")
    p_render.add_argument("--spec", required=True)

    p2 = sub.add_parser("fig2", help="information-flow curves")
    p2.add_argument("--curve", nargs=2, action="append", metavar=("CSV", "LABEL"), required=True)
    p2.add_argument("--out", required=True)

    p3 = sub.add_parser("fig3", help="heat flux with backflow windows")
    p3.add_argument(
        "--panel", nargs=4, action="append", required=True,
        metavar=("PLUS", "MINUS", "WINDOWS", "TITLE"),
    )
    p3.add_argument("--out", required=True)

    p4 = sub.add_parser("fig4", help="information loss/gain bars")
    p4.add_argument("--bars", required=True)
    p4.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "render":
            spec = _spec_from_json(args.spec)
        elif args.command == "fig2":
            spec = FigureSpec(
                kind="info-flow",
                inputs={"curves": [{"path": p, "label": lab} for p, lab in args.curve]},
                output=args.out,
            )
        elif args.command == "fig3":
            spec = FigureSpec(
                kind="heat-flux-with-windows",
                inputs={
                    "panels": [
                        {"plus": a, "minus": b, "windows": w, "title": title}
                        for a, b, w, title in args.panel
                    ]
                },
                output=args.out,
            )
        else:
            spec = FigureSpec(
                kind="loss-gain-bars", inputs={"bars": args.bars}, output=args.out
            )
        out = render(spec)
        print(f"wrote {out}")
        return 0
    except SchemaError as exc:
        print(json.dumps({"error": "schema", "detail": str(exc)}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "io", "detail": str(exc)}), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
