"""plotkit: publication-style figures from slnsim CSV artifacts.

The renderer consumes only the simulator's CSV files (information-flow
series, heat-flux series, loss/gain bar data) and never recomputes any
physics.  Rendering is deterministic for fixed inputs and style.
"""

__version__ = "0.1.0"

from .figures import KINDS, FigureSpec, render
from .schema import SchemaError

__all__ = ["FigureSpec", "render", "KINDS", "SchemaError", "__version__"]
