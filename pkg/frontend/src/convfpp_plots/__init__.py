"""Figure rendering for convfpp sweep CSV outputs.

Consumes only the public CSV files (plus their generated .schema
sidecars) written by the simulator's sweep harness; it never imports
the simulator itself, so the two packages can evolve independently.
"""

from .io import SchemaError, load_rows
from .figures import PLOT_KINDS, render

__all__ = ["PLOT_KINDS", "SchemaError", "load_rows", "render"]
