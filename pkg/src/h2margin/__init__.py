"""h2margin: loading-margin-constrained hydrogen harvesting on AC grids.

Maximises green-hydrogen output of grid-connected electrolyzers over a
multi-hour horizon while certifying that every hourly operating point keeps a
prescribed voltage-stability loading margin, with generator reactive
capability modelled explicitly at both the operating point and the stressed
security limit point.
"""

from .kernels import BACKEND, COMPILED

__version__ = "1.0.0"

__all__ = ["BACKEND", "COMPILED", "__version__"]
