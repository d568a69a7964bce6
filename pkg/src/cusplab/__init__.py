"""cusplab: a numerical laboratory for corner sharpening in 2D vortex patches.

Submodules
----------
effective    reduced ODE for the corner half-angle and bisector
angular      interval densities, cumulative angular moments, endpoint transport
geometry     polygon/circle primitives shared by the patch and diagnostics
patch        contour dynamics for patches with a corner pinned at the origin
diagnostics  area fractions, angular deviation profiles, flow-map bounds
bounds       iterated log-Lipschitz bounds and parameter selection
cli          command line driver (`cusplab <command> ...`)
"""

from __future__ import annotations

__version__ = "0.1.0"
