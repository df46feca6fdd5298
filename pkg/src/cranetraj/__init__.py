"""Time- and energy-optimal trajectories for a gantry crane over container stacks.

The payload motion is planned with the horizontal payload position as the
independent variable, transcribed by implicit-midpoint collocation and solved
with an interior-point method.  See the README for an overview of modules.
"""

from .config import RunConfig, load_config
from .corridor import StackProfile, bundled_profile
from .dynamics import CraneParams
from .nlp import SolverOptions
from .spatial import SpatialGrid
from .transcription import Limits, OcpSpec, bundled_spec, solve_ocp
from .validation import validate

__all__ = [
    "CraneParams", "Limits", "OcpSpec", "RunConfig", "SolverOptions", "SpatialGrid",
    "StackProfile", "bundled_profile", "bundled_spec", "load_config", "solve_ocp", "validate",
]
__version__ = "0.1.0"
