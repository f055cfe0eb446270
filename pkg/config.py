"""
Configuration module for the morphing quadrotor toolkit.

This module handles:
- Reading environment variables from .env file
- Setting up scenario and output folder paths
- Defining default planner, controller and simulation settings
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    if value is None or value.strip() == "":
        return default
    try:
        return float(value)
    except ValueError:
        print(f"WARNING: {name}={value!r} is not a number. Using {default}.")
        return default


# ============================================================================
# PATHS
# ============================================================================

# Base directory (project root)
BASE_DIR = Path(__file__).parent

# Scenario files shipped with the project
SCENARIO_FOLDER = BASE_DIR / "scenarios"

# Base output folder (runs are written to <output>/<scenario name>/)
OUTPUT_BASE = Path(os.getenv("MORPH_OUTPUT_DIR", str(BASE_DIR / "storage" / "runs")))

# ============================================================================
# PLANNER DEFAULTS
# ============================================================================

# Heuristic inflation of the weighted A* front end (1.0 = plain A*)
ASTAR_EPSILON = _env_float("MORPH_ASTAR_EPSILON", 1.5)

# Longest straight piece kept by line-of-sight shortcutting (m)
MAX_SEGMENT_LENGTH = 1.0

# Largest corridor box edge (m) and face budget per polytope
MAX_BOX_SIZE = 3.0
MAX_FACES = 12

# Random corridor instances checked by diagnose_gradients.py
GRADIENT_INSTANCES = int(_env_float("MORPH_GRADIENT_INSTANCES", 20))

# ============================================================================
# CONTROLLER DEFAULTS
# ============================================================================

# Names accepted by --controllers
CONTROLLER_NAMES = ["proposed", "lqr", "pid"]

# Speeds of the circle benchmark (m/s)
BENCHMARK_SPEEDS = [0.6, 0.8, 1.0]

# ============================================================================
# SIMULATION DEFAULTS
# ============================================================================

# Time to keep regulating the goal after the planned trajectory ends (s)
HOLD_TIME = 1.0

# Random seed for the gradient diagnostic instances
SEED = int(_env_float("MORPH_SEED", 0))

# Acceptance thresholds of a run (m)
GOAL_TOLERANCE = 0.1
EXECUTED_VIOLATION_TOLERANCE = 0.05

# Largest position error accepted on hover and circle runs (m)
TRACKING_TOLERANCE = 0.3

# ============================================================================
# INITIALIZATION
# ============================================================================

def get_output_folder(scenario_name: str, base: Path = None) -> Path:
    """
    Get the output folder for a scenario run.

    Args:
        scenario_name: Scenario name (used as subfolder)
        base: Optional base folder. If None, uses OUTPUT_BASE.

    Returns:
        Path to the output folder
    """
    base_folder = Path(base) if base is not None else OUTPUT_BASE
    return base_folder / scenario_name


def ensure_output_folders(scenario_name: str = None, base: Path = None) -> Path:
    """Create the output folder (and the scenario subfolder if given); returns it."""
    folder = get_output_folder(scenario_name, base) if scenario_name else Path(base or OUTPUT_BASE)
    folder.mkdir(parents=True, exist_ok=True)
    return folder
