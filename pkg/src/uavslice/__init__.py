"""Energy-aware multi-UAV network slicing for content, sensing and edge-computing tenants."""

from .baselines import ExhaustiveLimits, exhaustive_search, kmeans_solution, random_solution
from .channel import ChannelField
from .energy import EnergyBreakdown, total_energy
from .harness import SweepSpec, TrialResult, run_sweep, run_trial, write_results
from .scenario import Counts, Scenario, SystemParams, generate_scenario, load_config
from .slicer import solve
from .solution import InfeasibleError, SliceSolution, ValidationReport, validate_solution

__version__ = "0.1.0"
