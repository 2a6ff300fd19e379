"""XCS with action-set time stamps for tracking evolutionary niches."""

__version__ = "0.1.0"

from .core import Classifier, Parameters, Population
from .engine import XCS
from .envs import BooleanProblem, Grid, load_grid, parse_grid
from .estimator import XCSClassifier
from .harness import ExperimentConfig, run_batch, run_single
from .niche import can, can_t, man, niche_members, timeline_checkpoint

__all__ = [
    "XCS", "Classifier", "Parameters", "Population", "BooleanProblem", "Grid",
    "load_grid", "parse_grid", "XCSClassifier", "ExperimentConfig", "run_batch",
    "run_single", "can", "can_t", "man", "niche_members", "timeline_checkpoint",
]
