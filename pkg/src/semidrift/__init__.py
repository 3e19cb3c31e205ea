"""Semi-supervised concept drift detection from posterior-probability densities.

The main entry points are :class:`DensityDriftDetector` (the detector and
its train/freeze/replace policy), :func:`prequential_run` (one experiment)
and the ``semidrift`` command-line tool.
"""

__version__ = "0.1.0"

from .baselines import ADWIN, DDM, EDDM, PageHinkley, make_baseline
from .density import (DensityDriftDetector, DetectorConfig, DriftState, DriftVerdict,
                      GaussianKDE, PosteriorModel, error_rate, scaling_factor)
from .evaluation import ExperimentConfig, RunResult, bench_grid, prequential_run
from .generators import (DriftSchedule, HyperplaneGenerator, LabelInversionGenerator,
                         SEAGenerator)
from .hoeffding import HoeffdingTreeClassifier
from .knowledge import LabelBudget, ReliableLabeledSet, active_learn, pu_learn
from .stream import LabelOracle, Window, next_window, read_csv_stream

__all__ = [
    "ADWIN", "DDM", "EDDM", "PageHinkley", "make_baseline",
    "DensityDriftDetector", "DetectorConfig", "DriftState", "DriftVerdict", "GaussianKDE",
    "PosteriorModel", "error_rate", "scaling_factor",
    "ExperimentConfig", "RunResult", "bench_grid", "prequential_run",
    "DriftSchedule", "HyperplaneGenerator", "LabelInversionGenerator", "SEAGenerator",
    "HoeffdingTreeClassifier", "LabelBudget", "ReliableLabeledSet", "active_learn", "pu_learn",
    "LabelOracle", "Window", "next_window", "read_csv_stream",
]
