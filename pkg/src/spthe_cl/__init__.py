"""Switched concurrent learning with prescribed-time and hyperexponential gains.

Submodules
----------
gain_laws
    Dynamic gains, blow-up times and the real/dilated time maps.
signal_model
    Linear-in-parameters measurement model and learning signals.
datasets
    Recorded datasets, richness classification, corruption and persistence.
switching
    Data-querying automaton, switching-signal generation and verification.
hybrid
    Hybrid-system simulation with event localisation.
estimator
    Closed and target loops, certificate constants and diagnostics.
cli
    Command-line experiment runner.
"""

from .datasets import DatasetRegistry, build_dataset, classify, richness, section5_registry
from .estimator import EstimatorConfig, run, theorem_constants
from .gain_laws import GainLaw, blow_up_time, contract, dilate
from .signal_model import RegressorModel, TrueSystem, section5_model
from .switching import AutomatonParams, RandomPolicy, ScriptedPolicy, SwitchingSignal

__version__ = "0.1.0"
