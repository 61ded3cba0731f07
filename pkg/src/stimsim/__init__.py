"""Simulation and calibration of the extraversion response to a stimulant dose."""
from .dde import DdeProblem, GridError, IntegrationError, TimeGrid, TimeSeries, dense_eval, integrate
from .extraversion import (
    DynamicsParams,
    Metrics,
    PersonalityProfile,
    SimulationResult,
    canonical_profiles,
    simulate,
    summary_metrics,
)
from .ga import CalibrationResult, FitnessSpec, GaConfig, calibrate, evaluate_fitness
from .pk import DegenerateRatesError, StimulantParams, drug_level, peak_time, shifted_drug_level

__version__ = "0.1.0"
