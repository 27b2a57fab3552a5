"""Photocount statistics of multi-pixel photon counters observing coherent
light and two-mode squeezed vacuum: detector response with loss, crosstalk
and saturation, the noise reduction factor, a Monte Carlo cross-check and
least-squares recovery of detector parameters."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .detector import (DetectorParams, ResponseMatrix, build_response_matrix,
                       response_coefficient, sample_photocount, unsaturated_response)
from .fitting import FitOptions, FitResult, NRFDataset, fit, goodness_of_fit, nrf_model
from .fock import (PhotonStatistics, StateKind, choose_k_max, make_coherent_pair,
                   make_state, make_thermal_pair, make_two_mode_sv)
from .metrics import (Moments, PhotocountJoint, apply_detectors, effective_efficiency,
                      limit_nrf_coherent, limit_nrf_sv, nrf, nrf_curve, photocount_moments,
                      variance_of_difference)
from .montecarlo import SimulationReport, bootstrap_nrf_error, simulate
