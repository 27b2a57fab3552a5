"""Joint photocount statistics, moments and the noise reduction factor."""
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import fock
from .detector import DetectorParams, build_response_matrix
from .exceptions import DimensionMismatchError, UndefinedNRFError, ValidationError
from .fock import DEFAULT_TAIL_TOL, StateKind


@dataclass(frozen=True)
class PhotocountJoint:
    q: np.ndarray = field(repr=False)
    params_s: DetectorParams
    params_i: DetectorParams

    def total_mass(self):
        return float(self.q.sum())


@dataclass(frozen=True)
class Moments:
    mean_s: float
    mean_i: float
    second_s: float
    second_i: float
    cross: float


def apply_detectors(stats, r_s, r_i):
    """Push a photon-number table through one detector per arm.

    ``q = r_s @ p @ r_i.T`` restricted to the state's photon range.
    """
    K = stats.k_max
    for label, r in (("signal", r_s), ("idler", r_i)):
        if r.k_max < K:
            raise DimensionMismatchError(
                f"{label} response covers k <= {r.k_max} but the state needs k <= {K}")
    q = r_s.r[:, :K + 1] @ stats.joint @ r_i.r[:, :K + 1].T
    return PhotocountJoint(q, r_s.params, r_i.params)


def photocount_moments(joint):
    q = joint.q
    ns = np.arange(q.shape[0], dtype=float)
    ni = np.arange(q.shape[1], dtype=float)
    row = q.sum(axis=1)
    col = q.sum(axis=0)
    return Moments(
        mean_s=float(ns @ row),
        mean_i=float(ni @ col),
        second_s=float((ns ** 2) @ row),
        second_i=float((ni ** 2) @ col),
        cross=float(ns @ q @ ni),
    )


def variance_of_difference(m):
    """``Var(N_s - N_i)`` assembled from the five moments; rounding below 0 is clipped."""
    v = (m.second_s - m.mean_s ** 2 + m.second_i - m.mean_i ** 2
         - 2 * m.cross + 2 * m.mean_s * m.mean_i)
    return max(v, 0.0)


def nrf(m):
    total = m.mean_s + m.mean_i
    if not total > 0:
        raise UndefinedNRFError("NRF is undefined when the mean total photocount is zero")
    return variance_of_difference(m) / total


def limit_nrf_coherent(p_ct):
    """Low-intensity NRF of a coherent pair, ``(1 + 3P) / (1 + P)``."""
    return (1 + 3 * p_ct) / (1 + p_ct)


def limit_nrf_sv(p_ct, eta):
    return (1 + 3 * p_ct) / (1 + p_ct) - (1 + p_ct) * eta


def effective_efficiency(eta, p_ct):
    """Mean photocounts per incident photon, ``(1 + P) eta``."""
    return (1 + p_ct) * eta


def model_moments(stats, params_s, params_i=None):
    """Photocount moments of ``stats`` observed by the two detectors (full path)."""
    params_i = params_s if params_i is None else params_i
    r_s = build_response_matrix(params_s, stats.k_max)
    r_i = r_s if params_i == params_s else build_response_matrix(params_i, stats.k_max)
    return photocount_moments(apply_detectors(stats, r_s, r_i))


class GridModel:
    """NRF of one state family over a fixed grid of mean photon numbers.

    State weights are computed once per grid, with a cutoff chosen per point
    and zero padding up to the largest one, so repeated evaluation at new
    detector parameters only costs one response matrix per detector. Used by
    ``nrf_curve`` and by the fitter.
    """

    def __init__(self, kind, means, tail_tol=DEFAULT_TAIL_TOL):
        self.kind = StateKind.parse(kind)
        self.means = np.asarray(means, dtype=float)
        if self.means.ndim != 1 or np.any(self.means <= 0):
            raise ValidationError("grid means must be a 1-d sequence of positive values")
        self.k_maxes = np.array([fock.choose_k_max(mu, tail_tol) for mu in self.means])
        self.k_max = int(self.k_maxes.max()) if len(self.means) else 1
        weights = np.zeros((len(self.means), self.k_max + 1))
        for j, (mu, k) in enumerate(zip(self.means, self.k_maxes)):
            weights[j, :k + 1] = fock.marginal_pmf(self.kind, mu, k)
        # diagonal probabilities for SV, single-arm marginal for product states
        self.weights = weights

    def moments(self, params_s, params_i=None, backend=None):
        params_i = params_s if params_i is None else params_i
        r_s = build_response_matrix(params_s, self.k_max, backend)
        a_s, b_s = r_s.count_moments()
        if params_i == params_s:
            a_i, b_i = a_s, b_s
        else:
            a_i, b_i = build_response_matrix(params_i, self.k_max, backend).count_moments()
        w = self.weights
        if self.kind is StateKind.SV:
            return w @ a_s, w @ a_i, w @ b_s, w @ b_i, w @ (a_s * a_i)
        # product state; the other arm's truncated mass multiplies each moment
        norm = w.sum(axis=1)
        mean_s, mean_i = w @ a_s, w @ a_i
        return (mean_s * norm, mean_i * norm, (w @ b_s) * norm, (w @ b_i) * norm,
                mean_s * mean_i)

    def nrf(self, params_s, params_i=None, backend=None):
        mean_s, mean_i, second_s, second_i, cross = self.moments(params_s, params_i, backend)
        var = (second_s - mean_s ** 2 + second_i - mean_i ** 2
               - 2 * cross + 2 * mean_s * mean_i)
        total = mean_s + mean_i
        if np.any(total <= 0):
            raise UndefinedNRFError("NRF is undefined when the mean total photocount is zero")
        return np.clip(var, 0.0, None) / total


def nrf_curve(kind, params_s, params_i, mean_grid, tail_tol=DEFAULT_TAIL_TOL):
    """Model NRF at each grid mean, as a list of ``(mean, nrf)`` pairs.

    Zero means are skipped with a warning; use the closed-form limits there.
    """
    grid = [float(mu) for mu in mean_grid]
    if any(mu < 0 for mu in grid):
        raise ValidationError("grid means must be >= 0")
    if any(mu == 0 for mu in grid):
        warnings.warn("skipping mean 0 in NRF curve: NRF is 0/0 there", stacklevel=2)
        grid = [mu for mu in grid if mu > 0]
    if not grid:
        return []
    values = GridModel(kind, grid, tail_tol).nrf(params_s, params_i)
    return [(mu, float(v)) for mu, v in zip(grid, values)]
