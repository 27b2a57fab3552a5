"""Truncated photon-number statistics of two-mode input states.

All states are stored as real, Fock-diagonal joint probability tables
``joint[k_s, k_i]``; no amplitudes or phases are kept.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import poisson

from .exceptions import TruncationError, ValidationError

DEFAULT_TAIL_TOL = 1e-12
# step used when the default truncation rule leaves too much tail mass
K_MAX_INCREMENT = 5


class StateKind(enum.Enum):
    COHERENT = "coherent"
    SV = "sv"
    THERMAL = "thermal"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "coherent": cls.COHERENT, "coherentpair": cls.COHERENT,
            "sv": cls.SV, "twomodesv": cls.SV, "squeezed": cls.SV,
            "thermal": cls.THERMAL, "thermalpair": cls.THERMAL,
        }
        try:
            return aliases[key.replace("_", "").replace("-", "")]
        except KeyError:
            raise ValidationError(f"unknown state kind {value!r}") from None


@dataclass(frozen=True)
class PhotonStatistics:
    """Joint photon-number distribution of a signal/idler pair.

    ``marginal`` is the single-arm photon-number law (both arms share it for
    every state built here). For ``SV`` the joint is diagonal; for the
    product states it is ``outer(marginal, marginal)``.
    """

    kind: StateKind
    mean_per_arm: float
    k_max: int
    joint: np.ndarray = field(repr=False)
    marginal: np.ndarray = field(repr=False)
    tail_mass: float

    @property
    def marginal_s(self):
        return self.joint.sum(axis=1)

    @property
    def marginal_i(self):
        return self.joint.sum(axis=0)

    def marginal_means(self):
        ks = np.arange(self.k_max + 1)
        return float(ks @ self.marginal_s), float(ks @ self.marginal_i)

    def total_mass(self):
        return float(self.joint.sum())


def poisson_pmf(mu, k_max):
    ks = np.arange(k_max + 1)
    if mu == 0:
        out = np.zeros(k_max + 1)
        out[0] = 1.0
        return out
    return poisson.pmf(ks, mu)


def thermal_pmf(mu, k_max):
    """Geometric (thermal) law ``mu**k / (1 + mu)**(k + 1)``."""
    ks = np.arange(k_max + 1)
    if mu == 0:
        out = np.zeros(k_max + 1)
        out[0] = 1.0
        return out
    ratio = mu / (1.0 + mu)
    return np.exp(ks * math.log(ratio)) / (1.0 + mu)


def poisson_tail(mu, k_max):
    """Probability that a Poisson(mu) variable exceeds ``k_max``."""
    if mu == 0:
        return 0.0
    return float(poisson.sf(k_max, mu))


def thermal_tail(mu, k_max):
    if mu == 0:
        return 0.0
    return (mu / (1.0 + mu)) ** (k_max + 1)


def _check_mean(mu):
    mu = float(mu)
    if not math.isfinite(mu) or mu < 0:
        raise ValidationError(f"mean_per_arm must be finite and >= 0, got {mu}")
    return mu


def choose_k_max(mean_per_arm, tail_tol=DEFAULT_TAIL_TOL):
    """Pick a per-arm Fock cutoff for mean photon number ``mean_per_arm``.

    Starts from ``ceil(mu + 10 sqrt(mu + 1) + 30)`` and grows in steps of
    ``K_MAX_INCREMENT`` until both the Poisson and the thermal tail beyond
    the cutoff are below ``tail_tol / 2``. The halving leaves room for the
    two arms of a product state, whose joint tail is about twice the
    single-arm tail.
    """
    mu = _check_mean(mean_per_arm)
    if not 0 < tail_tol < 1:
        raise ValidationError(f"tail_tol must lie in (0, 1), got {tail_tol}")
    k = math.ceil(mu + 10 * math.sqrt(mu + 1) + 30)
    target = tail_tol / 2
    while poisson_tail(mu, k) >= target or thermal_tail(mu, k) >= target:
        k += K_MAX_INCREMENT
    return k


def _prepare(mean_per_arm, k_max, tail_tol):
    mu = _check_mean(mean_per_arm)
    if k_max is None:
        k_max = choose_k_max(mu, tail_tol)
    k_max = int(k_max)
    if k_max < 1:
        raise ValidationError(f"k_max must be >= 1, got {k_max}")
    return mu, k_max


def _finish(kind, mu, k_max, joint, marginal, tail_tol):
    tail = max(0.0, 1.0 - float(joint.sum()))
    if tail > tail_tol:
        raise TruncationError(
            f"k_max={k_max} discards {tail:.3g} of the {kind.value} state at "
            f"mean {mu}; tolerance is {tail_tol:g}")
    joint.setflags(write=False)
    marginal.setflags(write=False)
    return PhotonStatistics(kind, mu, k_max, joint, marginal, tail)


def make_coherent_pair(mean_per_arm, k_max=None, tail_tol=DEFAULT_TAIL_TOL):
    """Two independent coherent beams, Poisson statistics in each arm."""
    mu, k_max = _prepare(mean_per_arm, k_max, tail_tol)
    m = poisson_pmf(mu, k_max)
    return _finish(StateKind.COHERENT, mu, k_max, np.outer(m, m), m, tail_tol)


def make_two_mode_sv(mean_per_arm, k_max=None, tail_tol=DEFAULT_TAIL_TOL):
    """Two-mode squeezed vacuum: ``k`` photons in both arms with thermal weight."""
    mu, k_max = _prepare(mean_per_arm, k_max, tail_tol)
    m = thermal_pmf(mu, k_max)
    return _finish(StateKind.SV, mu, k_max, np.diag(m), m, tail_tol)


def make_thermal_pair(mean_per_arm, k_max=None, tail_tol=DEFAULT_TAIL_TOL):
    mu, k_max = _prepare(mean_per_arm, k_max, tail_tol)
    m = thermal_pmf(mu, k_max)
    return _finish(StateKind.THERMAL, mu, k_max, np.outer(m, m), m, tail_tol)


_CONSTRUCTORS = {
    StateKind.COHERENT: make_coherent_pair,
    StateKind.SV: make_two_mode_sv,
    StateKind.THERMAL: make_thermal_pair,
}


def make_state(kind, mean_per_arm, k_max=None, tail_tol=DEFAULT_TAIL_TOL):
    return _CONSTRUCTORS[StateKind.parse(kind)](mean_per_arm, k_max, tail_tol)


def marginal_pmf(kind, mean_per_arm, k_max):
    """Single-arm photon law of a state family, without building the joint."""
    kind = StateKind.parse(kind)
    if kind is StateKind.COHERENT:
        return poisson_pmf(mean_per_arm, k_max)
    return thermal_pmf(mean_per_arm, k_max)
