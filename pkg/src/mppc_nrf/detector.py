"""Photocount response of a lossy multi-pixel detector with crosstalk and saturation.

Each of ``k`` incident photons fires a pixel with probability ``eta``; each
fired pixel triggers at most one extra (crosstalk) count with probability
``p_ct``; the electronics report at most ``n_max`` counts, larger outcomes
being folded into the ``n_max`` bin.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .exceptions import ValidationError


@dataclass(frozen=True)
class DetectorParams:
    eta: float
    p_ct: float
    n_max: int

    def __post_init__(self):
        for name in ("eta", "p_ct"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float, np.floating)) and 0.0 <= value <= 1.0):
                raise ValidationError(f"{name} must lie in [0, 1], got {value!r}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValidationError(f"n_max must be a positive integer, got {self.n_max!r}")
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "p_ct", float(self.p_ct))
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def effective_efficiency(self):
        return (1.0 + self.p_ct) * self.eta


@dataclass(frozen=True)
class ResponseMatrix:
    """Conditional photocount law ``r[N, k]``.

    Only rows ``N <= min(n_max, 2 k_max)`` are stored: a detector fed at most
    ``k_max`` photons never produces more than ``2 k_max`` counts, so the
    omitted rows are identically zero. ``prob`` answers for any ``N``.
    """

    params: DetectorParams
    k_max: int
    r: np.ndarray = field(repr=False)

    @property
    def n_rows(self):
        return self.r.shape[0]

    @property
    def saturates(self):
        """True when the last stored row is the ``n_max`` saturation bin."""
        return self.params.n_max <= 2 * self.k_max

    def prob(self, N, k):
        if not 0 <= k <= self.k_max:
            raise IndexError(f"k={k} outside [0, {self.k_max}]")
        if N < 0 or N >= self.n_rows:
            return 0.0
        return float(self.r[N, k])

    def count_moments(self):
        """Per-column first and second photocount moments ``(sum N r, sum N^2 r)``."""
        counts = np.arange(self.n_rows, dtype=float)
        return counts @ self.r, (counts ** 2) @ self.r


def response_coefficient(n, k, N, params):
    """Weight of ``n`` primary detections out of ``k`` photons giving ``N`` counts.

    ``C(n, N-n) C(k, n) P^(N-n) (1-P)^(2n-N) eta^n (1-eta)^(k-n)``; zero when
    a binomial coefficient is out of range.
    """
    if n < 0 or k < 0 or N < 0:
        return 0.0
    extra = N - n
    if extra < 0 or extra > n or n > k:
        return 0.0
    eta, p = params.eta, params.p_ct
    return (math.comb(n, extra) * math.comb(k, n)
            * p ** extra * (1 - p) ** (n - extra)
            * eta ** n * (1 - eta) ** (k - n))


def unsaturated_response(k, N, params):
    """Probability of exactly ``N`` counts from ``k`` photons, ignoring saturation."""
    if k < 0 or N < 0:
        return 0.0
    return math.fsum(response_coefficient(n, k, N, params)
                     for n in range((N + 1) // 2, min(N, k) + 1))


def build_response_matrix(params, k_max, backend=None):
    if int(k_max) != k_max or k_max < 0:
        raise ValidationError(f"k_max must be a nonnegative integer, got {k_max!r}")
    kern = _backend.kernels if backend is None else _backend.load(backend)
    r = kern.response_matrix(params.eta, params.p_ct, params.n_max, int(k_max))
    r.setflags(write=False)
    return ResponseMatrix(params, int(k_max), r)


def sample_photocount(k, params, rng, size=None):
    """Draw photocounts for ``k`` incident photons.

    ``rng`` is a ``numpy.random.Generator``. ``k`` may be an integer array;
    with ``size`` set, that many independent draws are returned.
    """
    n = rng.binomial(k, params.eta, size=size)
    extra = rng.binomial(n, params.p_ct)
    counts = np.minimum(n + extra, params.n_max)
    if np.ndim(counts) == 0:
        return int(counts)
    return counts
