"""Per-pulse Monte Carlo of the full measurement chain.

Each pulse draws photon numbers from the state law, then applies loss,
crosstalk and saturation independently in each arm. Streams come from a
Philox generator keyed by ``(seed, chunk index)``, so the result does not
depend on how chunks are distributed over workers.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .detector import sample_photocount
from .exceptions import DegenerateDataError, ValidationError
from .fock import StateKind

DEFAULT_CHUNK = 1 << 16
DEFAULT_RESAMPLES = 1000
# spawn-key offset separating bootstrap streams from pulse streams
_BOOTSTRAP_KEY = 2 ** 31


@dataclass(frozen=True)
class SimulationReport:
    kind: StateKind
    mean_per_arm: float
    n_pulses: int
    seed: int
    empirical_joint: np.ndarray = field(repr=False)
    nrf_estimate: float | None
    nrf_std_error: float | None
    mean_s: float
    mean_i: float
    var_diff: float
    pulses: tuple | None = field(default=None, repr=False)

    @property
    def degenerate(self):
        return self.nrf_estimate is None

    def empirical_pmf(self):
        return self.empirical_joint / self.n_pulses


def chunk_generator(seed, index):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_photons(kind, mu, size, rng):
    """Photon numbers ``(k_s, k_i)`` for ``size`` pulses."""
    if mu == 0:
        zeros = np.zeros(size, dtype=np.int64)
        return zeros, zeros.copy()
    if kind is StateKind.COHERENT:
        return rng.poisson(mu, size), rng.poisson(mu, size)
    log_ratio = math.log(mu / (1.0 + mu))

    def geometric():
        # inverse CDF of P(K >= k) = ratio**k; 1 - U lies in (0, 1]
        u = 1.0 - rng.random(size)
        return np.floor(np.log(u) / log_ratio).astype(np.int64)

    if kind is StateKind.SV:
        k = geometric()
        return k, k.copy()
    return geometric(), geometric()


def _run_chunk(kind, mu, params_s, params_i, size, seed, index):
    rng = chunk_generator(seed, index)
    k_s, k_i = sample_photons(kind, mu, size, rng)
    return sample_photocount(k_s, params_s, rng), sample_photocount(k_i, params_i, rng)


def count_table(n_s, n_i, shape=None):
    n_s = np.asarray(n_s, dtype=np.int64)
    n_i = np.asarray(n_i, dtype=np.int64)
    if shape is None:
        shape = (int(n_s.max(initial=0)) + 1, int(n_i.max(initial=0)) + 1)
    flat = np.bincount(n_s * shape[1] + n_i, minlength=shape[0] * shape[1])
    return flat.reshape(shape)


def _pad(table, shape):
    out = np.zeros(shape, dtype=np.int64)
    out[:table.shape[0], :table.shape[1]] = table
    return out


def nrf_from_counts(table):
    """Empirical NRF from a count table over ``(N_s, N_i)``.

    Returns ``(nrf, mean_s, mean_i, var_diff)`` with the unbiased sample
    variance of ``N_s - N_i``; ``nrf`` is ``None`` when no counts were seen.
    """
    table = np.asarray(table, dtype=float)
    n = table.sum()
    if n < 2:
        raise DegenerateDataError("need at least two pulses to estimate a variance")
    ns = np.arange(table.shape[0], dtype=float)
    ni = np.arange(table.shape[1], dtype=float)
    mean_s = float(ns @ table.sum(axis=1)) / n
    mean_i = float(ni @ table.sum(axis=0)) / n
    diff = ns[:, None] - ni[None, :]
    centred = diff - (mean_s - mean_i)
    var_diff = float((table * centred ** 2).sum()) / (n - 1)
    total = mean_s + mean_i
    value = var_diff / total if total > 0 else None
    return value, mean_s, mean_i, var_diff


def bootstrap_nrf_error(empirical_joint, n_resamples=DEFAULT_RESAMPLES, seed=0):
    """Standard deviation of the NRF over multinomial resamples of the counts."""
    if n_resamples < 100:
        raise ValidationError(f"n_resamples must be >= 100, got {n_resamples}")
    table = np.asarray(empirical_joint, dtype=np.int64)
    n = int(table.sum())
    if np.count_nonzero(table) < 2:
        raise DegenerateDataError("all counts sit in one cell; NRF has no sampling spread")
    rng = chunk_generator(seed, _BOOTSTRAP_KEY)
    draws = rng.multinomial(n, table.ravel() / n, size=n_resamples).astype(float)
    ns, ni = np.indices(table.shape)
    ns, ni = ns.ravel().astype(float), ni.ravel().astype(float)
    mean_s = draws @ ns / n
    mean_i = draws @ ni / n
    d = ns - ni
    var_diff = (draws @ d ** 2 - n * (mean_s - mean_i) ** 2) / (n - 1)
    total = mean_s + mean_i
    ok = total > 0
    if ok.sum() < 2:
        raise DegenerateDataError("resamples carry no photocounts")
    return float(np.std(var_diff[ok] / total[ok], ddof=1))


def simulate(kind, mean_per_arm, params_s, params_i=None, n_pulses=1_000_000, seed=0,
             chunk_size=DEFAULT_CHUNK, workers=1, keep_pulses=False,
             n_resamples=DEFAULT_RESAMPLES):
    """Simulate ``n_pulses`` pulses and summarise the photocount statistics.

    With ``keep_pulses`` the per-pulse ``(N_s, N_i)`` arrays are attached to
    the report. The NRF error is a bootstrap standard deviation; it is
    ``None`` when the data are degenerate.
    """
    kind = StateKind.parse(kind)
    params_i = params_s if params_i is None else params_i
    mu = float(mean_per_arm)
    if n_pulses < 1:
        raise ValidationError(f"n_pulses must be >= 1, got {n_pulses}")
    if mu < 0 or not math.isfinite(mu):
        raise ValidationError(f"mean_per_arm must be finite and >= 0, got {mu}")
    seed = int(seed)
    sizes = [chunk_size] * (n_pulses // chunk_size)
    if n_pulses % chunk_size:
        sizes.append(n_pulses % chunk_size)

    def job(index):
        return _run_chunk(kind, mu, params_s, params_i, sizes[index], seed, index)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(len(sizes))))
    else:
        results = [job(i) for i in range(len(sizes))]

    tables = [count_table(n_s, n_i) for n_s, n_i in results]
    shape = (max(t.shape[0] for t in tables), max(t.shape[1] for t in tables))
    joint = sum(_pad(t, shape) for t in tables)

    if n_pulses >= 2:
        nrf_value, mean_s, mean_i, var_diff = nrf_from_counts(joint)
    else:
        nrf_value, mean_s, mean_i, var_diff = None, float(results[0][0][0]), float(results[0][1][0]), 0.0
    std_error = None
    if nrf_value is not None:
        try:
            std_error = bootstrap_nrf_error(joint, n_resamples, seed)
        except DegenerateDataError:
            std_error = None

    pulses = None
    if keep_pulses:
        pulses = (np.concatenate([r[0] for r in results]),
                  np.concatenate([r[1] for r in results]))
    return SimulationReport(kind, mu, int(n_pulses), seed, joint, nrf_value, std_error,
                            mean_s, mean_i, var_diff, pulses)
