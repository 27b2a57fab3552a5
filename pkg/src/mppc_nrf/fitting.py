"""Recover detector parameters from NRF-versus-mean-photon-number data.

``n_max`` is discrete and is searched exhaustively; for each candidate the
continuous pair ``(eta, p_ct)`` is fit by a projected Levenberg-Marquardt
iteration started from a 3x3 grid.
"""
import dataclasses
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .detector import DetectorParams
from .exceptions import ConvergenceError, DegenerateDataError, ValidationError
from .fock import DEFAULT_TAIL_TOL, StateKind
from .metrics import GridModel

DEFAULT_CANDIDATES = tuple(range(2, 9))
DEFAULT_FIT_CEILING = 5.0
MIN_POINTS = 4
# eta = 0 gives no counts at all, where the NRF is undefined
ETA_FLOOR = 1e-6


@dataclass(frozen=True)
class NRFDataset:
    points: tuple
    state_kind: StateKind
    fit_ceiling: float = DEFAULT_FIT_CEILING

    def __post_init__(self):
        pts = []
        for p in self.points:
            mean, value = float(p[0]), float(p[1])
            err = float(p[2]) if len(p) > 2 and p[2] is not None else None
            if not mean > 0:
                raise ValidationError(f"mean photon number must be > 0, got {mean}")
            if err is not None and not err > 0:
                raise ValidationError(f"nrf error must be > 0, got {err}")
            pts.append((mean, value, err))
        object.__setattr__(self, "points", tuple(pts))
        object.__setattr__(self, "state_kind", StateKind.parse(self.state_kind))

    def used(self):
        """Points with ``mean <= fit_ceiling``, the ones entering the objective."""
        return [p for p in self.points if p[0] <= self.fit_ceiling]

    def arrays(self, used_only=True):
        pts = self.used() if used_only else list(self.points)
        means = np.array([p[0] for p in pts])
        values = np.array([p[1] for p in pts])
        errs = [p[2] for p in pts]
        sigma = None if any(e is None for e in errs) else np.array(errs)
        return means, values, sigma


@dataclass(frozen=True)
class FitOptions:
    jac_step: float = 1e-5
    rtol: float = 1e-10
    xtol: float = 1e-8
    max_iter: int = 200
    starts: tuple = (0.05, 0.2, 0.5)
    tail_tol: float = DEFAULT_TAIL_TOL


@dataclass(frozen=True)
class FitResult:
    """Best-fit detector parameters.

    Standard errors come from the Gauss-Newton curvature scaled by the
    residual variance. They describe local curvature of the objective and
    are not a full uncertainty analysis.
    """

    eta_hat: float
    p_hat: float
    eta_se: float
    p_se: float
    n_max_hat: int
    rss: float
    r_squared: float
    n_points_used: int
    converged: bool
    iterations: int
    at_bound: bool = False
    predicted: tuple = field(default=(), repr=False)
    rss_by_candidate: dict = field(default_factory=dict, repr=False)

    @property
    def params(self):
        return DetectorParams(self.eta_hat, self.p_hat, self.n_max_hat)


@dataclass
class _Run:
    x: np.ndarray
    rss: float
    jac: np.ndarray
    iterations: int
    converged: bool


def nrf_model(mean_photons, eta, p_ct, n_max, state_kind, tail_tol=DEFAULT_TAIL_TOL):
    """Model NRF for equal detectors; scalar in, scalar out (arrays map elementwise)."""
    scalar = np.ndim(mean_photons) == 0
    means = np.atleast_1d(np.asarray(mean_photons, dtype=float))
    values = GridModel(state_kind, means, tail_tol).nrf(DetectorParams(eta, p_ct, n_max))
    return float(values[0]) if scalar else values


def _jacobian(fun, x, f0, lower, upper, h):
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        up = x.copy()
        down = x.copy()
        if x[j] + h > upper[j]:
            down[j] -= h
            J[:, j] = (f0 - fun(down)) / h
        elif x[j] - h < lower[j]:
            up[j] += h
            J[:, j] = (fun(up) - f0) / h
        else:
            up[j] += h
            down[j] -= h
            J[:, j] = (fun(up) - fun(down)) / (2 * h)
    return J


def levenberg_marquardt(fun, x0, lower, upper, options=FitOptions()):
    """Minimise ``|fun(x)|^2`` over the box ``[lower, upper]``.

    Steps are projected onto the box. Stops on relative RSS change below
    ``rtol``, step norm below ``xtol``, or when no damping level improves the
    objective; otherwise gives up after ``max_iter`` iterations.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    r = fun(x)
    rss = float(r @ r)
    lam = 1e-3
    J = _jacobian(fun, x, r, lower, upper, options.jac_step)
    for it in range(1, options.max_iter + 1):
        if rss == 0.0:
            return _Run(x, rss, J, it - 1, True)
        A = J.T @ J
        g = J.T @ r
        scale = np.maximum(np.diag(A), 1e-12)
        accepted = False
        while lam < 1e12:
            try:
                step = np.linalg.solve(A + lam * np.diag(scale), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            x_new = np.clip(x + step, lower, upper)
            r_new = fun(x_new)
            rss_new = float(r_new @ r_new)
            if rss_new < rss:
                accepted = True
                break
            lam *= 10
        if not accepted:
            # no damping level descends: x is stationary on the box
            return _Run(x, rss, J, it, True)
        moved = float(np.linalg.norm(x_new - x))
        drop = rss - rss_new
        x, r, rss = x_new, r_new, rss_new
        lam = max(lam / 10, 1e-12)
        J = _jacobian(fun, x, r, lower, upper, options.jac_step)
        if drop <= options.rtol * rss or moved < options.xtol:
            return _Run(x, rss, J, it, True)
    return _Run(x, rss, J, options.max_iter, False)


def _standard_errors(J, rss, n_points):
    dof = n_points - J.shape[1]
    try:
        cov = np.linalg.inv(J.T @ J) * (rss / dof if dof > 0 else np.nan)
    except np.linalg.LinAlgError:
        return float("nan"), float("nan")
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return float(se[0]), float(se[1])


def goodness_of_fit(dataset, result):
    """Coefficient of determination ``1 - RSS/TSS`` on the unweighted used points."""
    _, values, _ = dataset.arrays()
    if values.size < 2:
        raise DegenerateDataError("need at least two points for R^2")
    predicted = np.asarray(result.predicted, dtype=float)
    tss = float(((values - values.mean()) ** 2).sum())
    if tss == 0:
        raise DegenerateDataError("data have zero variance; R^2 is undefined")
    return 1.0 - float(((values - predicted) ** 2).sum()) / tss


def fit(dataset, n_max_candidates=DEFAULT_CANDIDATES, options=FitOptions()):
    """Least-squares fit of ``(eta, p_ct, n_max)`` to an NRF dataset.

    Residuals are weighted by ``1/sigma`` when every used point carries an
    error, else unweighted. The winning candidate has the lowest RSS, ties
    going to the smaller ``n_max`` and then to smaller ``(eta, p_ct)``.
    """
    means, values, sigma = dataset.arrays()
    if values.size < MIN_POINTS:
        raise DegenerateDataError(
            f"{values.size} points within fit_ceiling={dataset.fit_ceiling}; need >= {MIN_POINTS}")
    candidates = sorted({int(c) for c in n_max_candidates})
    if not candidates or candidates[0] < 1:
        raise ValidationError("n_max candidates must be positive integers")
    weights = np.ones_like(values) if sigma is None else 1.0 / sigma
    model = GridModel(dataset.state_kind, means, options.tail_tol)
    lower = np.array([ETA_FLOOR, 0.0])
    upper = np.array([1.0, 1.0])

    best = None
    rss_by_candidate = {}
    any_converged = False
    for n_max in candidates:
        def residuals(x, n_max=n_max):
            return weights * (model.nrf(DetectorParams(x[0], x[1], n_max)) - values)

        runs = []
        for x0 in itertools.product(options.starts, repeat=2):
            run = levenberg_marquardt(residuals, x0, lower, upper, options)
            any_converged |= run.converged
            runs.append(run)
        run = min(runs, key=lambda r: (r.rss, tuple(r.x)))
        rss_by_candidate[n_max] = run.rss
        key = (run.rss, n_max, tuple(run.x))
        if best is None or key < best[0]:
            best = (key, n_max, run)
    if not any_converged:
        raise ConvergenceError(f"no start converged within {options.max_iter} iterations")

    _, n_max, run = best
    eta_hat, p_hat = (float(v) for v in run.x)
    at_bound = bool(np.any(run.x <= lower) or np.any(run.x >= upper))
    if at_bound:
        warnings.warn(f"fit optimum clamped at a parameter bound: eta={eta_hat}, p_ct={p_hat}",
                      stacklevel=2)
    if not run.converged:
        warnings.warn("selected fit did not meet a stopping rule", stacklevel=2)
    eta_se, p_se = _standard_errors(run.jac, run.rss, values.size)
    predicted = tuple(float(v) for v in model.nrf(DetectorParams(eta_hat, p_hat, n_max)))
    result = FitResult(eta_hat, p_hat, eta_se, p_se, n_max, run.rss, float("nan"),
                       int(values.size), run.converged, run.iterations, at_bound,
                       predicted, rss_by_candidate)
    r2 = goodness_of_fit(dataset, result)
    return dataclasses.replace(result, r_squared=r2)
