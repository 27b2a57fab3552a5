"""Command-line interface: ``mppc-nrf {curve,fit,simulate,convert,limits}``.

Exit status is 0 on success, 2 for parse or validation errors and 3 for
numerical failures (truncation, non-convergence, undefined NRF).
"""
import argparse
import logging
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__, dataio
from ._backend import BACKEND
from .detector import DetectorParams
from .exceptions import (ConvergenceError, MppcNrfError, TruncationError, UndefinedNRFError,
                         ValidationError)
from .fitting import DEFAULT_CANDIDATES, DEFAULT_FIT_CEILING, fit
from .fock import DEFAULT_TAIL_TOL, StateKind
from .metrics import effective_efficiency, limit_nrf_coherent, limit_nrf_sv, nrf_curve
from .montecarlo import simulate

log = logging.getLogger("mppc_nrf")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


@dataclass
class RunConfig:
    subcommand: str
    state: str | None = None
    params_s: DetectorParams | None = None
    params_i: DetectorParams | None = None
    mean_min: float | None = None
    mean_max: float | None = None
    points: int | None = None
    log_grid: bool = False
    pulses: int | None = None
    seed: int | None = None
    nmax_candidates: tuple | None = None
    fit_ceiling: float | None = None
    input: str | None = None
    output: str | None = None
    tail_tol: float = DEFAULT_TAIL_TOL

    def grid(self):
        if not self.mean_min > 0:
            raise ValidationError(f"--mean-min must be > 0, got {self.mean_min}")
        if self.points < 1:
            raise ValidationError(f"--points must be >= 1, got {self.points}")
        if self.mean_max < self.mean_min:
            raise ValidationError("--mean-max must be >= --mean-min")
        if self.points == 1:
            return np.array([self.mean_min])
        if self.log_grid:
            return np.geomspace(self.mean_min, self.mean_max, self.points)
        return np.linspace(self.mean_min, self.mean_max, self.points)

    def echo(self):
        out = {k: v for k, v in asdict(self).items() if v is not None}
        return out


def parse_candidates(text):
    """``"2-8"`` or ``"2,3,5"`` to a tuple of integers."""
    values = set()
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = part.split("-", 1)
                values.update(range(int(lo), int(hi) + 1))
            elif part:
                values.add(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad candidate list {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("candidates must be positive integers")
    return tuple(sorted(values))


def _add_detector(p):
    p.add_argument("--eta", type=float, default=0.163, help="pixel quantum efficiency")
    p.add_argument("--p-ct", type=float, default=0.28, help="crosstalk probability")
    p.add_argument("--n-max", type=int, default=3, help="saturation bound on photocounts")
    p.add_argument("--eta-i", type=float, help="idler efficiency (default: --eta)")
    p.add_argument("--p-ct-i", type=float, help="idler crosstalk (default: --p-ct)")
    p.add_argument("--n-max-i", type=int, help="idler saturation (default: --n-max)")


def _state_arg(p, choices=("coherent", "sv", "thermal")):
    p.add_argument("--state", choices=choices, default="coherent")


def build_parser():
    parser = argparse.ArgumentParser(prog="mppc-nrf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("curve", help="model NRF versus mean photon number")
    _state_arg(p)
    _add_detector(p)
    p.add_argument("--mean-min", type=float, default=0.05)
    p.add_argument("--mean-max", type=float, default=5.0)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--log", dest="log_grid", action="store_true", help="log-spaced grid")
    p.add_argument("--tail-tol", type=float, default=DEFAULT_TAIL_TOL)
    p.add_argument("--output", default="-", help="curve CSV (default stdout)")
    p.add_argument("--summary", help="optional JSON summary path")

    p = sub.add_parser("fit", help="fit eta, crosstalk and n_max to NRF data")
    _state_arg(p, ("coherent", "sv"))
    p.add_argument("--input", required=True, help="CSV with header mean_n,nrf[,nrf_err]")
    p.add_argument("--fit-ceiling", type=float, default=DEFAULT_FIT_CEILING)
    p.add_argument("--nmax-candidates", type=parse_candidates,
                   default=DEFAULT_CANDIDATES, help="e.g. 2-8 or 2,3,4")
    p.add_argument("--tail-tol", type=float, default=DEFAULT_TAIL_TOL)
    p.add_argument("--output", default="-", help="JSON summary (default stdout)")
    p.add_argument("--curve", help="optional CSV of the fitted model at the data means")

    p = sub.add_parser("simulate", help="Monte Carlo of per-pulse photocounts")
    _state_arg(p)
    _add_detector(p)
    p.add_argument("--mean", type=float, required=True, help="mean photons per arm")
    p.add_argument("--pulses", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resamples", type=int, default=1000, help="bootstrap resamples")
    p.add_argument("--output", required=True, help="per-pulse CSV pulse,n_s,n_i")
    p.add_argument("--summary", help="optional JSON report path")

    p = sub.add_parser("convert", help="mean photocounts to mean photon numbers")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="per-pulse CSV pulse,n_s,n_i")
    src.add_argument("--counts", type=float, nargs=2, metavar=("N_S", "N_I"),
                     help="mean photocounts per arm")
    p.add_argument("--eta-e", type=float, required=True, help="effective efficiency (1+P)eta")
    p.add_argument("--eta-e-err", type=float, help="uncertainty of --eta-e")
    p.add_argument("--dark-s", type=float, default=0.0, help="dark-run mean counts, signal")
    p.add_argument("--dark-i", type=float, default=0.0, help="dark-run mean counts, idler")
    p.add_argument("--output", default="-")

    p = sub.add_parser("limits", help="closed-form low-intensity NRF values")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--p-ct", type=float, required=True)
    p.add_argument("--output", default="-")
    return parser


def _detectors(args):
    params_s = DetectorParams(args.eta, args.p_ct, args.n_max)
    params_i = DetectorParams(
        args.eta if args.eta_i is None else args.eta_i,
        args.p_ct if args.p_ct_i is None else args.p_ct_i,
        args.n_max if args.n_max_i is None else args.n_max_i)
    return params_s, params_i


def _limits(eta, p_ct):
    return {
        "nrf_coherent": limit_nrf_coherent(p_ct),
        "nrf_sv": limit_nrf_sv(p_ct, eta),
        "effective_efficiency": effective_efficiency(eta, p_ct),
    }


def cmd_curve(args):
    params_s, params_i = _detectors(args)
    cfg = RunConfig("curve", args.state, params_s, params_i, args.mean_min, args.mean_max,
                    args.points, args.log_grid, output=args.output, tail_tol=args.tail_tol)
    points = nrf_curve(args.state, params_s, params_i, cfg.grid(), args.tail_tol)
    dataio.emit_curve_csv(points, args.output)
    if args.summary:
        dataio.emit_summary_json({
            "config": cfg.echo(),
            "backend": BACKEND,
            "limits": {"signal": _limits(params_s.eta, params_s.p_ct),
                       "idler": _limits(params_i.eta, params_i.p_ct)},
            "curve": [list(p) for p in points],
        }, args.summary)
    return EXIT_OK


def cmd_fit(args):
    dataset = dataio.load_nrf_dataset(args.input, args.state, args.fit_ceiling)
    cfg = RunConfig("fit", args.state, nmax_candidates=args.nmax_candidates,
                    fit_ceiling=args.fit_ceiling, input=args.input, output=args.output,
                    tail_tol=args.tail_tol)
    from .fitting import FitOptions
    result = fit(dataset, args.nmax_candidates, FitOptions(tail_tol=args.tail_tol))
    dataio.emit_summary_json({
        "config": cfg.echo(),
        "fit": {
            "eta_hat": result.eta_hat, "eta_se": result.eta_se,
            "p_hat": result.p_hat, "p_se": result.p_se,
            "n_max_hat": result.n_max_hat, "rss": result.rss,
            "r_squared": result.r_squared, "n_points_used": result.n_points_used,
            "converged": result.converged, "iterations": result.iterations,
            "at_bound": result.at_bound,
            "rss_by_candidate": result.rss_by_candidate,
            "standard_error_note": "local curvature (Gauss-Newton) estimate",
        },
        "limits": _limits(result.eta_hat, result.p_hat),
    }, args.output)
    if args.curve:
        means, _, _ = dataset.arrays()
        dataio.emit_curve_csv(list(zip(means, result.predicted)), args.curve)
    if not result.converged:
        log.error("fit did not converge")
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_simulate(args):
    params_s, params_i = _detectors(args)
    cfg = RunConfig("simulate", args.state, params_s, params_i, pulses=args.pulses,
                    seed=args.seed, output=args.output)
    report = simulate(args.state, args.mean, params_s, params_i, args.pulses, args.seed,
                      workers=args.workers, keep_pulses=True, n_resamples=args.resamples)
    dataio.emit_pulses_csv(*report.pulses, args.output)
    if args.summary:
        dataio.emit_summary_json({
            "config": {**cfg.echo(), "mean": args.mean},
            "report": {
                "n_pulses": report.n_pulses, "seed": report.seed,
                "nrf_estimate": report.nrf_estimate, "nrf_std_error": report.nrf_std_error,
                "mean_s": report.mean_s, "mean_i": report.mean_i,
                "var_diff": report.var_diff, "degenerate": report.degenerate,
                "empirical_joint": report.empirical_joint,
            },
        }, args.summary)
    return EXIT_OK


def cmd_convert(args):
    if args.input:
        records = dataio.ingest_counts_csv(args.input)
        if not isinstance(records[0], dataio.RawCountsRecord):
            raise ValidationError("convert --input needs a per-pulse CSV")
        _, (mean_s, mean_i), _ = dataio.compute_nrf_from_records(records)
    else:
        mean_s, mean_i = args.counts
    corr_s, corr_i = dataio.subtract_background(mean_s, mean_i, args.dark_s, args.dark_i)
    arms = {}
    for label, value in (("signal", corr_s), ("idler", corr_i)):
        converted = dataio.counts_to_photons(value, args.eta_e, args.eta_e_err)
        if args.eta_e_err is None:
            arms[label] = {"mean_counts": value, "mean_photons": converted}
        else:
            arms[label] = {"mean_counts": value, "mean_photons": converted[0],
                           "mean_photons_err": converted[1]}
    dataio.emit_summary_json({
        "config": {"subcommand": "convert", "input": args.input, "eta_e": args.eta_e,
                   "eta_e_err": args.eta_e_err, "dark_s": args.dark_s, "dark_i": args.dark_i},
        "raw_means": [mean_s, mean_i],
        "arms": arms,
        "note": "background subtraction corrects means only",
    }, args.output)
    return EXIT_OK


def cmd_limits(args):
    DetectorParams(args.eta, args.p_ct, 1)
    dataio.emit_summary_json({
        "config": {"subcommand": "limits", "eta": args.eta, "p_ct": args.p_ct},
        "limits": _limits(args.eta, args.p_ct),
    }, args.output)
    return EXIT_OK


COMMANDS = {"curve": cmd_curve, "fit": cmd_fit, "simulate": cmd_simulate,
            "convert": cmd_convert, "limits": cmd_limits}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.subcommand](args)
    except (TruncationError, ConvergenceError, UndefinedNRFError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except (ValidationError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except MppcNrfError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
