"""CSV/JSON input and output, background subtraction and photon-number conversion.

CSV files are comma separated UTF-8 with a mandatory header; blank lines and
lines starting with ``#`` are ignored. Two layouts are recognised:

* per-pulse counts, header ``pulse,n_s,n_i``
* aggregated NRF points, header ``mean_n,nrf`` with optional ``nrf_err``
"""
import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import CSVParseError, DegenerateDataError, ValidationError
from .fitting import DEFAULT_FIT_CEILING, NRFDataset
from .montecarlo import count_table, nrf_from_counts

SIG_DIGITS = 12
PULSE_HEADER = ("pulse", "n_s", "n_i")
AGGREGATE_HEADER = ("mean_n", "nrf")


@dataclass(frozen=True)
class RawCountsRecord:
    pulse: int
    n_s: int
    n_i: int


@dataclass(frozen=True)
class AggregatedRecord:
    mean_n: float
    nrf: float
    nrf_err: float | None = None


def fmt(x):
    return f"{x:.{SIG_DIGITS}g}"


def _rows(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, next(csv.reader([stripped]))


def ingest_counts_csv(path):
    """Parse a per-pulse or aggregated CSV file into records.

    Returns a list of ``RawCountsRecord`` or of ``AggregatedRecord`` depending
    on the header. Malformed rows raise ``CSVParseError`` naming the line and
    column.
    """
    rows = _rows(path)
    try:
        header_line, header = next(rows)
    except StopIteration:
        raise CSVParseError(f"{path}: file has no header or data") from None
    header = tuple(h.strip().lower() for h in header)
    if header == PULSE_HEADER:
        parse = _parse_pulse
    elif header[:2] == AGGREGATE_HEADER and header[2:] in ((), ("nrf_err",)):
        parse = _parse_aggregate
    else:
        raise CSVParseError(
            f"unrecognised header {','.join(header)!r}; expected "
            f"'pulse,n_s,n_i' or 'mean_n,nrf[,nrf_err]'", line=header_line)
    records = [parse(lineno, row, len(header)) for lineno, row in rows]
    if not records:
        raise CSVParseError(f"{path}: no data rows after header")
    return records


def _check_width(lineno, row, width):
    if len(row) != width:
        raise CSVParseError(f"expected {width} fields, found {len(row)}", line=lineno)


def _parse_pulse(lineno, row, width):
    _check_width(lineno, row, width)
    values = []
    for col, text in enumerate(row, 1):
        try:
            v = int(text)
        except ValueError:
            raise CSVParseError(f"not an integer: {text!r}", line=lineno, column=col) from None
        if v < 0:
            raise CSVParseError(f"negative count {v}", line=lineno, column=col)
        values.append(v)
    return RawCountsRecord(*values)


def _parse_aggregate(lineno, row, width):
    _check_width(lineno, row, width)
    values = []
    for col, text in enumerate(row, 1):
        if col == 3 and text.strip() == "":
            values.append(None)
            continue
        try:
            v = float(text)
        except ValueError:
            raise CSVParseError(f"not a number: {text!r}", line=lineno, column=col) from None
        if not math.isfinite(v):
            raise CSVParseError(f"non-finite value {text!r}", line=lineno, column=col)
        values.append(v)
    mean_n, value = values[0], values[1]
    if mean_n <= 0:
        raise CSVParseError(f"mean_n must be > 0, got {mean_n}", line=lineno, column=1)
    err = values[2] if len(values) > 2 else None
    if err is not None and err <= 0:
        raise CSVParseError(f"nrf_err must be > 0, got {err}", line=lineno, column=3)
    return AggregatedRecord(mean_n, value, err)


def records_to_dataset(records, state_kind, fit_ceiling=DEFAULT_FIT_CEILING):
    if not records or not isinstance(records[0], AggregatedRecord):
        raise ValidationError("an NRF dataset needs aggregated mean_n,nrf records")
    return NRFDataset(tuple((r.mean_n, r.nrf, r.nrf_err) for r in records),
                      state_kind, fit_ceiling)


def load_nrf_dataset(path, state_kind, fit_ceiling=DEFAULT_FIT_CEILING):
    return records_to_dataset(ingest_counts_csv(path), state_kind, fit_ceiling)


def subtract_background(mean_s, mean_i, dark_mean_s=0.0, dark_mean_i=0.0):
    """Remove dark/ambient mean counts from each arm, clamping at zero.

    Only means are corrected; the background variance is left in the data.
    """
    out = []
    for label, signal, dark in (("signal", mean_s, dark_mean_s), ("idler", mean_i, dark_mean_i)):
        value = signal - dark
        if value < 0:
            warnings.warn(f"{label} background {dark} exceeds mean {signal}; clamped to 0",
                          stacklevel=2)
            value = 0.0
        out.append(value)
    return tuple(out)


def counts_to_photons(mean_photocounts, eta_effective, eta_effective_err=None):
    """Mean photon number from mean photocounts, ``counts / eta_E``.

    With ``eta_effective_err`` a ``(value, error)`` pair is returned, the
    relative error of ``eta_E`` carried over unchanged (a labelling
    convention of this package, not a full propagation).
    """
    if mean_photocounts < 0:
        raise ValidationError(f"mean photocounts must be >= 0, got {mean_photocounts}")
    if not 0 < eta_effective <= 2:
        raise ValidationError(f"effective efficiency must lie in (0, 2], got {eta_effective}")
    value = mean_photocounts / eta_effective
    if eta_effective_err is None:
        return value
    return value, value * eta_effective_err / eta_effective


def compute_nrf_from_records(records):
    """Empirical NRF of per-pulse records.

    Returns ``(nrf, (mean_s, mean_i), var_diff)`` using the unbiased sample
    variance of ``n_s - n_i``.
    """
    if len(records) < 2:
        raise DegenerateDataError("need at least two pulses")
    n_s = np.fromiter((r.n_s for r in records), dtype=np.int64, count=len(records))
    n_i = np.fromiter((r.n_i for r in records), dtype=np.int64, count=len(records))
    value, mean_s, mean_i, var = nrf_from_counts(count_table(n_s, n_i))
    if value is None:
        raise DegenerateDataError("all records have zero counts")
    return value, (mean_s, mean_i), var


def emit_curve_csv(points, path):
    """Write ``mean_photons,nrf[,nrf_err]`` rows; errors column only if every point has one."""
    points = list(points)
    if not points:
        raise ValidationError("nothing to write")
    with_err = all(len(p) > 2 and p[2] is not None for p in points)
    lines = ["mean_photons,nrf,nrf_err" if with_err else "mean_photons,nrf"]
    for p in points:
        cells = [fmt(p[0]), fmt(p[1])] + ([fmt(p[2])] if with_err else [])
        lines.append(",".join(cells))
    _write_text(path, "\n".join(lines) + "\n")


def emit_dataset_csv(dataset, path):
    """Write an NRF dataset in the aggregated ingest layout."""
    with_err = all(p[2] is not None for p in dataset.points)
    lines = ["mean_n,nrf,nrf_err" if with_err else "mean_n,nrf"]
    for mean, value, err in dataset.points:
        lines.append(",".join([fmt(mean), fmt(value)] + ([fmt(err)] if with_err else [])))
    _write_text(path, "\n".join(lines) + "\n")


def emit_pulses_csv(n_s, n_i, path):
    n_s = np.asarray(n_s, dtype=np.int64)
    n_i = np.asarray(n_i, dtype=np.int64)
    body = np.column_stack([np.arange(n_s.size), n_s, n_i])
    with _open_out(path) as fh:
        fh.write(",".join(PULSE_HEADER) + "\n")
        np.savetxt(fh, body, fmt="%d", delimiter=",")


def _round_floats(obj):
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(fmt(x))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round_floats(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def emit_summary_json(summary, path):
    """Write a JSON summary with floats rounded to 12 significant digits and sorted keys."""
    from . import __version__

    payload = dict(summary)
    payload.setdefault("version", __version__)
    text = json.dumps(_round_floats(payload), indent=2, sort_keys=True)
    _write_text(path, text + "\n")


class _Stdout:
    def __enter__(self):
        import sys
        return sys.stdout

    def __exit__(self, *exc):
        return False


def _open_out(path):
    if str(path) == "-":
        return _Stdout()
    return open(path, "w", encoding="utf-8", newline="\n")


def _write_text(path, text):
    with _open_out(path) as fh:
        fh.write(text)
