"""CSV export/import of runs.

Floats are written as their shortest round-trip decimal so re-importing a
written file reproduces the run values bit-exactly.
"""

from __future__ import annotations

import csv
import io

from .ast import StockflowError
from .engine import RunResult, SimSpec


class CsvFormatError(StockflowError):
    pass


def _fmt(value: float) -> str:
    return repr(value)


def write_csv(r: RunResult, selected_vars: list[str] | None = None) -> str:
    """Render a run as CSV: Time first, then variables in model order.

    A selection restricts the columns but keeps model order regardless of
    the order requested.
    """
    if selected_vars is None:
        indices = list(range(len(r.var_keys)))
    else:
        chosen = {r.index_of(name) for name in selected_vars}
        indices = sorted(chosen)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["Time", *(r.var_names[i] for i in indices)])
    for t, row in zip(r.times, r.rows):
        writer.writerow([_fmt(t), *(_fmt(row[i]) for i in indices)])
    return out.getvalue()


def read_csv(text: str, model_id: str = "") -> RunResult:
    """Rebuild a RunResult's values from CSV text.

    Only the table survives a round trip; metadata (overrides, seed, spec)
    is reconstructed with placeholder values.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError("empty CSV") from None
    if not header or header[0] != "Time":
        raise CsvFormatError("first CSV column must be 'Time'")
    var_names = tuple(header[1:])
    var_keys = tuple(" ".join(n.lower().split()) for n in var_names)
    times: list[float] = []
    rows: list[list[float]] = []
    for line_no, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(header):
            raise CsvFormatError(
                f"line {line_no}: expected {len(header)} fields, got {len(record)}"
            )
        try:
            values = [float(f) for f in record]
        except ValueError as exc:
            raise CsvFormatError(f"line {line_no}: {exc}") from None
        times.append(values[0])
        rows.append(values[1:])
    if len(times) >= 2:
        saveper = times[1] - times[0]
        spec = SimSpec(times[0], times[-1], saveper, saveper)
    else:
        t0 = times[0] if times else 0.0
        spec = SimSpec(t0, t0 + 1.0, 1.0, 1.0)
    return RunResult(
        model_id=model_id,
        var_names=var_names,
        var_keys=var_keys,
        times=times,
        rows=rows,
        overrides={},
        seed=0,
        spec=spec,
    )
