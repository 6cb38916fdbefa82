"""Byte-stable CSV/JSON rendering and atomic output files."""

import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from atomdem.entropy import EntropyTrace
from atomdem.model import AtomdemError

logger = logging.getLogger("atomdem.output")

TRACE_COLUMNS = ("t_gamma", "S", "pop_1", "pop_2", "pop_3")


class OutputError(AtomdemError):
    """The output file could not be written."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"cannot write {path}: {reason}")


def format_float(value: float) -> str:
    """9 significant digits, no locale, no negative zero."""
    return format(float(value) + 0.0, ".9g")


def round_float(value: float) -> float:
    return float(format_float(value))


def _header_lines(header: Mapping[str, Any]) -> list[str]:
    lines = []
    for key, value in header.items():
        if isinstance(value, float):
            value = format_float(value)
        lines.append(f"# {key}: {value}\n")
    return lines


def _csv(header: Mapping[str, Any], columns: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    buffer = io.StringIO()
    buffer.writelines(_header_lines(header))
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_float(x) for x in row])
    return buffer.getvalue()


def _json(document: Any) -> str:
    return json.dumps(_rounded(document), indent=2, sort_keys=True) + "\n"


def _rounded(value: Any) -> Any:
    if isinstance(value, float):
        return round_float(value)
    if isinstance(value, Mapping):
        return {k: _rounded(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(v) for v in value]
    return value


def trace_header(trace: EntropyTrace, header: Mapping[str, Any]) -> dict:
    peak_t, peak_s = trace.peak()
    return {
        **header,
        "basis": ",".join(trace.basis_labels),
        "peak_t_gamma": peak_t,
        "peak_S": peak_s,
        "final_S": trace.final(),
    }


def render_trace(trace: EntropyTrace, header: Mapping[str, Any], fmt: str = "csv") -> str:
    """Columns t_gamma, S, pop_1..pop_3; pop_i follows the basis label order."""
    meta = trace_header(trace, header)
    rows = zip(trace.times, trace.entropy, *trace.populations.T)
    if fmt == "json":
        return _json(
            {
                "header": meta,
                "columns": list(TRACE_COLUMNS),
                "rows": [[float(x) for x in row] for row in rows],
            }
        )
    return _csv(meta, TRACE_COLUMNS, rows)


def render_sweep(
    param: str,
    values: Sequence[float],
    entropies: Sequence[float],
    header: Mapping[str, Any],
    fmt: str = "csv",
) -> str:
    columns = (param, "S_infinity")
    rows = list(zip(values, entropies))
    if fmt == "json":
        return _json(
            {
                "header": dict(header),
                "columns": list(columns),
                "rows": [[float(v), float(s)] for v, s in rows],
            }
        )
    return _csv(header, columns, rows)


def render_report(results: Sequence[Any], settings: Mapping[str, Any]) -> str:
    """JSON validation report: every check, overall verdict and the worst offender."""
    checks = [
        {
            "variant": r.variant,
            "check": r.check,
            "max_error": r.max_error,
            "threshold": r.threshold,
            "passed": r.passed,
        }
        for r in results
    ]
    worst = max(results, key=lambda r: r.margin, default=None)
    return _json(
        {
            "settings": dict(settings),
            "checks": checks,
            "passed": all(r.passed for r in results),
            "worst": None if worst is None else f"{worst.variant}/{worst.check}",
        }
    )


def write_atomic(path: Path, content: str) -> None:
    """Write to a temp file in the target directory, then replace."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        os.replace(tmp_path, str(path))
    except BaseException:
        # Clean up temp file on failure
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise


def emit(content: str, out: Optional[str] = None) -> None:
    """Send rendered output to ``out`` or to stdout."""
    if out is None or out == "-":
        sys.stdout.write(content)
        sys.stdout.flush()
        return
    try:
        write_atomic(Path(out), content)
    except OSError as exc:
        raise OutputError(out, exc.strerror or str(exc)) from exc
    logger.info("Wrote %s (%d bytes)", out, len(content.encode("utf-8")))
