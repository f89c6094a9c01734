"""Reading and writing recordings and stage logs.

The native format is a bare binary payload (little-endian float32,
channel-major) next to a JSON sidecar that carries shape, rate, unit and
event metadata. CSV import accepts the common samples-as-rows layout and
transposes it. Stage logs are JSON lines, one report per line.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .errors import FormatError
from .model import Event, Recording, StageReport

FORMAT_VERSION = 1
CANONICAL_UNIT = "uV"


def write_recording(recording: Recording, data_path: str | Path, sidecar_path: str | Path) -> None:
    """Write the payload and its JSON sidecar.

    The payload is the signal matrix cast to little-endian float32 and
    flattened channel-major, so a write/read cycle is lossless for any
    data that is exactly representable in float32 (in particular for
    anything previously read back from this format).
    """
    data_path = Path(data_path)
    sidecar_path = Path(sidecar_path)
    payload = np.ascontiguousarray(recording.data, dtype="<f4")
    data_path.write_bytes(payload.tobytes())
    sidecar = {
        "format_version": FORMAT_VERSION,
        "unit": CANONICAL_UNIT,
        "n_channels": recording.n_channels,
        "n_samples": recording.n_samples,
        "sampling_rate_hz": float(recording.sampling_rate_hz),
        "line_freq_hz": None if recording.line_freq_hz is None else float(recording.line_freq_hz),
        "channel_mask": [bool(b) for b in recording.channel_mask],
        "events": [{"sample_index": int(e.sample_index), "label": e.label} for e in recording.events],
    }
    sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")


def read_recording(data_path: str | Path, sidecar_path: str | Path) -> Recording:
    """Read a payload/sidecar pair back into a Recording."""
    data_path = Path(data_path)
    sidecar_path = Path(sidecar_path)
    try:
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse sidecar {sidecar_path}: {exc}") from exc
    if not isinstance(sidecar, dict):
        raise FormatError("sidecar must be a JSON object")
    version = sidecar.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {version!r}, expected {FORMAT_VERSION}")
    unit = sidecar.get("unit")
    if unit != CANONICAL_UNIT:
        raise FormatError(f"unit must be {CANONICAL_UNIT!r}, got {unit!r}")
    try:
        n_channels = int(sidecar["n_channels"])
        n_samples = int(sidecar["n_samples"])
        fs = float(sidecar["sampling_rate_hz"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"sidecar missing or malformed shape/rate fields: {exc}") from exc
    raw = data_path.read_bytes()
    expected = n_channels * n_samples * 4
    if len(raw) != expected:
        raise FormatError(
            f"payload is {len(raw)} bytes but sidecar implies {expected} "
            f"({n_channels} channels x {n_samples} samples x 4)"
        )
    data = np.frombuffer(raw, dtype="<f4").reshape(n_channels, n_samples).astype(np.float64)
    line = sidecar.get("line_freq_hz")
    mask_field = sidecar.get("channel_mask")
    if mask_field is None:
        mask = None
    else:
        if len(mask_field) != n_channels:
            raise FormatError("channel_mask length does not match n_channels")
        mask = np.asarray(mask_field, dtype=bool)
    events = tuple(
        Event(sample_index=int(e["sample_index"]), label=str(e["label"]))
        for e in sidecar.get("events", [])
    )
    return Recording(
        data=data,
        sampling_rate_hz=fs,
        line_freq_hz=None if line is None else float(line),
        events=events,
        channel_mask=mask,
    )


def read_csv(path: str | Path, sampling_rate_hz: float, line_freq_hz: float | None = None) -> Recording:
    """Import a delimited text file where rows are samples and columns channels.

    A non-numeric first row is treated as a header and skipped. Every data
    row must have the same number of columns.
    """
    path = Path(path)
    rows: list[list[float]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for line_no, cells in enumerate(reader):
            if not cells or all(not c.strip() for c in cells):
                continue
            try:
                values = [float(c) for c in cells]
            except ValueError:
                if not rows and line_no == 0:
                    continue  # header row
                raise FormatError(f"{path}: non-numeric value on line {line_no + 1}")
            if rows and len(values) != len(rows[0]):
                raise FormatError(
                    f"{path}: line {line_no + 1} has {len(values)} columns, expected {len(rows[0])}"
                )
            rows.append(values)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    samples = np.asarray(rows, dtype=np.float64)
    return Recording(data=samples.T.copy(), sampling_rate_hz=sampling_rate_hz, line_freq_hz=line_freq_hz)


def write_stage_log(reports: Iterable[StageReport], path: str | Path) -> None:
    """Write reports as JSON lines, overwriting any existing log."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(report.to_json())
            fh.write("\n")


def append_stage_log(report: StageReport, path: str | Path) -> None:
    """Append one report line to a JSON-lines log."""
    with Path(path).open("a", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")


def read_stage_log(path: str | Path) -> list[dict[str, Any]]:
    """Read a JSON-lines stage log back as plain dictionaries."""
    path = Path(path)
    out: list[dict[str, Any]] = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: line {line_no + 1} is not valid JSON: {exc}") from exc
        if not isinstance(entry, dict):
            raise FormatError(f"{path}: line {line_no + 1} is not a JSON object")
        out.append(entry)
    return out
