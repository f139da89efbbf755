from __future__ import annotations

import csv
import hashlib
import io
import logging
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np
import orjson

from hetcorr.core.errors import ArgumentError, OutputError
from hetcorr.schemas.photon import PhotonCountStream
from hetcorr.schemas.receiver import WaveformSegment
from hetcorr.schemas.scenario import ManifestFile, RunManifest
from hetcorr.schemas.spectra import SpectrumAccumulator

logger = logging.getLogger(__name__)

TABLE_VERSION = "v1"
_ORJSON_OPTS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


def ensure_run_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {path}: {exc}") from exc
    return path


def _write_bytes(path: Path, data: bytes) -> Path:
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc


def _header(lines: list[str]) -> dict[str, str]:
    fields: dict[str, str] = {}
    for line in lines:
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].strip().partition("=")
        if sep:
            fields[key.strip()] = value.strip()
    return fields


def write_counts(path: Path, stream: PhotonCountStream) -> Path:
    buf = io.StringIO()
    buf.write(f"# bin_duration_s={stream.bin_duration!r}\n")
    buf.write(f"# label={stream.label}\n")
    buf.write(f"# non_negative={int(stream.non_negative)}\n")
    for value in stream.counts:
        buf.write(f"{int(value)}\n")
    return _write_bytes(path, buf.getvalue().encode("utf-8"))


def read_counts(path: Path) -> PhotonCountStream:
    lines = _read_text(path).splitlines()
    head = _header(lines)
    try:
        bin_duration = float(head["bin_duration_s"])
    except (KeyError, ValueError) as exc:
        raise ArgumentError(f"{path}: missing or malformed bin_duration_s header") from exc
    counts = np.array([int(line) for line in lines if line and not line.startswith("#")])
    return PhotonCountStream(
        counts=counts.astype(np.int64),
        bin_duration=bin_duration,
        label=head.get("label", ""),
        non_negative=head.get("non_negative", "1") == "1",
    )


def write_waveform(path: Path, seg: WaveformSegment) -> tuple[Path, Path]:
    raw = seg.samples.astype("<f4").tobytes()
    _write_bytes(path, raw)
    sidecar = path.with_suffix(path.suffix + ".hdr")
    text = f"sample_rate_hz={seg.sample_rate!r}\nlength={len(seg)}\nlabel={seg.label}\n"
    _write_bytes(sidecar, text.encode("utf-8"))
    return path, sidecar


def read_waveform(path: Path) -> WaveformSegment:
    sidecar = path.with_suffix(path.suffix + ".hdr")
    head = _header(["#" + line for line in _read_text(sidecar).splitlines()])
    samples = np.frombuffer(path.read_bytes(), dtype="<f4").astype(np.float64)
    if samples.size != int(head.get("length", -1)):
        raise ArgumentError(f"{path}: sample count does not match sidecar length")
    return WaveformSegment(samples, float(head["sample_rate_hz"]), head.get("label", ""))


def write_accumulator(path: Path, acc: SpectrumAccumulator, channel_width_hz: float) -> Path:
    buf = io.StringIO()
    buf.write(f"# n_channels={acc.n_channels}\n")
    buf.write(f"# chunk_count={acc.chunk_count}\n")
    buf.write(f"# channel_width_hz={channel_width_hz!r}\n")
    buf.write("# columns=auto_a,auto_b,cross_re,cross_im\n")
    for a, b, c in zip(acc.auto_a, acc.auto_b, acc.cross, strict=True):
        buf.write(f"{float(a)!r},{float(b)!r},{float(c.real)!r},{float(c.imag)!r}\n")
    return _write_bytes(path, buf.getvalue().encode("utf-8"))


def read_accumulator(path: Path) -> tuple[SpectrumAccumulator, float]:
    lines = _read_text(path).splitlines()
    head = _header(lines)
    rows = np.array(
        [[float(x) for x in line.split(",")] for line in lines if line and not line.startswith("#")]
    ).reshape(-1, 4)
    if rows.shape[0] != int(head["n_channels"]):
        raise ArgumentError(f"{path}: row count does not match n_channels")
    acc = SpectrumAccumulator(
        auto_a=rows[:, 0].copy(),
        auto_b=rows[:, 1].copy(),
        cross=rows[:, 2] + 1j * rows[:, 3],
        chunk_count=int(head["chunk_count"]),
    )
    return acc, float(head["channel_width_hz"])


def _cell(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_table(
    path: Path, name: str, columns: Sequence[str], rows: Iterable[Mapping[str, object]]
) -> Path:
    buf = io.StringIO()
    buf.write(f"# hetcorr-table {TABLE_VERSION} {name}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return _write_bytes(path, buf.getvalue().encode("utf-8"))


def read_table(path: Path) -> tuple[str, list[dict[str, str]]]:
    lines = _read_text(path).splitlines()
    if not lines or not lines[0].startswith("# hetcorr-table "):
        raise ArgumentError(f"{path}: missing hetcorr-table header")
    _, _, version, name = lines[0].split(" ", 3)
    if version != TABLE_VERSION:
        raise ArgumentError(f"{path}: unsupported table version {version}")
    reader = csv.DictReader(lines[1:])
    return name, list(reader)


def read_series(path: Path) -> np.ndarray:
    """One number per line, or the first column of a hetcorr table / CSV; '#' lines skipped."""
    values: list[float] = []
    seen_row = False
    for number, line in enumerate(_read_text(path).splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        first = line.split(",")[0]
        try:
            values.append(float(first))
        except ValueError as exc:
            # Only the first row may be a column header.
            if seen_row:
                raise ArgumentError(f"{path}:{number}: not a number: {first!r}") from exc
        seen_row = True
    return np.asarray(values)


def dump_json(obj: object) -> bytes:
    if hasattr(obj, "model_dump"):
        obj = obj.model_dump(mode="json")
    return orjson.dumps(obj, option=_ORJSON_OPTS)


def write_json(path: Path, obj: object) -> Path:
    return _write_bytes(path, dump_json(obj))


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def describe_files(run_dir: Path, paths: Iterable[Path]) -> list[ManifestFile]:
    return [
        ManifestFile(
            path=str(p.relative_to(run_dir)), sha256=sha256_file(p), bytes=p.stat().st_size
        )
        for p in paths
    ]


def write_manifest(run_dir: Path, manifest: RunManifest) -> Path:
    return write_json(run_dir / "manifest.json", manifest)


def verify_manifest(run_dir: Path, manifest: RunManifest) -> list[str]:
    bad: list[str] = []
    for entry in manifest.files:
        path = run_dir / entry.path
        if not path.exists() or sha256_file(path) != entry.sha256:
            bad.append(entry.path)
    return bad
