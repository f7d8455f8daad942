# formats.py
"""Readers and writers for the shared file formats.

* alignment / transcript files: JSON lines, one utterance per line, phonemes
  stored as symbols (never raw ids)
* matrix files: ``FMAT`` binary (magic, u32 version, u32 rows, u32 cols,
  float32 little-endian row-major), CSV accepted on read
"""

from __future__ import annotations

import csv
import io
import json
import logging
import struct
from pathlib import Path

import numpy as np

from core import (
    DEFAULT_FRAME_SHIFT_MS,
    AlignedUtterance,
    FormatError,
    PhonemeInventory,
    ValidationError,
    validate_utterance,
)

logger = logging.getLogger(__name__)

FMAT_MAGIC = b"FMAT"
FMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")


# ---------------- JSON lines ----------------
def _decode(blob: bytes, path, message="not valid UTF-8") -> str:
    try:
        return blob.decode("utf-8")
    except UnicodeDecodeError as e:
        line_no = blob.count(b"\n", 0, e.start) + 1
        raise FormatError(message, path=path, line=line_no, offset=e.start) from None


def _read_text(path) -> str:
    with open(path, "rb") as fh:
        return _decode(fh.read(), path)


def _iter_json_lines(path):
    for line_no, line in enumerate(_read_text(path).split("\n"), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"invalid JSON ({e.msg})", path=path, line=line_no) from None
        if not isinstance(obj, dict):
            raise FormatError("expected a JSON object", path=path, line=line_no)
        yield line_no, obj


def _utterance_from_obj(obj, inv, path, line_no, need_durations):
    try:
        utt_id = str(obj["id"])
        symbols = obj["phonemes"]
    except KeyError as e:
        raise FormatError(f"missing field {e.args[0]!r}", path=path, line=line_no) from None
    if not isinstance(symbols, list):
        raise FormatError("'phonemes' must be a list", path=path, line=line_no)
    durations = obj.get("durations")
    if durations is None:
        if need_durations:
            raise FormatError("missing field 'durations'", path=path, line=line_no)
        durations = [0] * len(symbols)
    if not isinstance(durations, list) or not all(isinstance(d, int) and not isinstance(d, bool) for d in durations):
        raise FormatError("'durations' must be a list of integers", path=path, line=line_no)
    shift = obj.get("frame_shift_ms", DEFAULT_FRAME_SHIFT_MS)
    if isinstance(shift, bool) or not isinstance(shift, (int, float)):
        raise FormatError(f"'frame_shift_ms' must be a number, got {shift!r}", path=path, line=line_no)
    try:
        u = AlignedUtterance(utt_id, inv.encode(symbols), tuple(durations), float(shift))
        return validate_utterance(u, inv)
    except ValidationError as e:
        raise FormatError(str(e), path=path, line=line_no) from None


def read_alignments(path, inv: PhonemeInventory) -> list:
    return [_utterance_from_obj(obj, inv, path, n, True) for n, obj in _iter_json_lines(path)]


def read_transcripts(path, inv: PhonemeInventory) -> list:
    """Alignment-format lines whose ``durations`` may be absent (filled with 0)."""
    return [_utterance_from_obj(obj, inv, path, n, False) for n, obj in _iter_json_lines(path)]


def read_json_lines(path, parse) -> list:
    """Parse every non-blank line with ``parse(obj, path, line_no)``."""
    return [parse(obj, path, n) for n, obj in _iter_json_lines(path)]


def read_json(path):
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON ({e.msg})", path=path, line=e.lineno) from None


def utterance_to_obj(u: AlignedUtterance, inv: PhonemeInventory) -> dict:
    return {
        "id": u.utterance_id,
        "phonemes": inv.decode(u.phonemes),
        "durations": list(u.durations),
        "frame_shift_ms": u.frame_shift_ms,
    }


def dump_json_lines(objs) -> str:
    return "".join(json.dumps(o, ensure_ascii=False) + "\n" for o in objs)


def write_alignments(path, corpus, inv: PhonemeInventory):
    write_text(path, dump_json_lines(utterance_to_obj(u, inv) for u in corpus))


def write_text(path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------- Matrices ----------------
def encode_matrix(data) -> bytes:
    data = np.asarray(data, dtype="<f4")
    if data.ndim != 2:
        raise ValidationError(f"matrix must be 2-D, got shape {data.shape}")
    rows, cols = data.shape
    return _HEADER.pack(FMAT_MAGIC, FMAT_VERSION, rows, cols) + np.ascontiguousarray(data).tobytes()


def decode_matrix(blob: bytes, path=None) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise FormatError(f"truncated header ({len(blob)} bytes)", path=path, offset=len(blob))
    magic, version, rows, cols = _HEADER.unpack_from(blob)
    if magic != FMAT_MAGIC:
        raise FormatError(f"bad magic {magic!r}", path=path, offset=0)
    if version != FMAT_VERSION:
        raise FormatError(f"unsupported FMAT version {version}", path=path, offset=4)
    expected = _HEADER.size + 4 * rows * cols
    if len(blob) != expected:
        raise FormatError(
            f"payload holds {len(blob) - _HEADER.size} bytes, header promises {4 * rows * cols}",
            path=path,
            offset=min(len(blob), expected),
        )
    return np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(rows, cols).astype(np.float64)


def read_matrix(path) -> np.ndarray:
    """Read an FMAT file; anything without the magic is parsed as CSV."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] == FMAT_MAGIC:
        return decode_matrix(blob, path=path)
    return _read_csv_matrix(blob, path)


def _read_csv_matrix(blob: bytes, path) -> np.ndarray:
    text = _decode(blob, path, "neither FMAT nor UTF-8 CSV")
    rows = []
    for line_no, row in enumerate(csv.reader(io.StringIO(text, newline="")), 1):
        if not row or row[0].startswith("#"):
            continue
        try:
            rows.append([float(x) for x in row])
        except ValueError:
            raise FormatError("non-numeric CSV cell", path=path, line=line_no) from None
        if len(rows[-1]) != len(rows[0]):
            raise FormatError(f"expected {len(rows[0])} columns, got {len(rows[-1])}", path=path, line=line_no)
    if not rows:
        raise FormatError("empty matrix", path=path, line=1)
    return np.array(rows, dtype=np.float64)


def write_matrix(path, data):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(encode_matrix(data))


def matrix_paths(directory, suffix=".fmat") -> dict:
    """utterance id -> matrix file for every ``<id><suffix>`` (or .csv) in a directory."""
    found = {}
    for p in sorted(Path(directory).iterdir()):
        if p.suffix in (suffix, ".csv"):
            found.setdefault(p.stem, p)
    if not found:
        logger.warning("⚠️ no matrix files under %s", directory)
    return found
