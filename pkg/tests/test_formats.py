import json

import numpy as np
import pytest

from core import SPACE, AlignedUtterance, FormatError
from formats import (
    FMAT_MAGIC,
    decode_matrix,
    encode_matrix,
    matrix_paths,
    read_alignments,
    read_json,
    read_matrix,
    read_transcripts,
    write_alignments,
    write_matrix,
)


def _write_lines(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")
    return path


def test_alignments_survive_a_write_and_read(tmp_path, inv):
    corpus = [
        AlignedUtterance("a", inv.encode(["HH", "AH", SPACE, "L"]), (2, 5, 0, 3)),
        AlignedUtterance("b", inv.encode(["OW"]), (9,), 10.0),
    ]
    path = tmp_path / "out" / "align.jsonl"
    write_alignments(path, corpus, inv)
    assert read_alignments(path, inv) == corpus
    first = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
    assert first["phonemes"] == ["HH", "AH", SPACE, "L"]


def test_stress_marks_are_folded_on_read(tmp_path, inv):
    path = _write_lines(tmp_path / "a.jsonl", [{"id": "x", "phonemes": ["AH0", "IY1"], "durations": [1, 2]}])
    (u,) = read_alignments(path, inv)
    assert u.phonemes == inv.encode(["AH", "IY"])
    assert u.frame_shift_ms == 12.5


def test_transcripts_may_omit_durations(tmp_path, inv):
    path = _write_lines(tmp_path / "t.jsonl", [{"id": "x", "phonemes": ["AH", "S"]}])
    (u,) = read_transcripts(path, inv)
    assert u.durations == (0, 0)
    with pytest.raises(FormatError, match="durations"):
        read_alignments(path, inv)


@pytest.mark.parametrize(
    "line, message",
    [
        ("{not json", "invalid JSON"),
        ('["a"]', "expected a JSON object"),
        ('{"phonemes": ["AH"], "durations": [1]}', "missing field 'id'"),
        ('{"id": "x", "phonemes": ["QQ"], "durations": [1]}', "unknown phoneme"),
        ('{"id": "x", "phonemes": ["AH"], "durations": [1.5]}', "list of integers"),
        ('{"id": "x", "phonemes": ["AH"], "durations": [1, 2]}', "length mismatch"),
        ('{"id": "x", "phonemes": [5], "durations": [1]}', "must be strings"),
        ('{"id": "x", "phonemes": ["AH"], "durations": [1], "frame_shift_ms": "abc"}', "must be a number"),
        ('{"id": "x", "phonemes": ["AH"], "durations": [1], "frame_shift_ms": 0}', "frame shift must be positive"),
    ],
)
def test_bad_alignment_lines_report_their_line(tmp_path, inv, line, message):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "ok", "phonemes": ["AH"], "durations": [1]}\n\n' + line + "\n", encoding="utf-8")
    with pytest.raises(FormatError, match=message) as info:
        read_alignments(path, inv)
    assert info.value.line == 3


def test_read_json_reports_line(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{\n  "seed": 1,\n  oops\n}\n', encoding="utf-8")
    with pytest.raises(FormatError) as info:
        read_json(path)
    assert info.value.line == 3


def test_fmat_layout():
    blob = encode_matrix([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    assert blob[:4] == FMAT_MAGIC
    assert int.from_bytes(blob[8:12], "little") == 2
    assert int.from_bytes(blob[12:16], "little") == 3
    assert len(blob) == 16 + 4 * 6
    np.testing.assert_array_equal(decode_matrix(blob), [[1, 2, 3], [4, 5, 6]])


def test_fmat_truncated_payload_reports_offset():
    blob = encode_matrix(np.ones((3, 2)))[:-4]
    with pytest.raises(FormatError, match="header promises") as info:
        decode_matrix(blob, path="m.fmat")
    assert info.value.offset == len(blob)


def test_fmat_bad_magic_and_version():
    blob = bytearray(encode_matrix(np.ones((1, 1))))
    with pytest.raises(FormatError, match="bad magic"):
        decode_matrix(b"XXXX" + bytes(blob[4:]))
    blob[4] = 9
    with pytest.raises(FormatError, match="version"):
        decode_matrix(bytes(blob))
    with pytest.raises(FormatError, match="truncated header"):
        decode_matrix(b"FMA")


def test_csv_matrices_are_accepted(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("# header\n1,2\n3,4.5\n", encoding="utf-8")
    np.testing.assert_array_equal(read_matrix(path), [[1, 2], [3, 4.5]])
    path.write_text("1,2\n3\n", encoding="utf-8")
    with pytest.raises(FormatError, match="expected 2 columns") as info:
        read_matrix(path)
    assert info.value.line == 2


def test_matrix_paths_index_by_utterance_id(tmp_path):
    write_matrix(tmp_path / "u1.fmat", np.zeros((2, 2)))
    write_matrix(tmp_path / "u2.fmat", np.zeros((1, 2)))
    (tmp_path / "notes.txt").write_text("x", encoding="utf-8")
    assert sorted(matrix_paths(tmp_path)) == ["u1", "u2"]


def test_undecodable_files_report_their_position(tmp_path, inv):
    path = tmp_path / "states.bin"
    path.write_bytes(b"1,2\n\xff\xfe\x00\x01")
    with pytest.raises(FormatError, match="neither FMAT nor UTF-8") as info:
        read_matrix(path)
    assert (info.value.line, info.value.offset) == (2, 4)

    jsonl = tmp_path / "a.jsonl"
    jsonl.write_bytes(b'{"id": "ok", "phonemes": ["AH"], "durations": [1]}\n\xff\n')
    with pytest.raises(FormatError, match="UTF-8") as info:
        read_alignments(jsonl, inv)
    assert info.value.line == 2
