import os

import numpy as np
import pytest

from wavedepth import io
from wavedepth.errors import ParseError


def test_pfm_round_trip_bitwise(tmp_path, rng):
    d = rng.uniform(0, 100, size=(7, 5)).astype(np.float32)
    io.write_pfm(tmp_path / "d.pfm", d)
    raw = (tmp_path / "d.pfm").read_bytes()
    assert raw.startswith(b"Pf\n5 7\n-1.0\n")
    np.testing.assert_array_equal(io.read_pfm(tmp_path / "d.pfm"), d)


def test_pfm_rows_are_stored_bottom_up(tmp_path):
    d = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
    io.write_pfm(tmp_path / "d.pfm", d)
    body = (tmp_path / "d.pfm").read_bytes()[len(b"Pf\n2 2\n-1.0\n") :]
    np.testing.assert_array_equal(np.frombuffer(body, "<f4"), [3.0, 4.0, 1.0, 2.0])


def test_pfm_big_endian_is_read(tmp_path):
    d = np.array([[1.5, -2.0]], dtype=">f4")
    (tmp_path / "b.pfm").write_bytes(b"Pf\n2 1\n1.0\n" + d.tobytes())
    np.testing.assert_array_equal(io.read_pfm(tmp_path / "b.pfm"), [[1.5, -2.0]])


@pytest.mark.parametrize(
    "payload, offset",
    [(b"PF\n2 2\n-1.0\n", 0), (b"Pf\n2 x\n-1.0\n", 3), (b"Pf\n2 2\n-1.0\n" + b"\0" * 7, 19), (b"Pf\n2", 4)],
)
def test_pfm_parse_errors_carry_offsets(tmp_path, payload, offset):
    (tmp_path / "bad.pfm").write_bytes(payload)
    with pytest.raises(ParseError) as exc:
        io.read_pfm(tmp_path / "bad.pfm")
    assert exc.value.offset == offset
    assert f"byte {offset}" in str(exc.value)


def test_ppm_round_trip_bitwise(tmp_path, rng):
    u8 = rng.integers(0, 256, size=(3, 6, 9), dtype=np.uint8)
    io.write_ppm(tmp_path / "i.ppm", u8)
    assert (tmp_path / "i.ppm").read_bytes().startswith(b"P6\n9 6\n255\n")
    np.testing.assert_array_equal(io.read_ppm(tmp_path / "i.ppm", raw_uint8=True), u8)
    np.testing.assert_array_equal(io.read_ppm(tmp_path / "i.ppm"), u8 / 255.0)


def test_ppm_header_comments_and_pgm(tmp_path):
    (tmp_path / "g.pgm").write_bytes(b"P5\n# a comment\n2 1\n255\n" + bytes([0, 255]))
    np.testing.assert_array_equal(io.read_gray(tmp_path / "g.pgm"), [[0.0, 1.0]])


def test_ppm_truncated(tmp_path):
    (tmp_path / "t.ppm").write_bytes(b"P6\n4 4\n255\n" + bytes(10))
    with pytest.raises(ParseError, match="truncated"):
        io.read_ppm(tmp_path / "t.ppm")
    (tmp_path / "m.ppm").write_bytes(b"P6\n4 4\n65535\n" + bytes(96))
    with pytest.raises(ParseError, match="maxval"):
        io.read_ppm(tmp_path / "m.ppm")


def test_json_round_trip_and_parse_error(tmp_path):
    obj = {"b": [1, 2.5, None], "a": {"x": "y"}}
    io.write_json(tmp_path / "o.json", obj)
    assert io.read_json(tmp_path / "o.json") == obj
    (tmp_path / "bad.json").write_text('{"a": 1,,}')
    with pytest.raises(ParseError, match="byte 8"):
        io.read_json(tmp_path / "bad.json")


def test_csv_quoting_and_float_repr(tmp_path):
    rows = [["a,b", 0.1 + 0.2, 3], ['q"t', float("nan"), -1]]
    io.write_csv(tmp_path / "x.csv", ["name", "v", "n"], rows)
    text = (tmp_path / "x.csv").read_bytes()
    assert b'"a,b",0.30000000000000004,3\r\n' in text and b'"q""t"' in text
    back = io.read_csv(tmp_path / "x.csv")
    assert back[1][0] == "a,b" and float(back[1][1]) == 0.1 + 0.2


def test_atomic_write_leaves_no_temp_files(tmp_path):
    io.atomic_write(tmp_path / "f.bin", b"abc")
    io.atomic_write(tmp_path / "f.bin", b"defg")
    assert os.listdir(tmp_path) == ["f.bin"]
    assert (tmp_path / "f.bin").read_bytes() == b"defg"


def test_checkpoint_round_trip_bitwise(tmp_path, rng):
    recs = {"w": rng.normal(size=(2, 3, 4, 5)), "b": rng.normal(size=(1,)), "s": np.array(3.0)}
    cfg = {"encoder": {"L": 4}, "note": "x"}
    io.write_checkpoint(tmp_path / "c.spdk", cfg, recs)
    raw = (tmp_path / "c.spdk").read_bytes()
    assert raw[:4] == b"SPDK" and raw[4:8] == (1).to_bytes(4, "little")
    cfg2, recs2 = io.read_checkpoint(tmp_path / "c.spdk")
    assert cfg2 == cfg and list(recs2) == list(recs)
    for k in recs:
        assert recs2[k].tobytes() == np.asarray(recs[k], dtype="<f8").tobytes()


def test_checkpoint_corruption(tmp_path, rng):
    io.write_checkpoint(tmp_path / "c.spdk", {}, {"w": rng.normal(size=(3,))})
    raw = (tmp_path / "c.spdk").read_bytes()
    (tmp_path / "bad.spdk").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ParseError, match="magic"):
        io.read_checkpoint(tmp_path / "bad.spdk")
    (tmp_path / "short.spdk").write_bytes(raw[:-5])
    with pytest.raises(ParseError, match="truncated"):
        io.read_checkpoint(tmp_path / "short.spdk")
    (tmp_path / "long.spdk").write_bytes(raw + b"\0")
    with pytest.raises(ParseError, match="trailing"):
        io.read_checkpoint(tmp_path / "long.spdk")
