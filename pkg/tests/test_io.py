import struct

import numpy as np
import pytest

from helpers import rand_state
from stratiflow.harness.config import preset
from stratiflow.harness.io import (
    MAGIC,
    Checkpoint,
    blob_hash,
    checkpoint_bytes,
    csv_line,
    format_value,
    load_checkpoint,
    parse_checkpoint,
    read_csv,
    save_checkpoint,
    sidecar_text,
)


def make_ck():
    s = rand_state(1, 3).with_time(0.25)
    return Checkpoint(preset("audit", m=3), 25, s, {"b": 1.5, "a": float("inf")})


def test_roundtrip_bit_exact(tmp_path):
    ck = make_ck()
    data = save_checkpoint(tmp_path / "x.stra", ck)
    back = load_checkpoint(tmp_path / "x.stra")
    assert back.cfg == ck.cfg and back.step == 25 and back.t == 0.25
    for a, b in zip(back.state.arrays(), ck.state.arrays()):
        assert a.tobytes() == np.ascontiguousarray(b).tobytes()
    assert back.extrema == ck.extrema
    assert checkpoint_bytes(back) == data


def test_layout_header():
    data = checkpoint_bytes(make_ck())
    assert data[:5] == MAGIC
    (hlen,) = struct.unpack("<I", data[5:9])
    t, step = struct.unpack("<dQ", data[9 + hlen:25 + hlen])
    assert (t, step) == (0.25, 25)


@pytest.mark.parametrize("mutate,msg", [
    (lambda d: b"XXXXX" + d[5:], "magic"),
    (lambda d: d[:-3], "truncated"),
    (lambda d: d + b"\0", "trailing"),
])
def test_malformed(mutate, msg):
    with pytest.raises(ValueError, match=msg):
        parse_checkpoint(mutate(checkpoint_bytes(make_ck())))


def test_step_mismatch_detected():
    data = bytearray(checkpoint_bytes(make_ck()))
    (hlen,) = struct.unpack("<I", data[5:9])
    data[17 + hlen:25 + hlen] = struct.pack("<Q", 26)
    with pytest.raises(ValueError, match="step"):
        parse_checkpoint(bytes(data))


def test_format_value():
    assert format_value(3) == "3"
    assert format_value(np.int64(4)) == "4"
    assert format_value(0.1) == "0.1"
    x = 1 / 3
    assert float(format_value(x)) == x
    assert format_value(float("inf")) == "inf"


def test_csv_roundtrip(tmp_path):
    cols = ["step", "t", "v"]
    rows = [{"step": 0, "t": 0.0, "v": 1 / 7}, {"step": 1, "t": 0.1, "v": 2e-300}]
    p = tmp_path / "r.csv"
    p.write_text(",".join(cols) + "\n" + "".join(csv_line(r, cols) for r in rows))
    c, back = read_csv(p)
    assert c == cols and back[0]["v"] == 1 / 7 and back[1]["v"] == 2e-300
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(ValueError):
        read_csv(tmp_path / "e.csv")


def test_blob_hash_matches_git():
    # `printf 'hello\n' | git hash-object --stdin`
    assert blob_hash(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"
    assert blob_hash(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"


def test_sidecar_text_is_deterministic_and_json_safe():
    a = sidecar_text({"b": np.float64(1.0), "a": [np.int64(2), float("nan")], "c": np.bool_(True)})
    assert a == sidecar_text({"c": True, "a": [2, float("nan")], "b": 1.0})
    assert '"nan"' in a and a.index('"a"') < a.index('"b"')
