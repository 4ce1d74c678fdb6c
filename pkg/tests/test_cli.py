import json
import os

from chaocodec import EncryptionKey, KeyLedger, derive_pool, sample_user_key
from chaocodec.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_encode_decode_roundtrip(tmp_path, capsys):
    src = tmp_path / "msg.bin"
    src.write_bytes(os.urandom(64))
    enc = tmp_path / "msg.cac"
    out = tmp_path / "msg.out"

    code, stdout, _ = run(capsys, "encode", str(src), str(enc),
                          "--p", "0.3", "--key", "13627145")
    assert code == 0
    assert "payload bits" in stdout or "encoded" in stdout

    code, _, _ = run(capsys, "decode", str(enc), str(out),
                     "--key", "13627145")
    assert code == 0
    assert out.read_bytes() == src.read_bytes()


def test_encode_decode_exact_coder_and_pool_key(tmp_path, capsys):
    src = tmp_path / "m.bin"
    src.write_bytes(b"\x25")  # 00100101
    enc = tmp_path / "m.cac"
    out = tmp_path / "m.out"
    code, _, _ = run(capsys, "encode", str(src), str(enc),
                     "--p", "1/2", "--key", "136", "--exact")
    assert code == 0
    # a twin-equivalent key decodes the same stream
    pool = derive_pool(EncryptionKey.from_string("136"), "001")
    other = sorted(str(k) for k in pool.enumerate())[0]
    code, _, _ = run(capsys, "decode", str(enc), str(out),
                     "--key", other, "--exact")
    assert code == 0
    assert out.read_bytes() == src.read_bytes()


def test_empty_file_gives_header_only_stream(tmp_path, capsys):
    src = tmp_path / "empty.bin"
    src.write_bytes(b"")
    enc = tmp_path / "empty.cac"
    out = tmp_path / "empty.out"
    code, stdout, _ = run(capsys, "encode", str(src), str(enc),
                          "--p", "0.5", "--key", "", "--json")
    assert code == 0
    assert json.loads(stdout)["payload_bits"] == 0
    assert enc.stat().st_size == 27  # header only
    code, _, _ = run(capsys, "decode", str(enc), str(out), "--key", "")
    assert code == 0
    assert out.read_bytes() == b""


def test_p_num_flag(tmp_path, capsys):
    src = tmp_path / "pn.bin"
    src.write_bytes(b"\xa5\x5a")
    enc = tmp_path / "pn.cac"
    out = tmp_path / "pn.out"
    code, stdout, _ = run(capsys, "encode", str(src), str(enc),
                          "--p-num", "19661", "--key", "52", "--json")
    assert code == 0
    assert json.loads(stdout)["p_num"] == 19661
    code, _, _ = run(capsys, "decode", str(enc), str(out), "--key", "52")
    assert code == 0
    assert out.read_bytes() == src.read_bytes()


def test_p_auto(tmp_path, capsys):
    src = tmp_path / "zeros.bin"
    src.write_bytes(bytes(32))
    enc = tmp_path / "zeros.cac"
    code, stdout, _ = run(capsys, "encode", str(src), str(enc),
                          "--p", "auto", "--key", "11", "--json")
    assert code == 0
    payload = json.loads(stdout)
    assert payload["p_num"] == 65535  # all-zero input clamps to the top
    assert payload["payload_bits"] <= 24


def test_keygen_and_keyfile(tmp_path, capsys):
    keyfile = tmp_path / "k.key"
    code, stdout, _ = run(capsys, "keygen", "--seed", "golden-seed",
                          "--m", "3", "--out", str(keyfile), "--json")
    assert code == 0
    assert json.loads(stdout)["key"] == "718"
    assert keyfile.read_text().startswith("CACKEY v1 M=3")

    enc = tmp_path / "f.cac"
    out = tmp_path / "f.out"
    src = tmp_path / "f.bin"
    src.write_bytes(os.urandom(16))
    code, _, _ = run(capsys, "encode", str(src), str(enc),
                     "--p", "0.5", "--key-file", str(keyfile))
    assert code == 0
    code, _, _ = run(capsys, "decode", str(enc), str(out),
                     "--key-file", str(keyfile))
    assert code == 0
    assert out.read_bytes() == src.read_bytes()


def test_pool_enumeration_matches_worked_example(capsys):
    code, stdout, _ = run(capsys, "pool", "--key", "136", "--bits", "001",
                          "--enumerate", "--json")
    assert code == 0
    payload = json.loads(stdout)
    assert payload["members"] == sorted(
        ["245", "246", "235", "236", "135", "136", "145", "146"])
    assert payload["valid"] == "8"
    assert payload["total"] == "512"


def test_pool_math_only(capsys):
    code, stdout, _ = run(capsys, "pool", "--seed", "s", "--m", "128", "--json")
    assert code == 0
    payload = json.loads(stdout)
    assert payload["valid"] == str(1 << 128)
    assert payload["total"] == str(1 << 384)


def test_pool_enumerate_cap(capsys):
    code, _, err = run(capsys, "pool", "--seed", "s", "--m", "20",
                       "--bits", "0" * 20, "--enumerate")
    assert code == 2
    assert "enumerate" in err


def test_sim_json(capsys):
    code, stdout, _ = run(capsys, "sim", "--users", "4", "--n", "256", "--m", "8",
                          "--p", "0.8", "--seed", "3", "--json")
    assert code == 0
    payload = json.loads(stdout)
    assert payload["all_decoded"] is True
    assert payload["decode_ok"] == 4
    assert payload["key_bits_per_user"] == 24


def test_trace_subcommand(tmp_path, capsys):
    key = EncryptionKey.from_string("136")
    pool = derive_pool(key, "001")
    ledger = KeyLedger(session="s", pool=pool)
    issued = sample_user_key(pool, "alice", ledger, seed=b"s")
    path = tmp_path / "ledger.jsonl"
    ledger.save(path)

    code, stdout, _ = run(capsys, "trace", "--ledger", str(path),
                          "--key", str(issued), "--json")
    assert code == 0
    assert json.loads(stdout) == {"status": "user", "user": "alice"}

    code, stdout, _ = run(capsys, "trace", "--ledger", str(path),
                          "--key", "333", "--json")
    assert json.loads(stdout)["status"] == "unknown"


# --- exit codes -------------------------------------------------------------------

def test_exit_code_key_error(tmp_path, capsys):
    src = tmp_path / "x.bin"
    src.write_bytes(b"\xff")
    code, _, err = run(capsys, "encode", str(src), str(tmp_path / "x.cac"),
                       "--p", "0.5")
    assert code == 3
    assert "key" in err.lower()


def test_exit_code_format_error(tmp_path, capsys):
    bad = tmp_path / "bad.cac"
    bad.write_bytes(b"NOPE" + bytes(30))
    code, _, _ = run(capsys, "decode", str(bad), str(tmp_path / "y.bin"),
                     "--key", "1")
    assert code == 2


def test_exit_code_capacity_error(capsys):
    code, _, _ = run(capsys, "sim", "--users", "9", "--n", "16", "--m", "3",
                     "--p", "0.5")
    assert code == 4


def test_exit_code_model_error(tmp_path, capsys):
    src = tmp_path / "m.bin"
    src.write_bytes(b"\x00")
    code, _, _ = run(capsys, "encode", str(src), str(tmp_path / "m.cac"),
                     "--p", "1.5", "--key", "1")
    assert code == 2


def test_missing_file_reports_format_error(tmp_path, capsys):
    code, _, _ = run(capsys, "decode", str(tmp_path / "absent.cac"),
                     str(tmp_path / "o.bin"), "--key", "1")
    assert code == 2
