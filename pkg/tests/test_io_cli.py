import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from critlab.cli import main, thread_count
from critlab.errors import InvalidParameter
from critlab.io import (CSV_HEADERS, COMMANDS, ConfigError, EstimateRecord, ResultEnvelope, experiment_id,
                        parse_config, read_csv, validate_config, write_csv)


def test_parse_valid_examples():
    cfg = parse_config('{"cmd":"perco-cross","n":11,"p":0.5,"replicas":100000,"seed":1}')
    assert cfg.cmd == "perco-cross" and cfg.params == {"n": 11, "p": 0.5}
    assert cfg.replicas == 100000 and cfg.seed == 1
    cfg = parse_config('{"cmd":"sixv-spectrum","n":12,"q":9,"rmax":3}')
    assert cfg.params == {"n": 12, "q": 9, "rmax": 3}


def test_parse_reports_path():
    with pytest.raises(ConfigError) as exc:
        parse_config('{"cmd":"perco-cross","n":11,"p":1.5}')
    assert [p for p, _ in exc.value.violations] == ["p"]


def test_all_violations_listed():
    with pytest.raises(ConfigError) as exc:
        validate_config({"cmd": "sixv-spectrum", "n": 7, "q": -1, "bogus": 1})
    paths = {p for p, _ in exc.value.violations}
    assert paths == {"n", "q", "bogus"}


def test_bad_json_and_unknown_cmd():
    with pytest.raises(ConfigError):
        parse_config("{not json")
    with pytest.raises(ConfigError):
        parse_config('{"cmd":"frobnicate"}')
    with pytest.raises(ConfigError):
        parse_config('{"cmd":"perco-cross","seed":-1}')
    assert isinstance(ConfigError([]), InvalidParameter)


def test_every_command_has_a_schema():
    for cmd in COMMANDS:
        assert validate_config({"cmd": cmd}).cmd == cmd


def test_envelope_roundtrip():
    env = ResultEnvelope("x-1", {"n": 3}, 7, [EstimateRecord("a", 0.5, 0.1, 10)], 1.5)
    back = ResultEnvelope.from_json(env.to_json())
    assert back == env
    assert experiment_id("perco-cross", {"n": 3}, 1) == experiment_id("perco-cross", {"n": 3}, 1)
    assert experiment_id("perco-cross", {"n": 3}, 1) != experiment_id("perco-cross", {"n": 3}, 2)


@given(st.lists(st.tuples(st.floats(0, 1), st.integers(1, 50)), max_size=5))
def test_csv_header_once(rows):
    text = write_csv([{"p": p, "n": n, "estimate": p, "stderr": 0.0, "replicas": 1, "seed": 0} for p, n in rows],
                     "percolation")
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADERS["percolation"])
    assert sum(l == lines[0] for l in lines) == 1
    back = read_csv(text)
    assert [float(r["p"]) for r in back] == [p for p, _ in rows]


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_deterministic(capsys):
    argv = ["perco-cross", "--n", "5", "--p", "0.4,0.6", "--replicas", "2000", "--seed", "3"]
    c1, o1, _ = _run(capsys, argv)
    c2, o2, _ = _run(capsys, argv)
    assert c1 == c2 == 0
    a, b = json.loads(o1), json.loads(o2)
    a.pop("runtime_ms")
    b.pop("runtime_ms")
    assert a == b
    assert len(a["estimates"]) == 2


def test_cli_csv(capsys):
    code, out, _ = _run(capsys, ["perco-cross", "--n", "3", "--p", "0.3,0.5", "--mode", "exact", "--out", "csv"])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "p,n,estimate,stderr,replicas,seed" and len(lines) == 3
    assert float(read_csv(out)[1]["estimate"]) == 0.5


def test_cli_config_file(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text('{"cmd":"blockspin-law","k":2,"a":0.5}')
    code, out, _ = _run(capsys, ["blockspin-law", "--config", str(path), "--k", "3"])
    assert code == 0
    assert json.loads(out)["params"]["k"] == 3  # CLI wins


def test_cli_exit_codes(capsys, monkeypatch):
    assert _run(capsys, ["perco-cross", "--p", "1.5"])[0] == 2
    code, _, err = _run(capsys, ["perco-cross", "--n", "60", "--mode", "exact"])
    assert code == 3 and "dimension=" in err
    code, _, err = _run(capsys, ["sixv-spectrum", "--n", "12", "--q", "9", "--iters", "2"])
    assert code == 4 and "residual" in err
    monkeypatch.setenv("CRITLAB_THREADS", "zero")
    assert _run(capsys, ["blockspin-law"])[0] == 2


def test_thread_count(monkeypatch):
    monkeypatch.setenv("CRITLAB_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.delenv("CRITLAB_THREADS")
    assert thread_count() >= 1


def test_cli_accept_single(capsys):
    code, out, err = _run(capsys, ["accept", "--only", "A16"])
    assert code == 0
    doc = json.loads(out)
    assert doc["extra"]["passed"] == 1 and "A16" in err
