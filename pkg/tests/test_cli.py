import json
import subprocess
import sys

import pytest

from renorm_embed.cli import main, parse_sequence
from renorm_embed.errors import ParseError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_embed_files(tmp_path, capsys):
    (tmp_path / "x.txt").write_text("0 1\n")
    (tmp_path / "y.txt").write_text("001\n")
    code, out, _ = run(capsys, "embed", "--x", str(tmp_path / "x.txt"), "--y", str(tmp_path / "y.txt"),
                       "--M", "2", "--first-max", "2")
    assert code == 0 and out.strip() == "phi=[1,3]"
    code, out, _ = run(capsys, "embed", "--x", "1", "--y", "00", "--M", "2", "--format", "json")
    assert code == 1 and json.loads(out) == {"embeds": False}


def test_compatible_exit_codes(capsys):
    code, out, _ = run(capsys, "compatible", "--x", "1", "--y", "1")
    assert code == 1 and out.strip() == "incompatible"
    code, out, _ = run(capsys, "compatible", "--x", "0 1", "--y", "1 0", "--format", "json")
    assert code == 0 and json.loads(out)["compatible"] is True


def test_parse_errors(tmp_path, capsys):
    code, _, err = run(capsys, "compatible", "--x", "0 2", "--y", "1")
    assert code == 2 and "<inline>:1:3" in err
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n1 x\n")
    code, _, err = run(capsys, "compatible", "--x", f"@{bad}", "--y", "1")
    assert code == 2 and f"{bad}:2:3" in err
    with pytest.raises(ParseError) as info:
        parse_sequence("3 -1", bits=False)
    assert (info.value.line, info.value.column) == (1, 3)
    assert parse_sequence("0110 1\n0", bits=True) == [0, 1, 1, 0, 1, 0]


def test_rembed(capsys):
    code, out, _ = run(capsys, "rembed", "--x", "0 0", "--y", "0 0 0", "--R", "1")
    assert code == 0 and out.strip()
    code, _, _ = run(capsys, "rembed", "--x", "1", "--y", "1", "--R", "1")
    assert code == 1


def test_roughiso(capsys):
    code, out, _ = run(capsys, "roughiso", "--a", "0 1 3", "--b", "0 1 3", "--format", "json")
    obj = json.loads(out)
    assert code == 0 and obj["found"] and len(obj["assignment"]) == 3


def test_classify_and_catalog(tmp_path, capsys):
    assert run(capsys, "classify", "--block", "0")[0] == 0
    code, out, _ = run(capsys, "classify", "--block", "1", "--format", "json")
    assert code == 1 and json.loads(out)["status"] == "semibad"
    store = tmp_path / "store"
    code, out, _ = run(capsys, "catalog", "--level", "0", "--store", str(store), "--format", "json")
    assert code == 0 and json.loads(out)["good_x"][0]["block"]["chars"] == "00"
    index = (store / "index.txt").read_text()
    assert "catalog level=0" in index
    code, out2, _ = run(capsys, "catalog", "--level", "0", "--store", str(store), "--format", "json")
    assert out2 == out


def test_construct(capsys):
    code, out, _ = run(capsys, "construct", "--J", "1")
    assert code == 0 and out.split() == ["0"] * 18


def test_sample_needs_seed_and_is_reproducible(capsys):
    with pytest.raises(SystemExit) as info:
        main(["sample", "--count", "2"])
    assert info.value.code == 2
    capsys.readouterr()
    a = run(capsys, "sample", "--count", "3", "--seed", "5", "--q", "1/50")[1]
    b = run(capsys, "sample", "--count", "3", "--seed", "5", "--q", "1/50")[1]
    assert a == b and len(a.strip().splitlines()) == 3


def test_validate_params(capsys):
    code, out, _ = run(capsys, "validate-params", "--profile", "micro")
    assert code == 1 and "not conforming" in out
    code, out, _ = run(capsys, "validate-params", "--profile", "reference", "--format", "json")
    assert code == 0 and json.loads(out)["conforming"] is True


def test_experiment_csv_twice(tmp_path, capsys):
    paths = []
    for k in range(2):
        out = tmp_path / f"curve{k}.csv"
        code, _, _ = run(capsys, "experiment", "minimal-M", "--n", "10,20,40", "--M", "1,2,3", "--trials", "300",
                         "--seed", "7", "--out", str(out))
        assert code == 0
        paths.append(out)
    text = paths[0].read_text()
    assert text == paths[1].read_text()
    assert len(text.strip().splitlines()) == 10
    desc = json.loads((tmp_path / "curve0.csv.json").read_text())
    assert desc["seed"] == 7 and desc["name"] == "minimal-M"


def test_unknown_profile_is_an_error(capsys):
    code, _, err = run(capsys, "catalog", "--profile", "nope")
    assert code == 2 and "unknown profile" in err


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "renorm_embed.cli", "compatible", "--x", "1", "--y", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 1 and res.stdout.strip() == "incompatible"
