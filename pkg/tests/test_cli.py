import os

from wbansim.cli import main
from wbansim.csv_io import COMPARISON_HEADER, CSV_HEADER, SUMMARY_HEADER


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_validate_defaults_ok(capsys):
    assert main(["validate", "--config", "defaults"]) == 0
    assert "config ok" in capsys.readouterr().out


def test_validate_dump_round_trips(tmp_path, capsys):
    assert main(["validate", "--config", "defaults", "--dump"]) == 0
    dumped = capsys.readouterr().out
    path = tmp_path / "dumped.yaml"
    path.write_text(dumped, encoding="utf-8")
    assert main(["validate", "--config", str(path)]) == 0


def test_run_writes_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code = main(["run", "--protocol", "m-attempt", "--seed", "42",
                 "--rounds", "40", "--out", str(out)])
    assert code == 0
    lines = read(out).decode().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 41
    summary = read(str(out) + ".summary").decode().splitlines()
    assert summary[0] == SUMMARY_HEADER
    assert summary[1].startswith("m-attempt,")


def test_run_respects_config_file(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("rounds: 12\nprotocol: attempt\nseed: 3\n")
    out = tmp_path / "a.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(read(out).decode().splitlines()) == 13


def test_unknown_flag_exits_one(capsys):
    assert main(["run", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_subcommand_exits_one():
    assert main(["explode"]) == 1


def test_bad_config_exits_one(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("p_critical: 2.0\n")
    assert main(["validate", "--config", str(cfg)]) == 1
    assert "config error" in capsys.readouterr().err


def test_unknown_key_exits_one(tmp_path, capsys):
    cfg = tmp_path / "typo.yaml"
    cfg.write_text("nodecount: 4\n")
    assert main(["validate", "--config", str(cfg)]) == 1
    assert "nodecount" in capsys.readouterr().err


def test_run_rejects_seed_lists(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert main(["run", "--seed", "1,2", "--out", str(out)]) == 1


def test_io_error_exits_two(tmp_path, capsys):
    target = tmp_path / "adir"
    target.mkdir()
    assert main(["run", "--rounds", "5", "--out", str(target)]) == 2
    assert "i/o error" in capsys.readouterr().err


def test_compare_outputs_and_determinism(tmp_path, capsys):
    out1 = tmp_path / "c1"
    out2 = tmp_path / "c2"
    for out in (out1, out2):
        code = main(["compare", "--seed", "1,2", "--rounds", "30",
                     "--out", str(out)])
        assert code == 0

    names = sorted(os.listdir(out1))
    csvs = [n for n in names if n.endswith(".csv") and n != "comparison.csv"
            and not n.endswith(".summary")]
    assert len(csvs) == 6     # 3 protocols x 2 seeds
    assert len([n for n in names if n.endswith(".summary")]) == 6
    assert "comparison.csv" in names

    merged = read(out1 / "comparison.csv").decode().splitlines()
    assert merged[0] == COMPARISON_HEADER
    assert len(merged) == 1 + 3 * 2 * 30
    assert merged[1].startswith("multihop,1,")

    for name in names:
        assert read(out1 / name) == read(out2 / name), name


def test_compare_protocol_column_values(tmp_path):
    out = tmp_path / "c"
    main(["compare", "--seed", "4", "--rounds", "10", "--out", str(out)])
    protocols = set()
    for line in read(out / "comparison.csv").decode().splitlines()[1:]:
        protocols.add(line.split(",")[0])
    assert protocols == {"multihop", "attempt", "m-attempt"}
