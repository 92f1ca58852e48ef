import filecmp

import yaml

from conftest import SYNTHETIC
from netmap.cli import main
from netmap.pipeline import ARTIFACTS
from netmap.synth import generate

CONFIG = str(SYNTHETIC / "config.yaml")


def test_run_success_and_seed_override(tmp_path, capsys):
    assert main(["run", CONFIG, "--out", str(tmp_path / "a")]) == 0
    assert "done: 8 stage(s)" in capsys.readouterr().out
    for name in ARTIFACTS:
        assert (tmp_path / "a" / name).is_file()

    assert main(["run", CONFIG, "--out", str(tmp_path / "b"), "--stage", "layout", "--stage", "ingest",
                 "--stage", "snowball", "--stage", "kcore", "--stage", "cluster", "--seed", "99"]) == 0
    a = (tmp_path / "a" / "map_accounts.svg").read_text()
    b = (tmp_path / "b" / "map_accounts.svg").read_text()
    assert a != b
    assert (tmp_path / "a" / "segments.tsv").read_text() == (tmp_path / "b" / "segments.tsv").read_text()


def test_dry_run_writes_nothing(tmp_path, capsys):
    out = tmp_path / "never"
    assert main(["run", CONFIG, "--out", str(out), "--dry-run"]) == 0
    assert not out.exists()
    assert ": ok" in capsys.readouterr().out


def test_validation_failure_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("inputs:\n  edges: missing.tsv\nlayout:\n  seed: abc\n")
    assert main(["run", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "inputs.edges" in err and "inputs.citations: required" in err and "layout.seed" in err


def test_usage_error_exit_1(capsys):
    assert main(["run"]) == 1
    assert main(["no-such-command"]) == 1


def test_stage_failure_exit_2(tmp_path, capsys):
    assert main(["metrics", CONFIG, "--out", str(tmp_path)]) == 2
    assert "stage 'metrics' failed" in capsys.readouterr().err


def test_show_config(capsys):
    assert main(["show-config", CONFIG]) == 0
    shown = yaml.safe_load(capsys.readouterr().out)
    assert shown["kcore"]["target_size"] == 810
    assert shown["inputs"]["assignment"] == "assignment.tsv"


def test_bundled_dataset_regenerates_identically(tmp_path, capsys):
    assert main(["synth", str(tmp_path)]) == 0
    names = ["follows.tsv", "mentions.tsv", "citations.tsv", "dictionary.tsv", "seeds.txt", "truth.tsv",
             "config.yaml", "assignment.tsv"]
    _, mismatch, errors = filecmp.cmpfiles(SYNTHETIC, tmp_path, names, shallow=False)
    assert not mismatch and not errors


def test_synthetic_dataset_shape(tmp_path):
    generate(tmp_path, derive_assignment=False)
    rows = [ln for ln in (tmp_path / "citations.tsv").read_text().splitlines() if not ln.startswith("#")]
    assert len(rows) == 5000
    dictionary = [ln for ln in (tmp_path / "dictionary.tsv").read_text().splitlines() if not ln.startswith("#")]
    assert len(dictionary) == 40
    truth = [ln.split("\t") for ln in (tmp_path / "truth.tsv").read_text().splitlines() if not ln.startswith("#")]
    assert len(truth) == 1000 and len({g for _, g in truth}) == 8
