import json
import hashlib
from pathlib import Path

import numpy as np
import pytest

from cdadapt.cli import main
from cdadapt.data.io import save_pairs, write_mask
from cdadapt.data.synth import SynthDomainParams, synth_domain_dataset

SUBCOMMANDS = [
    "prepare", "synth", "train-source", "adapt", "select", "serve-labels", "finetune", "eval",
]


def dir_digest(root: Path) -> dict:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_every_subcommand_has_help(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    assert "--help" in capsys.readouterr().out


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--n", "1", "--out", "x", "--bogus"])
    assert exc.value.code == 2


def test_runtime_error_exits_1(tmp_path, capsys):
    code = main(["train-source", "--data", str(tmp_path / "void"), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_synth_twice_is_bit_identical(tmp_path):
    args = ["synth", "--n", "6", "--seed", "7", "--size", "64", "--density", "0.5"]
    assert main(args + ["--out", str(tmp_path / "d1")]) == 0
    assert main(args + ["--out", str(tmp_path / "d2")]) == 0
    d1, d2 = dir_digest(tmp_path / "d1"), dir_digest(tmp_path / "d2")
    assert d1 == d2 and len(d1) == 19  # 6 x (A+B+label) + geometry.json


def test_prepare_tiles_and_reports(tmp_path):
    pairs = synth_domain_dataset(
        2, SynthDomainParams(size=128, seed=5, change_density=0.4, n_objects=6, object_size_range=(8, 20))
    )
    save_pairs(pairs, tmp_path / "raw")
    code = main([
        "prepare", "--root", str(tmp_path / "raw"), "--out", str(tmp_path / "tiles"),
        "--tile", "64",
    ])
    assert code == 0
    report = json.loads((tmp_path / "tiles" / "prepare_report.json").read_text())
    assert report["pairs"] == 2 and report["patches"] == 8
    assert len(list((tmp_path / "tiles" / "A").glob("*.png"))) == 8


def test_eval_identical_mask_dirs_is_perfect(tmp_path, capsys):
    rng = np.random.default_rng(3)
    (tmp_path / "pred").mkdir()
    (tmp_path / "gt").mkdir()
    for i in range(3):
        m = (rng.random((16, 16)) < 0.4).astype(np.uint8)
        write_mask(tmp_path / "pred" / f"s{i}.png", m)
        write_mask(tmp_path / "gt" / f"s{i}.png", m)
    code = main([
        "eval", "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "gt"),
        "--out", str(tmp_path / "report.json"),
    ])
    assert code == 0
    metrics = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert metrics["f1"] == 1.0 and metrics["iou"] == 1.0
    assert json.loads((tmp_path / "report.json").read_text())["metrics"]["oa"] == 1.0


def test_train_and_eval_checkpoint_records_config_hash(tmp_path, capsys, tiny_config):
    import torch

    pairs = synth_domain_dataset(
        4, SynthDomainParams(size=32, seed=9, change_density=0.5, n_objects=3, object_size_range=(6, 10))
    )
    save_pairs(pairs, tmp_path / "src")
    cfg_file = tmp_path / "config.json"
    cfg = tiny_config.replace(source_epochs=1, source_batch=4, source_lr=1e-3)
    cfg_file.write_text(json.dumps(cfg.to_dict()))

    code = main([
        "train-source", "--config", str(cfg_file),
        "--data", str(tmp_path / "src"), "--out", str(tmp_path / "run"),
    ])
    assert code == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["config_hash"] == cfg.config_hash()
    payload = torch.load(tmp_path / "run" / "checkpoint.pt", weights_only=True)
    assert payload["config_hash"] == cfg.config_hash()

    code = main([
        "eval", "--checkpoint", str(tmp_path / "run" / "checkpoint.pt"),
        "--data", str(tmp_path / "src"), "--out", str(tmp_path / "eval.json"),
        "--overlays", str(tmp_path / "ov"),
    ])
    assert code == 0
    assert (tmp_path / "ov").exists() and len(list((tmp_path / "ov").glob("*.png"))) == 4


def test_adapt_records_preset_in_config_hash(tmp_path, capsys, tiny_config):
    import torch

    from cdadapt.config import AdaSchedule, FreezeConfig

    pairs_s = synth_domain_dataset(
        4, SynthDomainParams(size=32, seed=2, change_density=0.5, n_objects=3, object_size_range=(6, 10))
    )
    pairs_t = synth_domain_dataset(
        4, SynthDomainParams(size=32, seed=4, change_density=0.5, n_objects=3, object_size_range=(6, 10)),
        domain="target",
    )
    save_pairs(pairs_s, tmp_path / "src")
    save_pairs(pairs_t, tmp_path / "tgt")
    cfg_file = tmp_path / "config.json"
    base = tiny_config.replace(ada=AdaSchedule(lr=1e-4, epochs=1, batch_step1=4, batch_step23_per_domain=4))
    cfg_file.write_text(json.dumps(base.to_dict()))

    code = main([
        "adapt", "--config", str(cfg_file), "--preset", "a100",
        "--src", str(tmp_path / "src"), "--tgt", str(tmp_path / "tgt"),
        "--out", str(tmp_path / "ada"),
    ])
    assert code == 0
    expected = base.replace(freeze=FreezeConfig.from_preset("a100"))
    payload = torch.load(tmp_path / "ada" / "checkpoint.pt", weights_only=True)
    assert payload["config_hash"] == expected.config_hash()
    assert payload["config"]["freeze"]["train_ms_fusion"] is False
