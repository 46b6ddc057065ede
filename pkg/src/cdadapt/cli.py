"""Command-line entry point for the whole workflow.

Subcommands: prepare, synth, train-source, adapt, select, serve-labels,
finetune, eval. A JSON config file may supply defaults (path from --config or
the DAMNET_CONFIG env var); explicit flags always win. Exit codes: 0 success,
1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .config import CONFIG_ENV_VAR, FreezeConfig, RunConfig
from .data.io import load_cd_dataset_with_report, save_pairs, write_mask
from .data.pairs import tile_pair
from .data.synth import SynthDomainParams, synth_domain_dataset_with_geometry, write_geometry
from .metrics import dataset_metrics, render_overlay
from .models.network import load_checkpoint


def _load_config(args) -> RunConfig:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV_VAR)
    config = RunConfig.from_file(path) if path else RunConfig()
    if getattr(args, "seed", None) is not None:
        config = config.replace(seed=args.seed)
    return config


def _apply(config: RunConfig, **overrides) -> RunConfig:
    """Apply non-None flag overrides onto nested config dataclasses."""
    for dotted, value in overrides.items():
        if value is None:
            continue
        parts = dotted.split(".")
        if len(parts) == 1:
            config = config.replace(**{parts[0]: value})
        else:
            sub = getattr(config, parts[0])
            config = config.replace(**{parts[0]: dataclasses.replace(sub, **{parts[1]: value})})
    return config


# -- subcommands ----------------------------------------------------------------


def cmd_prepare(args) -> int:
    pairs, report = load_cd_dataset_with_report(args.root, layout=args.layout, domain=args.domain)
    patches = []
    for pair in pairs:
        patches.extend(tile_pair(pair, tile=args.tile))
    save_pairs(patches, args.out)
    summary = {
        "pairs": len(pairs),
        "patches": len(patches),
        "tile": args.tile,
        "skipped": report.skipped,
    }
    with open(Path(args.out) / "prepare_report.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(json.dumps(summary))
    return 0


def cmd_synth(args) -> int:
    params = SynthDomainParams(
        resolution_scale=args.resolution_scale,
        color_shift=tuple(args.color_shift),
        texture_noise_sigma=args.noise,
        object_size_range=(args.size_min, args.size_max),
        change_density=args.density,
        seed=args.seed,
        size=args.size,
        n_objects=args.objects,
    )
    pairs, geometry = synth_domain_dataset_with_geometry(args.n, params, domain=args.domain)
    save_pairs(pairs, args.out)
    write_geometry(geometry, Path(args.out) / "geometry.json")
    print(json.dumps({"pairs": len(pairs), "out": str(args.out)}))
    return 0


def cmd_train_source(args) -> int:
    from .training.ada import run_source

    config = _apply(
        _load_config(args),
        source_epochs=args.epochs,
        source_lr=args.lr,
        source_batch=args.batch,
    )
    dataset = _load_domain(args.data, "source")
    ckpt, trace = run_source(dataset, config, args.out, resume=args.resume)
    print(json.dumps({"checkpoint": str(ckpt), "iterations": len(trace), "config_hash": config.config_hash()}))
    return 0


def cmd_adapt(args) -> int:
    from .training.ada import run_ada

    config = _load_config(args)
    if args.preset:
        config = config.replace(freeze=FreezeConfig.from_preset(args.preset))
    config = _apply(
        config,
        **{"ada.epochs": args.epochs, "ada.lr": args.lr,
           "ada.batch_step1": args.batch, "ada.batch_step23_per_domain": args.batch},
    )
    src = _load_domain(args.src, "source")
    tgt = _load_domain(args.tgt, "target")
    ckpt, trace = run_ada(src, tgt, config, args.out, init_checkpoint=args.init, resume=args.resume)
    print(json.dumps({"checkpoint": str(ckpt), "iterations": len(trace), "config_hash": config.config_hash()}))
    return 0


def cmd_select(args) -> int:
    from .training.evaluate import predict_masks
    from .training.mlft import score_samples, select_for_labeling

    config = _load_config(args)
    model, disc, config, _ = load_checkpoint(args.checkpoint)
    tgt = _load_domain(args.tgt, "target")
    scores = score_samples(tgt, model, disc)
    report = select_for_labeling(
        scores, k=args.k or config.select_k,
        min_change_frac=args.min_change_frac if args.min_change_frac is not None else config.min_change_frac,
    )
    report.write_json(args.out)
    if args.hints:
        hints = Path(args.hints)
        hints.mkdir(parents=True, exist_ok=True)
        selected = {r.sample_id for r in report.rows}
        chosen_pairs = [p for p in tgt if p.id in selected]
        for pair, pred in zip(chosen_pairs, predict_masks(model, chosen_pairs)):
            write_mask(hints / f"{pair.id}.png", pred)
    print(json.dumps({"selected": report.sample_ids, "backfilled": report.n_backfilled}))
    return 0


def cmd_serve_labels(args) -> int:
    from .label_service.server import make_server, serve_forever
    from .label_service.store import LabelStore
    from .training.mlft import SelectionReport

    store = LabelStore(
        store_dir=args.store,
        data_root=args.data,
        hints_dir=args.hints,
        lease_seconds=args.lease_seconds,
    )
    if args.report:
        report = SelectionReport.read_json(args.report)
        store.create_tasks([dataclasses.asdict(r) for r in report.rows])
    server = make_server(
        store, host=args.host, port=args.port, token=args.token, default_export_dir=args.export_dir
    )
    print(json.dumps({"serving": f"http://{args.host}:{server.server_address[1]}"}), flush=True)
    serve_forever(server)
    return 0


def cmd_finetune(args) -> int:
    from .training.mlft import run_mlft

    config = _load_config(args)
    config = _apply(config, **{"mlft.epochs": args.epochs, "mlft.lr": args.lr})
    tgt = _load_domain(args.tgt, "target")
    src = _load_domain(args.src, "source")
    micro = _load_domain(args.micro_labels, "target")
    micro = [p for p in micro if p.mask is not None]
    ckpt, trace = run_mlft(tgt, src, micro, config, args.out, init_checkpoint=args.init, resume=args.resume)
    print(json.dumps({"checkpoint": str(ckpt), "iterations": len(trace), "config_hash": config.config_hash()}))
    return 0


def cmd_eval(args) -> int:
    from .data.io import read_mask

    if args.pred and args.gt:
        pred_dir, gt_dir = Path(args.pred), Path(args.gt)
        names = sorted(p.stem for p in gt_dir.glob("*.png"))
        if not names:
            raise ValueError(f"no ground-truth masks in {gt_dir}")
        preds = [read_mask(pred_dir / f"{n}.png") for n in names]
        gts = [read_mask(gt_dir / f"{n}.png") for n in names]
        report = dataset_metrics(preds, gts)
        payload = {"metrics": report.to_dict()}
    elif args.checkpoint and args.data:
        from .metrics import analyze_per_sample
        from .training.evaluate import evaluate_model

        model, _, _, _ = load_checkpoint(args.checkpoint)
        dataset = _load_domain(args.data, "target")
        report, per_sample = evaluate_model(model, dataset)
        payload = {"metrics": report.to_dict(), "per_sample": per_sample}
        if args.baseline_f1 is not None:
            payload["analysis"] = analyze_per_sample(
                [r["f1"] for r in per_sample], args.baseline_f1
            )
        if args.overlays:
            from .data.io import write_image
            from .training.evaluate import predict_masks

            overlay_dir = Path(args.overlays)
            overlay_dir.mkdir(parents=True, exist_ok=True)
            labeled = [p for p in dataset if p.mask is not None]
            for pair, pred in zip(labeled, predict_masks(model, labeled)):
                write_image(overlay_dir / f"{pair.id}.png", render_overlay(pred, pair.mask, pair.t2))
    else:
        raise ValueError("eval needs either --pred and --gt, or --checkpoint and --data")

    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
    print(json.dumps(payload["metrics"]))
    return 0


def _load_domain(root: str, domain: str):
    pairs, _ = load_cd_dataset_with_report(root, domain=domain)
    if not pairs:
        raise ValueError(f"no pairs found under {root}")
    return pairs


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdadapt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON config file (default: $" + CONFIG_ENV_VAR + ")")
            p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("prepare", help="tile a dataset into training patches")
    p.add_argument("--root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--layout", default="generic", choices=["levir_style", "whu_style", "generic"])
    p.add_argument("--tile", type=int, default=256)
    p.add_argument("--domain", default="source", choices=["source", "target"])
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("synth", help="generate a synthetic bi-temporal domain")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--objects", type=int, default=8)
    p.add_argument("--resolution-scale", type=float, default=1.0)
    p.add_argument("--color-shift", type=float, nargs=3, default=[0.0, 0.0, 0.0])
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--size-min", type=int, default=10)
    p.add_argument("--size-max", type=int, default=28)
    p.add_argument("--domain", default="source", choices=["source", "target"])
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-source", help="supervised training on the source domain")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--resume", action="store_true")
    p.set_defaults(func=cmd_train_source)

    p = sub.add_parser("adapt", help="adversarial domain adaptation")
    common(p)
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--init", default=None, help="source-trained checkpoint")
    p.add_argument("--preset", default=None, choices=["a100", "a010", "a001", "a111", "a110"])
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--resume", action="store_true")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("select", help="rank and select target samples for annotation")
    common(p)
    p.add_argument("--tgt", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="selection report JSON path")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--min-change-frac", type=float, default=None)
    p.add_argument("--hints", default=None, help="directory for prediction-hint masks")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("serve-labels", help="run the annotation HTTP service")
    p.add_argument("--data", required=True, help="dataset root with A/ and B/")
    p.add_argument("--store", required=True, help="task store directory")
    p.add_argument("--report", default=None, help="selection report to import")
    p.add_argument("--hints", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--token", default=None)
    p.add_argument("--lease-seconds", type=float, default=1800.0)
    p.add_argument("--export-dir", default=None)
    p.set_defaults(func=cmd_serve_labels)

    p = sub.add_parser("finetune", help="micro-labeled fine-tuning")
    common(p)
    p.add_argument("--tgt", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--micro-labels", required=True)
    p.add_argument("--init", required=True, help="adapted checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--resume", action="store_true")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("eval", help="evaluate masks or a checkpoint")
    common(p)
    p.add_argument("--pred", default=None, help="directory of predicted masks")
    p.add_argument("--gt", default=None, help="directory of ground-truth masks")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--out", default=None, help="report JSON path")
    p.add_argument("--baseline-f1", type=float, default=None)
    p.add_argument("--overlays", default=None, help="directory for error overlays")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
