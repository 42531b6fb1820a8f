"""Command-line entry points.

Subcommands: synth-data, prepare-data, train, evaluate, bilinear-baseline,
infer, serve. Run `facehall <subcommand> --help` for flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def _cmd_synth_data(args) -> int:
    from facehall.synthetic import make_synthetic_dataset

    image_dir, attr_path = make_synthetic_dataset(args.out, args.count, seed=args.seed)
    print(f"wrote {args.count} images to {image_dir}")
    print(f"wrote attribute file {attr_path}")
    return 0


def _cmd_prepare_data(args) -> int:
    from facehall.data import ingest_manifest, split_dataset, write_manifest

    records = ingest_manifest(args.attrs, args.images, limit=args.limit)
    train_count = args.train_count if args.train_count is not None else len(records)
    train, test = split_dataset(records, train_count=train_count, seed=args.seed)
    write_manifest(train + test, args.out)
    print(f"wrote {len(train) + len(test)} records ({len(train)} train, {len(test)} test) to {args.out}")
    return 0


def _cmd_train(args) -> int:
    from facehall.report import plot_training_log
    from facehall.trainer import TrainConfig, run_training

    if args.config is not None:
        config = TrainConfig.from_file(args.config)
    else:
        config = TrainConfig()
    if args.out is not None:
        config.output_dir = args.out
    if args.seed is not None:
        config.seed = args.seed
    final = run_training(config, args.manifest, resume=args.resume)
    print(f"final checkpoint: {final}")
    curves = plot_training_log(Path(config.output_dir) / "train_log.jsonl",
                               Path(config.output_dir) / "training_curves.png")
    print(f"training curves: {curves}")
    return 0


def _cmd_evaluate(args) -> int:
    from facehall.metrics import evaluate
    from facehall.report import save_report

    report = evaluate(
        args.ckpt,
        args.manifest,
        attribute_source=args.attr_source,
        split=args.split,
        limit=args.limit,
    )
    files = save_report(report, args.out)
    print(f"mean PSNR {report.mean_psnr_db:.2f} dB, mean SSIM {report.mean_ssim:.4f} "
          f"over {len(report.rows)} images (attributes: {report.attribute_source})")
    for f in files:
        print(f"wrote {f}")
    return 0


def _cmd_bilinear_baseline(args) -> int:
    from facehall.metrics import bilinear_baseline
    from facehall.report import save_report

    report = bilinear_baseline(args.manifest, split=args.split, limit=args.limit)
    files = save_report(report, args.out)
    print(f"bilinear 16->128: mean PSNR {report.mean_psnr_db:.2f} dB, "
          f"mean SSIM {report.mean_ssim:.4f} over {len(report.rows)} images")
    for f in files:
        print(f"wrote {f}")
    return 0


def _load_attrs_arg(raw: str):
    path = Path(raw)
    if path.is_file():
        with open(path) as f:
            return json.load(f)
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SystemExit(f"--attrs must be a JSON array or a path to one: {exc}")


def _cmd_infer(args) -> int:
    from facehall.images import center_crop, load_image, resize_bilinear, save_image
    from facehall.service import hallucinate, load_service

    svc = load_service(args.ckpt)
    img = load_image(args.input)
    if img.shape[:2] != (16, 16):
        print(f"input is {img.shape[1]}x{img.shape[0]}; downscaling to 16x16")
        img = resize_bilinear(center_crop(img, min(img.shape[:2])), 16)
        img = np.clip(img, 0.0, 1.0)
    attrs = _load_attrs_arg(args.attrs) if args.attrs is not None else None
    result = hallucinate(svc, img, attributes=attrs, return_stages=args.stages)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for res, image in sorted(result["outputs"].items()):
        path = out_dir / f"sr_{res}.png"
        save_image(image, path)
        print(f"wrote {path}")
    with open(out_dir / "attributes.json", "w") as f:
        json.dump(
            {
                "used_attributes": [float(v) for v in result["used_attributes"]],
                "classifier_attributes": [float(v) for v in result["classifier_attributes"]],
            },
            f,
            indent=2,
        )
    print(f"wrote {out_dir / 'attributes.json'}")
    return 0


def _cmd_serve(args) -> int:
    from facehall.service import serve

    print(f"serving {args.ckpt} on {args.host}:{args.port}")
    serve(args.ckpt, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="facehall", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="generate a drawn-face dataset with attribute labels")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth_data)

    p = sub.add_parser("prepare-data", help="ingest images + attribute file into a manifest")
    p.add_argument("--images", required=True, help="directory of raw images")
    p.add_argument("--attrs", required=True, help="attribute file (list_attr layout, rows of +/-1)")
    p.add_argument("--out", required=True, help="output manifest (JSON lines)")
    p.add_argument("--limit", type=int, default=None, help="ingest at most N records")
    p.add_argument("--seed", type=int, default=0, help="train/test shuffle seed")
    p.add_argument("--train-count", type=int, default=None, help="records assigned to train")
    p.set_defaults(func=_cmd_prepare_data)

    p = sub.add_parser("train", help="run progressive training")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", default=None, help="JSON config mirroring TrainConfig fields")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.add_argument("--out", default=None, help="override output directory")
    p.add_argument("--seed", type=int, default=None, help="override seed")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on a manifest split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--attr-source", choices=["classifier", "gt"], default="classifier")
    p.add_argument("--out", required=True, help="report JSON path (CSV + figures written alongside)")
    p.add_argument("--split", default="test")
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("bilinear-baseline", help="score plain bilinear upsampling")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="report JSON path (CSV + figures written alongside)")
    p.add_argument("--split", default="test")
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(func=_cmd_bilinear_baseline)

    p = sub.add_parser("infer", help="hallucinate one image with a trained checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="input", required=True, help="input image (16x16, or larger to downscale)")
    p.add_argument("--attrs", default=None, help="JSON array of 12 values in [0,1], inline or a file path")
    p.add_argument("--stages", action="store_true", help="also write the 32 and 64 outputs")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("serve", help="serve the HTTP API over a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--port", type=int, default=8421)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
