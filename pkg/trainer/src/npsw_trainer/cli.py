"""Trainer command line: `npsw-trainer train ...` and `npsw-trainer export-vgg ...`."""

from __future__ import annotations

import argparse
import sys


def build_parser():
    p = argparse.ArgumentParser(prog="npsw-trainer",
                                description="Train and export content-network weights")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train the content network and export NPSW weights")
    t.add_argument("--data", default="toy",
                   help="image directory, or 'toy' for the procedural set (default)")
    t.add_argument("--lambda", dest="lam", type=float, default=0.999,
                   help="weight of the reconstruction term (default 0.999)")
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--batch-size", type=int, default=8)
    t.add_argument("--toy-images", type=int, default=200)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--export", required=True, help="output NPSW path")

    v = sub.add_parser("export-vgg", help="export a VGG-19 texture subgraph as NPSW")
    v.add_argument("--export", required=True, help="output NPSW path")
    v.add_argument("--pretrained", action="store_true",
                   help="use pretrained classification weights (needs download access); "
                   "default is a deterministic scaled random init")
    v.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "export-vgg":
        from .export import export_vgg

        try:
            export_vgg(args.export, pretrained=args.pretrained, seed=args.seed)
        except Exception as exc:  # pretrained download may be unavailable
            print(f"npsw-trainer: export failed: {exc}", file=sys.stderr)
            return 1
        print(f"wrote {args.export}")
        return 0

    from .export import export_content_net
    from .train import DivergenceError, TrainingConfig, train_content_net

    config = TrainingConfig(data=args.data, lam=args.lam, epochs=args.epochs,
                            batch_size=args.batch_size, n_toy_images=args.toy_images,
                            seed=args.seed)
    try:
        model, history = train_content_net(config)
    except DivergenceError as exc:
        print(f"npsw-trainer: {exc}; exporting last good checkpoint", file=sys.stderr)
        model = exc.model
        history = None
    export_content_net(model, args.export)
    if history is not None:
        first, last = history.epochs[0], history.epochs[-1]
        print(f"val l2: {first['val_l2']:.1f} -> {last['val_l2']:.1f} "
              f"over {len(history.epochs)} epochs")
    print(f"wrote {args.export}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
