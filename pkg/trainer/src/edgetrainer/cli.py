"""Command line: prepare -> train -> reconstruct, plus metrics export.

    edgetrainer prepare     synthesize a corruption pool via the scorer CLI
    edgetrainer train       fit the UNet on a pool
    edgetrainer reconstruct write test-set reconstructions for scoring
    edgetrainer metrics     re-export a checkpoint's loss history as CSV

Exit codes: 0 ok, 2 bad arguments or config, 3 data/runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from edgetrainer.pool import TrainerError, prepare_pool
from edgetrainer.reconstruct import reconstruct
from edgetrainer.train import (
    TrainConfig,
    default_train_config,
    export_metrics,
    load_checkpoint,
    train,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parse_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_resize(text: str) -> tuple[int, int]:
    if "x" in text:
        w, h = text.split("x", 1)
        return int(w), int(h)
    n = int(text)
    return n, n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgetrainer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("prepare", help="synthesize a corruption pool via the scorer CLI")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", default="mvtec-ad", choices=["mvtec-ad", "mvtec-3d-rgb"])
    p.add_argument("--category", required=True)
    p.add_argument("--textures", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pool-size", type=int, default=8000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resize", type=_parse_resize, default=(256, 256))
    p.add_argument("--rotate", type=_parse_pair, default=(-45.0, 45.0))
    p.add_argument("--no-rotate", action="store_true")
    p.add_argument("--primary-cli", default="edgescan", help="scorer executable to invoke")

    t = sub.add_parser("train", help="fit the UNet on a pool")
    t.add_argument("--pool", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--kind", default="mvtec-ad", choices=["mvtec-ad", "mvtec-3d-rgb"])
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--lam", type=float)
    t.add_argument("--seed", type=int)
    t.add_argument("--steps-per-epoch", type=int)
    t.add_argument("--resize", type=_parse_resize)
    t.add_argument("--input-kind", choices=["edge", "rgb"])
    t.add_argument("--device")
    t.add_argument("--log-every", type=int, default=10)

    r = sub.add_parser("reconstruct", help="write test-set reconstructions")
    r.add_argument("--checkpoint", required=True)
    r.add_argument("--dataset", required=True)
    r.add_argument("--kind", default="mvtec-ad", choices=["mvtec-ad", "mvtec-3d-rgb"])
    r.add_argument("--category", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--device")

    m = sub.add_parser("metrics", help="export a checkpoint's loss history as CSV")
    m.add_argument("--checkpoint", required=True)
    m.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        if ns.command == "prepare":
            out = prepare_pool(
                dataset_root=ns.dataset,
                category=ns.category,
                textures_dir=ns.textures,
                out_dir=ns.out,
                pool_size=ns.pool_size,
                seed=ns.seed,
                resize=ns.resize,
                rotate=None if ns.no_rotate else ns.rotate,
                dataset_kind=ns.kind,
                primary_cli=ns.primary_cli,
            )
            print(f"pool ready: {out}")
        elif ns.command == "train":
            overrides = {
                key: getattr(ns, key)
                for key in ("epochs", "batch", "lr", "lam", "seed", "steps_per_epoch", "resize", "input_kind")
                if getattr(ns, key) is not None
            }
            config = default_train_config(ns.kind, **overrides)
            path = train(ns.pool, config, ns.out, device=ns.device, log_every=ns.log_every)
            print(f"checkpoint: {path}")
        elif ns.command == "reconstruct":
            n = reconstruct(
                ns.checkpoint, ns.dataset, ns.category, ns.out,
                dataset_kind=ns.kind, device=ns.device,
            )
            print(f"wrote {n} reconstructions to {ns.out}")
        elif ns.command == "metrics":
            _, _, state = load_checkpoint(ns.checkpoint)
            path = export_metrics(state, ns.out)
            print(f"loss history: {path}")
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainerError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def entrypoint() -> None:
    sys.exit(main())
