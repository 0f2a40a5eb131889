"""Command-line interface.

Subcommands cover the full loop around an external reconstruction model:

* ``synth``  - build a training pool (edge/target/mask triples) from normals
* ``edge``   - batch edge extraction of arbitrary image trees
* ``score``  - turn reconstructions into anomaly maps, heatmaps, and scores
* ``eval``   - compute metrics from persisted anomaly maps
* ``run``    - score then eval in one invocation

Exit codes: 0 success, 2 configuration problem, 3 dataset/file I/O problem,
4 reconstruction-protocol violation, 5 metric degeneracy. Configuration is
resolved as defaults, overlaid by an optional ``--config`` JSON file,
overlaid by explicit flags; the merged result is hashed and written next to
every run's artifacts.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from edgescan import dataset as ds
from edgescan.dataset import (
    DatasetError,
    ProtocolError,
    RunConfig,
)
from edgescan.edge import edge_pipeline
from edgescan.metrics import EvalReport, MetricDegenerateError, evaluate_category
from edgescan.score import ScoreConfig, anomaly_map, image_score
from edgescan.synth import (
    CorruptionConfig,
    CutpasteFitError,
    TextureBank,
    rotate_rgb,
    training_pair,
)

logger = logging.getLogger("edgescan.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PROTOCOL = 4
EXIT_DEGENERATE = 5

_POLICY_NOTES = {
    "image_resample": "bilinear",
    "mask_resample": "nearest, then any positive value is foreground",
    "lab_encoding": "8-bit offset Lab from the direct matrix, no gamma linearization",
    "pixel_metrics": "pixels pooled across all test images of the category",
    "region_metric": "per-region overlap vs pooled FPR, integrated to the limit",
}


class ConfigError(Exception):
    """The merged configuration is unusable."""


# ---------------------------------------------------------------------------
# flag value parsers


def _parse_resize(text: str) -> tuple[int, int]:
    try:
        if "x" in text:
            w_s, h_s = text.lower().split("x", 1)
            w, h = int(w_s), int(h_s)
        else:
            w = h = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected N or WxH, got {text!r}") from e
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"resize dimensions must be >= 1, got {text!r}")
    return (w, h)


def _parse_float_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi got {text!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected lo,hi floats, got {text!r}") from e


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(p) for p in text.split(",") if p.strip() != "")
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}") from e
    if not values:
        raise argparse.ArgumentTypeError("expected at least one int")
    return values


# ---------------------------------------------------------------------------
# configuration merging


_SYNTH_DEFAULTS: dict = {
    "dataset_root": None,
    "dataset_kind": "mvtec-ad",
    "category": None,
    "textures_dir": None,
    "out_dir": None,
    "count": 8,
    "seed": 0,
    "resize": (256, 256),
    "rotate": None,
    "p_texture": 0.5,
    "p_cutpaste": 0.3,
    "beta_range": (0.1, 1.0),
    "perlin_scale_exponents": (0, 1, 2, 3, 4, 5),
    "perlin_threshold": 0.5,
    "cutpaste_area_range": (0.05, 0.30),
    "cutpaste_aspect_range": (0.3, 3.3),
}

_SCORE_DEFAULTS: dict = {
    "dataset_root": None,
    "dataset_kind": "mvtec-ad",
    "category": None,
    "recon_dir": None,
    "out_dir": None,
    "resize": (256, 256),
    "seed": 0,
    "jobs": None,
    "color_weight": 1e-3,
    "color_kernel": 11,
    "structure_kernel": 21,
    "msgms_levels": 4,
    "gms_c": 170.0,
}

_EVAL_DEFAULTS: dict = {
    "dataset_root": None,
    "dataset_kind": "mvtec-ad",
    "category": None,
    "maps_dir": None,
    "out_dir": None,
    "resize": (256, 256),
    "fpr_limit": 0.3,
}

_EDGE_DEFAULTS: dict = {
    "input_dir": None,
    "out_dir": None,
}

_RUN_DEFAULTS: dict = {**_SCORE_DEFAULTS, **_EVAL_DEFAULTS}


def _merge_config(defaults: dict, ns: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags, with unknown keys rejected."""
    merged = dict(defaults)
    cfg_path = getattr(ns, "config", None)
    if cfg_path:
        try:
            text = Path(cfg_path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file {cfg_path}: {e}") from e
        try:
            file_cfg = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {cfg_path} is not valid JSON: {e}") from e
        if not isinstance(file_cfg, dict):
            raise ConfigError(f"config file {cfg_path} must contain a JSON object")
        unknown = sorted(set(file_cfg) - set(defaults))
        if unknown:
            raise ConfigError(f"unknown config keys for this command: {', '.join(unknown)}")
        merged.update(file_cfg)
    for key in defaults:
        v = getattr(ns, key, None)
        if v is not None:
            merged[key] = v
    return merged


def _pair(merged: dict, key: str) -> tuple[float, float]:
    v = merged[key]
    if v is None:
        return v
    if not isinstance(v, (tuple, list)) or len(v) != 2:
        raise ConfigError(f"{key} must be a pair, got {v!r}")
    return (float(v[0]), float(v[1]))


def _resize_of(merged: dict) -> tuple[int, int]:
    v = merged["resize"]
    if isinstance(v, (tuple, list)) and len(v) == 2:
        return (int(v[0]), int(v[1]))
    if isinstance(v, int):
        return (v, v)
    raise ConfigError(f"resize must be an int or a [w, h] pair, got {v!r}")


def _require(merged: dict, *keys: str) -> None:
    missing = [k for k in keys if merged.get(k) in (None, "")]
    if missing:
        raise ConfigError(f"missing required settings: {', '.join(missing)}")


def _corruption_of(merged: dict) -> CorruptionConfig:
    cfg = CorruptionConfig(
        p_texture=float(merged["p_texture"]),
        p_cutpaste=float(merged["p_cutpaste"]),
        beta_range=_pair(merged, "beta_range"),
        perlin_scale_exponents=tuple(int(e) for e in merged["perlin_scale_exponents"]),
        perlin_threshold=float(merged["perlin_threshold"]),
        cutpaste_area_range=_pair(merged, "cutpaste_area_range"),
        cutpaste_aspect_range=_pair(merged, "cutpaste_aspect_range"),
    )
    cfg.validate()
    return cfg


def _score_of(merged: dict) -> ScoreConfig:
    cfg = ScoreConfig(
        color_weight=float(merged["color_weight"]),
        color_kernel=int(merged["color_kernel"]),
        structure_kernel=int(merged["structure_kernel"]),
        msgms_levels=int(merged["msgms_levels"]),
        gms_c=float(merged["gms_c"]),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# synth


def _cmd_synth(ns: argparse.Namespace) -> int:
    merged = _merge_config(_SYNTH_DEFAULTS, ns)
    _require(merged, "dataset_root", "category", "out_dir")
    count = int(merged["count"])
    if count < 0:
        raise ConfigError(f"count must be >= 0, got {count}")
    seed = int(merged["seed"])
    size = _resize_of(merged)
    rotate = _pair(merged, "rotate") if merged["rotate"] is not None else None
    corruption = _corruption_of(merged)

    bank = None
    if corruption.p_texture > 0.0:
        if not merged["textures_dir"]:
            raise ConfigError("p_texture > 0 requires --textures")
        bank = TextureBank.from_dir(merged["textures_dir"])
        if len(bank) == 0:
            raise ConfigError(f"texture directory has no images: {merged['textures_dir']}")

    index = ds.scan_dataset(merged["dataset_root"], merged["dataset_kind"], merged["category"])
    train = index.train_records

    out_dir = Path(merged["out_dir"])
    existed_before = out_dir.exists()
    subdirs = [out_dir / name for name in ("edge", "target", "mask")]
    try:
        for d in subdirs:
            d.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            record = train[i % len(train)]
            img = ds.load_image(record.image_path, size)
            rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
            if rotate is not None:
                angle = float(rng.uniform(rotate[0], rotate[1]))
                img = rotate_rgb(img, angle)
            pair_seed = int(rng.integers(0, 2**63))
            edge, target, mask = training_pair(img, bank, corruption, pair_seed)
            name = f"{i:05d}.png"
            ds.save_gray_png(edge, out_dir / "edge" / name)
            ds.save_rgb_png(target, out_dir / "target" / name)
            ds.save_gray_png((mask * 255).astype(np.uint8), out_dir / "mask" / name)
    except BaseException:
        # never leave a half-written pool behind
        if existed_before:
            for d in subdirs:
                shutil.rmtree(d, ignore_errors=True)
        else:
            shutil.rmtree(out_dir, ignore_errors=True)
        raise

    config = RunConfig(
        command="synth",
        dataset_root=str(merged["dataset_root"]),
        dataset_kind=merged["dataset_kind"],
        category=merged["category"],
        textures_dir=str(merged["textures_dir"]) if merged["textures_dir"] else None,
        out_dir=str(out_dir),
        resize=size,
        seed=seed,
        count=count,
        rotate=rotate,
        corruption=corruption,
        notes=dict(_POLICY_NOTES),
    )
    ds.write_run_config(config, out_dir)
    logger.info("wrote %d training triples to %s", count, out_dir)
    return EXIT_OK


# ---------------------------------------------------------------------------
# edge


def _cmd_edge(ns: argparse.Namespace) -> int:
    merged = _merge_config(_EDGE_DEFAULTS, ns)
    _require(merged, "input_dir", "out_dir")
    in_dir = Path(merged["input_dir"])
    out_dir = Path(merged["out_dir"])
    if not in_dir.is_dir():
        raise DatasetError(f"input directory not found: {in_dir}")
    files = sorted(p for p in in_dir.rglob("*") if p.is_file() and p.suffix.lower() in ds._IMG_EXTS)
    if not files:
        raise DatasetError(f"no image files under {in_dir}")
    failures = 0
    for f in files:
        rel = f.relative_to(in_dir).with_suffix(".png")
        try:
            img = ds.load_image(f)
            ds.save_gray_png(edge_pipeline(img), out_dir / rel)
        except DatasetError as e:
            failures += 1
            logger.error("skipping %s: %s", f, e)
    if failures:
        raise DatasetError(f"{failures} of {len(files)} files could not be processed")
    logger.info("wrote %d edge maps to %s", len(files), out_dir)
    return EXIT_OK


# ---------------------------------------------------------------------------
# score


def _score_run(merged: dict) -> tuple[Path, RunConfig]:
    _require(merged, "dataset_root", "category", "recon_dir", "out_dir")
    size = _resize_of(merged)
    score_cfg = _score_of(merged)
    jobs = merged["jobs"]
    jobs = int(jobs) if jobs is not None else (os.cpu_count() or 1)
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")

    index = ds.scan_dataset(merged["dataset_root"], merged["dataset_kind"], merged["category"])
    index = ds.match_reconstructions(index, merged["recon_dir"])
    ds.verify_reconstruction_dims(index, size)
    records = index.test_records

    out_dir = Path(merged["out_dir"])
    maps_dir = out_dir / "maps"
    heat_dir = out_dir / "heatmaps"

    config = RunConfig(
        command="score",
        dataset_root=str(merged["dataset_root"]),
        dataset_kind=merged["dataset_kind"],
        category=merged["category"],
        recon_dir=str(merged["recon_dir"]),
        out_dir=str(out_dir),
        resize=size,
        seed=int(merged["seed"]),
        jobs=jobs,
        score=score_cfg,
        notes=dict(_POLICY_NOTES),
    )
    config_hash = config.content_hash()

    def work(record):
        img = ds.load_image(record.image_path, size)
        recon = ds.load_image(record.recon_path)
        if recon.shape != img.shape:
            raise ProtocolError(
                f"reconstruction {record.recon_path} decoded to {recon.shape}, expected {img.shape}"
            )
        m = anomaly_map(img, recon, score_cfg)
        ds.write_float_map(m, maps_dir / record.defect_kind / f"{record.stem}.pfm")
        lo, hi = ds.write_heatmap(m, heat_dir / record.defect_kind / f"{record.stem}.png")
        return (record.defect_kind, record.stem, image_score(m), lo, hi)

    if jobs == 1:
        results = [work(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, records))

    lines = [f"# config_hash={config_hash}", "stem,defect_kind,image_score"]
    ranges = {}
    for defect, stem, score, lo, hi in results:
        lines.append(f"{stem},{defect},{score:.17g}")
        ranges[f"{defect}/{stem}"] = [lo, hi]
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "scores.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    sidecar = {"mode": "per-image", "ranges": ranges, "config_hash": config_hash}
    heat_dir.mkdir(parents=True, exist_ok=True)
    (heat_dir / "normalization.json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    ds.write_run_config(config, out_dir)
    logger.info("scored %d test images into %s", len(records), out_dir)
    return maps_dir, config


def _cmd_score(ns: argparse.Namespace) -> int:
    merged = _merge_config(_SCORE_DEFAULTS, ns)
    _score_run(merged)
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval


def _eval_run(merged: dict, maps_dir: Path | None = None) -> int:
    _require(merged, "dataset_root", "category", "out_dir")
    if maps_dir is None:
        _require(merged, "maps_dir")
        maps_dir = Path(merged["maps_dir"])
    fpr_limit = float(merged["fpr_limit"])

    index = ds.scan_dataset(merged["dataset_root"], merged["dataset_kind"], merged["category"])
    records = index.test_records

    maps, scores, masks, labels = [], [], [], []
    for r in records:
        map_path = maps_dir / r.defect_kind / f"{r.stem}.pfm"
        if not map_path.is_file():
            raise DatasetError(f"missing anomaly map: {map_path}")
        m = ds.read_float_map(map_path)
        h, w = m.shape
        if r.mask_path is not None:
            g = ds.load_mask(r.mask_path, (w, h))
        else:
            g = np.zeros((h, w), dtype=np.float64)
        maps.append(m)
        masks.append(g)
        scores.append(float(m.max()))
        labels.append(1 if r.is_anomalous else 0)

    result = evaluate_category(maps, scores, masks, labels, fpr_limit=fpr_limit)

    out_dir = Path(merged["out_dir"])
    config = RunConfig(
        command="eval",
        dataset_root=str(merged["dataset_root"]),
        dataset_kind=merged["dataset_kind"],
        category=merged["category"],
        maps_dir=str(maps_dir),
        out_dir=str(out_dir),
        fpr_limit=fpr_limit,
        notes=dict(_POLICY_NOTES),
    )
    report = EvalReport(
        categories={merged["category"]: result},
        metadata={
            "config_hash": config.content_hash(),
            "dataset_root": str(merged["dataset_root"]),
            "dataset_kind": merged["dataset_kind"],
            "n_test_images": len(records),
            "n_anomalous_images": int(sum(labels)),
            "fpr_limit": fpr_limit,
            "notes": dict(_POLICY_NOTES),
        },
    )
    ds.write_report(report, out_dir)
    ds.write_run_config(config, out_dir)
    agg = report.aggregate()
    logger.info(
        "image_auroc=%.4f pixel_auroc=%.4f pixel_ap=%.4f aupro=%.4f",
        agg.image_auroc,
        agg.pixel_auroc,
        agg.pixel_ap,
        agg.aupro,
    )
    return EXIT_OK


def _cmd_eval(ns: argparse.Namespace) -> int:
    merged = _merge_config(_EVAL_DEFAULTS, ns)
    return _eval_run(merged)


def _cmd_run(ns: argparse.Namespace) -> int:
    merged = _merge_config(_RUN_DEFAULTS, ns)
    maps_dir, _ = _score_run(merged)
    # evaluation reads back the maps just written, so `run` and a manual
    # score-then-eval sequence produce byte-identical reports
    return _eval_run(merged, maps_dir=maps_dir)


# ---------------------------------------------------------------------------
# parser and dispatch


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgescan",
        description="Edge-conditioned reconstruction scoring for surface inspection.",
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="COMMAND")

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON file with config keys (flags still win)")

    def add_dataset_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--dataset", dest="dataset_root", help="dataset root directory")
        p.add_argument(
            "--kind",
            dest="dataset_kind",
            choices=list(ds.DATASET_KINDS),
            help="dataset layout (default mvtec-ad)",
        )
        p.add_argument("--category", help="category name under the root")

    p_synth = sub.add_parser("synth", help="synthesize a training pool from normal images")
    add_common(p_synth)
    add_dataset_flags(p_synth)
    p_synth.add_argument("--textures", dest="textures_dir", help="flat directory of texture images")
    p_synth.add_argument("--out", dest="out_dir", help="output pool directory")
    p_synth.add_argument("--count", type=int, help="number of triples to generate (default 8)")
    p_synth.add_argument("--seed", type=int, help="run seed (default 0)")
    p_synth.add_argument("--resize", type=_parse_resize, help="working resolution, N or WxH (default 256)")
    p_synth.add_argument("--rotate", type=_parse_float_pair, metavar="LO,HI", help="rotation degrees drawn per sample")
    p_synth.add_argument("--p-texture", dest="p_texture", type=float, help="texture-blend gate probability")
    p_synth.add_argument("--p-cutpaste", dest="p_cutpaste", type=float, help="cut-paste gate probability")
    p_synth.add_argument("--beta", dest="beta_range", type=_parse_float_pair, metavar="LO,HI", help="blend opacity range")
    p_synth.add_argument(
        "--perlin-exponents",
        dest="perlin_scale_exponents",
        type=_parse_int_list,
        metavar="E0,E1,...",
        help="lattice periods are 2^e for e drawn from this list",
    )
    p_synth.add_argument("--perlin-threshold", dest="perlin_threshold", type=float, help="mask threshold in (0,1)")
    p_synth.add_argument("--cutpaste-area", dest="cutpaste_area_range", type=_parse_float_pair, metavar="LO,HI")
    p_synth.add_argument("--cutpaste-aspect", dest="cutpaste_aspect_range", type=_parse_float_pair, metavar="LO,HI")
    p_synth.set_defaults(func=_cmd_synth)

    p_edge = sub.add_parser("edge", help="write edge maps for every image under a directory")
    add_common(p_edge)
    p_edge.add_argument("--in", dest="input_dir", help="input directory (recursed)")
    p_edge.add_argument("--out", dest="out_dir", help="output directory (tree mirrored)")
    p_edge.set_defaults(func=_cmd_edge)

    def add_score_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--recon", dest="recon_dir", help="reconstruction tree (<defect>/<stem>.png)")
        p.add_argument("--resize", type=_parse_resize, help="working resolution, N or WxH (default 256)")
        p.add_argument("--jobs", type=int, help="parallel workers (default: logical cores)")
        p.add_argument("--seed", type=int, help="run seed recorded in artifacts")
        p.add_argument("--color-weight", dest="color_weight", type=float, help="weight of the chroma term")
        p.add_argument("--color-kernel", dest="color_kernel", type=int, help="chroma box-filter size (odd)")
        p.add_argument("--structure-kernel", dest="structure_kernel", type=int, help="structure box-filter size (odd)")
        p.add_argument("--msgms-levels", dest="msgms_levels", type=int, help="pyramid depth")
        p.add_argument("--gms-c", dest="gms_c", type=float, help="gradient-similarity stabilizer")

    p_score = sub.add_parser("score", help="score reconstructions into maps and image scores")
    add_common(p_score)
    add_dataset_flags(p_score)
    add_score_flags(p_score)
    p_score.add_argument("--out", dest="out_dir", help="output directory")
    p_score.set_defaults(func=_cmd_score)

    p_eval = sub.add_parser("eval", help="compute metrics from persisted anomaly maps")
    add_common(p_eval)
    add_dataset_flags(p_eval)
    p_eval.add_argument("--maps", dest="maps_dir", help="directory of .pfm anomaly maps")
    p_eval.add_argument("--out", dest="out_dir", help="output directory")
    p_eval.add_argument("--fpr-limit", dest="fpr_limit", type=float, help="region-overlap FPR limit (default 0.3)")
    p_eval.set_defaults(func=_cmd_eval)

    p_run = sub.add_parser("run", help="score then eval")
    add_common(p_run)
    add_dataset_flags(p_run)
    add_score_flags(p_run)
    p_run.add_argument("--out", dest="out_dir", help="output directory")
    p_run.add_argument("--fpr-limit", dest="fpr_limit", type=float, help="region-overlap FPR limit (default 0.3)")
    p_run.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    ns = parser.parse_args(argv)
    if not getattr(ns, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    try:
        return ns.func(ns)
    except MetricDegenerateError as e:
        logger.error("metric degeneracy: %s", e)
        return EXIT_DEGENERATE
    except ProtocolError as e:
        logger.error("protocol violation: %s", e)
        return EXIT_PROTOCOL
    except (ConfigError, CutpasteFitError, ValueError) as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except DatasetError as e:
        logger.error("%s", e)
        return EXIT_IO
    except OSError as e:
        logger.error("i/o error: %s", e)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
