"""Dataset ingestion, on-disk formats, and the reconstruction wire protocol.

Two directory layouts are understood:

* ``mvtec-ad``: ``<cat>/train/good/*.png``, ``<cat>/test/<defect>/*.png``,
  masks at ``<cat>/ground_truth/<defect>/<stem>_mask.png``.
* ``mvtec-3d-rgb``: the same shape but images live in an ``rgb/`` subfolder
  and masks at ``<cat>/test/<defect>/gt/<stem>.png``.

Reconstructions are exchanged with the trainer through a flat tree:
``<recon_dir>/<defect_kind>/<stem>.png``, one file per test image, already
at working resolution. Missing or misshapen files are protocol errors, not
warnings. Float maps persist as little-endian "Pf" streams (rows written
bottom-up), which keeps them readable by standard tools.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image, UnidentifiedImageError

from edgescan.imgcore import ensure_float_map, ensure_gray, ensure_rgb, quantize_u8
from edgescan.metrics import EvalReport
from edgescan.score import ScoreConfig
from edgescan.synth import CorruptionConfig

logger = logging.getLogger(__name__)

DATASET_KINDS = ("mvtec-ad", "mvtec-3d-rgb")
_IMG_EXTS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


class DatasetError(Exception):
    """A dataset tree or image file is missing, malformed, or unreadable."""


class ProtocolError(Exception):
    """The reconstruction tree violates the wire protocol."""


@dataclass(frozen=True)
class SampleRecord:
    """One image of a category: where it lives and what belongs to it."""

    category: str
    split: str  # "train" | "test"
    defect_kind: str  # "good" for normal samples
    stem: str
    image_path: Path
    mask_path: Path | None = None
    recon_path: Path | None = None

    @property
    def is_anomalous(self) -> bool:
        return self.split == "test" and self.defect_kind != "good"


@dataclass(frozen=True)
class DatasetIndex:
    """A deterministic listing of one category of a dataset."""

    kind: str
    root: Path
    category: str
    records: tuple[SampleRecord, ...]

    @property
    def train_records(self) -> tuple[SampleRecord, ...]:
        return tuple(r for r in self.records if r.split == "train")

    @property
    def test_records(self) -> tuple[SampleRecord, ...]:
        return tuple(r for r in self.records if r.split == "test")


def _image_files(d: Path) -> list[Path]:
    return sorted(p for p in d.iterdir() if p.is_file() and p.suffix.lower() in _IMG_EXTS)


def scan_dataset(root, kind: str, category: str) -> DatasetIndex:
    """Index one category of a dataset tree.

    Records come back sorted by (split, defect_kind, stem) so downstream
    iteration order never depends on filesystem enumeration. Structural
    problems (missing directories, empty test folders, absent masks) raise
    DatasetError naming the offending path.
    """
    if kind not in DATASET_KINDS:
        raise ValueError(f"unknown dataset kind {kind!r}, expected one of {DATASET_KINDS}")
    root = Path(root)
    cat_dir = root / category
    if not cat_dir.is_dir():
        raise DatasetError(f"category directory not found: {cat_dir}")
    rgb_sub = "rgb" if kind == "mvtec-3d-rgb" else None

    records: list[SampleRecord] = []

    train_dir = cat_dir / "train" / "good"
    if rgb_sub:
        train_dir = train_dir / rgb_sub
    if not train_dir.is_dir():
        raise DatasetError(f"missing training directory: {train_dir}")
    train_files = _image_files(train_dir)
    if not train_files:
        raise DatasetError(f"no training images in {train_dir}")
    for f in train_files:
        records.append(
            SampleRecord(category=category, split="train", defect_kind="good", stem=f.stem, image_path=f)
        )

    test_dir = cat_dir / "test"
    if not test_dir.is_dir():
        raise DatasetError(f"missing test directory: {test_dir}")
    defect_dirs = sorted(d for d in test_dir.iterdir() if d.is_dir())
    if not defect_dirs:
        raise DatasetError(f"no defect directories in {test_dir}")
    for ddir in defect_dirs:
        defect = ddir.name
        img_dir = ddir / rgb_sub if rgb_sub else ddir
        if not img_dir.is_dir():
            raise DatasetError(f"missing image directory: {img_dir}")
        files = _image_files(img_dir)
        if not files:
            raise DatasetError(f"empty test directory: {img_dir}")
        for f in files:
            mask_path = None
            if defect != "good":
                if kind == "mvtec-ad":
                    mask_path = cat_dir / "ground_truth" / defect / f"{f.stem}_mask.png"
                else:
                    mask_path = ddir / "gt" / f"{f.stem}.png"
                if not mask_path.is_file():
                    raise DatasetError(f"missing ground-truth mask: {mask_path}")
            records.append(
                SampleRecord(
                    category=category,
                    split="test",
                    defect_kind=defect,
                    stem=f.stem,
                    image_path=f,
                    mask_path=mask_path,
                )
            )

    records.sort(key=lambda r: (r.split, r.defect_kind, r.stem))
    return DatasetIndex(kind=kind, root=root, category=category, records=tuple(records))


def match_reconstructions(index: DatasetIndex, recon_dir) -> DatasetIndex:
    """Attach reconstruction paths to every test record.

    Expects ``<recon_dir>/<defect_kind>/<stem>.png`` for each test image.
    Any missing file raises ProtocolError listing what is absent; files in
    the tree that match no test record are logged as warnings and ignored.
    """
    recon_dir = Path(recon_dir)
    if not recon_dir.is_dir():
        raise ProtocolError(f"reconstruction directory not found: {recon_dir}")
    missing: list[Path] = []
    expected: set[Path] = set()
    new_records: list[SampleRecord] = []
    for r in index.records:
        if r.split != "test":
            new_records.append(r)
            continue
        p = recon_dir / r.defect_kind / f"{r.stem}.png"
        expected.add(p)
        if not p.is_file():
            missing.append(p)
        new_records.append(replace(r, recon_path=p))
    if missing:
        shown = "\n  ".join(str(m) for m in missing[:20])
        more = f"\n  ... and {len(missing) - 20} more" if len(missing) > 20 else ""
        raise ProtocolError(f"missing reconstructions:\n  {shown}{more}")
    for extra in sorted(recon_dir.glob("*/*.png")):
        if extra not in expected:
            logger.warning("reconstruction tree has an unmatched file: %s", extra)
    return replace(index, records=tuple(new_records))


def verify_reconstruction_dims(index: DatasetIndex, size: tuple[int, int]) -> None:
    """Check every matched reconstruction is exactly (width, height).

    Reads only image headers. Any mismatch or unreadable file raises
    ProtocolError before a single map is computed.
    """
    bad: list[str] = []
    for r in index.test_records:
        if r.recon_path is None:
            raise ProtocolError(f"record {r.defect_kind}/{r.stem} has no reconstruction attached")
        try:
            with Image.open(r.recon_path) as im:
                if im.size != tuple(size):
                    bad.append(f"{r.recon_path}: {im.size[0]}x{im.size[1]}, expected {size[0]}x{size[1]}")
        except (OSError, UnidentifiedImageError) as e:
            bad.append(f"{r.recon_path}: unreadable ({e})")
    if bad:
        shown = "\n  ".join(bad[:20])
        more = f"\n  ... and {len(bad) - 20} more" if len(bad) > 20 else ""
        raise ProtocolError(f"reconstructions violate the protocol:\n  {shown}{more}")


# ---------------------------------------------------------------------------
# image and mask I/O


def load_image(path, size: tuple[int, int] | None = None) -> np.ndarray:
    """Decode an image file to RGB uint8, optionally bilinearly resized.

    ``size`` is (width, height), matching the convention of the underlying
    codec. Decoding failures raise DatasetError.
    """
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            if size is not None and rgb.size != tuple(size):
                rgb = rgb.resize(tuple(size), Image.Resampling.BILINEAR)
            return np.asarray(rgb, dtype=np.uint8)
    except (OSError, UnidentifiedImageError) as e:
        raise DatasetError(f"cannot read image {path}: {e}") from e


def load_mask(path, size: tuple[int, int] | None = None) -> np.ndarray:
    """Decode a ground-truth mask to a binary float map.

    Resizing uses nearest-neighbor so no new gray levels appear, then any
    positive value becomes 1.0. ``size`` is (width, height).
    """
    try:
        with Image.open(path) as im:
            gray = im.convert("L")
            if size is not None and gray.size != tuple(size):
                gray = gray.resize(tuple(size), Image.Resampling.NEAREST)
            arr = np.asarray(gray)
    except (OSError, UnidentifiedImageError) as e:
        raise DatasetError(f"cannot read mask {path}: {e}") from e
    return (arr > 0).astype(np.float64)


def save_rgb_png(img: np.ndarray, path) -> None:
    ensure_rgb(img)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img, mode="RGB").save(path, format="PNG")


def save_gray_png(img: np.ndarray, path) -> None:
    ensure_gray(img)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img, mode="L").save(path, format="PNG")


# ---------------------------------------------------------------------------
# float map files ("Pf" streams)


def write_float_map(m: np.ndarray, path) -> None:
    """Serialize a float map as a little-endian "Pf" stream.

    Values are stored as float32 (the format's precision), rows bottom-up,
    scale field -1.0.
    """
    m = ensure_float_map(m)
    h, w = m.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"Pf\n{w} {h}\n-1.0\n".encode("ascii")
    payload = np.flipud(m.astype("<f4")).tobytes()
    path.write_bytes(header + payload)


def read_float_map(path) -> np.ndarray:
    """Parse a "Pf" stream back into a float64 map.

    Handles both endiannesses via the sign of the scale field. Truncated
    or malformed files raise DatasetError.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise DatasetError(f"cannot read float map {path}: {e}") from e

    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DatasetError(f"truncated header in {path}")
        return raw[start:pos]

    magic = token()
    if magic != b"Pf":
        raise DatasetError(f"{path}: not a grayscale float map (magic {magic!r})")
    try:
        w = int(token())
        h = int(token())
        scale = float(token())
    except ValueError as e:
        raise DatasetError(f"{path}: malformed header: {e}") from e
    if w < 1 or h < 1:
        raise DatasetError(f"{path}: bad dimensions {w}x{h}")
    if scale == 0.0:
        raise DatasetError(f"{path}: scale must be non-zero")
    pos += 1  # the single whitespace byte that terminates the header
    need = w * h * 4
    payload = raw[pos : pos + need]
    if len(payload) != need:
        raise DatasetError(f"{path}: expected {need} data bytes, found {len(payload)}")
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(payload, dtype=dtype).reshape(h, w)
    out = np.flipud(arr).astype(np.float64)
    if not np.all(np.isfinite(out)):
        raise DatasetError(f"{path}: float map contains non-finite values")
    return out


def write_heatmap(m: np.ndarray, path, normalization="per-image") -> tuple[float, float]:
    """Render a float map as an 8-bit grayscale PNG.

    ``normalization`` is either "per-image" (min-max of this map) or an
    explicit (lo, hi) range. A map with no spread renders all black.
    Returns the (lo, hi) actually used so callers can record it.
    """
    m = ensure_float_map(m)
    if normalization == "per-image":
        lo, hi = float(m.min()), float(m.max())
    elif isinstance(normalization, (tuple, list)) and len(normalization) == 2:
        lo, hi = float(normalization[0]), float(normalization[1])
        if not lo < hi:
            raise ValueError(f"normalization range must satisfy lo < hi, got ({lo}, {hi})")
    else:
        raise ValueError(f"normalization must be 'per-image' or (lo, hi), got {normalization!r}")
    if hi <= lo:
        img = np.zeros(m.shape, dtype=np.uint8)
    else:
        img = quantize_u8((m - lo) / (hi - lo) * 255.0)
    save_gray_png(img, path)
    return lo, hi


# ---------------------------------------------------------------------------
# run configuration and reports


def _as_float_pair(v) -> tuple[float, float]:
    a, b = v
    return (float(a), float(b))


@dataclass
class RunConfig:
    """Everything that determines a run's outputs, in one serializable place.

    The content hash of the canonical JSON form is stamped into every
    structured artifact (run_config.json, report.json, scores.csv) so
    outputs can always be traced back to the exact settings that produced
    them. Fixed policies that are easy to get subtly wrong (resampling
    filters, pixel pooling) are recorded in ``notes``.
    """

    command: str = ""
    dataset_root: str | None = None
    dataset_kind: str = "mvtec-ad"
    category: str | None = None
    recon_dir: str | None = None
    out_dir: str | None = None
    textures_dir: str | None = None
    input_dir: str | None = None
    maps_dir: str | None = None
    resize: tuple[int, int] = (256, 256)  # width, height
    seed: int = 0
    count: int = 0
    jobs: int = 1
    fpr_limit: float = 0.3
    rotate: tuple[float, float] | None = None
    score: ScoreConfig = field(default_factory=ScoreConfig)
    corruption: CorruptionConfig = field(default_factory=CorruptionConfig)
    notes: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "dataset_root": self.dataset_root,
            "dataset_kind": self.dataset_kind,
            "category": self.category,
            "recon_dir": self.recon_dir,
            "out_dir": self.out_dir,
            "textures_dir": self.textures_dir,
            "input_dir": self.input_dir,
            "maps_dir": self.maps_dir,
            "resize": list(self.resize),
            "seed": self.seed,
            "count": self.count,
            "jobs": self.jobs,
            "fpr_limit": self.fpr_limit,
            "rotate": list(self.rotate) if self.rotate is not None else None,
            "score": {
                "color_weight": self.score.color_weight,
                "color_kernel": self.score.color_kernel,
                "structure_kernel": self.score.structure_kernel,
                "msgms_levels": self.score.msgms_levels,
                "gms_c": self.score.gms_c,
            },
            "corruption": {
                "p_texture": self.corruption.p_texture,
                "p_cutpaste": self.corruption.p_cutpaste,
                "beta_range": list(self.corruption.beta_range),
                "perlin_scale_exponents": list(self.corruption.perlin_scale_exponents),
                "perlin_threshold": self.corruption.perlin_threshold,
                "cutpaste_area_range": list(self.corruption.cutpaste_area_range),
                "cutpaste_aspect_range": list(self.corruption.cutpaste_aspect_range),
                "cutpaste_max_retries": self.corruption.cutpaste_max_retries,
            },
            "notes": dict(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        d = dict(d)
        score_d = d.get("score", {})
        corr_d = d.get("corruption", {})
        score = ScoreConfig(
            color_weight=float(score_d.get("color_weight", 1e-3)),
            color_kernel=int(score_d.get("color_kernel", 11)),
            structure_kernel=int(score_d.get("structure_kernel", 21)),
            msgms_levels=int(score_d.get("msgms_levels", 4)),
            gms_c=float(score_d.get("gms_c", 170.0)),
        )
        corruption = CorruptionConfig(
            p_texture=float(corr_d.get("p_texture", 0.5)),
            p_cutpaste=float(corr_d.get("p_cutpaste", 0.3)),
            beta_range=_as_float_pair(corr_d.get("beta_range", (0.1, 1.0))),
            perlin_scale_exponents=tuple(int(e) for e in corr_d.get("perlin_scale_exponents", (0, 1, 2, 3, 4, 5))),
            perlin_threshold=float(corr_d.get("perlin_threshold", 0.5)),
            cutpaste_area_range=_as_float_pair(corr_d.get("cutpaste_area_range", (0.05, 0.30))),
            cutpaste_aspect_range=_as_float_pair(corr_d.get("cutpaste_aspect_range", (0.3, 3.3))),
            cutpaste_max_retries=int(corr_d.get("cutpaste_max_retries", 16)),
        )
        rot = d.get("rotate")
        return cls(
            command=str(d.get("command", "")),
            dataset_root=d.get("dataset_root"),
            dataset_kind=str(d.get("dataset_kind", "mvtec-ad")),
            category=d.get("category"),
            recon_dir=d.get("recon_dir"),
            out_dir=d.get("out_dir"),
            textures_dir=d.get("textures_dir"),
            input_dir=d.get("input_dir"),
            maps_dir=d.get("maps_dir"),
            resize=(int(d.get("resize", (256, 256))[0]), int(d.get("resize", (256, 256))[1])),
            seed=int(d.get("seed", 0)),
            count=int(d.get("count", 0)),
            jobs=int(d.get("jobs", 1)),
            fpr_limit=float(d.get("fpr_limit", 0.3)),
            rotate=_as_float_pair(rot) if rot is not None else None,
            score=score,
            corruption=corruption,
            notes=dict(d.get("notes", {})),
        )

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_run_config(config: RunConfig, out_dir) -> Path:
    """Persist the merged run configuration next to the artifacts it made."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "run_config.json"
    doc = {"config_hash": config.content_hash(), "config": config.to_dict()}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_report(report: EvalReport, out_dir) -> tuple[Path, Path]:
    """Write report.json (full) and report.csv (one row per category)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    json_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    csv_path = out_dir / "report.csv"
    lines = ["category,image_auroc,pixel_auroc,pixel_ap,aupro"]
    for name in sorted(report.categories):
        r = report.categories[name]
        lines.append(
            f"{name},{r.image_auroc:.17g},{r.pixel_auroc:.17g},{r.pixel_ap:.17g},{r.aupro:.17g}"
        )
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return json_path, csv_path


def read_report(path) -> EvalReport:
    """Load a report back; accepts the JSON file or its directory."""
    path = Path(path)
    if path.is_dir():
        path = path / "report.json"
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DatasetError(f"cannot read report {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DatasetError(f"malformed report {path}: {e}") from e
    return EvalReport.from_dict(doc)
