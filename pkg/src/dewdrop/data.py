"""Dataset ingestion.

Rainy/clean pair layout: ``root/{train,val,test}/`` subtrees containing
images named ``<stem>_rain.<ext>`` and ``<stem>_clean.<ext>`` (searched
recursively, so ``data/`` and ``gt/`` subfolders also work). Pairs match
by the shared stem. Unpaired files and pairs whose dimensions disagree
are skipped and counted, never silently dropped.

City-scene layout for synthesis input: any tree of images; a per-image
camera file ``<stem>_camera.json`` (with the trailing ``_leftImg8bit``
token dropped from the stem, when present) is looked up next to the
image and in a parallel ``camera/`` tree. Missing camera files fall back
to the default camera parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import codec
from .synthesis import CameraParams, load_camera_json

IMAGE_SUFFIXES = (".png", ".ppm", ".pgm")
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class RainPair:
    stem: str
    split: str
    rainy_path: Path
    clean_path: Path

    def load(self):
        return codec.load_image(self.rainy_path), codec.load_image(self.clean_path)


@dataclass
class IngestReport:
    pairs: dict[str, list[RainPair]]
    skipped: list[str] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        return {split: len(items) for split, items in self.pairs.items()}

    @property
    def skip_count(self) -> int:
        return len(self.skipped)


def _find_images(root: Path) -> list[Path]:
    return sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def ingest_raindrop_dataset(root) -> IngestReport:
    """Collect rainy/clean pairs per split, validating dimensions per pair."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    report = IngestReport(pairs={})
    found_any_split = False
    for split in SPLITS:
        split_dir = root / split
        if not split_dir.is_dir():
            continue
        found_any_split = True
        rainy: dict[str, Path] = {}
        clean: dict[str, Path] = {}
        for path in _find_images(split_dir):
            stem = path.stem
            if stem.endswith("_rain"):
                rainy[stem[: -len("_rain")]] = path
            elif stem.endswith("_clean"):
                clean[stem[: -len("_clean")]] = path
            else:
                report.skipped.append(f"{split}: {path.name} has no _rain/_clean suffix")
        pairs = []
        for stem in sorted(set(rainy) | set(clean)):
            if stem not in rainy or stem not in clean:
                side = "clean" if stem in rainy else "rainy"
                report.skipped.append(f"{split}: {stem} is missing its {side} image")
                continue
            dims_r = codec.image_size(rainy[stem])
            dims_c = codec.image_size(clean[stem])
            if dims_r != dims_c:
                report.skipped.append(f"{split}: {stem} dimensions differ ({dims_r} vs {dims_c})")
                continue
            pairs.append(RainPair(stem=stem, split=split, rainy_path=rainy[stem], clean_path=clean[stem]))
        if not pairs:
            raise ValueError(f"split {split!r} of {root} contains no usable pairs")
        report.pairs[split] = pairs
    if not found_any_split:
        raise ValueError(f"{root} has none of the expected split directories {SPLITS}")
    return report


@dataclass(frozen=True)
class SceneRecord:
    stem: str
    image_path: Path
    camera: CameraParams

    def load(self):
        return codec.load_image(self.image_path)


def _camera_candidates(image_path: Path) -> list[Path]:
    stem = image_path.stem
    if stem.endswith("_leftImg8bit"):
        stem = stem[: -len("_leftImg8bit")]
    name = f"{stem}_camera.json"
    candidates = [image_path.with_name(name)]
    parts = list(image_path.parent.parts)
    if "leftImg8bit" in parts:
        parts[parts.index("leftImg8bit")] = "camera"
        candidates.append(Path(*parts) / name)
    return candidates


def ingest_cityscapes(root, default_camera: CameraParams | None = None) -> tuple[list[SceneRecord], list[str]]:
    """List clean scene images with their camera parameters (or defaults)."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"scene root {root} does not exist")
    default_camera = default_camera or CameraParams()
    records = []
    skipped = []
    search_root = root / "leftImg8bit" if (root / "leftImg8bit").is_dir() else root
    for path in _find_images(search_root):
        try:
            codec.image_size(path)
        except codec.CodecError as exc:
            skipped.append(f"{path.name}: {exc}")
            continue
        camera = default_camera
        for cand in _camera_candidates(path):
            if cand.is_file():
                camera = load_camera_json(cand, default_camera)
                break
        records.append(SceneRecord(stem=path.stem, image_path=path, camera=camera))
    if not records:
        raise ValueError(f"no readable images under {root}")
    return records, skipped


def load_synthetic_pairs(root) -> list[tuple[str, Path, Path]]:
    """Pair ``rainy/<stem>`` with ``masks/<stem>`` under a synthesis output dir."""
    root = Path(root)
    rainy_dir = root / "rainy"
    mask_dir = root / "masks"
    if not rainy_dir.is_dir() or not mask_dir.is_dir():
        raise FileNotFoundError(f"{root} must contain rainy/ and masks/ directories")
    out = []
    for path in _find_images(rainy_dir):
        mask_path = None
        for suffix in IMAGE_SUFFIXES:
            cand = mask_dir / (path.stem + suffix)
            if cand.is_file():
                mask_path = cand
                break
        if mask_path is None:
            raise FileNotFoundError(f"no mask image for {path.name}")
        out.append((path.stem, path, mask_path))
    if not out:
        raise ValueError(f"no rainy images under {rainy_dir}")
    return out
