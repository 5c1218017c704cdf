"""Dataset manifests: which image files exist, their labels and provenance.

A manifest is a TSV file with one record per line:

    #wellqc-manifest v1 num_classes=2
    path<TAB>label<TAB>origin<TAB>augmentation

``origin`` is real | synthetic | augmented; ``augmentation`` is none | hflip |
vflip | rot180 and is applied on load, so augmented entries reference their
source file rather than duplicating pixels on disk. A (path, augmentation)
pair therefore identifies an example and may not repeat.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from wellqc.errors import FormatError, InsufficientOriginals, LabelError
from wellqc.data.augment import AUG_NONE, AUG_OPS, augment_pixels
from wellqc.data.pgm import read_pgm
from wellqc.data.wells import CROP_SIZE

MANIFEST_VERSION = 1
ORIGINS = ("real", "synthetic", "augmented")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    origin: str = "real"
    aug: str = AUG_NONE

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise FormatError(f"unknown origin {self.origin!r}")
        if self.aug != AUG_NONE and self.aug not in AUG_OPS:
            raise FormatError(f"unknown augmentation {self.aug!r}")

    @property
    def example_id(self) -> str:
        return self.path if self.aug == AUG_NONE else f"{self.path}+{self.aug}"


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    num_classes: int = 2
    version: int = MANIFEST_VERSION
    root: Path | None = None  # directory paths are relative to; not serialized

    def __post_init__(self):
        self.validate()

    def validate(self) -> "DatasetManifest":
        seen = set()
        for e in self.entries:
            if not 0 <= e.label < self.num_classes:
                raise LabelError(f"{e.path}: label {e.label} outside [0, {self.num_classes})")
            key = (e.path, e.aug)
            if key in seen:
                raise FormatError(f"duplicate (path, augmentation) pair: {key}")
            seen.add(key)
        return self

    def class_counts(self) -> dict[int, int]:
        counts = {c: 0 for c in range(self.num_classes)}
        for e in self.entries:
            counts[e.label] += 1
        return counts

    def save(self, path) -> None:
        path = Path(path)
        lines = [f"#wellqc-manifest v{self.version} num_classes={self.num_classes}"]
        for e in self.entries:
            lines.append(f"{e.path}\t{e.label}\t{e.origin}\t{e.aug}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#wellqc-manifest "):
            raise FormatError(f"{path}: missing manifest header line", offset=0)
        header = lines[0].split()
        try:
            version = int(header[1].lstrip("v"))
            num_classes = int(dict(kv.split("=") for kv in header[2:])["num_classes"])
        except (IndexError, KeyError, ValueError):
            raise FormatError(f"{path}: malformed header {lines[0]!r}", offset=0) from None
        if version != MANIFEST_VERSION:
            raise FormatError(f"{path}: unsupported manifest version {version}")
        entries = []
        offset = len(lines[0]) + 1
        for line in lines[1:]:
            if line.strip():
                parts = line.split("\t")
                if len(parts) != 4:
                    raise FormatError(f"{path}: expected 4 tab-separated fields, got {len(parts)}", offset=offset)
                p, label, origin, aug = parts
                if label == "-":
                    raise FormatError(
                        f"{path}: entry {p} has no label; fill in the manifest skeleton first",
                        offset=offset,
                    )
                entries.append(ManifestEntry(path=p, label=int(label), origin=origin, aug=aug))
            offset += len(line) + 1
        return cls(entries=entries, num_classes=num_classes, version=version, root=path.parent)


def expand_dataset(manifest: DatasetManifest, target_per_class: int = 500) -> DatasetManifest:
    """Augment each class up to ``target_per_class`` examples.

    Works op-major in the fixed order hflip, vflip, rot180: all originals get
    an hflip sibling before any gets a vflip one, so the result is a pure
    function of (manifest order, target). Originals are the aug == "none"
    entries. Classes already at or above target gain nothing.
    """
    by_class: dict[int, list[ManifestEntry]] = {c: [] for c in range(manifest.num_classes)}
    for e in manifest.entries:
        if e.aug == AUG_NONE:
            by_class[e.label].append(e)
    present = {(e.path, e.aug) for e in manifest.entries}

    new_entries = list(manifest.entries)
    for label in sorted(by_class):
        originals = by_class[label]
        have = sum(1 for e in manifest.entries if e.label == label)
        needed = target_per_class - have
        for op in AUG_OPS:
            for e in originals:
                if needed <= 0:
                    break
                if (e.path, op) in present:
                    continue
                new_entries.append(ManifestEntry(path=e.path, label=e.label, origin="augmented", aug=op))
                present.add((e.path, op))
                needed -= 1
        if needed > 0:
            raise InsufficientOriginals(
                f"class {label}: {len(originals)} originals support at most "
                f"{len(originals) * (1 + len(AUG_OPS))} examples, target is {target_per_class}"
            )
    return DatasetManifest(
        entries=new_entries,
        num_classes=manifest.num_classes,
        version=manifest.version,
        root=manifest.root,
    )


@dataclass
class Dataset:
    """Materialized examples: image stack, labels, and stable example ids."""

    images: np.ndarray  # (N, 111, 111, 1) float32 in [0, 1]
    labels: np.ndarray  # (N,) int64
    ids: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            images=self.images[indices],
            labels=self.labels[indices],
            ids=[self.ids[int(i)] for i in indices],
        )


def load_examples(manifest: DatasetManifest, root=None) -> Dataset:
    """Read every manifest entry into memory, applying tagged augmentations."""
    base = Path(root) if root is not None else manifest.root
    if base is None:
        base = Path(".")
    n = len(manifest.entries)
    images = np.empty((n, CROP_SIZE, CROP_SIZE, 1), dtype=np.float32)
    labels = np.empty(n, dtype=np.int64)
    ids = []
    pixel_cache: dict[str, np.ndarray] = {}
    for i, e in enumerate(manifest.entries):
        if e.path not in pixel_cache:
            pixels, _ = read_pgm(base / e.path)
            pixel_cache[e.path] = pixels
        images[i, :, :, 0] = augment_pixels(pixel_cache[e.path], e.aug)
        labels[i] = e.label
        ids.append(e.example_id)
    return Dataset(images=images, labels=labels, ids=ids)
