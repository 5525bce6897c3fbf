"""Dataset files, manifests, and synthetic benchmark graphs.

On-disk layout of a dataset directory:

* ``edges.txt``   — one ``u v`` pair per line, 0-indexed, undirected;
  duplicates and self-loops are tolerated on input and dropped.
* ``features.bin`` — magic ``BGNF``, uint32 N, uint32 d (little-endian),
  then N*d row-major float32 values.
* ``labels.txt``  — one integer class per line.
* ``masks.txt``   — one character per node: ``t`` train, ``v`` val,
  ``s`` test, ``-`` unassigned. Line breaks are ignored.
* ``manifest.json`` — names the four files and declares N, d, C.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import AttributedGraph, canonical_edges

FEATURES_MAGIC = b"BGNF"
_MASK_CHARS = "tvs-"


class DatasetError(Exception):
    """Base for all dataset loading failures."""


class MissingFileError(DatasetError):
    pass


class FormatError(DatasetError):
    pass


class DimensionMismatchError(DatasetError):
    pass


class LabelRangeError(DatasetError):
    pass


class MaskOverlapError(DatasetError):
    pass


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    edges_file: Path
    features_file: Path
    labels_file: Path
    masks_file: Path
    num_nodes: int
    num_features: int
    num_classes: int


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    try:
        base = path.parent
        return DatasetManifest(
            name=raw["name"],
            edges_file=base / raw["edges_file"],
            features_file=base / raw["features_file"],
            labels_file=base / raw["labels_file"],
            masks_file=base / raw["masks_file"],
            num_nodes=int(raw["num_nodes"]),
            num_features=int(raw["num_features"]),
            num_classes=int(raw["num_classes"]),
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing manifest key {exc}") from exc


def _require(path: Path) -> Path:
    if not path.is_file():
        raise MissingFileError(f"dataset file not found: {path}")
    return path


def read_features(path) -> np.ndarray:
    path = _require(Path(path))
    blob = path.read_bytes()
    if len(blob) < 12 or blob[:4] != FEATURES_MAGIC:
        raise FormatError(f"{path}: bad feature-file header")
    n, d = struct.unpack("<II", blob[4:12])
    expected = 12 + 4 * n * d
    if len(blob) != expected:
        raise FormatError(f"{path}: payload is {len(blob) - 12} bytes, "
                          f"header implies {expected - 12}")
    return np.frombuffer(blob, dtype="<f4", offset=12).reshape(n, d).astype(np.float64)


def write_features(path, x: np.ndarray) -> None:
    x = np.asarray(x)
    with open(path, "wb") as fh:
        fh.write(FEATURES_MAGIC)
        fh.write(struct.pack("<II", x.shape[0], x.shape[1]))
        fh.write(np.ascontiguousarray(x, dtype="<f4").tobytes())


def read_edges(path) -> np.ndarray:
    path = _require(Path(path))
    pairs = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-integer endpoint") from exc
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def read_labels(path) -> np.ndarray:
    path = _require(Path(path))
    try:
        values = [int(s) for s in path.read_text().split()]
    except ValueError as exc:
        raise FormatError(f"{path}: non-integer label") from exc
    return np.array(values, dtype=np.int64)


def read_masks(path, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    path = _require(Path(path))
    chars = "".join(path.read_text().split())
    if len(chars) != n:
        raise DimensionMismatchError(f"{path}: {len(chars)} mask characters for {n} nodes")
    bad = set(chars) - set(_MASK_CHARS)
    if bad:
        raise FormatError(f"{path}: unknown mask characters {sorted(bad)}")
    arr = np.frombuffer(chars.encode("ascii"), dtype="S1")
    return arr == b"t", arr == b"v", arr == b"s"


def load_dataset(manifest) -> AttributedGraph:
    """Load and validate an attributed graph named by a manifest.

    Accepts a DatasetManifest or a path to a manifest.json. Raises a
    specific DatasetError subclass per failure mode.
    """
    if not isinstance(manifest, DatasetManifest):
        manifest = load_manifest(manifest)
    x = read_features(manifest.features_file)
    if x.shape != (manifest.num_nodes, manifest.num_features):
        raise DimensionMismatchError(
            f"{manifest.features_file}: features are {x.shape}, manifest declares "
            f"({manifest.num_nodes}, {manifest.num_features})"
        )
    labels = read_labels(manifest.labels_file)
    if labels.shape[0] != manifest.num_nodes:
        raise DimensionMismatchError(
            f"{manifest.labels_file}: {labels.shape[0]} labels for {manifest.num_nodes} nodes"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= manifest.num_classes):
        raise LabelRangeError(
            f"{manifest.labels_file}: label outside [0, {manifest.num_classes})"
        )
    train, val, test = read_masks(manifest.masks_file, manifest.num_nodes)
    if ((train & val) | (train & test) | (val & test)).any():
        raise MaskOverlapError(f"{manifest.masks_file}: overlapping split masks")
    raw_edges = read_edges(manifest.edges_file)
    if raw_edges.size and (raw_edges.min() < 0 or raw_edges.max() >= manifest.num_nodes):
        raise DimensionMismatchError(
            f"{manifest.edges_file}: edge endpoint outside [0, {manifest.num_nodes})"
        )
    try:
        return AttributedGraph(
            x=x,
            edges=canonical_edges(raw_edges),
            labels=labels,
            train_mask=train,
            val_mask=val,
            test_mask=test,
            n_classes=manifest.num_classes,
        )
    except ValueError as exc:
        raise FormatError(f"{manifest.name}: {exc}") from exc


def save_dataset(dirpath, graph: AttributedGraph, name: str = "dataset") -> Path:
    """Write a graph as a dataset directory; returns the manifest path."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    write_features(dirpath / "features.bin", graph.x)
    with open(dirpath / "edges.txt", "w") as fh:
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")
    with open(dirpath / "labels.txt", "w") as fh:
        fh.write("\n".join(str(int(y)) for y in graph.labels))
        fh.write("\n")
    chars = np.full(graph.n_nodes, "-", dtype="U1")
    chars[graph.train_mask] = "t"
    chars[graph.val_mask] = "v"
    chars[graph.test_mask] = "s"
    (dirpath / "masks.txt").write_text("".join(chars) + "\n")
    manifest = {
        "name": name,
        "edges_file": "edges.txt",
        "features_file": "features.bin",
        "labels_file": "labels.txt",
        "masks_file": "masks.txt",
        "num_nodes": graph.n_nodes,
        "num_features": graph.n_features,
        "num_classes": graph.n_classes,
    }
    manifest_path = dirpath / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


@dataclass(frozen=True)
class SBMParams:
    """Planted-partition benchmark: C equal classes, block-structured edges.

    Features are the class signature (signal on the class's own block of
    coordinates) plus unit Gaussian noise. Splits follow the fixed-size
    citation-network convention: a small train/val set per class, the
    rest test.
    """

    nodes_per_class: int = 100
    n_classes: int = 7
    p_in: float = 0.1
    p_out: float = 0.01
    n_features: int = 70
    signal: float = 2.0
    seed: int = 0
    train_per_class: int = 20
    val_per_class: int = 30

    def __post_init__(self):
        if not (0.0 <= self.p_out <= self.p_in <= 1.0):
            raise ValueError("need 0 <= p_out <= p_in <= 1")
        if self.signal < 0:
            raise ValueError("signal strength must be >= 0")
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if self.n_features < self.n_classes:
            raise ValueError("need at least one feature coordinate per class")
        if self.train_per_class < 1 or self.val_per_class < 1:
            raise ValueError("train/val sizes must be >= 1")
        if self.nodes_per_class <= self.train_per_class + self.val_per_class:
            raise ValueError("classes too small for the requested train/val split")

    @classmethod
    def from_json(cls, raw: dict) -> "SBMParams":
        return cls(**raw)


def generate_sbm(params: SBMParams) -> AttributedGraph:
    """Sample a planted-partition graph, deterministic per seed."""
    rng = np.random.default_rng(params.seed)
    c = params.n_classes
    npc = params.nodes_per_class
    n = c * npc
    labels = np.repeat(np.arange(c), npc)

    edges = []
    for ci in range(c):
        for cj in range(ci, c):
            p = params.p_in if ci == cj else params.p_out
            rows = np.arange(ci * npc, (ci + 1) * npc)
            cols = np.arange(cj * npc, (cj + 1) * npc)
            draws = rng.random((npc, npc)) < p
            if ci == cj:
                draws = np.triu(draws, k=1)  # upper triangle: no loops, no doubles
            ii, jj = np.nonzero(draws)
            if ii.size:
                edges.append(np.stack([rows[ii], cols[jj]], axis=1))
    edge_arr = np.concatenate(edges) if edges else np.empty((0, 2), dtype=np.int64)

    block = params.n_features // c
    means = np.zeros((c, params.n_features))
    for ci in range(c):
        means[ci, ci * block: (ci + 1) * block] = params.signal
    x = means[labels] + rng.standard_normal((n, params.n_features))

    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    for ci in range(c):
        order = ci * npc + rng.permutation(npc)
        train[order[: params.train_per_class]] = True
        val[order[params.train_per_class: params.train_per_class + params.val_per_class]] = True
        test[order[params.train_per_class + params.val_per_class:]] = True

    return AttributedGraph(
        x=x,
        edges=canonical_edges(edge_arr),
        labels=labels,
        train_mask=train,
        val_mask=val,
        test_mask=test,
        n_classes=c,
    )
