"""Dataset manifests, feature files, synthetic benchmarks and run reports.

Feature files
    CSV, UTF-8, one sample per row, comma separated.  Or a raw binary file:
    three little-endian int64 values ``(l, n, MAGIC)`` followed by ``l * n``
    little-endian float64 values, sample after sample.
Label files
    One label per line; any strings.  Labels are remapped to ``1..C`` in
    sorted order (numeric order when every label parses as an integer).
Manifest
    JSON object, see :class:`DatasetManifest`.  Relative paths resolve
    against the manifest's directory.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import DomainSplit
from .pipeline import IterationRecord, RunReport

MAGIC = 0x41524744
RNG_NAME = "numpy.random.PCG64"
SYNTHETIC_KINDS = ("gaussian_shift", "two_moons_shift")


class DataError(ValueError):
    pass


@dataclass
class DatasetManifest:
    source_features: Path
    target_features: Path
    source_labels: Path
    n_source: int
    n_target: int
    feature_dim: int
    n_classes: int
    target_labels: Path | None = None
    zscore: bool = False
    config: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path) -> "DatasetManifest":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DataError(f"manifest not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from None
        base = path.parent
        required = ("source_features", "target_features", "source_labels",
                    "n_source", "n_target", "feature_dim", "n_classes")
        missing = [key for key in required if key not in raw]
        if missing:
            raise DataError(f"{path}: missing manifest fields {missing}")

        def resolve(p):
            return None if p is None else base / p

        return cls(
            source_features=resolve(raw["source_features"]),
            target_features=resolve(raw["target_features"]),
            source_labels=resolve(raw["source_labels"]),
            target_labels=resolve(raw.get("target_labels")),
            n_source=int(raw["n_source"]),
            n_target=int(raw["n_target"]),
            feature_dim=int(raw["feature_dim"]),
            n_classes=int(raw["n_classes"]),
            zscore=bool(raw.get("zscore", False)),
            config=dict(raw.get("config", {})),
        )


def read_matrix_csv(path) -> np.ndarray:
    """Read a sample-per-row CSV and return it column-major, ``(l, n)``."""
    path = Path(path)
    rows = []
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or all(not cell.strip() for cell in row):
                    continue
                try:
                    rows.append([float(cell) for cell in row])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: unparseable row") from None
                if len(rows[-1]) != len(rows[0]):
                    raise DataError(
                        f"{path}:{lineno}: expected {len(rows[0])} values, got {len(rows[-1])}"
                    )
    except FileNotFoundError:
        raise DataError(f"feature file not found: {path}") from None
    if not rows:
        raise DataError(f"{path}: no samples")
    return np.array(rows).T


def write_matrix_csv(path, matrix) -> None:
    X = np.asarray(matrix, dtype=float)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for col in X.T:
            writer.writerow([repr(float(v)) for v in col])


def read_matrix_bin(path) -> np.ndarray:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except FileNotFoundError:
        raise DataError(f"feature file not found: {path}") from None
    if len(buf) < 24:
        raise DataError(f"{path}: truncated header")
    l, n, magic = np.frombuffer(buf[:24], dtype="<i8")
    if magic != MAGIC:
        raise DataError(f"{path}: bad magic {magic:#x}")
    data = np.frombuffer(buf[24:], dtype="<f8")
    if data.size != l * n:
        raise DataError(f"{path}: header says {l}x{n}, payload has {data.size} values")
    return data.reshape(n, l).T.astype(float)


def write_matrix_bin(path, matrix) -> None:
    X = np.asarray(matrix, dtype=float)
    l, n = X.shape
    header = np.array([l, n, MAGIC], dtype="<i8").tobytes()
    Path(path).write_bytes(header + np.ascontiguousarray(X.T, dtype="<f8").tobytes())


def read_matrix(path) -> np.ndarray:
    return read_matrix_bin(path) if Path(path).suffix == ".bin" else read_matrix_csv(path)


def read_labels(path) -> list[str]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise DataError(f"label file not found: {path}") from None
    return [line.strip() for line in lines if line.strip()]


def _label_order(labels):
    try:
        return sorted(set(labels), key=int)
    except ValueError:
        return sorted(set(labels))


def zscore(X) -> np.ndarray:
    """Standardize each feature row to zero mean and unit variance."""
    mean = X.mean(axis=1, keepdims=True)
    std = X.std(axis=1, keepdims=True)
    return (X - mean) / np.where(std > 0, std, 1.0)


def load_dataset(manifest_path):
    """Load a manifest.

    Returns
    -------
    features : (l, n) array
        Source columns first, then target columns.
    split : DomainSplit
    truth : array or None
        Target labels in ``1..C`` when the manifest lists them.
    """
    m = DatasetManifest.from_file(manifest_path)
    Xs = read_matrix(m.source_features)
    Xt = read_matrix(m.target_features)
    for name, M, n_expected, path in (("source", Xs, m.n_source, m.source_features),
                                      ("target", Xt, m.n_target, m.target_features)):
        if M.shape != (m.feature_dim, n_expected):
            raise DataError(
                f"{path}: {name} features are {M.shape[1]} samples x {M.shape[0]} "
                f"features, manifest declares {n_expected} x {m.feature_dim}"
            )

    ys_raw = read_labels(m.source_labels)
    if len(ys_raw) != m.n_source:
        raise DataError(
            f"{m.source_labels}: {len(ys_raw)} labels, manifest declares {m.n_source}"
        )
    order = _label_order(ys_raw)
    if len(order) != m.n_classes:
        raise DataError(
            f"{m.source_labels}: {len(order)} distinct labels, manifest declares {m.n_classes}"
        )
    mapping = {label: i + 1 for i, label in enumerate(order)}
    ys = np.array([mapping[y] for y in ys_raw])

    truth = None
    if m.target_labels is not None:
        yt_raw = read_labels(m.target_labels)
        if len(yt_raw) != m.n_target:
            raise DataError(
                f"{m.target_labels}: {len(yt_raw)} labels, manifest declares {m.n_target}"
            )
        for lineno, y in enumerate(yt_raw, start=1):
            if y not in mapping:
                raise DataError(f"{m.target_labels}:{lineno}: label {y!r} not among source classes")
        truth = np.array([mapping[y] for y in yt_raw])

    X = np.hstack([Xs, Xt])
    if not np.all(np.isfinite(X)):
        raise DataError("feature files contain NaN or Inf")
    if m.zscore:
        X = zscore(X)
    return X, DomainSplit(m.n_source, m.n_target, m.n_classes, ys), truth


def load_manifest_config(manifest_path) -> dict:
    return DatasetManifest.from_file(manifest_path).config


def save_dataset(directory, features, split: DomainSplit, truth=None, *,
                 name: str = "dataset", config: dict | None = None) -> Path:
    """Write CSV feature/label files plus a manifest; return the manifest path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    X = np.asarray(features, dtype=float)
    write_matrix_csv(d / f"{name}_source.csv", X[:, : split.n_source])
    write_matrix_csv(d / f"{name}_target.csv", X[:, split.n_source:])
    (d / f"{name}_source_labels.txt").write_text(
        "".join(f"{y}\n" for y in split.source_labels), encoding="utf-8")
    manifest = {
        "source_features": f"{name}_source.csv",
        "target_features": f"{name}_target.csv",
        "source_labels": f"{name}_source_labels.txt",
        "n_source": split.n_source,
        "n_target": split.n_target,
        "feature_dim": X.shape[0],
        "n_classes": split.n_classes,
    }
    if truth is not None:
        (d / f"{name}_target_labels.txt").write_text(
            "".join(f"{y}\n" for y in truth), encoding="utf-8")
        manifest["target_labels"] = f"{name}_target_labels.txt"
    if config:
        manifest["config"] = config
    path = d / f"{name}.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------- synthetic


@dataclass(frozen=True)
class SyntheticDataset:
    features: np.ndarray
    split: DomainSplit
    truth: np.ndarray


def _rotation(dim, degrees):
    R = np.eye(dim)
    if dim >= 2:
        t = math.radians(degrees)
        R[:2, :2] = [[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]]
    return R


def _gaussian_domain(rng, means, per_class, noise):
    C, dim = means.shape
    labels = np.repeat(np.arange(1, C + 1), per_class)
    X = means[labels - 1] + noise * rng.standard_normal((labels.size, dim))
    return X, labels


def _moons_domain(rng, C, per_class, noise, dim):
    labels = np.repeat(np.arange(1, C + 1), per_class)
    t = rng.uniform(0.0, math.pi, labels.size)
    c = labels - 1
    # interleaved half circles: even classes open downwards, odd ones upwards
    flip = np.where(c % 2 == 0, 1.0, -1.0)
    x = np.cos(t) + c * 1.0
    y = flip * np.sin(t) - (c % 2) * 0.5
    X = np.zeros((labels.size, dim))
    X[:, 0], X[:, 1] = x, y
    X += noise * rng.standard_normal(X.shape)
    return X, labels


def generate_synthetic(kind: str = "gaussian_shift", n_classes: int = 3,
                       per_class: int = 40, offset=0.0, rotation: float = 0.0,
                       seed: int = 0, dim: int = 2, noise: float | None = None,
                       separation: float = 4.0) -> SyntheticDataset:
    """Seeded two-domain benchmark.

    Source samples come from ``n_classes`` class-conditional distributions
    (isotropic Gaussians around means on a circle of radius ``separation``
    in the first two coordinates, or interleaved half-moons).  Target
    samples come from the same class distributions, rotated by
    ``rotation`` degrees in the first coordinate plane and then translated
    by ``offset`` (scalar, broadcast to every coordinate, or a vector).
    """
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"kind must be one of {SYNTHETIC_KINDS}, got {kind!r}")
    if n_classes < 1 or per_class < 1:
        raise ValueError("n_classes and per_class must be positive")
    if dim < 2:
        raise ValueError("dim must be at least 2")
    rng = np.random.Generator(np.random.PCG64(seed))
    shift = np.broadcast_to(np.asarray(offset, dtype=float), (dim,))

    if kind == "gaussian_shift":
        noise = 1.0 if noise is None else noise
        angles = 2.0 * math.pi * np.arange(n_classes) / n_classes
        means = np.zeros((n_classes, dim))
        means[:, 0] = separation * np.cos(angles)
        means[:, 1] = separation * np.sin(angles)
        Xs, ys = _gaussian_domain(rng, means, per_class, noise)
        Xt, yt = _gaussian_domain(rng, means, per_class, noise)
    else:
        noise = 0.1 if noise is None else noise
        Xs, ys = _moons_domain(rng, n_classes, per_class, noise, dim)
        Xt, yt = _moons_domain(rng, n_classes, per_class, noise, dim)

    Xt = Xt @ _rotation(dim, rotation).T + shift
    X = np.vstack([Xs, Xt]).T
    split = DomainSplit(ys.size, yt.size, n_classes, ys)
    return SyntheticDataset(X, split, yt)


# ------------------------------------------------------------------ reports


def report_to_dict(report: RunReport) -> dict:
    return {
        "config": report.config,
        "rng": RNG_NAME,
        "iterations": [
            {"iteration": r.iteration, "accuracy": r.accuracy,
             "n_changed": r.n_changed, "eigenvalue_sum": r.eigenvalue_sum}
            for r in report.iterations
        ],
        "final_labels": None if report.final_labels is None
        else [int(y) for y in report.final_labels],
    }


def save_report(report: RunReport, path, fmt: str = "json") -> None:
    """Write a report as JSON (lossless) or CSV (one row per iteration).

    Wall-clock time is not written so that identical runs produce
    identical files.
    """
    path = Path(path)
    try:
        if fmt == "json":
            path.write_text(json.dumps(report_to_dict(report), indent=2) + "\n",
                            encoding="utf-8")
        elif fmt == "csv":
            with path.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["iteration", "accuracy", "n_changed", "eigenvalue_sum"])
                for r in report.iterations:
                    writer.writerow([r.iteration, "" if r.accuracy is None else repr(r.accuracy),
                                     r.n_changed, repr(r.eigenvalue_sum)])
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def load_report(path) -> RunReport:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    labels = raw.get("final_labels")
    return RunReport(
        iterations=[IterationRecord(**r) for r in raw["iterations"]],
        final_labels=None if labels is None else np.array(labels, dtype=int),
        config=raw.get("config"),
    )
