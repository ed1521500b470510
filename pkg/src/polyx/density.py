"""Per-class density maps from per-pixel distance vectors.

The proposed construction feeds signed polyhedral distances through a
softmax of their opposites; the regular baselines apply the same softmax or
a normalized inverse power to plain centroid distances. Persistence is raw
little-endian float32 (pixel-major) next to a small JSON header, with
optional per-class PGM emission for eyeballing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import errors

_KINDS = ("signed-polyhedral", "centroid")


@dataclass(frozen=True, eq=False)
class DistanceVectors:
    """pixels x K distances; `kind` says whether signs are meaningful."""

    values: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise errors.InputError("values must be a pixels x K matrix")
        if not np.all(np.isfinite(v)):
            raise errors.InputError("distances contain non-finite values")
        if self.kind not in _KINDS:
            raise errors.InputError(f"kind must be one of {_KINDS}")
        if self.kind == "centroid" and (v < 0).any():
            raise errors.InputError("centroid distances must be non-negative")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def pixels(self) -> int:
        return self.values.shape[0]

    @property
    def classes(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class DensityMap:
    """pixels x K matrix with rows on the probability simplex."""

    values: np.ndarray
    class_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise errors.InputError("values must be a pixels x K matrix")
        # float32 storage quantizes each entry; scale the simplex tolerance
        # with the element type so loaded maps revalidate.
        tol = 1e-9 if v.dtype.itemsize >= 8 else 4 * v.shape[1] * np.finfo(v.dtype).eps
        if not np.all(np.isfinite(v)):
            raise errors.InputError("densities contain non-finite values")
        if (v < -tol).any() or (v > 1 + tol).any():
            raise errors.InputError("densities must lie in [0, 1]")
        if np.abs(v.sum(axis=1) - 1.0).max() > tol:
            raise errors.InputError("density rows must sum to 1")
        if self.class_names is not None and len(self.class_names) != v.shape[1]:
            raise errors.InputError("class_names length must equal K")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def pixels(self) -> int:
        return self.values.shape[0]

    @property
    def classes(self) -> int:
        return self.values.shape[1]


def softmax_density(d: DistanceVectors, alpha: float = 1.0) -> DensityMap:
    """Row-wise softmax of the negated distances, sharpness alpha.

    The row maximum of -alpha*d is subtracted before exponentiation, which
    changes nothing mathematically but keeps exp() in range for any input.
    """
    if not alpha > 0:
        raise errors.InputError("alpha must be positive")
    z = -alpha * d.values
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return DensityMap(e / e.sum(axis=1, keepdims=True))


def inverse_distance_density(d: DistanceVectors, p: float = 1.0) -> DensityMap:
    """Normalized d_k**(-p) rows; a row sitting on a centroid becomes the
    indicator of the first zero entry."""
    if d.kind != "centroid":
        raise errors.InputError("inverse-distance density needs centroid distances")
    if not p > 0:
        raise errors.InputError("p must be positive")
    v = d.values
    out = np.empty_like(v)
    zero_rows = (v == 0.0).any(axis=1)
    if zero_rows.any():
        out[zero_rows] = 0.0
        first = v[zero_rows].argmin(axis=1)
        out[np.flatnonzero(zero_rows), first] = 1.0
    ok = ~zero_rows
    if ok.any():
        w = v[ok] ** (-p)
        out[ok] = w / w.sum(axis=1, keepdims=True)
    return DensityMap(out)


def std_scale(d: DistanceVectors) -> DistanceVectors:
    """Divide every column by its population standard deviation."""
    if d.pixels < 2:
        raise errors.InputError("std scaling needs at least 2 rows")
    std = d.values.std(axis=0)
    if (std <= 1e-12).any():
        bad = int(np.flatnonzero(std <= 1e-12)[0])
        raise errors.ConditioningError(f"column {bad} has zero variance")
    return DistanceVectors(d.values / std, d.kind)


def basis_change(d: DistanceVectors) -> DistanceVectors:
    """Re-express rows in the basis of each class's deepest distance vector.

    For every class k the row attaining the lowest (most negative) value in
    column k is selected; those K rows stacked form the basis matrix B, and
    each output row y solves B y = row. Opt-in: only meaningful when the
    selected rows are well-conditioned.
    """
    if d.kind != "signed-polyhedral":
        raise errors.InputError("basis change needs signed polyhedral distances")
    v = d.values
    if v.shape[0] < v.shape[1]:
        raise errors.InputError("need at least K rows for a K-vector basis")
    sel = v.argmin(axis=0)
    B = v[sel]
    cond = float(np.linalg.cond(B))
    if not np.isfinite(cond) or cond >= 1e8:
        raise errors.ConditioningError(
            "selected basis vectors are ill-conditioned "
            f"(cond={cond:.3g}); disable the basis change"
        )
    y = np.linalg.solve(B, v.T).T
    return DistanceVectors(y, d.kind)


def save_density_map(
    dm: DensityMap, width: int, height: int, path, pgm: bool = False
) -> list[Path]:
    """Write <path>.json + <path>.bin (f32 LE, pixel-major), optional PGMs.

    `path` is the basename without extension; width*height must equal the
    pixel count. Returns the written paths.
    """
    return write_raw_map(dm.values, width, height, path, pgm=pgm)


def write_raw_map(values, width: int, height: int, path, pgm: bool = False) -> list[Path]:
    """Format backend of save_density_map for an arbitrary pixels x K matrix.

    Same header + f32 binary layout, but no simplex validation, so it also
    serves matrices that are not probability rows (raw abundances). PGM
    emission clamps to [0, 1].
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise errors.InputError("values must be a pixels x K matrix")
    if width * height != arr.shape[0]:
        raise errors.InputError(
            f"width*height = {width * height} but the map has {arr.shape[0]} pixels"
        )
    base = Path(path)
    data = np.ascontiguousarray(values, dtype="<f4")
    bin_path = base.with_suffix(".bin")
    json_path = base.with_suffix(".json")
    bin_path.write_bytes(data.tobytes())
    header = {
        "width": int(width),
        "height": int(height),
        "classes": int(arr.shape[1]),
        "dtype": "f32",
        "layout": "pixel-major",
        "data_file": bin_path.name,
    }
    json_path.write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")
    written = [json_path, bin_path]
    if pgm:
        for k in range(arr.shape[1]):
            img = np.clip(arr[:, k], 0.0, 1.0).reshape(height, width)
            gray = np.round(img * 255.0).astype(np.uint8)
            p = base.parent / f"{base.name}_class{k}.pgm"
            with open(p, "wb") as fh:
                fh.write(f"P5\n{width} {height}\n255\n".encode())
                fh.write(gray.tobytes())
            written.append(p)
    return written


def read_raw_map(header_path) -> tuple[np.ndarray, int, int]:
    """Read a header + raw pair as a bare matrix, skipping simplex checks."""
    header_path = Path(header_path)
    try:
        doc = json.loads(header_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise errors.HeaderError(f"cannot read {header_path}: {exc}") from exc
    for key in ("width", "height", "classes", "dtype", "layout"):
        if key not in doc:
            raise errors.HeaderError(f"missing header key {key!r} in {header_path}")
    if doc["dtype"] != "f32":
        raise errors.DtypeError(f"unsupported dtype {doc['dtype']!r}")
    if doc["layout"] != "pixel-major":
        raise errors.HeaderError(f"unsupported layout {doc['layout']!r}")
    width, height, classes = int(doc["width"]), int(doc["height"]), int(doc["classes"])
    name = doc.get("data_file")
    bin_path = header_path.parent / name if name else header_path.with_suffix(".bin")
    blob = bin_path.read_bytes()
    expect = width * height * classes * 4
    if len(blob) != expect:
        raise errors.LengthMismatchError(
            f"{bin_path} holds {len(blob)} bytes, header implies {expect}"
        )
    values = np.frombuffer(blob, dtype="<f4").reshape(width * height, classes)
    return values, width, height


def load_density_map(header_path) -> tuple[DensityMap, int, int]:
    """Read a header + raw pair written by save_density_map.

    Returns (map, width, height); values keep their stored float32 dtype so
    a save -> load -> save round trip is byte-identical.
    """
    values, width, height = read_raw_map(header_path)
    return DensityMap(values), width, height
