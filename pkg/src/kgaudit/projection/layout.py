"""2D layout, error-intensity heat grids, top-K selection and brushing."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import ErrorKind
from ..kg import EntityId
from .node2vec import NodeEmbeddings

log = logging.getLogger(__name__)

# exact t-SNE gradients up to this node count, Barnes-Hut beyond
EXACT_TSNE_LIMIT = 2000


@dataclass(frozen=True)
class ProjectionLayout:
    coordinates: dict[EntityId, tuple[float, float]]
    seed: int

    def table_rows(self) -> list[tuple[str, float, float]]:
        """Rows for the persisted layout table, 6-decimal stable."""
        return [
            (eid, round(x, 6), round(y, 6))
            for eid, (x, y) in sorted(self.coordinates.items())
        ]

    @classmethod
    def from_table_rows(cls, rows: Iterable[tuple[str, float, float]], seed: int) -> "ProjectionLayout":
        return cls({eid: (float(x), float(y)) for eid, x, y in rows}, seed)


@dataclass(frozen=True)
class HeatGrid:
    width: int
    height: int
    bandwidth: float
    values: np.ndarray  # shape (height, width), non-negative
    kind_filter: ErrorKind | None = None

    def total(self) -> float:
        return float(self.values.sum())

    def to_record(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "bandwidth": self.bandwidth,
            "kind_filter": self.kind_filter.value if self.kind_filter else None,
            "values": [[round(float(v), 9) for v in row] for row in self.values],
        }


def _grid_fallback(ids: list[EntityId], seed: int) -> ProjectionLayout:
    """Evenly spaced grid used when every embedding is identical; t-SNE
    has no signal to work with there."""
    n = len(ids)
    cols = int(np.ceil(np.sqrt(n)))
    rows = int(np.ceil(n / cols))
    coords = {}
    for i, eid in enumerate(ids):
        r, c = divmod(i, cols)
        x = (c + 0.5) / cols
        y = (r + 0.5) / rows
        coords[eid] = (float(x), float(y))
    return ProjectionLayout(coords, seed)


def _normalize_unit_square(points: np.ndarray) -> np.ndarray:
    """Map into [0,1]^2 with a single scale factor for both axes, so
    relative distances survive normalization; the shorter axis is centered."""
    lo = points.min(axis=0)
    span = points.max(axis=0) - lo
    scale = float(span.max())
    if scale == 0.0:
        return np.full_like(points, 0.5)
    out = (points - lo) / scale
    out += (1.0 - span / scale) / 2.0
    return out


def project_2d(
    embeddings: NodeEmbeddings,
    seed: int = 42,
    perplexity: float = 30.0,
    max_iter: int = 1000,
    early_exaggeration: float = 12.0,
) -> ProjectionLayout:
    """t-SNE the embeddings to the unit square; deterministic per seed."""
    ids = sorted(embeddings.vectors)
    n = len(ids)
    if n < 2:
        raise ValueError("projection needs at least 2 embedded nodes")
    if perplexity >= n:
        raise ValueError(f"perplexity must be below the node count ({n})")

    matrix = embeddings.matrix(ids)
    if np.allclose(matrix, matrix[0], atol=1e-12):
        log.warning("all embeddings identical; using grid fallback layout")
        return _grid_fallback(ids, seed)

    from sklearn.manifold import TSNE

    tsne = TSNE(
        n_components=2,
        perplexity=perplexity,
        random_state=seed,
        method="exact" if n <= EXACT_TSNE_LIMIT else "barnes_hut",
        max_iter=max_iter,
        early_exaggeration=early_exaggeration,
        init="pca",
        n_jobs=1,
    )
    points = _normalize_unit_square(tsne.fit_transform(matrix).astype(np.float64))
    coords = {eid: (float(points[i, 0]), float(points[i, 1])) for i, eid in enumerate(ids)}
    return ProjectionLayout(coords, seed)


def collapse_intensity(
    intensity: Mapping, kind_filter: ErrorKind | None = None
) -> dict[EntityId, int]:
    """Accept either per-(entity, kind) or per-entity counts and collapse
    to per-entity counts, honoring the kind filter where present."""
    out: dict[EntityId, int] = {}
    for key, count in intensity.items():
        if isinstance(key, tuple):
            eid, kind = key
            if kind_filter is not None and kind != kind_filter:
                continue
        else:
            eid = key
        out[eid] = out.get(eid, 0) + count
    return out


def heat_grid(
    layout: ProjectionLayout,
    intensity: Mapping,
    resolution: tuple[int, int] = (256, 256),
    bandwidth: float = 0.02,
    kind_filter: ErrorKind | None = None,
) -> HeatGrid:
    """Gaussian-splat per-entity intensities onto a dense grid.

    Each entity's kernel is normalized over its own (unclipped) discrete
    window, so an interior entity contributes exactly its intensity to the
    grid sum; mass within 3 sigma of the border bleeds off-grid.
    """
    width, height = resolution
    if width < 1 or height < 1:
        raise ValueError("grid resolution must be positive")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    values = np.zeros((height, width), dtype=np.float64)
    collapsed = collapse_intensity(intensity, kind_filter)

    rx = max(1, int(np.ceil(3.0 * bandwidth * width)))
    ry = max(1, int(np.ceil(3.0 * bandwidth * height)))

    for eid in sorted(collapsed):
        count = collapsed[eid]
        if count == 0:
            continue
        if eid not in layout.coordinates:
            raise KeyError(f"no layout coordinate for entity {eid!r}")
        x, y = layout.coordinates[eid]
        cx = min(width - 1, max(0, int(x * width)))
        cy = min(height - 1, max(0, int(y * height)))

        ix = np.arange(cx - rx, cx + rx + 1)
        iy = np.arange(cy - ry, cy + ry + 1)
        centers_x = (ix + 0.5) / width
        centers_y = (iy + 0.5) / height
        dx2 = (centers_x - x) ** 2
        dy2 = (centers_y - y) ** 2
        window = np.exp(-(dy2[:, None] + dx2[None, :]) / (2.0 * bandwidth * bandwidth))
        total = window.sum()
        if total <= 0.0:
            # bandwidth tiny enough to underflow everywhere: nearest cell
            values[cy, cx] += count
            continue
        window = window * (count / total)

        in_y = (iy >= 0) & (iy < height)
        in_x = (ix >= 0) & (ix < width)
        values[np.ix_(iy[in_y], ix[in_x])] += window[np.ix_(in_y, in_x)]

    return HeatGrid(width=width, height=height, bandwidth=bandwidth, values=values, kind_filter=kind_filter)


def top_k_nodes(
    intensity: Mapping, k: int, kind_filter: ErrorKind | None = None
) -> list[tuple[EntityId, int]]:
    """Top error-bearing entities: descending count, ties ascending by id,
    zero-count entries dropped."""
    if k < 0:
        raise ValueError("k must be >= 0")
    collapsed = collapse_intensity(intensity, kind_filter)
    ranked = sorted(
        ((eid, count) for eid, count in collapsed.items() if count > 0),
        key=lambda item: (-item[1], item[0]),
    )
    return ranked[:k]


def brush_select(
    layout: ProjectionLayout, rect: tuple[float, float, float, float]
) -> set[EntityId]:
    """Entities whose coordinates fall inside the closed rectangle."""
    x0, y0, x1, y1 = rect
    if x0 > x1 or y0 > y1:
        raise ValueError("rectangle must satisfy x0 <= x1 and y0 <= y1")
    return {
        eid
        for eid, (x, y) in layout.coordinates.items()
        if x0 <= x <= x1 and y0 <= y <= y1
    }
