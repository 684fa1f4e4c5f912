"""Embedding, 2D projection, heat grids and selection for the error map."""

from .layout import (
    HeatGrid,
    ProjectionLayout,
    brush_select,
    collapse_intensity,
    heat_grid,
    project_2d,
    top_k_nodes,
)
from .node2vec import Node2VecParams, NodeEmbeddings, node2vec_embed

__all__ = [
    "HeatGrid",
    "Node2VecParams",
    "NodeEmbeddings",
    "ProjectionLayout",
    "brush_select",
    "collapse_intensity",
    "heat_grid",
    "node2vec_embed",
    "project_2d",
    "top_k_nodes",
]
