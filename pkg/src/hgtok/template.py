"""Fixed-shape incidence-tree template: topology and positional encodings.

The detail tree alternates vertex and hyperedge layers around a center slot;
its shape is a pure function of the template spec, shared by every sample.
An overview grid of (hop, order-bucket) cells is appended after the detail
slots. Positional encodings for detail slots are eigenvectors of the
normalized Laplacian of the template tree itself; each overview hop gets a
reserved indicator row instead.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import BucketScheme
from .errors import DataError, TemplateSizeError


class CenterRole(enum.Enum):
    VERTEX = "vertex"
    HYPEREDGE = "hyperedge"


class SlotRole(enum.Enum):
    """Token type of a realized slot. Values index the type one-hot."""

    CENTER = 0
    V = 1
    E = 2
    OVERVIEW = 3
    V_PAD = 4
    E_PAD = 5


NUM_SLOT_ROLES = len(SlotRole)


@dataclass(frozen=True)
class TemplateSpec:
    center_role: CenterRole = CenterRole.VERTEX
    layer_budgets: tuple[int, ...] = (8, 8)
    overview_hops: int = 2
    bucket_scheme: BucketScheme = field(default_factory=BucketScheme)
    max_tokens: int = 160
    pe_dim: int = 8

    def __post_init__(self):
        if not self.layer_budgets or any(b < 1 for b in self.layer_budgets):
            raise DataError(f"layer budgets must be positive: {self.layer_budgets}")
        if self.overview_hops < 1:
            raise DataError("overview_hops must be >= 1")
        if self.pe_dim < 1:
            raise DataError("pe_dim must be >= 1")

    @property
    def num_detail_slots(self) -> int:
        total, width = 1, 1
        for budget in self.layer_budgets:
            width *= budget
            total += width
        return total

    @property
    def num_overview_slots(self) -> int:
        return self.overview_hops * self.bucket_scheme.num_order_buckets

    @property
    def num_slots(self) -> int:
        return self.num_detail_slots + self.num_overview_slots

    @property
    def num_depth_codes(self) -> int:
        # Detail layers run 0..len(budgets); overview hops run 1..H.
        return max(len(self.layer_budgets), self.overview_hops) + 1

    @property
    def struct_dim(self) -> int:
        scheme = self.bucket_scheme
        return (
            self.pe_dim
            + NUM_SLOT_ROLES
            + self.num_depth_codes
            + scheme.num_order_buckets + 1
            + scheme.num_degree_buckets + 1
        )

    def expected_kind(self, layer: int) -> CenterRole:
        """Object kind occupying a given detail layer."""
        if self.center_role is CenterRole.VERTEX:
            return CenterRole.HYPEREDGE if layer % 2 == 1 else CenterRole.VERTEX
        return CenterRole.VERTEX if layer % 2 == 1 else CenterRole.HYPEREDGE


@dataclass(frozen=True)
class Template:
    """Built topology: parent links, layers, slot paths, and PE rows.

    ``pe_detail`` holds the Laplacian eigenvector block (detail slots only,
    orthonormal columns); ``pe_all`` appends the reserved overview rows.
    """

    spec: TemplateSpec
    parent: tuple[int | None, ...]
    layer: tuple[int, ...]
    paths: tuple[tuple[int, ...], ...]
    children: tuple[tuple[int, ...], ...]
    overview_cells: tuple[tuple[int, int], ...]
    pe_detail: np.ndarray
    pe_all: np.ndarray

    @property
    def num_detail_slots(self) -> int:
        return len(self.parent)

    @property
    def num_slots(self) -> int:
        return self.pe_all.shape[0]


def build_template(spec: TemplateSpec) -> Template:
    """Lay out slots in level order and compute positional encodings.

    Raises TemplateSizeError when the slot count exceeds ``max_tokens`` and
    DataError when ``pe_dim`` exceeds the number of nonzero Laplacian
    eigenvalues the detail tree provides.
    """
    if spec.num_slots > spec.max_tokens:
        raise TemplateSizeError(
            f"template needs {spec.num_slots} slots but max_tokens={spec.max_tokens}"
        )
    parent: list[int | None] = [None]
    layer: list[int] = [0]
    paths: list[tuple[int, ...]] = [()]
    frontier = [0]
    for depth, budget in enumerate(spec.layer_budgets, start=1):
        next_frontier = []
        for p in frontier:
            for c in range(budget):
                idx = len(parent)
                parent.append(p)
                layer.append(depth)
                paths.append(paths[p] + (c,))
                next_frontier.append(idx)
        frontier = next_frontier
    n_detail = len(parent)
    children: list[list[int]] = [[] for _ in range(n_detail)]
    for idx, p in enumerate(parent):
        if p is not None:
            children[p].append(idx)

    pe_detail = _tree_laplacian_pe(parent, spec.pe_dim)
    cells = [
        (hop, b)
        for hop in range(1, spec.overview_hops + 1)
        for b in range(spec.bucket_scheme.num_order_buckets)
    ]
    pe_overview = np.zeros((len(cells), spec.pe_dim))
    for row, (hop, _) in enumerate(cells):
        pe_overview[row, (hop - 1) % spec.pe_dim] = 1.0
    return Template(
        spec=spec,
        parent=tuple(parent),
        layer=tuple(layer),
        paths=tuple(paths),
        children=tuple(tuple(c) for c in children),
        overview_cells=tuple(cells),
        pe_detail=pe_detail,
        pe_all=np.vstack([pe_detail, pe_overview]),
    )


def _tree_laplacian_pe(parent: list[int | None], k: int) -> np.ndarray:
    """Eigenvectors of the normalized Laplacian of the slot tree.

    Columns are the k eigenvectors with smallest nonzero eigenvalues, each
    sign-fixed so its first nonzero entry is positive.
    """
    n = len(parent)
    if k > n - 1:
        raise DataError(f"pe_dim={k} needs at least {k + 1} detail slots, template has {n}")
    adj = np.zeros((n, n))
    for idx, p in enumerate(parent):
        if p is not None:
            adj[idx, p] = adj[p, idx] = 1.0
    deg = adj.sum(axis=1)
    d_inv_sqrt = 1.0 / np.sqrt(deg)
    lap = np.eye(n) - (adj * d_inv_sqrt[:, None]) * d_inv_sqrt[None, :]
    eigvals, eigvecs = np.linalg.eigh(lap)
    nonzero = np.flatnonzero(eigvals > 1e-9)
    if len(nonzero) < k:
        raise DataError(f"template tree provides only {len(nonzero)} nonzero eigenvalues")
    cols = eigvecs[:, nonzero[:k]].copy()
    for j in range(k):
        col = cols[:, j]
        lead = np.flatnonzero(np.abs(col) > 1e-12)
        if len(lead) and col[lead[0]] < 0:
            cols[:, j] = -col
    return cols
