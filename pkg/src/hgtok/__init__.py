"""hgtok: hypergraph-to-token compiler and alignment toolkit."""

from .core import (
    BucketScheme,
    Hypergraph,
    IncidenceMatrix,
    bucket_of_degree,
    bucket_of_order,
    build_cocitation,
    clique_expand,
    dual,
    hyperedge_degree,
    incidence_matrix,
    vertex_degree,
)
from .projector import HipConfig, HipParams, forward, init_params
from .semantic import StubProvider, TableProvider
from .serialize import EncapsulatedTokens, HidtoSequence, encapsulate, serialize
from .template import CenterRole, SlotRole, Template, TemplateSpec, build_template

__version__ = "0.1.0"

__all__ = [
    "BucketScheme",
    "CenterRole",
    "EncapsulatedTokens",
    "HidtoSequence",
    "HipConfig",
    "HipParams",
    "Hypergraph",
    "IncidenceMatrix",
    "SlotRole",
    "StubProvider",
    "TableProvider",
    "Template",
    "TemplateSpec",
    "bucket_of_degree",
    "bucket_of_order",
    "build_cocitation",
    "build_template",
    "clique_expand",
    "dual",
    "encapsulate",
    "forward",
    "hyperedge_degree",
    "incidence_matrix",
    "init_params",
    "serialize",
    "vertex_degree",
]
