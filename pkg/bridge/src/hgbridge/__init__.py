"""hgbridge: splice hypergraph-token exports into a causal LM and score."""

from .backends import ByteStubLm, TransformersCausalLm
from .bridge import (
    BridgeRequest,
    ScoreRecord,
    ScoreReport,
    load_requests,
    parse_answer,
    score,
    splice_and_generate,
    spliced_embeds,
    write_report_csv,
)
from .tokens import read_adapter, read_tokens, write_adapter, write_tokens

__version__ = "0.1.0"
