"""Query-focused extractive sentence compression toolkit.

Shortens a dependency-parsed sentence S to a compression C that must
contain every query token in Q and fit a character budget b.  Provides
the linear-time vertex-addition engine, an ILP baseline with exact
branch-and-bound decoding, dataset synthesis, evaluation (F1, SLOR,
latency, paired bootstrap) and a search-snippet HTTP service.
"""

__version__ = "0.1.0"

from qcomp.corpus import Instance, ParseGraph, linearize, parse_conllu
from qcomp.engine import compress, init_state, oracle_path

__all__ = [
    "Instance",
    "ParseGraph",
    "compress",
    "init_state",
    "linearize",
    "oracle_path",
    "parse_conllu",
]
