"""Train/test splits of parsed corpora with controlled atom and compound divergence."""

from .atoms import FilterPolicy, Inventories, build_inventories, vectorize
from .cache import VectorizedCorpus
from .corpus import Corpus, Manifest, SentenceRecord, Token, parse_conllu, preprocess, read_conllu, subsample
from .divergence import DivergenceConfig, SplitState, chernoff, divergences_from_assignment, score
from .errors import DBCAError
from .metrics import ChrfConfig, chrf, generalisation_score
from .splitter import (
    SplitConfig,
    SplitResult,
    evaluate_external_split,
    greedy_split,
    random_split,
    write_split,
)

__version__ = "0.1.0"

__all__ = [
    "ChrfConfig", "Corpus", "DBCAError", "DivergenceConfig", "FilterPolicy", "Inventories", "Manifest",
    "SentenceRecord", "SplitConfig", "SplitResult", "SplitState", "Token", "VectorizedCorpus",
    "build_inventories", "chernoff", "chrf", "divergences_from_assignment", "evaluate_external_split",
    "generalisation_score", "greedy_split", "parse_conllu", "preprocess", "random_split", "read_conllu",
    "score", "subsample", "vectorize", "write_split",
]
