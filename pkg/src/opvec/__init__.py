"""Opcode bigram TF-IDF features and vulnerability classifiers for EVM smart contracts."""

from .disasm import Bytecode, Instruction, OpcodeSequence, disassemble, parse_opcode_text
from .simplify import SimplifiedTokenSequence, SimplifiedVocabulary, simplify_opcode, simplify_sequence, vocabulary
from .tfidf import BigramCounts, BigramUniverse, FeatureVector, TfidfCorpusModel, build_universe, count_bigrams, fit_corpus, tfidf_vector

__version__ = "0.1.0"

__all__ = [
    "BigramCounts",
    "BigramUniverse",
    "Bytecode",
    "FeatureVector",
    "Instruction",
    "OpcodeSequence",
    "SimplifiedTokenSequence",
    "SimplifiedVocabulary",
    "TfidfCorpusModel",
    "build_universe",
    "count_bigrams",
    "disassemble",
    "fit_corpus",
    "parse_opcode_text",
    "simplify_opcode",
    "simplify_sequence",
    "tfidf_vector",
    "vocabulary",
]
