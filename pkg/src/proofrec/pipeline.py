"""Shared featurize/encode plumbing between the CLI, service, and tests."""

from __future__ import annotations

from proofrec.bpe import BpeCodec
from proofrec.corpus import LemmaRecord, ProofStep
from proofrec.featurize import (
    BASE_TYPE_NAMES,
    FeaturizeMode,
    FeaturizerConfig,
    featurize_for_command,
    featurize_lemma,
    featurize_sequent,
)


def command_streams(steps: list[ProofStep], cfg: FeaturizerConfig):
    return [featurize_for_command(s.sequent, s.history, cfg) for s in steps]


def sequent_query_streams(steps: list[ProofStep],
                          known_types=BASE_TYPE_NAMES):
    return [featurize_sequent(s.sequent, FeaturizeMode.TYPED, known_types)
            for s in steps]


def lemma_statement_streams(library: list[LemmaRecord],
                            known_types=BASE_TYPE_NAMES):
    return [featurize_lemma(l, known_types) for l in library]


def tokenizer_corpus(steps: list[ProofStep], library: list[LemmaRecord],
                     cfg: FeaturizerConfig):
    """Streams for vocabulary training and masked-token pretraining: the
    command-task streams plus typed sequent and lemma streams."""
    return (command_streams(steps, cfg)
            + sequent_query_streams(steps, cfg.known_types)
            + lemma_statement_streams(library, cfg.known_types))


def encode_streams(codec: BpeCodec, streams, max_len: int):
    return [codec.encode(s)[:max_len] for s in streams]


def lemma_pairs(steps: list[ProofStep]) -> list[tuple[int, str]]:
    """(step index, lemma id) for every recorded lemma import."""
    return [(i, s.lemma_name) for i, s in enumerate(steps)
            if s.lemma_name is not None]
