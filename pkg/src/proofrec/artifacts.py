"""Workspace layout and artifact bundling.

Every trained artifact records the fingerprint of the tokenizer it was built
with; the checkpoint and index loaders refuse mismatched combinations so a
service can never silently pair a model with the wrong vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from proofrec.baselines import load_baselines
from proofrec.bpe import BpeCodec, load_tokenizer, tokenizer_fingerprint
from proofrec.corpus import load_library, load_trace
from proofrec.encoder.checkpoint import load_checkpoint, params_fingerprint
from proofrec.encoder.model import EncoderParameters
from proofrec.featurize import FeaturizerConfig
from proofrec.retrieval import LemmaIndex, LemmaLibrary, load_index

TRACES_FILE = "traces.jsonl"
LIBRARY_FILE = "library.jsonl"
TOKENIZER_DIR = "tokenizer"
PRETRAIN_CKPT = "pretrained.npz"
COMMAND_CKPT = "command.npz"
LEMMA_CKPT = "lemma.npz"
BASELINES_FILE = "baselines.npz"
INDEX_FILE = "index.npz"
RESULTS_DIR = "results"


class ArtifactError(RuntimeError):
    pass


def workdir_path(workdir, name: str) -> Path:
    return Path(workdir) / name


def load_codec(workdir) -> tuple[BpeCodec, str]:
    merges, vocab = load_tokenizer(workdir_path(workdir, TOKENIZER_DIR))
    return BpeCodec(merges, vocab), tokenizer_fingerprint(merges, vocab)


@dataclass
class ServiceBundle:
    codec: BpeCodec
    tokenizer_fp: str
    command_params: EncoderParameters
    commands: list[str]
    command_fp: str
    featurizer: FeaturizerConfig
    index: LemmaIndex | None
    lemma_params: EncoderParameters | None

    @property
    def fingerprints(self) -> dict:
        fps = {"tokenizer": self.tokenizer_fp, "command_model": self.command_fp}
        if self.lemma_params is not None:
            fps["lemma_model"] = params_fingerprint(self.lemma_params)
        if self.index is not None:
            fps["index"] = self.index.fingerprints.get("index", "")
        return fps


def load_bundle(workdir) -> ServiceBundle:
    """Load and cross-check everything the service needs.

    The command checkpoint is required; lemma retrieval artifacts are wired
    in when present. Any fingerprint mismatch refuses to load.
    """
    workdir = Path(workdir)
    try:
        codec, tok_fp = load_codec(workdir)
    except FileNotFoundError as exc:
        raise ArtifactError(f"tokenizer not found in {workdir}: {exc}") from exc

    cmd_path = workdir / COMMAND_CKPT
    if not cmd_path.exists():
        raise ArtifactError(f"command checkpoint missing: {cmd_path}")
    try:
        command_params, commands, header = load_checkpoint(
            cmd_path, expect_tokenizer_fingerprint=tok_fp)
    except ValueError as exc:
        raise ArtifactError(str(exc)) from exc
    history_len = header["extra"].get("history_len", 3)
    max_tokens = header["extra"].get("max_tokens", 256)
    featurizer = FeaturizerConfig(history_len=history_len,
                                  max_tokens=max_tokens)

    index = None
    lemma_params = None
    lemma_path = workdir / LEMMA_CKPT
    index_path = workdir / INDEX_FILE
    if index_path.exists():
        tfidf = None
        baselines_path = workdir / BASELINES_FILE
        if baselines_path.exists():
            tfidf, _, _ = load_baselines(baselines_path)
        if lemma_path.exists():
            try:
                lemma_params, _, _ = load_checkpoint(
                    lemma_path, expect_tokenizer_fingerprint=tok_fp)
            except ValueError as exc:
                raise ArtifactError(str(exc)) from exc
        index = load_index(index_path, params=lemma_params, codec=codec,
                           tfidf=tfidf)
        expect = index.fingerprints.get("tokenizer")
        if expect is not None and expect != tok_fp:
            raise ArtifactError(
                "index was built against a different tokenizer "
                f"({expect[:12]}... vs {tok_fp[:12]}...)")
        if lemma_params is not None:
            expect = index.fingerprints.get("lemma_model")
            got = params_fingerprint(lemma_params)
            if expect is not None and expect != got:
                raise ArtifactError(
                    "index embeddings were built with a different lemma "
                    f"model ({expect[:12]}... vs {got[:12]}...)")

    return ServiceBundle(
        codec=codec,
        tokenizer_fp=tok_fp,
        command_params=command_params,
        commands=commands,
        command_fp=params_fingerprint(command_params),
        featurizer=featurizer,
        index=index,
        lemma_params=lemma_params,
    )


def load_corpus(workdir):
    steps = load_trace(workdir_path(workdir, TRACES_FILE))
    library = load_library(workdir_path(workdir, LIBRARY_FILE))
    return steps, LemmaLibrary(tuple(library))
