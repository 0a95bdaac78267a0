"""Converts formula trees, sequents, histories, and lemma statements into
flat token streams.

Two substitution modes exist for variable and constant leaves: ``placeholder``
collapses them to one generic token, ``typed`` substitutes the leaf's type
name (falling back to a generic type token for absent or non-base types).
Operator names and integer literals always pass through; syntactic
punctuation never appears.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from proofrec.corpus import LemmaRecord, SequentState, Term, TermKind
from proofrec.tokens import ANT, CMD1, CONS, HID, NOCMD, SEP, TRM, TYP

BASE_TYPE_NAMES = frozenset({"nat", "int", "real", "bool", "rat"})


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[str, ...]

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self):
        return len(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]


class FeaturizeMode(str, enum.Enum):
    PLACEHOLDER = "placeholder"
    TYPED = "typed"


@dataclass(frozen=True)
class FeaturizerConfig:
    """Stream construction knobs.

    ``known_types`` is the set of type names emitted verbatim in typed mode;
    any other (custom or higher-order) type collapses to the generic type
    token.
    """

    mode: FeaturizeMode = FeaturizeMode.PLACEHOLDER
    history_len: int = 3
    max_tokens: int = 256
    known_types: frozenset[str] = field(default=BASE_TYPE_NAMES)

    def __post_init__(self):
        if self.history_len < 0:
            raise ValueError("history_len must be nonnegative")
        if self.max_tokens < 16:
            raise ValueError("max_tokens must be at least 16")


def _term_tokens(t: Term, mode: FeaturizeMode, known_types, out: list[str]) -> None:
    if t.kind is TermKind.OPERATOR:
        out.append(t.name)
        for c in t.children:
            _term_tokens(c, mode, known_types, out)
    elif t.kind is TermKind.INTEGER:
        out.append(str(t.value))
    else:  # variable or constant leaf
        if mode is FeaturizeMode.PLACEHOLDER:
            out.append(TRM)
        elif t.type_name is not None and t.type_name in known_types:
            out.append(t.type_name)
        else:
            out.append(TYP)


def featurize_term(
    t: Term,
    mode: FeaturizeMode = FeaturizeMode.PLACEHOLDER,
    known_types: frozenset[str] = BASE_TYPE_NAMES,
) -> TokenStream:
    """Depth-first pre-order token stream of one formula tree.

    Emits exactly one token per tree node: operator names and integer
    literals verbatim, variable/constant leaves per the mode.
    """
    out: list[str] = []
    _term_tokens(t, mode, known_types, out)
    return TokenStream(tuple(out))


def featurize_sequent(
    s: SequentState,
    mode: FeaturizeMode = FeaturizeMode.PLACEHOLDER,
    known_types: frozenset[str] = BASE_TYPE_NAMES,
) -> TokenStream:
    """Region-marked stream: each region marker is always emitted, formulas
    within a region are separated by the separator token."""
    out: list[str] = []
    for marker, formulas in (
        (ANT, s.antecedents),
        (CONS, s.consequents),
        (HID, s.hidden),
    ):
        out.append(marker)
        for i, formula in enumerate(formulas):
            if i:
                out.append(SEP)
            _term_tokens(formula, mode, known_types, out)
    return TokenStream(tuple(out))


def featurize_for_command(
    s: SequentState,
    history: tuple[str, ...] | list[str],
    cfg: FeaturizerConfig = FeaturizerConfig(),
) -> TokenStream:
    """Task stream for next-command prediction.

    Layout: task token, then the last ``history_len`` commands in
    chronological order (front-padded when the history is shorter), then the
    region-marked sequent stream. Truncation drops tail tokens only, so the
    task and history slots always survive.
    """
    out = [CMD1]
    recent = list(history)[-cfg.history_len :] if cfg.history_len else []
    out.extend([NOCMD] * (cfg.history_len - len(recent)))
    out.extend(recent)
    out.extend(featurize_sequent(s, cfg.mode, cfg.known_types))
    return TokenStream(tuple(out[: cfg.max_tokens]))


def featurize_lemma(
    lemma: LemmaRecord,
    known_types: frozenset[str] = BASE_TYPE_NAMES,
) -> TokenStream:
    """Lemma statement stream; always typed mode, no task or region tokens."""
    return featurize_term(lemma.statement, FeaturizeMode.TYPED, known_types)
