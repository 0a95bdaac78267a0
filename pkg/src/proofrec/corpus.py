"""Proof-trace data model, line-delimited trace IO, splits, and the synthetic
corpus generator.

Trace files are UTF-8, one JSON record per line:

    {"proof_id": str, "step": int,
     "sequent": {"ant": [term...], "cons": [term...], "hid": [term...]},
     "history": [str...], "command": str, "lemma": str (optional)}

A term object is ``{"k": "op"|"var"|"const"|"int", "n": name,
"t": type name (optional), "v": integer value (int terms),
"c": [child terms...] (op terms)}``.

Lemma library files hold one ``{"id", "theory", "statement"}`` record per
line with the same term schema.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class TraceFormatError(ValueError):
    """Raised for malformed trace or library files; names line and field."""


class TermKind(str, enum.Enum):
    OPERATOR = "op"
    VARIABLE = "var"
    CONSTANT = "const"
    INTEGER = "int"


@dataclass(frozen=True)
class Term:
    """A node of a formula tree.

    Operators may carry children; variables, constants and integer literals
    are leaves. Integer literals carry a signed ``value`` and may have an
    empty name.
    """

    kind: TermKind
    name: str = ""
    type_name: str | None = None
    value: int | None = None
    children: tuple["Term", ...] = ()

    def __post_init__(self):
        if self.kind is not TermKind.OPERATOR and self.children:
            raise ValueError(f"{self.kind.value} terms cannot have children")
        if self.kind is not TermKind.INTEGER and not self.name:
            raise ValueError(f"{self.kind.value} terms require a nonempty name")
        if self.kind is TermKind.INTEGER and self.value is None:
            raise ValueError("integer terms require a value")

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children)


def op(name: str, *children: Term) -> Term:
    return Term(TermKind.OPERATOR, name=name, children=tuple(children))


def var(name: str, type_name: str | None = None) -> Term:
    return Term(TermKind.VARIABLE, name=name, type_name=type_name)


def const(name: str, type_name: str | None = None) -> Term:
    return Term(TermKind.CONSTANT, name=name, type_name=type_name)


def intlit(value: int) -> Term:
    return Term(TermKind.INTEGER, value=int(value))


@dataclass(frozen=True)
class SequentState:
    """One proof state: antecedent, consequent, and hidden formula regions."""

    antecedents: tuple[Term, ...] = ()
    consequents: tuple[Term, ...] = ()
    hidden: tuple[Term, ...] = ()

    def __post_init__(self):
        if not (self.antecedents or self.consequents or self.hidden):
            raise ValueError("sequent must contain at least one formula")


@dataclass(frozen=True)
class ProofStep:
    """One recorded prover interaction."""

    sequent: SequentState
    history: tuple[str, ...]
    command: str
    proof_id: str
    step_index: int
    lemma_name: str | None = None

    def __post_init__(self):
        if not self.command:
            raise ValueError("command must be nonempty")
        if self.step_index < 0:
            raise ValueError("step_index must be nonnegative")


@dataclass(frozen=True)
class LemmaRecord:
    lemma_id: str
    theory: str
    statement: Term


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic train/test split: same seed and input order, same split."""

    train_fraction: float
    seed: int = 0


# ---------------------------------------------------------------------------
# wire <-> domain conversion

_TERM_KINDS = {k.value: k for k in TermKind}


def term_from_obj(obj, where: str = "term") -> Term:
    if not isinstance(obj, dict):
        raise TraceFormatError(f"{where}: term must be an object")
    kind_code = obj.get("k")
    if kind_code not in _TERM_KINDS:
        raise TraceFormatError(f"{where}: unknown term kind {kind_code!r}")
    kind = _TERM_KINDS[kind_code]
    try:
        if kind is TermKind.INTEGER:
            return Term(kind, name=obj.get("n", ""), value=int(obj["v"]))
        children = tuple(
            term_from_obj(c, where) for c in obj.get("c", ())
        )
        return Term(
            kind,
            name=obj.get("n", ""),
            type_name=obj.get("t"),
            children=children,
        )
    except TraceFormatError:
        raise
    except KeyError as exc:
        raise TraceFormatError(f"{where}: missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise TraceFormatError(f"{where}: {exc}") from exc


def term_to_obj(t: Term) -> dict:
    obj: dict = {"k": t.kind.value}
    if t.name:
        obj["n"] = t.name
    if t.type_name is not None:
        obj["t"] = t.type_name
    if t.kind is TermKind.INTEGER:
        obj["v"] = t.value
    if t.children:
        obj["c"] = [term_to_obj(c) for c in t.children]
    return obj


def _sequent_from_obj(obj, where: str) -> SequentState:
    if not isinstance(obj, dict):
        raise TraceFormatError(f"{where}: field 'sequent' must be an object")
    regions = {}
    for key in ("ant", "cons", "hid"):
        raw = obj.get(key, [])
        if not isinstance(raw, list):
            raise TraceFormatError(f"{where}: sequent field {key!r} must be an array")
        regions[key] = tuple(term_from_obj(t, f"{where} sequent.{key}") for t in raw)
    try:
        return SequentState(regions["ant"], regions["cons"], regions["hid"])
    except ValueError as exc:
        raise TraceFormatError(f"{where}: {exc}") from exc


def _sequent_to_obj(s: SequentState) -> dict:
    return {
        "ant": [term_to_obj(t) for t in s.antecedents],
        "cons": [term_to_obj(t) for t in s.consequents],
        "hid": [term_to_obj(t) for t in s.hidden],
    }


def step_from_obj(obj, where: str) -> ProofStep:
    if not isinstance(obj, dict):
        raise TraceFormatError(f"{where}: record must be an object")
    for fld in ("proof_id", "step", "sequent", "command"):
        if fld not in obj:
            raise TraceFormatError(f"{where}: missing field {fld!r}")
    history = obj.get("history", [])
    if not isinstance(history, list) or not all(isinstance(h, str) for h in history):
        raise TraceFormatError(f"{where}: field 'history' must be an array of strings")
    try:
        return ProofStep(
            sequent=_sequent_from_obj(obj["sequent"], where),
            history=tuple(history),
            command=obj["command"],
            proof_id=obj["proof_id"],
            step_index=int(obj["step"]),
            lemma_name=obj.get("lemma"),
        )
    except TraceFormatError:
        raise
    except (TypeError, ValueError) as exc:
        raise TraceFormatError(f"{where}: {exc}") from exc


def step_to_obj(step: ProofStep) -> dict:
    obj = {
        "proof_id": step.proof_id,
        "step": step.step_index,
        "sequent": _sequent_to_obj(step.sequent),
        "history": list(step.history),
        "command": step.command,
    }
    if step.lemma_name is not None:
        obj["lemma"] = step.lemma_name
    return obj


# ---------------------------------------------------------------------------
# file IO

def load_trace(path) -> list[ProofStep]:
    """Parse a trace file, preserving record order.

    Raises TraceFormatError naming the offending line and field.
    """
    steps = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"line {lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceFormatError(f"{where}: invalid JSON: {exc}") from exc
            steps.append(step_from_obj(obj, where))
    return steps


def save_trace(path, steps: Iterable[ProofStep]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for step in steps:
            fh.write(json.dumps(step_to_obj(step), ensure_ascii=True) + "\n")


def load_library(path) -> list[LemmaRecord]:
    lemmas = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"line {lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceFormatError(f"{where}: invalid JSON: {exc}") from exc
            for fld in ("id", "theory", "statement"):
                if fld not in obj:
                    raise TraceFormatError(f"{where}: missing field {fld!r}")
            if obj["id"] in seen:
                raise TraceFormatError(f"{where}: duplicate lemma id {obj['id']!r}")
            seen.add(obj["id"])
            lemmas.append(
                LemmaRecord(
                    lemma_id=obj["id"],
                    theory=obj["theory"],
                    statement=term_from_obj(obj["statement"], f"{where} statement"),
                )
            )
    return lemmas


def save_library(path, lemmas: Iterable[LemmaRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lemma in lemmas:
            obj = {
                "id": lemma.lemma_id,
                "theory": lemma.theory,
                "statement": term_to_obj(lemma.statement),
            }
            fh.write(json.dumps(obj, ensure_ascii=True) + "\n")


# ---------------------------------------------------------------------------
# splits and subsampling

def split(steps: Sequence, spec: SplitSpec) -> tuple[list, list]:
    """Disjoint train/test partition with |train| = floor(train_fraction * N).

    Element order within each half follows the input order, so the result is
    stable under the seed and input ordering.
    """
    if not 0.0 < spec.train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    if len(steps) == 0:
        raise ValueError("cannot split an empty list")
    n_train = math.floor(spec.train_fraction * len(steps))
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(len(steps))
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return [steps[i] for i in train_idx], [steps[i] for i in test_idx]


def subsample(steps: Sequence, n: int, seed: int) -> list:
    """Uniform sample of n elements without replacement, input order kept."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > len(steps):
        raise ValueError(f"cannot subsample {n} from {len(steps)} steps")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(steps), size=n, replace=False))
    return [steps[i] for i in idx]


# ---------------------------------------------------------------------------
# synthetic corpus

COMMAND_POOL = (
    "lemma", "grind", "assert", "skosimp", "flatten", "split", "inst",
    "expand", "lift-if", "bddsimp", "case", "induct", "rewrite", "beta",
    "iff", "ground", "prop", "smash", "typepred", "decompose", "name",
    "hide", "copy", "replace", "same-name", "postpone",
)

BASE_TYPES = ("nat", "int", "real", "bool")


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the planted-rule synthetic corpus.

    Every generated sequent carries one command cue operator
    (``cue_<command>``) and one lemma key operator (``key_<j>``); the cue
    determines the step's command and the key names the single library lemma
    whose statement shares it. Everything else is distractor structure drawn
    from a shared symbol pool, so the cues are the only class signal.
    """

    n_commands: int = 10
    n_lemmas: int = 50
    n_steps: int = 2000
    seed: int = 0
    lemma_fraction: float | None = None
    n_distractor_ops: int = 20
    n_theories: int = 8
    min_proof_len: int = 4
    max_proof_len: int = 12

    def __post_init__(self):
        if self.n_commands < 2:
            raise ValueError("need at least 2 commands")
        if self.n_lemmas < 2:
            raise ValueError("need at least 2 lemmas")
        if self.n_steps < 1:
            raise ValueError("need at least 1 step")
        if self.lemma_fraction is not None and not 0.0 <= self.lemma_fraction <= 1.0:
            raise ValueError("lemma_fraction must lie in [0, 1]")
        if self.n_commands > len(COMMAND_POOL):
            raise ValueError(f"at most {len(COMMAND_POOL)} command names available")


def synthetic_command_names(cfg: SynthConfig) -> list[str]:
    return list(COMMAND_POOL[: cfg.n_commands])


def command_cue_token(command: str) -> str:
    return f"cue_{command}"


def lemma_key_token(j: int) -> str:
    return f"key_{j:04d}"


def _random_leaf(rng, custom_types) -> Term:
    r = rng.integers(0, 4)
    if r == 0:
        return intlit(int(rng.integers(-9, 100)))
    type_pool = BASE_TYPES + custom_types
    tname = type_pool[rng.integers(0, len(type_pool))]
    name = f"x{rng.integers(0, 50)}"
    if r == 1:
        return const(name, tname)
    return var(name, tname)


def _distractor_formula(rng, ops, custom_types, depth: int = 2) -> Term:
    name = ops[rng.integers(0, len(ops))]
    n_children = int(rng.integers(1, 3))
    children = []
    for _ in range(n_children):
        if depth > 0 and rng.random() < 0.4:
            children.append(_distractor_formula(rng, ops, custom_types, depth - 1))
        else:
            children.append(_random_leaf(rng, custom_types))
    return op(name, *children)


def generate_synthetic(cfg: SynthConfig) -> tuple[list[ProofStep], list[LemmaRecord]]:
    """Deterministic planted-rule corpus; see SynthConfig for the rule."""
    rng = np.random.default_rng(cfg.seed)
    commands = synthetic_command_names(cfg)
    ops = [f"f{i:02d}" for i in range(cfg.n_distractor_ops)]
    custom_types = ("ordtype", "vect")

    library = []
    for j in range(cfg.n_lemmas):
        key = lemma_key_token(j)
        theory = f"th{j % cfg.n_theories:02d}"
        statement = op(
            "all",
            op(key, var("u", BASE_TYPES[j % len(BASE_TYPES)]), intlit(j % 7)),
            op(key, var("v", BASE_TYPES[(j + 1) % len(BASE_TYPES)])),
        )
        library.append(LemmaRecord(f"lem_{theory}_{j:04d}", theory, statement))

    steps: list[ProofStep] = []
    proof_no = 0
    while len(steps) < cfg.n_steps:
        proof_len = int(rng.integers(cfg.min_proof_len, cfg.max_proof_len + 1))
        proof_id = f"proof_{proof_no:05d}"
        proof_no += 1
        history: list[str] = []
        for k in range(proof_len):
            if len(steps) >= cfg.n_steps:
                break
            if cfg.lemma_fraction is None:
                command = commands[rng.integers(0, len(commands))]
            elif rng.random() < cfg.lemma_fraction:
                command = "lemma"
            else:
                command = commands[1 + rng.integers(0, len(commands) - 1)]
            j = int(rng.integers(0, cfg.n_lemmas))
            cue = command_cue_token(command)
            key = lemma_key_token(j)

            cue_formula = op(
                "implies",
                op(cue, _random_leaf(rng, custom_types), _random_leaf(rng, custom_types)),
                op(cue, _random_leaf(rng, custom_types)),
            )
            key_formula = op(
                ops[rng.integers(0, len(ops))],
                op(key, _random_leaf(rng, custom_types)),
                op(key, intlit(int(rng.integers(0, 20)))),
            )
            consequents = [cue_formula]
            if rng.random() < 0.5:
                consequents.append(_distractor_formula(rng, ops, custom_types))
            antecedents = [key_formula]
            if rng.random() < 0.5:
                antecedents.append(_distractor_formula(rng, ops, custom_types))
            hidden = []
            if rng.random() < 0.2:
                hidden.append(_distractor_formula(rng, ops, custom_types))

            steps.append(
                ProofStep(
                    sequent=SequentState(
                        tuple(antecedents), tuple(consequents), tuple(hidden)
                    ),
                    history=tuple(history),
                    command=command,
                    proof_id=proof_id,
                    step_index=k,
                    lemma_name=library[j].lemma_id if command == "lemma" else None,
                )
            )
            history.append(command)
    return steps, library
