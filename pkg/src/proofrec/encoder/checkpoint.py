"""Self-describing parameter checkpoints.

An npz container holding a JSON header (architecture, command vocabulary,
and the fingerprint of the tokenizer the model was trained with) plus the
named tensors. Loading rebuilds the parameter store and verifies shapes and,
when requested, the tokenizer binding.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from proofrec.encoder.model import EncoderConfig, EncoderParameters

FORMAT_VERSION = 1


def params_fingerprint(params: EncoderParameters) -> str:
    h = hashlib.sha256()
    h.update(json.dumps({
        "config": params.config.__dict__,
        "vocab_size": params.vocab_size,
        "n_commands": params.n_commands,
    }, sort_keys=True).encode())
    for name in sorted(params.tensors):
        h.update(name.encode())
        h.update(params.tensors[name].tobytes())
    return h.hexdigest()


def save_checkpoint(path, params: EncoderParameters, commands: list[str],
                    tokenizer_fingerprint: str, extra: dict | None = None) -> None:
    header = {
        "version": FORMAT_VERSION,
        "config": dict(params.config.__dict__),
        "vocab_size": params.vocab_size,
        "n_commands": params.n_commands,
        "commands": commands,
        "tokenizer_fingerprint": tokenizer_fingerprint,
        "extra": extra or {},
    }
    arrays = {f"t:{k}": v for k, v in params.tensors.items()}
    np.savez_compressed(
        path,
        __header__=np.frombuffer(json.dumps(header).encode("utf-8"),
                                 dtype=np.uint8),
        **arrays,
    )


def load_checkpoint(path, expect_tokenizer_fingerprint: str | None = None):
    """Returns (params, commands, header). Raises on shape or binding
    mismatch."""
    with np.load(path) as z:
        header = json.loads(bytes(z["__header__"]).decode("utf-8"))
        if header["version"] != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header['version']}")
        if (expect_tokenizer_fingerprint is not None
                and header["tokenizer_fingerprint"] != expect_tokenizer_fingerprint):
            raise ValueError(
                "checkpoint was trained with a different tokenizer "
                f"(checkpoint {header['tokenizer_fingerprint'][:12]}..., "
                f"loaded {expect_tokenizer_fingerprint[:12]}...)")
        config = EncoderConfig(**header["config"])
        tensors = {k[2:]: z[k] for k in z.files if k.startswith("t:")}
    params = EncoderParameters(config, header["vocab_size"],
                               header["n_commands"], tensors)
    reference = EncoderParameters.init(config, header["vocab_size"],
                                       header["n_commands"])
    for name, ref in reference.tensors.items():
        if name not in tensors:
            raise ValueError(f"checkpoint missing tensor {name!r}")
        if tensors[name].shape != ref.shape:
            raise ValueError(
                f"tensor {name!r} has shape {tensors[name].shape}, "
                f"expected {ref.shape}")
    return params, list(header["commands"]), header
