"""Compact pre-norm self-attention encoder with hand-derived backprop.

Everything runs in numpy, double precision by default, so training is
bit-reproducible for a fixed seed on one thread and every analytic gradient
can be validated against central finite differences.

Architecture: token + learned positional embeddings, ``n_layers`` blocks of
    x = x + MHA(LN(x));  x = x + FFN(LN(x))
with a final layer norm. FFN uses exact erf-based GELU (smooth, so finite
difference checks are unpolluted by kinks). Three task heads share the
encoder: masked-token prediction, next-command classification over the
position-0 vector, and cosine scoring of mean-pooled pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from proofrec.tokens import PAD_ID

_NEG_INF = -1e30
_LN_EPS = 1e-5


@dataclass(frozen=True)
class EncoderConfig:
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    ffn_dim: int = 256
    max_len: int = 256
    dropout: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads


class EncoderParameters:
    """Named parameter tensors for the encoder plus its task heads."""

    def __init__(self, config: EncoderConfig, vocab_size: int, n_commands: int,
                 tensors: dict[str, np.ndarray]):
        self.config = config
        self.vocab_size = vocab_size
        self.n_commands = n_commands
        self.tensors = tensors

    @classmethod
    def init(cls, config: EncoderConfig, vocab_size: int,
             n_commands: int) -> "EncoderParameters":
        rng = np.random.default_rng(config.seed)
        d, f = config.d_model, config.ffn_dim

        def w(*shape):
            return rng.normal(0.0, 0.02, size=shape)

        t: dict[str, np.ndarray] = {
            "emb": w(vocab_size, d),
            "pos": w(config.max_len, d),
        }
        for i in range(config.n_layers):
            p = f"l{i}."
            t[p + "ln1.g"] = np.ones(d)
            t[p + "ln1.b"] = np.zeros(d)
            for proj in ("q", "k", "v", "o"):
                t[p + f"attn.w{proj}"] = w(d, d)
                t[p + f"attn.b{proj}"] = np.zeros(d)
            t[p + "ln2.g"] = np.ones(d)
            t[p + "ln2.b"] = np.zeros(d)
            t[p + "ffn.w1"] = w(d, f)
            t[p + "ffn.b1"] = np.zeros(f)
            t[p + "ffn.w2"] = w(f, d)
            t[p + "ffn.b2"] = np.zeros(d)
        t["lnf.g"] = np.ones(d)
        t["lnf.b"] = np.zeros(d)
        t["mlm.w"] = w(d, vocab_size)
        t["mlm.b"] = np.zeros(vocab_size)
        t["cls.w"] = w(d, n_commands)
        t["cls.b"] = np.zeros(n_commands)
        return cls(config, vocab_size, n_commands, t)

    def copy(self) -> "EncoderParameters":
        return EncoderParameters(
            self.config, self.vocab_size, self.n_commands,
            {k: v.copy() for k, v in self.tensors.items()},
        )

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}


# ---------------------------------------------------------------------------
# primitive layers

def layernorm_forward(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv, g)


def layernorm_backward(dy, cache):
    xhat, inv, g = cache
    axes = tuple(range(dy.ndim - 1))
    dg = (dy * xhat).sum(axes)
    db = dy.sum(axes)
    dxhat = dy * g
    m1 = dxhat.mean(-1, keepdims=True)
    m2 = (dxhat * xhat).mean(-1, keepdims=True)
    dx = inv * (dxhat - m1 - xhat * m2)
    return dx, dg, db


_SQRT1_2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gelu_forward(x):
    """x * Phi(x) with the Gaussian CDF cached for the backward pass."""
    phi_cdf = 0.5 * (1.0 + erf(x * _SQRT1_2))
    return x * phi_cdf, phi_cdf


def gelu(x):
    return gelu_forward(x)[0]


def gelu_backward(x, phi_cdf):
    return phi_cdf + x * np.exp(-0.5 * x * x) * _INV_SQRT_2PI


def gelu_grad(x):
    return gelu_backward(x, 0.5 * (1.0 + erf(x * _SQRT1_2)))


def softmax(z, axis=-1):
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _split_heads(x, n_heads):
    b, l, d = x.shape
    return x.reshape(b, l, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, l, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, l, h * dh)


def _proj_grad(x, dy):
    """Gradients of y = x @ w + b for x of shape (B, L, din)."""
    din = x.shape[-1]
    dout = dy.shape[-1]
    dw = x.reshape(-1, din).T @ dy.reshape(-1, dout)
    db = dy.reshape(-1, dout).sum(axis=0)
    return dw, db


# ---------------------------------------------------------------------------
# encoder forward / backward

def encoder_forward(params: EncoderParameters, ids: np.ndarray,
                    train: bool = False, drop_rng=None,
                    collect_attn: bool = False):
    """Contextual vectors for a batch of padded id sequences.

    ``ids`` has shape (B, L) with PAD_ID marking padding. Returns the final
    hidden states (B, L, d) and a cache consumed by ``encoder_backward``.
    """
    cfg = params.config
    t = params.tensors
    ids = np.asarray(ids)
    if ids.ndim != 2:
        raise ValueError("ids must be (batch, length)")
    b, l = ids.shape
    if l > cfg.max_len:
        raise ValueError(f"sequence length {l} exceeds max_len {cfg.max_len}")
    if ids.min() < 0 or ids.max() >= params.vocab_size:
        raise ValueError("token id out of vocabulary range")
    mask = ids != PAD_ID
    dropout = cfg.dropout if train else 0.0

    def maybe_drop(x, store):
        if dropout > 0.0:
            keep = (drop_rng.random(x.shape) >= dropout) / (1.0 - dropout)
            store.append(keep)
            return x * keep
        store.append(None)
        return x

    x = t["emb"][ids] + t["pos"][:l][None, :, :]
    neg_mask = np.where(mask, 0.0, _NEG_INF)[:, None, None, :]
    cache: dict = {"ids": ids, "mask": mask, "layers": [], "attns": [],
                   "drops": []}
    inv_sqrt_dh = 1.0 / math.sqrt(cfg.head_dim)
    for i in range(cfg.n_layers):
        p = f"l{i}."
        lc: dict = {"x_in": x}
        a1, ln1c = layernorm_forward(x, t[p + "ln1.g"], t[p + "ln1.b"])
        q = a1 @ t[p + "attn.wq"] + t[p + "attn.bq"]
        k = a1 @ t[p + "attn.wk"] + t[p + "attn.bk"]
        v = a1 @ t[p + "attn.wv"] + t[p + "attn.bv"]
        qh = _split_heads(q, cfg.n_heads)
        kh = _split_heads(k, cfg.n_heads)
        vh = _split_heads(v, cfg.n_heads)
        scores = qh @ kh.transpose(0, 1, 3, 2) * inv_sqrt_dh + neg_mask
        attn = softmax(scores)
        oh = attn @ vh
        o_merged = _merge_heads(oh)
        attn_out = o_merged @ t[p + "attn.wo"] + t[p + "attn.bo"]
        attn_out = maybe_drop(attn_out, cache["drops"])
        x = x + attn_out
        lc.update(a1=a1, ln1c=ln1c, qh=qh, kh=kh, vh=vh, attn=attn,
                  o_merged=o_merged, x_mid=x)
        a2, ln2c = layernorm_forward(x, t[p + "ln2.g"], t[p + "ln2.b"])
        h1 = a2 @ t[p + "ffn.w1"] + t[p + "ffn.b1"]
        hact, phi_cdf = gelu_forward(h1)
        ffn_out = hact @ t[p + "ffn.w2"] + t[p + "ffn.b2"]
        ffn_out = maybe_drop(ffn_out, cache["drops"])
        x = x + ffn_out
        lc.update(a2=a2, ln2c=ln2c, h1=h1, hact=hact, phi_cdf=phi_cdf)
        cache["layers"].append(lc)
        if collect_attn:
            cache["attns"].append(attn)
    h, lnfc = layernorm_forward(x, t["lnf.g"], t["lnf.b"])
    cache["lnfc"] = lnfc
    return h, cache


def encoder_backward(params: EncoderParameters, cache,
                     dh: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients given d(loss)/d(hidden states)."""
    cfg = params.config
    t = params.tensors
    grads = params.zeros_like()
    ids = cache["ids"]
    drops = cache["drops"]

    dx, grads["lnf.g"], grads["lnf.b"] = layernorm_backward(dh, cache["lnfc"])
    for i in reversed(range(cfg.n_layers)):
        p = f"l{i}."
        lc = cache["layers"][i]
        # FFN block
        dffn = dx if drops[2 * i + 1] is None else dx * drops[2 * i + 1]
        grads[p + "ffn.w2"], grads[p + "ffn.b2"] = _proj_grad(lc["hact"], dffn)
        dhact = dffn @ t[p + "ffn.w2"].T
        dh1 = dhact * gelu_backward(lc["h1"], lc["phi_cdf"])
        grads[p + "ffn.w1"], grads[p + "ffn.b1"] = _proj_grad(lc["a2"], dh1)
        da2 = dh1 @ t[p + "ffn.w1"].T
        dx_mid, grads[p + "ln2.g"], grads[p + "ln2.b"] = layernorm_backward(
            da2, lc["ln2c"])
        dx_mid = dx_mid + dx
        # attention block
        datt = dx_mid if drops[2 * i] is None else dx_mid * drops[2 * i]
        grads[p + "attn.wo"], grads[p + "attn.bo"] = _proj_grad(
            lc["o_merged"], datt)
        do_merged = datt @ t[p + "attn.wo"].T
        do_h = _split_heads(do_merged, cfg.n_heads)
        attn = lc["attn"]
        dattn = do_h @ lc["vh"].transpose(0, 1, 3, 2)
        dvh = attn.transpose(0, 1, 3, 2) @ do_h
        dscores = attn * (dattn - (dattn * attn).sum(-1, keepdims=True))
        dscores /= math.sqrt(cfg.head_dim)
        dqh = dscores @ lc["kh"]
        dkh = dscores.transpose(0, 1, 3, 2) @ lc["qh"]
        dq = _merge_heads(dqh)
        dk = _merge_heads(dkh)
        dv = _merge_heads(dvh)
        a1 = lc["a1"]
        grads[p + "attn.wq"], grads[p + "attn.bq"] = _proj_grad(a1, dq)
        grads[p + "attn.wk"], grads[p + "attn.bk"] = _proj_grad(a1, dk)
        grads[p + "attn.wv"], grads[p + "attn.bv"] = _proj_grad(a1, dv)
        da1 = dq @ t[p + "attn.wq"].T + dk @ t[p + "attn.wk"].T \
            + dv @ t[p + "attn.wv"].T
        dx_in, grads[p + "ln1.g"], grads[p + "ln1.b"] = layernorm_backward(
            da1, lc["ln1c"])
        dx = dx_mid + dx_in
    np.add.at(grads["emb"], ids, dx)
    grads["pos"][: ids.shape[1]] = dx.sum(axis=0)
    return grads


# ---------------------------------------------------------------------------
# pooling and task heads

def mean_pool(h: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Mean of contextual vectors over non-pad positions, per sequence."""
    counts = mask.sum(axis=1)
    if np.any(counts == 0):
        raise ValueError("cannot pool an empty (all-pad) sequence")
    return (h * mask[:, :, None]).sum(axis=1) / counts[:, None]


def mean_pool_backward(du: np.ndarray, mask: np.ndarray) -> np.ndarray:
    counts = mask.sum(axis=1)
    return du[:, None, :] * mask[:, :, None] / counts[:, None, None]


def pad_batch(sequences, pad_to: int | None = None) -> np.ndarray:
    """Right-pad integer id sequences into a (B, L) array of PAD_ID."""
    if len(sequences) == 0:
        raise ValueError("empty batch")
    length = max(len(s) for s in sequences)
    if pad_to is not None:
        length = max(length, pad_to)
    out = np.full((len(sequences), length), PAD_ID, dtype=np.int64)
    for i, seq in enumerate(sequences):
        out[i, : len(seq)] = seq
    return out


def forward(ids, params: EncoderParameters) -> np.ndarray:
    """Contextual vectors (len, d_model) for one id sequence, inference mode."""
    seq = np.asarray(list(ids), dtype=np.int64)
    if seq.size == 0:
        raise ValueError("empty sequence")
    h, _ = encoder_forward(params, seq[None, :])
    return h[0]


def embed_mean(ids, params: EncoderParameters) -> np.ndarray:
    """Mean-pooled contextual vector for one id sequence."""
    seq = np.asarray(list(ids), dtype=np.int64)
    if seq.size == 0:
        raise ValueError("empty sequence")
    h, cache = encoder_forward(params, seq[None, :])
    return mean_pool(h, cache["mask"])[0]


def classify_command(ids, params: EncoderParameters,
                     commands: list[str]) -> list[tuple[str, float]]:
    """Full command ranking with probabilities from the position-0 head."""
    seq = np.asarray(list(ids), dtype=np.int64)
    h, _ = encoder_forward(params, seq[None, :])
    logits = h[0, 0] @ params.tensors["cls.w"] + params.tensors["cls.b"]
    probs = softmax(logits[None, :])[0]
    order = sorted(range(len(commands)), key=lambda i: (-probs[i], commands[i]))
    return [(commands[i], float(probs[i])) for i in order]


def siamese_score(sequent_ids, lemma_ids, params: EncoderParameters) -> float:
    """Cosine similarity of mean-pooled embeddings under shared weights.

    Zero-norm embeddings score 0 by convention.
    """
    u = embed_mean(sequent_ids, params)
    v = embed_mean(lemma_ids, params)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v / (nu * nv))


# ---------------------------------------------------------------------------
# losses (value + full parameter gradients)

def _ce_from_logits(logits: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy and d(loss)/d(logits) for (N, C) logits."""
    n = logits.shape[0]
    probs = softmax(logits)
    loss = -float(np.mean(np.log(probs[np.arange(n), targets] + 1e-300)))
    dlogits = probs
    dlogits[np.arange(n), targets] -= 1.0
    dlogits /= n
    return loss, dlogits


def mlm_loss(params: EncoderParameters, ids: np.ndarray,
             positions: np.ndarray, targets: np.ndarray,
             compute_grads: bool = True, train: bool = False, drop_rng=None):
    """Masked-token cross-entropy at the selected positions.

    ``positions`` is a (B, L) boolean array selecting the predicted slots of
    the already-corrupted ``ids``; ``targets`` the original ids there, in
    row-major order.
    """
    if not positions.any():
        raise ValueError("no masked positions in batch")
    t = params.tensors
    h, cache = encoder_forward(params, ids, train=train, drop_rng=drop_rng)
    hs = h[positions]
    logits = hs @ t["mlm.w"] + t["mlm.b"]
    loss, dlogits = _ce_from_logits(logits, targets)
    if not compute_grads:
        return loss, None
    dh = np.zeros_like(h)
    dh[positions] = dlogits @ t["mlm.w"].T
    grads = encoder_backward(params, cache, dh)
    grads["mlm.w"] += hs.T @ dlogits
    grads["mlm.b"] += dlogits.sum(axis=0)
    return loss, grads


def classifier_loss(params: EncoderParameters, ids: np.ndarray,
                    labels: np.ndarray, compute_grads: bool = True,
                    train: bool = False, drop_rng=None):
    """Cross-entropy of the command head over position-0 vectors."""
    t = params.tensors
    h, cache = encoder_forward(params, ids, train=train, drop_rng=drop_rng)
    pooled = h[:, 0, :]
    logits = pooled @ t["cls.w"] + t["cls.b"]
    loss, dlogits = _ce_from_logits(logits, labels)
    if not compute_grads:
        return loss, None
    dh = np.zeros_like(h)
    dh[:, 0, :] = dlogits @ t["cls.w"].T
    grads = encoder_backward(params, cache, dh)
    grads["cls.w"] += pooled.T @ dlogits
    grads["cls.b"] += dlogits.sum(axis=0)
    return loss, grads


def siamese_loss(params: EncoderParameters, seq_ids: np.ndarray,
                 lem_ids: np.ndarray, labels: np.ndarray,
                 compute_grads: bool = True):
    """Mean squared error between pair cosine scores and {0,1} labels.

    Both inputs pass through the same parameter store; gradients from the
    two towers accumulate into the shared tensors.
    """
    hs, cs = encoder_forward(params, seq_ids)
    hl, cl = encoder_forward(params, lem_ids)
    mu = cs["mask"]
    ml = cl["mask"]
    u = mean_pool(hs, mu)
    v = mean_pool(hl, ml)
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    ok = (nu > 0) & (nv > 0)
    denom = np.where(ok, nu * nv, 1.0)
    s = np.where(ok, (u * v).sum(axis=1) / denom, 0.0)
    resid = s - labels
    loss = float(np.mean(resid * resid))
    if not compute_grads:
        return loss, None
    b = len(labels)
    ds = 2.0 * resid / b
    with np.errstate(divide="ignore", invalid="ignore"):
        du = (v / denom[:, None] - s[:, None] * u / (nu * nu)[:, None])
        dv = (u / denom[:, None] - s[:, None] * v / (nv * nv)[:, None])
    du = np.where(ok[:, None], du, 0.0) * ds[:, None]
    dv = np.where(ok[:, None], dv, 0.0) * ds[:, None]
    grads = encoder_backward(params, cs, mean_pool_backward(du, mu))
    grads_l = encoder_backward(params, cl, mean_pool_backward(dv, ml))
    for name in grads:
        grads[name] += grads_l[name]
    return loss, grads
