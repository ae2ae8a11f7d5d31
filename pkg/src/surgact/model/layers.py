"""Forward/backward primitives for the divided space-time encoder.

All arrays are float64. Token layout: index 0 is the class token; patch
(p, t) sits at index ``1 + p*T + t``, so the patch block reshapes to
(B, N, T, D) directly.

Attention is routed through :mod:`surgact._kernels` (compiled core with a
numpy fallback). Patch queries attend over restricted neighborhoods:

- temporal stage: same patch position across all T frames, plus the class
  token (T+1 keys per patch query);
- spatial stage: all N patches of the same frame, plus the class token
  (N+1 keys per patch query).

The class token itself queries the full sequence in both stages so that
it can aggregate global evidence. A :class:`ComparisonCounter` records
key-comparison counts straight from the shapes handed to the kernel.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from .config import ModelConfig, ShapeMismatch

_GELU_C = np.sqrt(2.0 / np.pi)
_GELU_A = 0.044715


class ComparisonCounter:
    """Per-token key-comparison ledger, fed by actual kernel-call shapes."""

    def __init__(self):
        self.counts: dict[int, np.ndarray] | None = None
        self._seq_len = 0

    def _ensure(self, block_idx: int, seq_len: int) -> np.ndarray:
        if self.counts is None:
            self.counts = {}
            self._seq_len = seq_len
        per_block = self.counts.get(block_idx)
        if per_block is None:
            per_block = np.zeros(seq_len, dtype=np.int64)
            self.counts[block_idx] = per_block
        return per_block

    def record(self, block_idx: int, seq_len: int, token_indices: np.ndarray,
               keys_per_query: int) -> None:
        per_block = self._ensure(block_idx, seq_len)
        per_block[token_indices] += keys_per_query

    def patch_comparisons(self, block_idx: int) -> np.ndarray:
        """Comparisons per patch token in one block (class token excluded)."""
        return self.counts[block_idx][1:]


def gelu(x: np.ndarray) -> np.ndarray:
    u = _GELU_C * (x + _GELU_A * x**3)
    return 0.5 * x * (1.0 + np.tanh(u))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    u = _GELU_C * (x + _GELU_A * x**3)
    th = np.tanh(u)
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th**2) * _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# patch embedding


def patchify(clips: np.ndarray, patch_size: int) -> np.ndarray:
    """(B, T, H, W, 3) -> (B, N, T, P*P*3) with row-major patch order."""
    B, T, H, W, C = clips.shape
    P = patch_size
    x = clips.reshape(B, T, H // P, P, W // P, P, C)
    x = x.transpose(0, 2, 4, 1, 3, 5, 6)  # (B, gh, gw, T, P, P, C)
    return x.reshape(B, (H // P) * (W // P), T, P * P * C)


def embed_forward(clips: np.ndarray, params, config: ModelConfig):
    if clips.ndim != 5 or clips.shape[1:] != (config.frames, config.height, config.width, 3):
        raise ShapeMismatch(
            f"expected clips of shape (B, {config.frames}, {config.height}, "
            f"{config.width}, 3), got {clips.shape}"
        )
    B = clips.shape[0]
    patches = patchify(np.asarray(clips, dtype=np.float64), config.patch_size)
    flat = patches.reshape(B, config.n_patches * config.frames, config.patch_dim)
    tokens = np.empty((B, config.seq_len, config.embed_dim))
    tokens[:, 0] = params["embed.cls"]
    tokens[:, 1:] = flat @ params["embed.proj"].T
    tokens += params["embed.pos"]
    return tokens, {"flat": flat}


def embed_backward(d_tokens: np.ndarray, cache, grads) -> None:
    grads["embed.pos"] = d_tokens.sum(axis=0)
    grads["embed.cls"] = d_tokens[:, 0].sum(axis=0)
    grads["embed.proj"] = np.einsum("bnd,bnf->df", d_tokens[:, 1:], cache["flat"])


# ---------------------------------------------------------------------------
# layer norm


def layernorm_forward(x: np.ndarray, g: np.ndarray, b: np.ndarray, eps: float = 1e-5):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    return xhat * g + b, (xhat, inv, g)


def layernorm_backward(dy: np.ndarray, cache):
    xhat, inv, g = cache
    axes = tuple(range(dy.ndim - 1))
    dg = (dy * xhat).sum(axis=axes)
    db = dy.sum(axis=axes)
    dxhat = dy * g
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


# ---------------------------------------------------------------------------
# divided attention


def _fold_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    G, S, D = x.shape
    Dh = D // n_heads
    return np.ascontiguousarray(
        x.reshape(G, S, n_heads, Dh).transpose(0, 2, 1, 3).reshape(G * n_heads, S, Dh)
    )


def _unfold_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    GH, S, Dh = x.shape
    G = GH // n_heads
    return x.reshape(G, n_heads, S, Dh).transpose(0, 2, 1, 3).reshape(G, S, n_heads * Dh)


def attention_stage_forward(xn: np.ndarray, params, prefix: str, stage: str,
                            config: ModelConfig, block_idx: int = 0,
                            counter: ComparisonCounter | None = None):
    """One attention stage (temporal or spatial) on normalized tokens.

    Returns the stage output (pre-residual) and a backward cache.
    """
    B, S, D = xn.shape
    N, T, H = config.n_patches, config.frames, config.n_heads

    # no key bias: a shared key offset cancels inside the softmax
    wq, wk, wv = params[f"{prefix}.wq"], params[f"{prefix}.wk"], params[f"{prefix}.wv"]
    qa = xn @ wq + params[f"{prefix}.bq"]
    ka = xn @ wk
    va = xn @ wv + params[f"{prefix}.bv"]

    qp = qa[:, 1:].reshape(B, N, T, D)
    kp = ka[:, 1:].reshape(B, N, T, D)
    vp = va[:, 1:].reshape(B, N, T, D)

    if stage == "temporal":
        # groups: one per patch position; keys = cls + same patch over time
        qg = qp.reshape(B * N, T, D)
        k_cls = np.broadcast_to(ka[:, None, :1], (B, N, 1, D))
        v_cls = np.broadcast_to(va[:, None, :1], (B, N, 1, D))
        kg = np.concatenate([k_cls, kp], axis=2).reshape(B * N, T + 1, D)
        vg = np.concatenate([v_cls, vp], axis=2).reshape(B * N, T + 1, D)
    elif stage == "spatial":
        # groups: one per frame; keys = cls + all patches of the frame
        qg = qp.transpose(0, 2, 1, 3).reshape(B * T, N, D)
        k_cls = np.broadcast_to(ka[:, None, :1], (B, T, 1, D))
        v_cls = np.broadcast_to(va[:, None, :1], (B, T, 1, D))
        kg = np.concatenate([k_cls, kp.transpose(0, 2, 1, 3)], axis=2).reshape(B * T, N + 1, D)
        vg = np.concatenate([v_cls, vp.transpose(0, 2, 1, 3)], axis=2).reshape(B * T, N + 1, D)
    else:
        raise ValueError(f"unknown stage {stage!r}")

    if counter is not None:
        counter.record(block_idx, S, np.arange(1, S), kg.shape[1])
        counter.record(block_idx, S, np.arange(0, 1), S)

    qf, kf, vf = (_fold_heads(a, H) for a in (qg, kg, vg))
    out_f, attn_p = _kernels.attn_forward(qf, kf, vf)
    out_g = _unfold_heads(out_f, H)

    # class token queries the full sequence
    qc = _fold_heads(np.ascontiguousarray(qa[:, :1]), H)
    kc = _fold_heads(ka, H)
    vc = _fold_heads(va, H)
    out_cf, attn_c = _kernels.attn_forward(qc, kc, vc)
    out_cls = _unfold_heads(out_cf, H)

    out_tokens = np.empty_like(xn)
    out_tokens[:, :1] = out_cls
    if stage == "temporal":
        out_tokens[:, 1:] = out_g.reshape(B, N, T, D).reshape(B, N * T, D)
    else:
        out_tokens[:, 1:] = out_g.reshape(B, T, N, D).transpose(0, 2, 1, 3).reshape(B, N * T, D)

    y = out_tokens @ params[f"{prefix}.wo"] + params[f"{prefix}.bo"]
    cache = {
        "xn": xn, "qa": qa, "ka": ka, "va": va,
        "qf": qf, "kf": kf, "vf": vf, "attn_p": attn_p,
        "qc": qc, "kc": kc, "vc": vc, "attn_c": attn_c,
        "out_tokens": out_tokens, "stage": stage, "prefix": prefix,
    }
    return y, cache


def attention_stage_backward(dy: np.ndarray, cache, params, config: ModelConfig, grads):
    B, S, D = dy.shape
    N, T, H = config.n_patches, config.frames, config.n_heads
    stage, prefix = cache["stage"], cache["prefix"]

    grads[f"{prefix}.wo"] = np.einsum("bsd,bse->de", cache["out_tokens"], dy)
    grads[f"{prefix}.bo"] = dy.sum(axis=(0, 1))
    d_out = dy @ params[f"{prefix}.wo"].T

    # class-token attention branch
    d_out_cf = _fold_heads(np.ascontiguousarray(d_out[:, :1]), H)
    dqc, dkc, dvc = _kernels.attn_backward(
        d_out_cf, cache["attn_c"], cache["qc"], cache["kc"], cache["vc"])
    dqa = np.zeros((B, S, D))
    dqa[:, :1] = _unfold_heads(dqc, H)
    dka = _unfold_heads(dkc, H)
    dva = _unfold_heads(dvc, H)

    # patch-group attention branch
    d_out_p = d_out[:, 1:].reshape(B, N, T, D)
    if stage == "temporal":
        d_out_g = d_out_p.reshape(B * N, T, D)
    else:
        d_out_g = np.ascontiguousarray(d_out_p.transpose(0, 2, 1, 3)).reshape(B * T, N, D)
    dqf, dkf, dvf = _kernels.attn_backward(
        _fold_heads(d_out_g, H), cache["attn_p"], cache["qf"], cache["kf"], cache["vf"])
    dqg = _unfold_heads(dqf, H)
    dkg = _unfold_heads(dkf, H)
    dvg = _unfold_heads(dvf, H)

    if stage == "temporal":
        dqa[:, 1:] += dqg.reshape(B, N, T, D).reshape(B, N * T, D)
        dkg = dkg.reshape(B, N, T + 1, D)
        dvg = dvg.reshape(B, N, T + 1, D)
        dka[:, 0] += dkg[:, :, 0].sum(axis=1)
        dva[:, 0] += dvg[:, :, 0].sum(axis=1)
        dka[:, 1:] += dkg[:, :, 1:].reshape(B, N * T, D)
        dva[:, 1:] += dvg[:, :, 1:].reshape(B, N * T, D)
    else:
        dqa[:, 1:] += dqg.reshape(B, T, N, D).transpose(0, 2, 1, 3).reshape(B, N * T, D)
        dkg = dkg.reshape(B, T, N + 1, D)
        dvg = dvg.reshape(B, T, N + 1, D)
        dka[:, 0] += dkg[:, :, 0].sum(axis=1)
        dva[:, 0] += dvg[:, :, 0].sum(axis=1)
        dka[:, 1:] += dkg[:, :, 1:].transpose(0, 2, 1, 3).reshape(B, N * T, D)
        dva[:, 1:] += dvg[:, :, 1:].transpose(0, 2, 1, 3).reshape(B, N * T, D)

    xn = cache["xn"]
    grads[f"{prefix}.wq"] = np.einsum("bsd,bse->de", xn, dqa)
    grads[f"{prefix}.wk"] = np.einsum("bsd,bse->de", xn, dka)
    grads[f"{prefix}.wv"] = np.einsum("bsd,bse->de", xn, dva)
    grads[f"{prefix}.bq"] = dqa.sum(axis=(0, 1))
    grads[f"{prefix}.bv"] = dva.sum(axis=(0, 1))
    return dqa @ params[f"{prefix}.wq"].T + dka @ params[f"{prefix}.wk"].T \
        + dva @ params[f"{prefix}.wv"].T


# ---------------------------------------------------------------------------
# MLP


def mlp_forward(xn: np.ndarray, params, prefix: str):
    h = xn @ params[f"{prefix}.w1"] + params[f"{prefix}.b1"]
    a = gelu(h)
    y = a @ params[f"{prefix}.w2"] + params[f"{prefix}.b2"]
    return y, {"xn": xn, "h": h, "a": a, "prefix": prefix}


def mlp_backward(dy: np.ndarray, cache, params, grads):
    prefix = cache["prefix"]
    grads[f"{prefix}.w2"] = np.einsum("bsh,bsd->hd", cache["a"], dy)
    grads[f"{prefix}.b2"] = dy.sum(axis=(0, 1))
    da = dy @ params[f"{prefix}.w2"].T
    dh = da * gelu_grad(cache["h"])
    grads[f"{prefix}.w1"] = np.einsum("bsd,bsh->dh", cache["xn"], dh)
    grads[f"{prefix}.b1"] = dh.sum(axis=(0, 1))
    return dh @ params[f"{prefix}.w1"].T


# ---------------------------------------------------------------------------
# encoder block: pre-norm, residual around each of the three stages


def block_forward(x: np.ndarray, params, block_idx: int, config: ModelConfig,
                  counter: ComparisonCounter | None = None):
    p = f"block{block_idx}"
    h1, ln1 = layernorm_forward(x, params[f"{p}.ln1.g"], params[f"{p}.ln1.b"])
    a1, att_t = attention_stage_forward(
        h1, params, f"{p}.tattn", "temporal", config, block_idx, counter)
    x1 = x + a1
    h2, ln2 = layernorm_forward(x1, params[f"{p}.ln2.g"], params[f"{p}.ln2.b"])
    a2, att_s = attention_stage_forward(
        h2, params, f"{p}.sattn", "spatial", config, block_idx, counter)
    x2 = x1 + a2
    h3, ln3 = layernorm_forward(x2, params[f"{p}.ln3.g"], params[f"{p}.ln3.b"])
    m, mlp_c = mlp_forward(h3, params, f"{p}.mlp")
    return x2 + m, {"ln1": ln1, "ln2": ln2, "ln3": ln3,
                    "att_t": att_t, "att_s": att_s, "mlp": mlp_c, "p": p}


def block_backward(dx: np.ndarray, cache, params, config: ModelConfig, grads):
    p = cache["p"]
    dh3 = mlp_backward(dx, cache["mlp"], params, grads)
    dx2, dg, db = layernorm_backward(dh3, cache["ln3"])
    grads[f"{p}.ln3.g"], grads[f"{p}.ln3.b"] = dg, db
    dx2 = dx2 + dx

    dh2 = attention_stage_backward(dx2, cache["att_s"], params, config, grads)
    dx1, dg, db = layernorm_backward(dh2, cache["ln2"])
    grads[f"{p}.ln2.g"], grads[f"{p}.ln2.b"] = dg, db
    dx1 = dx1 + dx2

    dh1 = attention_stage_backward(dx1, cache["att_t"], params, config, grads)
    dx0, dg, db = layernorm_backward(dh1, cache["ln1"])
    grads[f"{p}.ln1.g"], grads[f"{p}.ln1.b"] = dg, db
    return dx0 + dx1
