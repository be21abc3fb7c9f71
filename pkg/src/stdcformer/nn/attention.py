"""Multi-head scaled dot-product attention along the region or time axis."""

import math

import torch
import torch.nn as nn


def _split_heads(x, heads):
    # [B, G, L, d] -> [B, G, heads, L, d_head]
    b, g, l, d = x.shape
    return x.view(b, g, l, heads, d // heads).permute(0, 1, 3, 2, 4)


def _merge_heads(x):
    # [B, G, heads, L, d_head] -> [B, G, L, d]
    b, g, h, l, dh = x.shape
    return x.permute(0, 1, 3, 2, 4).reshape(b, g, l, h * dh)


def multi_head_attention(query, key, value, heads):
    """Row-stochastic attention over the L axis of [B, G, L, d] tensors.

    Heads split the model dimension; scores are scaled by sqrt(d / heads).
    Returns (output [B, G, Lq, d], attention [B, G, heads, Lq, Lk]).
    """
    d = query.shape[-1]
    if d % heads != 0:
        raise ValueError(f"model dim {d} not divisible by {heads} heads")
    q = _split_heads(query, heads)
    k = _split_heads(key, heads)
    v = _split_heads(value, heads)
    scores = torch.matmul(q, k.transpose(-1, -2)) / math.sqrt(d // heads)
    attn = torch.softmax(scores, dim=-1)
    out = _merge_heads(torch.matmul(attn, v))
    return out, attn


class AxialSelfAttention(nn.Module):
    """Self-attention over one axis of [B, T, n, in_dim] inputs.

    axis="region" attends across regions within each timestep; axis="time"
    attends across timesteps within each region. Q/K/V weights are shared
    across the other axis, keeping parameter shapes independent of n and T.
    Concatenated heads are emitted directly; `head_proj` adds the usual
    output projection.
    """

    def __init__(self, in_dim, hidden_dim, heads, axis, head_proj=False):
        super().__init__()
        if axis not in ("region", "time"):
            raise ValueError(f"axis must be 'region' or 'time', got {axis!r}")
        if hidden_dim % heads != 0:
            raise ValueError(f"hidden dim {hidden_dim} not divisible by {heads} heads")
        self.axis = axis
        self.heads = heads
        self.q_map = nn.Linear(in_dim, hidden_dim)
        self.k_map = nn.Linear(in_dim, hidden_dim)
        self.v_map = nn.Linear(in_dim, hidden_dim)
        self.out_map = nn.Linear(hidden_dim, hidden_dim) if head_proj else None

    def forward(self, h, return_attention=False):
        # h: [B, T, n, in_dim] -> [B, T, n, hidden_dim]
        if self.axis == "time":
            h = h.transpose(1, 2)  # attend over the time axis: [B, n, T, in_dim]
        out, attn = multi_head_attention(
            self.q_map(h), self.k_map(h), self.v_map(h), self.heads
        )
        if self.out_map is not None:
            out = self.out_map(out)
        if self.axis == "time":
            out = out.transpose(1, 2)
        if return_attention:
            return out, attn
        return out
