"""Cross-time attention: map past hidden states onto the future horizon.

Queries come from the future STEs and keys from the past STEs, so the
attention pattern depends only on the spatial-temporal context of the two
windows, never on the observed values being transported.
"""

import torch.nn as nn

from .attention import multi_head_attention


class CrossTimeAttention(nn.Module):
    def __init__(self, hidden_dim, heads, head_proj=False):
        super().__init__()
        if hidden_dim % heads != 0:
            raise ValueError(f"hidden dim {hidden_dim} not divisible by {heads} heads")
        self.heads = heads
        self.q_map = nn.Linear(hidden_dim, hidden_dim)
        self.k_map = nn.Linear(hidden_dim, hidden_dim)
        self.v_map = nn.Linear(hidden_dim, hidden_dim)
        self.out_map = nn.Linear(hidden_dim, hidden_dim) if head_proj else None

    def forward(self, ste_future, ste_past, h_past, return_heads=False):
        """ste_future: [B, Tf, n, d], ste_past/h_past: [B, Tp, n, d].

        Returns (h_future [B, Tf, n, d], attention [B, n, Tf, Tp]) with the
        attention averaged over heads; rows are normalized over the past axis.
        `return_heads` appends the per-head tensor [B, n, heads, Tf, Tp].
        """
        if ste_future.shape[2] != ste_past.shape[2] or ste_past.shape[2] != h_past.shape[2]:
            raise ValueError(
                "cross-time attention: region axes differ "
                f"({ste_future.shape[2]}, {ste_past.shape[2]}, {h_past.shape[2]})"
            )
        # per-region attention: move regions into the group axis [B, n, T, d]
        q = self.q_map(ste_future).transpose(1, 2)
        k = self.k_map(ste_past).transpose(1, 2)
        v = self.v_map(h_past).transpose(1, 2)
        out, attn = multi_head_attention(q, k, v, self.heads)
        if self.out_map is not None:
            out = self.out_map(out)
        out = out.transpose(1, 2)
        if return_heads:
            return out, attn.mean(dim=2), attn
        return out, attn.mean(dim=2)


class TimeMixMap(nn.Module):
    """Ablation substitute for cross-time attention: a learned affine map over
    the time axis (past_steps -> future_steps), shared across regions and
    feature dimensions."""

    def __init__(self, past_steps, future_steps):
        super().__init__()
        self.mix = nn.Linear(past_steps, future_steps)

    def forward(self, h_past):
        # [B, Tp, n, d] -> [B, Tf, n, d]
        return self.mix(h_past.permute(0, 2, 3, 1)).permute(0, 3, 1, 2)
