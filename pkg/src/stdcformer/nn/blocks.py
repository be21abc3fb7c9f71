"""Spatial-temporal de-confounded attention block.

Spatial and temporal self-attention run in parallel and are fused by a
sigmoid gate computed from the confounder embeddings: the gate realizes the
backdoor-adjustment weighting of the spatial and temporal strata.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .attention import AxialSelfAttention


def deconf_gate(h_spatial, h_temporal, c_spatial, c_temporal, enabled=True):
    """Gated fusion of the two attention outputs.

    c_spatial: [n, d], c_temporal: [B, T, d]. Returns (p_cs [B, T, n, d],
    fused [B, T, n, d]) with p_ct = 1 - p_cs taken elementwise. With the gate
    disabled both branches are weighted 0.5.
    """
    if enabled:
        logits = c_spatial.unsqueeze(0).unsqueeze(0) + c_temporal.unsqueeze(2)
        p_cs = torch.sigmoid(logits)
    else:
        p_cs = h_spatial.new_full(h_spatial.shape, 0.5)
    fused = p_cs * h_spatial + (1.0 - p_cs) * h_temporal
    return p_cs, fused


class STDCBlock(nn.Module):
    """One de-confounded attention block: spatial attention, temporal
    attention, gated fusion, optional residual + layer norm.

    The residual applies only when in_dim equals the hidden dim (every block
    except the first encoder block when tokens are concatenations).
    """

    def __init__(self, in_dim, hidden_dim, heads, layer_norm=True, residual=True,
                 use_dc=True, dropout=0.0, head_proj=False):
        super().__init__()
        self.spatial_attn = AxialSelfAttention(in_dim, hidden_dim, heads,
                                               axis="region", head_proj=head_proj)
        self.temporal_attn = AxialSelfAttention(in_dim, hidden_dim, heads,
                                                axis="time", head_proj=head_proj)
        self.use_dc = use_dc
        self.use_residual = residual and in_dim == hidden_dim
        self.norm = nn.LayerNorm(hidden_dim) if layer_norm else None
        self.dropout = dropout

    def forward(self, h, c_spatial, c_temporal, collect=None):
        # h: [B, T, n, in_dim] -> [B, T, n, hidden_dim]
        if collect is not None:
            h_s, attn_s = self.spatial_attn(h, return_attention=True)
            h_t, attn_t = self.temporal_attn(h, return_attention=True)
            collect["spatial_attention"].append(attn_s)
            collect["temporal_attention"].append(attn_t)
        else:
            h_s = self.spatial_attn(h)
            h_t = self.temporal_attn(h)
        if self.dropout > 0:
            h_s = F.dropout(h_s, self.dropout, self.training)
            h_t = F.dropout(h_t, self.dropout, self.training)
        p_cs, fused = deconf_gate(h_s, h_t, c_spatial, c_temporal, enabled=self.use_dc)
        if collect is not None:
            collect["gates"].append(p_cs)
        out = fused + h if self.use_residual else fused
        if self.norm is not None:
            out = self.norm(out)
        return out
