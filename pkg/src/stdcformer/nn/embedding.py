"""Data embedding: observations and confounders into d-dimensional tokens.

All maps are per-token affine transforms with ReLU (a kernel-size-1
convolution); nothing here mixes information across regions or timesteps.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F


class DataEmbedding(nn.Module):
    """Value / spatial-confounder / temporal-confounder embeddings and their
    fusion into spatial-temporal embeddings (STE) and token representations.

    Parameter shapes depend only on the feature widths, never on the number of
    regions or timesteps, which is what makes cross-city transfer possible.
    """

    def __init__(self, features, t_dim, s_dim, lap_dim, hidden_dim,
                 str_compose="concat", use_sc=True, use_tc=True, use_lap=True):
        super().__init__()
        if str_compose not in ("concat", "add"):
            raise ValueError(f"str_compose must be 'concat' or 'add', got {str_compose!r}")
        self.hidden_dim = hidden_dim
        self.str_compose = str_compose
        self.use_sc = use_sc
        self.use_tc = use_tc
        self.use_lap = use_lap
        self.value_map = nn.Linear(features, hidden_dim)
        spatial_in = s_dim + (lap_dim if use_lap else 0)
        self.spatial_map = nn.Linear(spatial_in, hidden_dim) if use_sc else None
        self.temporal_map = nn.Linear(t_dim, hidden_dim) if use_tc else None
        self.ste_fuse_s = nn.Linear(hidden_dim, hidden_dim)
        self.ste_fuse_t = nn.Linear(hidden_dim, hidden_dim)

    @property
    def token_dim(self):
        return 2 * self.hidden_dim if self.str_compose == "concat" else self.hidden_dim

    def embed_values(self, x):
        # x: [..., features] -> [..., hidden_dim]
        if x.shape[-1] != self.value_map.in_features:
            raise ValueError(
                f"embedding: expected {self.value_map.in_features} features, got {x.shape[-1]}"
            )
        return F.relu(self.value_map(x))

    def spatial_confounder(self, s_rows, lap):
        # s_rows: [n, s_dim], lap: [n, lap_dim] -> [n, hidden_dim]
        if s_rows.shape[0] != lap.shape[0]:
            raise ValueError(
                f"embedding: {s_rows.shape[0]} spatial rows vs {lap.shape[0]} laplacian rows"
            )
        if not self.use_sc:
            return s_rows.new_zeros((s_rows.shape[0], self.hidden_dim))
        inputs = torch.cat([s_rows, lap], dim=-1) if self.use_lap else s_rows
        return F.relu(self.spatial_map(inputs))

    def temporal_confounder(self, t_rows):
        # t_rows: [..., t_dim] -> [..., hidden_dim]
        if not self.use_tc:
            return t_rows.new_zeros(t_rows.shape[:-1] + (self.hidden_dim,))
        return F.relu(self.temporal_map(t_rows))

    def fuse_ste(self, c_spatial, c_temporal):
        # c_spatial: [n, d], c_temporal: [B, T, d] -> [B, T, n, d]
        spatial_part = F.relu(self.ste_fuse_s(c_spatial))          # [n, d]
        temporal_part = F.relu(self.ste_fuse_t(c_temporal))        # [B, T, d]
        return spatial_part.unsqueeze(0).unsqueeze(0) + temporal_part.unsqueeze(2)

    def compose_tokens(self, values, ste):
        # values, ste: [B, T, n, d] -> [B, T, n, token_dim]
        if values.shape != ste.shape:
            raise ValueError(
                f"embedding: value shape {tuple(values.shape)} != STE shape {tuple(ste.shape)}"
            )
        if self.str_compose == "concat":
            return torch.cat([values, ste], dim=-1)
        return values + ste
