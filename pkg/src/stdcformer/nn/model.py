"""End-to-end model: embed -> encode -> cross-time map -> decode -> head."""

import json
import math
from dataclasses import asdict, dataclass

import torch
import torch.nn as nn

from ..validation import check_shape
from .blocks import STDCBlock
from .cta import CrossTimeAttention, TimeMixMap
from .embedding import DataEmbedding

CHECKPOINT_VERSION = 1


@dataclass
class ModelConfig:
    t_dim: int
    s_dim: int
    features: int = 2
    hidden_dim: int = 64
    lap_dim: int = 8
    encoder_layers: int = 5
    decoder_layers: int = 5
    heads: int = 8
    past_steps: int = 6
    future_steps: int = 6
    use_dc: bool = True
    use_map: bool = True
    use_sc: bool = True
    use_tc: bool = True
    use_lap: bool = True
    str_compose: str = "concat"
    layer_norm: bool = True
    residual: bool = True
    head_proj: bool = False
    dropout: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.hidden_dim % self.heads != 0:
            raise ValueError(
                f"hidden_dim {self.hidden_dim} not divisible by heads {self.heads}"
            )
        for name in ("encoder_layers", "decoder_layers", "past_steps", "future_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.str_compose not in ("concat", "add"):
            raise ValueError(f"str_compose must be 'concat' or 'add', got {self.str_compose!r}")

    def ablation_label(self) -> str:
        off = [name.upper() for name in ("dc", "map", "sc", "tc", "lap")
               if not getattr(self, f"use_{name}")]
        return "full" if not off else "w/o " + "+".join(off)


class STDCFormer(nn.Module):
    """Spatial-temporal de-confounded transformer for multi-step forecasting.

    Parameter count is a pure function of the config; the forward pass works
    for any region count whose confounder schema matches the config widths.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c = config
        self.embedding = DataEmbedding(
            c.features, c.t_dim, c.s_dim, c.lap_dim, c.hidden_dim,
            str_compose=c.str_compose, use_sc=c.use_sc, use_tc=c.use_tc, use_lap=c.use_lap,
        )
        block = lambda in_dim: STDCBlock(
            in_dim, c.hidden_dim, c.heads, layer_norm=c.layer_norm,
            residual=c.residual, use_dc=c.use_dc, dropout=c.dropout,
            head_proj=c.head_proj,
        )
        first_in = self.embedding.token_dim
        self.encoder = nn.ModuleList(
            [block(first_in)] + [block(c.hidden_dim) for _ in range(c.encoder_layers - 1)]
        )
        if c.use_map:
            self.mapper = CrossTimeAttention(c.hidden_dim, c.heads, head_proj=c.head_proj)
        else:
            self.mapper = TimeMixMap(c.past_steps, c.future_steps)
        self.decoder = nn.ModuleList(
            [block(c.hidden_dim) for _ in range(c.decoder_layers)]
        )
        self.head = nn.Linear(c.hidden_dim, c.features)
        self.reset_parameters(c.seed)

    def reset_parameters(self, seed: int):
        """Uniform +-1/sqrt(fan_in) weights, zero biases, unit layer norms."""
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    bound = 1.0 / math.sqrt(module.in_features)
                    module.weight.uniform_(-bound, bound, generator=gen)
                    module.bias.zero_()
                elif isinstance(module, nn.LayerNorm):
                    module.weight.fill_(1.0)
                    module.bias.zero_()

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def forward(self, x, t_past, t_future, s_rows, lap, collect_diagnostics=False):
        """x: [T_past, n, f] or [B, T_past, n, f]; temporal rows may be shared
        ([T, t_dim]) or per-batch ([B, T, t_dim]).

        Returns (y_hat, diagnostics); diagnostics is None unless requested.
        """
        c = self.config
        squeeze = x.dim() == 3
        if squeeze:
            x = x.unsqueeze(0)
        if t_past.dim() == 2:
            t_past = t_past.unsqueeze(0).expand(x.shape[0], -1, -1)
        if t_future.dim() == 2:
            t_future = t_future.unsqueeze(0).expand(x.shape[0], -1, -1)
        n = x.shape[2]
        check_shape(x, (-1, c.past_steps, n, c.features), "input values")
        check_shape(t_past, (x.shape[0], c.past_steps, c.t_dim), "past temporal confounders")
        check_shape(t_future, (x.shape[0], c.future_steps, c.t_dim), "future temporal confounders")
        check_shape(s_rows, (n, c.s_dim), "spatial confounders")
        check_shape(lap, (n, c.lap_dim), "laplacian embedding")

        collect = None
        if collect_diagnostics:
            collect = {"gates": [], "spatial_attention": [], "temporal_attention": []}

        values = self.embedding.embed_values(x)
        c_spatial = self.embedding.spatial_confounder(s_rows, lap)
        c_t_past = self.embedding.temporal_confounder(t_past)
        c_t_future = self.embedding.temporal_confounder(t_future)
        ste_past = self.embedding.fuse_ste(c_spatial, c_t_past)
        h = self.embedding.compose_tokens(values, ste_past)

        for blk in self.encoder:
            h = blk(h, c_spatial, c_t_past, collect=collect)

        cta_attention = None
        cta_attention_heads = None
        if c.use_map:
            ste_future = self.embedding.fuse_ste(c_spatial, c_t_future)
            if collect_diagnostics:
                h, cta_attention, cta_attention_heads = self.mapper(
                    ste_future, ste_past, h, return_heads=True)
            else:
                h, cta_attention = self.mapper(ste_future, ste_past, h)
        else:
            h = self.mapper(h)

        for blk in self.decoder:
            h = blk(h, c_spatial, c_t_future, collect=collect)

        y_hat = self.head(h)

        diagnostics = None
        if collect_diagnostics:
            diagnostics = dict(collect)
            diagnostics["cta_attention"] = cta_attention
            diagnostics["cta_attention_heads"] = cta_attention_heads
            diagnostics["gate_first_encoder"] = collect["gates"][0]
        if squeeze:
            y_hat = y_hat.squeeze(0)
            if diagnostics is not None:
                diagnostics = {
                    k: (v.squeeze(0) if torch.is_tensor(v) else
                        [t.squeeze(0) for t in v] if isinstance(v, list) else v)
                    for k, v in diagnostics.items()
                }
        return y_hat, diagnostics


def mae_loss(y_hat, y):
    """Mean absolute error over all (time, region, feature) entries."""
    if y_hat.shape != y.shape:
        raise ValueError(f"loss: prediction shape {tuple(y_hat.shape)} != target {tuple(y.shape)}")
    return torch.mean(torch.abs(y_hat - y))


def save_checkpoint(path, model: STDCFormer, extras: dict | None = None) -> None:
    """Versioned checkpoint with the config embedded as JSON."""
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "config_json": json.dumps(asdict(model.config)),
        "state_dict": model.state_dict(),
        "extras_json": json.dumps(extras or {}),
    }
    torch.save(payload, path)


def load_checkpoint(path):
    """Load (model, extras); rejects checkpoints from other format versions."""
    payload = torch.load(path, map_location="cpu", weights_only=True)
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(
            f"checkpoint format version {version} incompatible with {CHECKPOINT_VERSION}"
        )
    config = ModelConfig(**json.loads(payload["config_json"]))
    model = STDCFormer(config)
    model.load_state_dict(payload["state_dict"])
    extras = json.loads(payload["extras_json"])
    return model, extras
