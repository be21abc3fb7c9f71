from .attention import AxialSelfAttention, multi_head_attention
from .blocks import STDCBlock, deconf_gate
from .cta import CrossTimeAttention, TimeMixMap
from .embedding import DataEmbedding
from .model import (
    CHECKPOINT_VERSION,
    ModelConfig,
    STDCFormer,
    load_checkpoint,
    mae_loss,
    save_checkpoint,
)

__all__ = [
    "AxialSelfAttention",
    "CHECKPOINT_VERSION",
    "CrossTimeAttention",
    "DataEmbedding",
    "ModelConfig",
    "STDCBlock",
    "STDCFormer",
    "TimeMixMap",
    "deconf_gate",
    "load_checkpoint",
    "mae_loss",
    "multi_head_attention",
    "save_checkpoint",
]
