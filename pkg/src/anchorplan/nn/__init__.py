from .checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from .gradcheck import gradient_check
from .layers import MLP, LayerNorm, Linear, Module, MultiHeadAttention, PatchEmbed
from .optim import Adam, AdamState, adam_step
from .tensor import Graph, Parameter, Tensor2, scaled_dot_attention

__all__ = [
    "MLP",
    "Adam",
    "AdamState",
    "Graph",
    "LayerNorm",
    "Linear",
    "Module",
    "MultiHeadAttention",
    "Parameter",
    "PatchEmbed",
    "Tensor2",
    "adam_step",
    "gradient_check",
    "load_checkpoint",
    "read_checkpoint",
    "save_checkpoint",
    "scaled_dot_attention",
]
