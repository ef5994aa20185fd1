# -*- coding: utf-8 -*-

"""
propclass.tensorcore
~~~~~~~~~~~~~~~~~~~~

A small float64 tensor engine with reverse-mode automatic differentiation, and the layers the classifier is
built from.
"""

from .tensor import (  # noqa: F401
    Tape,
    Tensor,
    add,
    backward,
    binary_cross_entropy,
    concat,
    constant,
    dropout,
    embedding_gather,
    flatten,
    layer_norm,
    matmul,
    mean_pool,
    mul,
    relu,
    reshape,
    scale,
    sigmoid,
    softmax,
    swapaxes,
    total,
)
from .params import ParamStore  # noqa: F401
from .layers import (  # noqa: F401
    AttentionParams,
    DecoderBlockParams,
    EncoderBlockParams,
    decoder_block,
    encoder_block,
    gcn_forward,
    multi_head_attention,
    normalize_adjacency,
    positional_encoding,
)
from .optim import Adam, clip_grad_norm, warmup_lr  # noqa: F401
from .checkpoint import load_checkpoint, save_checkpoint  # noqa: F401
