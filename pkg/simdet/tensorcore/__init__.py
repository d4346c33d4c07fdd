"""Minimal dense-tensor engine with reverse-mode differentiation and SGD."""

from simdet.tensorcore.checkpoint import load_checkpoint, read_tensors, save_checkpoint, write_tensors
from simdet.tensorcore.gradcheck import finite_diff_gradcheck, param_gradcheck
from simdet.tensorcore.layers import (
    BatchNormState,
    batchnorm_forward,
    conv_forward,
    l2_normalize,
    maxpool_forward,
    relu_forward,
    softmax_temp,
)
from simdet.tensorcore.optim import ParamStore, SgdConfig, sgd_step
from simdet.tensorcore.tensor import Tape, Tensor, backward_sweep

__all__ = [
    "BatchNormState",
    "ParamStore",
    "SgdConfig",
    "Tape",
    "Tensor",
    "backward_sweep",
    "batchnorm_forward",
    "conv_forward",
    "finite_diff_gradcheck",
    "l2_normalize",
    "load_checkpoint",
    "maxpool_forward",
    "param_gradcheck",
    "read_tensors",
    "relu_forward",
    "save_checkpoint",
    "sgd_step",
    "softmax_temp",
    "write_tensors",
]
