from .checkpoint import ModelCheckpoint, load_checkpoint, save_checkpoint
from .layers import Conv2d, Flatten, Linear, MaxPool2, Param, ReLU
from .losses import cross_entropy, mse
from .model import COMPACT_NET, INTERMEDIATE_CNN, SIMPLE_CNN, Sequential, build_model, canonical_arch
from .optim import SGD, Adam, make_optimizer

__all__ = [
    "Adam",
    "COMPACT_NET",
    "Conv2d",
    "Flatten",
    "INTERMEDIATE_CNN",
    "Linear",
    "MaxPool2",
    "ModelCheckpoint",
    "Param",
    "ReLU",
    "SGD",
    "SIMPLE_CNN",
    "Sequential",
    "build_model",
    "canonical_arch",
    "cross_entropy",
    "load_checkpoint",
    "make_optimizer",
    "mse",
    "save_checkpoint",
]
