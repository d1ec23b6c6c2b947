"""Fixed small architectures behind one sequential model contract."""

import numpy as np

from ..errors import ConfigError
from .layers import Conv2d, Flatten, Linear, MaxPool2, ReLU

SIMPLE_CNN = "SimpleCNN"
INTERMEDIATE_CNN = "IntermediateCNN"
COMPACT_NET = "CompactNet"

_ARCH_ALIASES = {
    "simplecnn": SIMPLE_CNN,
    "simple": SIMPLE_CNN,
    "intermediatecnn": INTERMEDIATE_CNN,
    "intermediate": INTERMEDIATE_CNN,
    "compactnet": COMPACT_NET,
    "compact": COMPACT_NET,
}

# Feature width of the final layer for the matcher architectures.
_MATCHER_DIMS = {SIMPLE_CNN: 64, INTERMEDIATE_CNN: 128}


class Sequential:
    """A feed-forward stack of layers with a single pending backward tape.

    forward() records the activations backward() needs; backward() may
    only run once per forward() and optionally returns the gradient with
    respect to the inputs (needed when images themselves are trained).
    """

    def __init__(self, layers, arch, input_shape, output_dim, seed):
        self.layers = layers
        self.arch = arch
        self.input_shape = tuple(input_shape)
        self.output_dim = output_dim
        self.seed = seed
        self._tape = None

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if tuple(x.shape[1:]) != self.input_shape:
            raise ValueError(f"expected inputs shaped (N,)+{self.input_shape}, got {x.shape}")
        tape = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            tape.append(cache)
        self._tape = tape
        return x

    def backward(self, d_out, need_input_grad=False):
        """Accumulate parameter gradients from the most recent forward.

        Returns the input gradient when `need_input_grad` is true,
        otherwise None. The tape is consumed either way.
        """
        if self._tape is None:
            raise RuntimeError("backward called before forward")
        tape, self._tape = self._tape, None
        d = np.asarray(d_out, dtype=np.float64)
        for layer, cache in zip(reversed(self.layers), reversed(tape)):
            d = layer.backward(d, cache)
        return d if need_input_grad else None

    def parameters(self):
        return [p for layer in self.layers for p in layer.params()]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    @property
    def num_params(self):
        return sum(p.value.size for p in self.parameters())

    def state_copy(self):
        return [p.value.copy() for p in self.parameters()]

    def load_state(self, state):
        params = self.parameters()
        if len(state) != len(params):
            raise ValueError("state does not match the model's parameter list")
        for p, s in zip(params, state):
            if p.value.shape != s.shape:
                raise ValueError("parameter shape mismatch while loading state")
            p.value[...] = s


def canonical_arch(arch_id):
    name = _ARCH_ALIASES.get(str(arch_id).lower())
    if name is None:
        raise ConfigError(f"unknown architecture {arch_id!r}")
    return name


def _check_divisible(size, factor, arch):
    h, w = size
    if h % factor or w % factor or h < factor or w < factor:
        raise ConfigError(f"{arch} needs spatial dims divisible by {factor}, got {size}")


def build_model(arch_id, input_shape, output_dim=None, seed=0):
    """Construct one of the fixed architectures with seeded init.

    Weights are drawn uniform in +-sqrt(6/fan_in) from a generator seeded
    with `seed`; biases start at zero. SimpleCNN and IntermediateCNN have
    declared output widths (64 and 128); CompactNet emits `output_dim`
    class logits.
    """
    arch = canonical_arch(arch_id)
    c, h, w = input_shape
    rng = np.random.default_rng(seed)
    layers = []

    if arch == SIMPLE_CNN:
        _check_divisible((h, w), 4, arch)
        if output_dim is not None and output_dim != _MATCHER_DIMS[arch]:
            raise ConfigError(f"{arch} output dim is fixed at {_MATCHER_DIMS[arch]}")
        layers += [Conv2d(c, 16, rng), ReLU(), MaxPool2()]
        layers += [Conv2d(16, 32, rng), ReLU(), MaxPool2()]
        layers += [Flatten(), Linear(32 * (h // 4) * (w // 4), 64, rng)]
        out_dim = 64
    elif arch == INTERMEDIATE_CNN:
        _check_divisible((h, w), 8, arch)
        if output_dim is not None and output_dim != _MATCHER_DIMS[arch]:
            raise ConfigError(f"{arch} output dim is fixed at {_MATCHER_DIMS[arch]}")
        widths = [16, 32, 64]
        prev = c
        for width in widths:
            layers += [Conv2d(prev, width, rng), ReLU(), MaxPool2()]
            prev = width
        layers += [Flatten(), Linear(64 * (h // 8) * (w // 8), 128, rng)]
        out_dim = 128
    elif arch == COMPACT_NET:
        _check_divisible((h, w), 4, arch)
        if output_dim is None:
            raise ConfigError("CompactNet needs output_dim (the class count)")
        layers += [Conv2d(c, 16, rng), ReLU(), MaxPool2()]
        layers += [Conv2d(16, 32, rng), ReLU(), MaxPool2()]
        layers += [Flatten(), Linear(32 * (h // 4) * (w // 4), 128, rng), ReLU()]
        layers += [Linear(128, int(output_dim), rng)]
        out_dim = int(output_dim)

    return Sequential(layers, arch, input_shape, out_dim, seed)
