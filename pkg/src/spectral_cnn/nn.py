"""Sequential CNN container, remaining layer types and architecture builders.

Every layer exposes ``forward(x, ctx) -> (y, cache)`` and
``backward(g, cache) -> (grad_x, grads)`` where ``grads`` maps parameter
names to gradients. Inputs carry a leading batch axis.
"""

import enum
import math
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from . import pooling as sp
from .spectral_conv import (
    SpectralFilterBank,
    conv_backward,
    conv_forward,
    init_spatial_bank,
    init_spectral_from_spatial,
    spatial_filters,
)


class Mode(enum.Enum):
    TRAIN = "train"
    EVAL = "eval"


class BuildError(ValueError):
    pass


@dataclass
class Context:
    train: bool
    rng: Optional[np.random.Generator]


# -- layers -------------------------------------------------------------------

class Layer:
    notation = ""

    def params(self) -> dict:
        return {}

    def output_shape(self, shape):
        return shape

    def forward(self, x, ctx):
        raise NotImplementedError

    def backward(self, g, cache):
        raise NotImplementedError


class Conv(Layer):
    def __init__(self, in_ch, out_ch, size, parametrization="spatial", rng=None, path="fft",
                 gain=1.0):
        if parametrization not in ("spatial", "spectral"):
            raise BuildError(f"unknown parametrization {parametrization!r}")
        rng = rng if rng is not None else np.random.default_rng(0)
        bank = init_spatial_bank(rng, out_ch, in_ch, size)
        bank.filters *= gain
        self.bank = init_spectral_from_spatial(bank) if parametrization == "spectral" else bank
        self.size = size
        self.path = path
        self.notation = f"C{out_ch}/{size}x{size}"

    @property
    def spectral(self):
        return isinstance(self.bank, SpectralFilterBank)

    def params(self):
        weight = self.bank.params if self.spectral else self.bank.filters
        return {"weight": weight, "bias": self.bank.bias}

    def output_shape(self, shape):
        out_ch, in_ch = self.bank.shape[:2]
        if len(shape) != 3 or shape[0] != in_ch:
            raise BuildError(f"{self.notation} expects [{in_ch}, M, N] input, got {list(shape)}")
        if self.size > shape[1] or self.size > shape[2]:
            raise BuildError(f"{self.notation} filter larger than {shape[1]}x{shape[2]} map")
        return (out_ch,) + tuple(shape[1:])

    def forward(self, x, ctx):
        return conv_forward(x, self.bank, self.path)

    def backward(self, g, cache):
        gx, gw, gb = conv_backward(g, cache)
        return gx, {"weight": gw, "bias": gb}


class SpectralPool(Layer):
    def __init__(self, config: sp.SpectralPoolConfig):
        self.config = config
        self.notation = f"SP{config.out_h}x{config.out_w}"

    def output_shape(self, shape):
        if self.config.out_h > shape[-2] or self.config.out_w > shape[-1]:
            raise BuildError(f"{self.notation} cannot pool a {shape[-2]}x{shape[-1]} map")
        return tuple(shape[:-2]) + (self.config.out_h, self.config.out_w)

    def forward(self, x, ctx):
        return sp.spectral_pool_forward(x, self.config, rng=ctx.rng, train=ctx.train)

    def backward(self, g, cache):
        return sp.spectral_pool_backward(g, cache), {}


class MaxPool(Layer):
    def __init__(self, window, stride):
        self.window = window
        self.stride = stride
        self.notation = f"MP{window}/{stride}"

    def output_shape(self, shape):
        M, N = shape[-2:]
        if self.window > M or self.window > N:
            raise BuildError(f"{self.notation} window larger than {M}x{N} map")
        oh = (M - self.window) // self.stride + 1
        ow = (N - self.window) // self.stride + 1
        return tuple(shape[:-2]) + (oh, ow)

    def forward(self, x, ctx):
        return sp.max_pool_forward(x, self.window, self.stride)

    def backward(self, g, cache):
        return sp.max_pool_backward(g, cache), {}


class ReLU(Layer):
    notation = "ReLU"

    def forward(self, x, ctx):
        mask = x > 0
        return np.where(mask, x, 0.0), mask

    def backward(self, g, cache):
        return np.where(cache, g, 0.0), {}


def relu_forward(x):
    return ReLU().forward(np.asarray(x, dtype=np.float64), None)


def relu_backward(g, cache):
    return ReLU().backward(np.asarray(g, dtype=np.float64), cache)[0]


class FullyConnected(Layer):
    def __init__(self, in_features, units, rng=None, gain=1.0):
        rng = rng if rng is not None else np.random.default_rng(0)
        std = gain * np.sqrt(2.0 / in_features)
        self.weight = rng.normal(0.0, std, size=(units, in_features))
        self.bias = np.zeros(units)
        self.notation = f"FC{units}"

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def output_shape(self, shape):
        n = int(np.prod(shape))
        if n != self.weight.shape[1]:
            raise BuildError(f"{self.notation} expects {self.weight.shape[1]} inputs, got {n}")
        return (self.weight.shape[0],)

    def forward(self, x, ctx):
        flat = x.reshape(x.shape[0], -1)
        if flat.shape[1] != self.weight.shape[1]:
            raise ValueError(f"{self.notation} expects {self.weight.shape[1]} inputs, got {flat.shape[1]}")
        return flat @ self.weight.T + self.bias, (x.shape, flat)

    def backward(self, g, cache):
        shape, flat = cache
        if g.shape != (flat.shape[0], self.weight.shape[0]):
            raise ValueError(f"gradient shape {g.shape} does not match layer output")
        grads = {"weight": g.T @ flat, "bias": g.sum(axis=0)}
        return (g @ self.weight).reshape(shape), grads


class GlobalAverage(Layer):
    notation = "GA"

    def output_shape(self, shape):
        if len(shape) != 3:
            raise BuildError(f"GA expects [C, M, N], got {list(shape)}")
        return (shape[0],)

    def forward(self, x, ctx):
        return x.mean(axis=(-2, -1)), x.shape

    def backward(self, g, cache):
        M, N = cache[-2:]
        if g.shape != cache[:-2]:
            raise ValueError(f"gradient shape {g.shape} does not match {cache[:-2]}")
        return np.broadcast_to(g[..., None, None] / (M * N), cache).copy(), {}


def softmax_xent_forward(logits, labels):
    """Mean cross-entropy over the batch; ``labels`` are integer class ids."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels))
    C = logits.shape[1]
    if labels.shape[0] != logits.shape[0]:
        raise ValueError("one label per logit row required")
    if np.any(labels < 0) or np.any(labels >= C):
        raise ValueError(f"labels must lie in [0, {C})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_p = shifted - log_z[:, None]
    rows = np.arange(len(labels))
    loss = float(-log_p[rows, labels].mean())
    return loss, (np.exp(log_p), labels)


def softmax_xent_backward(cache):
    probs, labels = cache
    grad = probs.copy()
    grad[np.arange(len(labels)), labels] -= 1.0
    return grad / len(labels)


class SoftmaxXEnt(Layer):
    notation = "Softmax"

    def __init__(self, classes):
        self.classes = classes

    def output_shape(self, shape):
        if tuple(shape) != (self.classes,):
            raise BuildError(f"Softmax expects {self.classes} logits, got {list(shape)}")
        return shape


# -- network ------------------------------------------------------------------

class SequentialNetwork:
    def __init__(self, layers, input_shape, seed: Optional[int] = None, mode: Mode = Mode.TRAIN):
        if not layers or not isinstance(layers[-1], SoftmaxXEnt):
            raise BuildError("network must end with a Softmax layer")
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.seed = seed
        self.mode = mode
        self.spec = None
        self.shapes = self._validate()
        self.reset_rng()

    def _validate(self):
        shapes = [self.input_shape]
        for layer in self.layers:
            shapes.append(tuple(layer.output_shape(shapes[-1])))
        return shapes

    def reset_rng(self, seed=None):
        if seed is not None:
            self.seed = seed
        self.rng = np.random.default_rng(self.seed) if self.seed is not None else None

    @property
    def has_dropout(self):
        return any(isinstance(l, SpectralPool) and l.config.dropout is not None for l in self.layers)

    def notation(self, skip_relu=True):
        return [l.notation for l in self.layers if not (skip_relu and isinstance(l, ReLU))]

    def parameters(self):
        """List of ``(key, array, decay)``; biases are exempt from weight decay."""
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params().items():
                out.append(((i, name), arr, name != "bias"))
        return out

    def spatial_conv_filters(self):
        """Effective spatial filters of every conv layer, in order."""
        return [spatial_filters(l.bank) for l in self.layers if isinstance(l, Conv)]


def network_forward(net: SequentialNetwork, x, labels):
    """Returns ``(mean loss, predicted classes, caches)``."""
    train = net.mode is Mode.TRAIN
    if train and net.has_dropout and net.rng is None:
        raise ValueError("training with frequency dropout requires a network seed")
    ctx = Context(train=train, rng=net.rng)
    h = np.asarray(x, dtype=np.float64)
    if h.shape[1:] != net.input_shape:
        raise ValueError(f"batch shape {h.shape[1:]} does not match {net.input_shape}")
    caches = []
    for layer in net.layers[:-1]:
        h, cache = layer.forward(h, ctx)
        caches.append(cache)
    loss, cache = softmax_xent_forward(h, labels)
    caches.append(cache)
    return loss, h.argmax(axis=1), caches


def network_backward(net: SequentialNetwork, caches):
    """Gradient dict keyed like :meth:`SequentialNetwork.parameters`."""
    g = softmax_xent_backward(caches[-1])
    grads = {}
    for i in range(len(net.layers) - 2, -1, -1):
        g, layer_grads = net.layers[i].backward(g, caches[i])
        for name, value in layer_grads.items():
            grads[(i, name)] = value
    return grads


def predict(net: SequentialNetwork, x, batch_size=256):
    mode = net.mode
    net.mode = Mode.EVAL
    try:
        out = []
        ctx = Context(train=False, rng=None)
        for start in range(0, len(x), batch_size):
            h = np.asarray(x[start:start + batch_size], dtype=np.float64)
            for layer in net.layers[:-1]:
                h, _ = layer.forward(h, ctx)
            out.append(h)
        return np.concatenate(out) if out else np.zeros((0, net.layers[-1].classes))
    finally:
        net.mode = mode


# -- architectures --------------------------------------------------------------

FAMILIES = ("spectral_pool", "generic", "deep")


@dataclass
class ArchitectureSpec:
    family: str = "spectral_pool"
    gamma: float = 0.85
    depth: int = 3
    alpha: Optional[float] = 0.30
    beta: Optional[float] = 0.15
    classes: int = 10
    filter_size: int = 3
    width_scale: float = 1.0
    filter_cap: int = 288
    classifier_gain: float = 0.1  # shrinks the last layer's init so initial predictions are near uniform
    parametrization: str = "spatial"
    input_channels: int = 3
    input_size: int = 32
    seed: int = 0

    def validate(self):
        errors = []
        if self.family not in FAMILIES:
            errors.append(f"family must be one of {FAMILIES}")
        if not 0.25 <= self.gamma <= 0.85:
            errors.append("gamma must lie in [0.25, 0.85]")
        if self.depth < 1:
            errors.append("depth must be >= 1")
        if not 0.0 < self.width_scale <= 1.0:
            errors.append("width_scale must lie in (0, 1]")
        if self.filter_size < 1:
            errors.append("filter_size must be >= 1")
        if self.classes < 2:
            errors.append("classes must be >= 2")
        if self.parametrization not in ("spatial", "spectral"):
            errors.append("parametrization must be 'spatial' or 'spectral'")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                errors.append(f"{name} must lie in [0, 1]")
        if errors:
            raise BuildError("; ".join(errors))

    def to_header(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_header(cls, items: dict):
        kwargs = {}
        for f in fields(cls):
            if f.name not in items:
                continue
            raw = items[f.name]
            if raw == "None":
                kwargs[f.name] = None
            elif f.name in ("family", "parametrization"):
                kwargs[f.name] = raw
            elif f.name in ("gamma", "alpha", "beta", "width_scale", "classifier_gain"):
                kwargs[f.name] = float(raw)
            else:
                kwargs[f.name] = int(raw)
        return cls(**kwargs)


def scaled(count, width_scale):
    return max(1, math.ceil(width_scale * count))


class _Builder:
    def __init__(self, spec: ArchitectureSpec):
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed)
        self.shape = (spec.input_channels, spec.input_size, spec.input_size)
        self.layers = []

    def add(self, layer):
        self.shape = tuple(layer.output_shape(self.shape))
        self.layers.append(layer)

    def conv(self, filters, size, relu=True, gain=1.0):
        # late layers of aggressive gamma settings can have maps smaller than the filter
        size = min(size, self.shape[1], self.shape[2])
        layer = Conv(self.shape[0], filters, size, self.spec.parametrization, self.rng, gain=gain)
        self.add(layer)
        if relu:
            self.add(ReLU())

    def fc(self, units, relu=True, gain=1.0):
        self.add(FullyConnected(int(np.prod(self.shape)), units, self.rng, gain=gain))
        if relu:
            self.add(ReLU())


def build_architecture(spec: ArchitectureSpec) -> SequentialNetwork:
    spec.validate()
    b = _Builder(spec)
    ws, fs = spec.width_scale, spec.filter_size
    cap = scaled(spec.filter_cap, ws)

    if spec.family == "spectral_pool":
        M = spec.depth
        for m in range(1, M + 1):
            b.conv(min(scaled(96 + 32 * m, ws), cap), fs)
            size = int(math.floor(spec.gamma * b.shape[1]))
            if size < 1:
                continue
            dropout = None
            if spec.alpha is not None and spec.beta is not None:
                dropout = sp.FrequencyDropoutSpec(spec.alpha, spec.beta, m, M)
            b.add(SpectralPool(sp.SpectralPoolConfig(size, size, dropout=dropout)))
            b.add(ReLU())
        b.conv(min(scaled(96 + 32 * M, ws), cap), 1)
        b.conv(spec.classes, 1, relu=False, gain=spec.classifier_gain)
        b.add(GlobalAverage())
    elif spec.family == "generic":
        b.conv(min(scaled(96, ws), cap), fs)
        b.add(MaxPool(3, 2))
        b.conv(min(scaled(192, ws), cap), fs)
        b.add(MaxPool(3, 2))
        b.fc(scaled(1024, ws))
        b.fc(scaled(512, ws))
        b.fc(spec.classes, relu=False, gain=spec.classifier_gain)
    else:
        b.conv(min(scaled(96, ws), cap), fs)
        b.conv(min(scaled(96, ws), cap), fs)
        b.add(MaxPool(3, 2))
        for _ in range(3):
            b.conv(min(scaled(192, ws), cap), fs)
        b.add(MaxPool(3, 2))
        b.conv(min(scaled(192, ws), cap), 1)
        b.conv(spec.classes, 1, relu=False, gain=spec.classifier_gain)
        b.add(GlobalAverage())
    b.add(SoftmaxXEnt(spec.classes))

    net = SequentialNetwork(b.layers, (spec.input_channels, spec.input_size, spec.input_size),
                            seed=spec.seed)
    net.spec = spec
    return net
