"""Encoder plans, the convolutional autoencoder and the encoder-MLP localizer.

The Conv1D output (channels x length) is reshaped into a single-channel square
image with channels as rows, so the channel count always equals the output
length.  With feature selection the square side is fixed at 114 and the
kernel absorbs the width (``M - 113``); without it the kernel is fixed at 13.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, KernelExceedsInput, TooManyLayersForWidth
from .nn import LayerSpec, ModelGraph, load_into

FS_SIDE = 114  # square side with feature selection
NO_FS_KERNEL = 13  # Conv1D kernel without feature selection
CONV2D_KERNEL = 3
CONV2D_STRIDE = 2
TCONV2D_KERNEL = 4
TCONV2D_STRIDE = 2
MLP_WIDTHS = (256, 64, 16)

VARIANTS = {
    "original": (128, 128, 3),
    "structure1": (128, 3),
    "structure2": (3,),
}

ENCODER, DECODER, HEAD = "encoder", "decoder", "head"


def conv_side(side, kernel=CONV2D_KERNEL, stride=CONV2D_STRIDE):
    return (side - kernel) // stride + 1


@dataclass(frozen=True)
class EncoderPlan:
    input_width: int
    variant: str
    with_fs: bool
    conv1d_channels: int
    conv1d_kernel: int
    conv2d_stack: tuple
    sides: tuple  # square side before and after every 2-D stage

    @property
    def square_side(self):
        return self.sides[0]

    @property
    def flatten_size(self):
        return self.conv2d_stack[-1] * self.sides[-1] ** 2

    @property
    def code_shape(self):
        return (self.conv2d_stack[-1], self.sides[-1], self.sides[-1])


@dataclass(frozen=True)
class DecoderPlan:
    stages: tuple  # (in_channels, out_channels, crop_side) per transposed 2-D stage
    conv1d_channels: int
    conv1d_kernel: int
    output_width: int


def plan_encoder(input_width, variant="original", with_fs=True, side=FS_SIDE, kernel=NO_FS_KERNEL):
    """Dimension plan for one encoder.

    With ``with_fs`` the Conv1D has ``side`` channels and kernel
    ``input_width - side + 1``; otherwise the kernel is ``kernel`` and the
    channel count is ``input_width - kernel + 1``.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}")
    input_width = int(input_width)
    if with_fs:
        k = input_width - side + 1
        if k < 1:
            raise KernelExceedsInput(
                f"with feature selection the input needs at least {side} columns, got {input_width}")
        channels = side
    else:
        k = kernel
        channels = input_width - k + 1
        if channels < 1:
            raise KernelExceedsInput(f"kernel {k} exceeds input width {input_width}")
    stack = VARIANTS[variant]
    sides = [channels]
    for _ in stack:
        if sides[-1] < CONV2D_KERNEL:
            raise TooManyLayersForWidth(
                f"{variant}: side {sides[-1]} is below the {CONV2D_KERNEL}x{CONV2D_KERNEL} kernel")
        sides.append(conv_side(sides[-1]))
    return EncoderPlan(input_width, variant, bool(with_fs), channels, k, stack, tuple(sides))


def plan_decoder(plan):
    chans = (1,) + plan.conv2d_stack
    stages = []
    for i in range(len(plan.conv2d_stack), 0, -1):
        stages.append((chans[i], chans[i - 1], plan.sides[i - 1]))
    return DecoderPlan(tuple(stages), plan.conv1d_channels, plan.conv1d_kernel, plan.input_width)


def _block(graph, segment, layer, rng, alpha, momentum, prefix):
    graph.add(segment, layer, rng)
    graph.add(segment, LayerSpec("BatchNorm", f"{prefix}.bn", layer.out_channels, momentum=momentum), rng)
    graph.add(segment, LayerSpec("LeakyReLU", f"{prefix}.act", alpha=alpha), rng)


def _add_encoder(graph, plan, rng, alpha, momentum):
    c, k = plan.conv1d_channels, plan.conv1d_kernel
    _block(graph, ENCODER, LayerSpec("Conv1D", "enc.conv1d", 1, c, k, 1), rng, alpha, momentum, "enc.conv1d")
    graph.add(ENCODER, LayerSpec("Reshape", "enc.reshape", shape=(1, c, c)), rng)
    prev = 1
    for i, ch in enumerate(plan.conv2d_stack, start=1):
        name = f"enc.conv2d_{i}"
        spec = LayerSpec("Conv2D", name, prev, ch, CONV2D_KERNEL, CONV2D_STRIDE)
        _block(graph, ENCODER, spec, rng, alpha, momentum, name)
        prev = ch


def build_encoder(plan, seed=0, dtype=np.float64, alpha=0.01, momentum=0.1):
    """Encoder alone, e.g. for gradient checks or feature extraction."""
    graph = ModelGraph((1, plan.input_width), dtype)
    _add_encoder(graph, plan, np.random.default_rng(seed), alpha, momentum)
    graph.plan = plan
    return graph


def build_cae(plan, seed=0, dtype=np.float64, alpha=0.01, momentum=0.1):
    """Encoder plus mirrored decoder; the output has the input's shape."""
    rng = np.random.default_rng(seed)
    graph = ModelGraph((1, plan.input_width), dtype)
    _add_encoder(graph, plan, rng, alpha, momentum)
    dec = plan_decoder(plan)
    for i, (c_in, c_out, crop) in enumerate(dec.stages, start=1):
        name = f"dec.tconv2d_{i}"
        spec = LayerSpec("TransposedConv2D", name, c_in, c_out, TCONV2D_KERNEL, TCONV2D_STRIDE,
                         crop=(crop, crop))
        _block(graph, DECODER, spec, rng, alpha, momentum, name)
    c = dec.conv1d_channels
    graph.add(DECODER, LayerSpec("Reshape", "dec.reshape", shape=(c, c)), rng)
    graph.add(DECODER, LayerSpec("TransposedConv1D", "dec.tconv1d", c, 1, dec.conv1d_kernel, 1), rng)
    graph.plan = plan
    return graph


def build_localizer(plan, encoder_checkpoint=None, frozen=True, seed=0, dtype=np.float64,
                    alpha=0.01, momentum=0.1, mlp_widths=MLP_WIDTHS, dropout=0.2):
    """Encoder followed by four Dense-Sigmoid blocks ending in one unit.

    Dropout sits between Dense and Sigmoid in every block except the last:
    dropping the scalar output logit would pin a fifth of the training
    predictions to 0.5 and bias the eval-mode sigmoid.

    ``encoder_checkpoint`` loads pretrained encoder weights (``enc.*``).
    Without a checkpoint the encoder is randomly initialized, which is the
    purely supervised baseline when ``frozen`` is false.
    """
    rng = np.random.default_rng(seed)
    graph = ModelGraph((1, plan.input_width), dtype)
    _add_encoder(graph, plan, rng, alpha, momentum)
    graph.add(HEAD, LayerSpec("Flatten", "head.flatten"), rng)
    widths = (plan.flatten_size,) + tuple(mlp_widths) + (1,)
    for i in range(len(widths) - 1):
        graph.add(HEAD, LayerSpec("Dense", f"head.dense_{i + 1}", widths[i], widths[i + 1]), rng)
        if i < len(widths) - 2:
            graph.add(HEAD, LayerSpec("Dropout", f"head.drop_{i + 1}", p=dropout), rng)
        graph.add(HEAD, LayerSpec("Sigmoid", f"head.sig_{i + 1}"), rng)
    if encoder_checkpoint is not None:
        load_into(graph.store, encoder_checkpoint, prefixes=("enc.",))
    if frozen:
        graph.freeze(ENCODER)
    graph.plan = plan
    return graph


def encode(model, batch):
    """Encoder output in eval mode, shape ``(B,) + plan.code_shape``."""
    _, stop = model.segment_range(ENCODER)
    return model.forward(batch, "eval", stop=stop)[0]


def decode(model, codes):
    start, stop = model.segment_range(DECODER)
    return model.forward(codes, "eval", start=start, stop=stop)[0]


def describe(model):
    """Human-readable layer table: name, kind, output shape, parameter count."""
    rows = model.describe()
    lines = [f"{'layer':<20} {'kind':<17} {'output':<18} {'params':>10}"]
    lines.append(f"{'input':<20} {'':<17} {str(model.input_shape):<18} {0:>10}")
    for seg, name, kind, shape, count in rows:
        lines.append(f"{name:<20} {kind:<17} {str(shape):<18} {count:>10}")
    lines.append(f"total parameters: {model.n_params()}")
    return "\n".join(lines)


def describe_plan(plan):
    """Plan summary with the dimension identities."""
    return "\n".join([
        f"input_width: {plan.input_width}",
        f"variant: {plan.variant}",
        f"with_fs: {str(plan.with_fs).lower()}",
        f"n_Conv1D: {plan.conv1d_channels}",
        f"k_Conv1D: {plan.conv1d_kernel}",
        f"square_side: {plan.square_side}",
        "conv2d_sides: " + " -> ".join(str(s) for s in plan.sides),
        "conv2d_channels: " + ",".join(str(c) for c in plan.conv2d_stack),
        f"n_Dense1: {plan.flatten_size}",
    ])
