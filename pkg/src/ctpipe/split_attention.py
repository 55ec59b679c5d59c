"""Forward pass of one 3D split-attention block at desk scale.

R equally shaped feature-map splits (each C x D x H x W) are fused by:
summing the splits, global-average-pooling to a C-vector, passing it
through two dense layers with a rectifier in between to get R logits per
channel, softmaxing across the radix axis, and recombining the splits as
the resulting per-channel convex combination. With R = 1 the softmax
degenerates to a sigmoid gate.

Cardinality K partitions channels into independent groups: both dense
layers act block-diagonally, group k mapping its own channel block to
its own slice of the hidden layer and back. The logit rows of the second
layer are radix-major (row r*C + c holds the radix-r logit of channel c).
No batch normalization is applied inside the head; single-volume
statistics would be degenerate at this scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadGrouping, NonFiniteInput, ShapeMismatch


@dataclass
class SplitAttnParams:
    radix: int
    cardinality: int
    channels: int
    w1: np.ndarray  # (reduced, channels)
    b1: np.ndarray  # (reduced,)
    w2: np.ndarray  # (radix * channels, reduced), radix-major rows
    b2: np.ndarray  # (radix * channels,)

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        if self.radix < 1 or self.cardinality < 1 or self.channels < 1:
            raise ValueError("radix, cardinality, channels must be >= 1")
        if self.channels % self.cardinality != 0:
            raise BadGrouping(f"channels {self.channels} not divisible by K={self.cardinality}")
        reduced = self.w1.shape[0]
        if reduced < 1:
            raise ValueError("reduced dimension must be >= 1")
        if reduced % self.cardinality != 0:
            raise BadGrouping(f"reduced {reduced} not divisible by K={self.cardinality}")
        if self.w1.shape != (reduced, self.channels):
            raise ShapeMismatch(f"w1 {self.w1.shape}, expected ({reduced}, {self.channels})")
        if self.b1.shape != (reduced,):
            raise ShapeMismatch(f"b1 {self.b1.shape}, expected ({reduced},)")
        if self.w2.shape != (self.radix * self.channels, reduced):
            raise ShapeMismatch(
                f"w2 {self.w2.shape}, expected ({self.radix * self.channels}, {reduced})"
            )
        if self.b2.shape != (self.radix * self.channels,):
            raise ShapeMismatch(f"b2 {self.b2.shape}, expected ({self.radix * self.channels},)")

    @property
    def reduced(self) -> int:
        return self.w1.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "R": self.radix,
            "K": self.cardinality,
            "channels": self.channels,
            "W1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.w2.tolist(),
            "b2": self.b2.tolist(),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "SplitAttnParams":
        return cls(
            radix=int(payload["R"]),
            cardinality=int(payload["K"]),
            channels=int(payload["channels"]),
            w1=np.asarray(payload["W1"], dtype=np.float64),
            b1=np.asarray(payload["b1"], dtype=np.float64),
            w2=np.asarray(payload["W2"], dtype=np.float64),
            b2=np.asarray(payload["b2"], dtype=np.float64),
        )


def radix_softmax(logits) -> np.ndarray:
    """Normalize an (R, C) logit matrix across the radix axis per channel.

    Computed with max subtraction; R = 1 applies a sigmoid gate instead.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2:
        raise ShapeMismatch(f"expected (R, C) logits, got shape {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise NonFiniteInput("logits contain NaN or infinity")
    if logits.shape[0] == 1:
        return 1.0 / (1.0 + np.exp(-logits))
    z = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def _grouped_dense(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, groups: int) -> np.ndarray:
    """Block-diagonal dense layer: group k maps its input block to its output block."""
    out_dim, in_dim = weight.shape
    og, ig = out_dim // groups, in_dim // groups
    out = np.empty(out_dim, dtype=np.float64)
    for k in range(groups):
        block = weight[k * og : (k + 1) * og, k * ig : (k + 1) * ig]
        out[k * og : (k + 1) * og] = block @ x[k * ig : (k + 1) * ig]
    return out + bias


def forward_intermediates(splits: Sequence[np.ndarray], params: SplitAttnParams) -> dict:
    """Run the block and return every intermediate stage for inspection."""
    if len(splits) != params.radix:
        raise ShapeMismatch(f"{len(splits)} splits given for radix {params.radix}")
    splits = [np.asarray(s, dtype=np.float64) for s in splits]
    shape = splits[0].shape
    for i, s in enumerate(splits[1:], start=1):
        if s.shape != shape:
            raise ShapeMismatch(f"split {i} has shape {s.shape}, expected {shape}")
    if len(shape) != 4:
        raise ShapeMismatch(f"splits must be (C, D, H, W), got shape {shape}")
    if shape[0] != params.channels:
        raise ShapeMismatch(f"splits have {shape[0]} channels, params expect {params.channels}")

    fused = np.sum(splits, axis=0)
    pooled = fused.mean(axis=(1, 2, 3))
    hidden = np.maximum(_grouped_dense(pooled, params.w1, params.b1, params.cardinality), 0.0)

    # second layer per cardinal group; logit rows are radix-major
    radix, channels, reduced = params.radix, params.channels, params.reduced
    cg, rg = channels // params.cardinality, reduced // params.cardinality
    w2_rc = params.w2.reshape(radix, channels, reduced)
    b2_rc = params.b2.reshape(radix, channels)
    logits = np.empty((radix, channels), dtype=np.float64)
    for k in range(params.cardinality):
        cols = slice(k * cg, (k + 1) * cg)
        red = slice(k * rg, (k + 1) * rg)
        logits[:, cols] = w2_rc[:, cols, red] @ hidden[red] + b2_rc[:, cols]

    attention = radix_softmax(logits)
    output = np.zeros(shape, dtype=np.float64)
    for r in range(radix):
        output += attention[r][:, None, None, None] * splits[r]
    return {
        "fused": fused,
        "pooled": pooled,
        "hidden": hidden,
        "logits": logits,
        "attention": attention,
        "output": output,
    }


def split_attention_forward(splits: Sequence[np.ndarray], params: SplitAttnParams) -> np.ndarray:
    """Recombine R splits as the attention-weighted sum described above."""
    return forward_intermediates(splits, params)["output"]


def demo_params() -> SplitAttnParams:
    """Tiny hand-traceable configuration: R=2, K=1, 2 channels, 2 hidden units."""
    return SplitAttnParams(
        radix=2,
        cardinality=1,
        channels=2,
        w1=np.array([[0.1, 0.2], [-0.3, 0.1]]),
        b1=np.array([0.0, 0.1]),
        w2=np.array([[0.5, -0.1], [0.2, 0.3], [-0.4, 0.2], [0.1, 0.1]]),
        b2=np.array([0.05, -0.05, 0.0, 0.1]),
    )


def demo_splits() -> list[np.ndarray]:
    """Two single-voxel splits matching ``demo_params``."""
    return [
        np.array([1.0, 2.0]).reshape(2, 1, 1, 1),
        np.array([3.0, 4.0]).reshape(2, 1, 1, 1),
    ]
