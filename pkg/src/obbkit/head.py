"""Forward pass of a conformer-style RPN head in plain numpy.

The fused feature is the channel concatenation of a 3x3 convolution (C/4),
a dilated 3x3 convolution (C/4) and multi-head self-attention over the
flattened spatial tokens (C/2). Classification and regression maps are
projected from the fused feature by further convolutions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ConvParams",
    "MHSAParams",
    "HeadParams",
    "conv2d",
    "scaled_dot_product_attention",
    "mhsa",
    "conformer_features",
    "conformer_forward",
    "init_head_params",
    "save_head_params",
    "load_head_params",
]

BUNDLE_FORMAT = "obbkit-head/1"


@dataclass
class ConvParams:
    kernel: np.ndarray  # (C_out, C_in, k, k)
    bias: np.ndarray  # (C_out,)
    dilation: int = 1

    def __post_init__(self):
        self.kernel = np.asarray(self.kernel, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float).reshape(-1)
        if self.kernel.ndim != 4 or self.kernel.shape[2] != self.kernel.shape[3]:
            raise ValueError(f"kernel must be (C_out, C_in, k, k), got {self.kernel.shape}")
        if self.kernel.shape[2] % 2 != 1:
            raise ValueError("kernel size must be odd")
        if self.bias.shape != (self.kernel.shape[0],):
            raise ValueError("bias length must equal C_out")
        if int(self.dilation) < 1:
            raise ValueError("dilation must be >= 1")
        self.dilation = int(self.dilation)

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[1]


@dataclass
class MHSAParams:
    """Per-head projections; heads never share weights.

    ``w_q``, ``w_k``, ``w_v`` are ``(n_heads, C_in, d_k)``, ``w_out`` is
    ``(n_heads, d_k, C_out)`` and ``bias`` is ``(C_out,)``.
    """

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_out: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.w_q, self.w_k, self.w_v, self.w_out = (
            np.asarray(a, dtype=float) for a in (self.w_q, self.w_k, self.w_v, self.w_out)
        )
        self.bias = np.asarray(self.bias, dtype=float).reshape(-1)
        if not (self.w_q.shape == self.w_k.shape == self.w_v.shape) or self.w_q.ndim != 3:
            raise ValueError("q/k/v projections must share shape (n_heads, C_in, d_k)")
        nh, _, dk = self.w_q.shape
        if self.w_out.ndim != 3 or self.w_out.shape[:2] != (nh, dk):
            raise ValueError(f"w_out must be ({nh}, {dk}, C_out), got {self.w_out.shape}")
        if self.bias.shape != (self.w_out.shape[2],):
            raise ValueError("bias length must equal C_out")

    @property
    def n_heads(self) -> int:
        return self.w_q.shape[0]

    @property
    def d_k(self) -> int:
        return self.w_q.shape[2]

    @property
    def in_channels(self) -> int:
        return self.w_q.shape[1]

    @property
    def out_channels(self) -> int:
        return self.w_out.shape[2]


@dataclass
class HeadParams:
    conv_vanilla: ConvParams
    conv_dilated: ConvParams
    mhsa: MHSAParams
    cls_proj: ConvParams
    reg_proj: ConvParams

    def __post_init__(self):
        c = self.conv_vanilla.in_channels
        if c % 4:
            raise ValueError(f"channel count {c} not divisible by 4")
        widths = (self.conv_vanilla.out_channels, self.conv_dilated.out_channels, self.mhsa.out_channels)
        if widths != (c // 4, c // 4, c // 2):
            raise ValueError(f"branch widths {widths} do not split {c} as C/4, C/4, C/2")
        if self.cls_proj.in_channels != c or self.reg_proj.in_channels != c:
            raise ValueError("projections must read the fused C-channel map")
        if self.reg_proj.out_channels != 6 * self.num_anchors:
            raise ValueError("regression projection must emit 6 values per anchor")

    @property
    def channels(self) -> int:
        return self.conv_vanilla.in_channels

    @property
    def num_anchors(self) -> int:
        return self.cls_proj.out_channels


def _check_feature(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 4 or min(x.shape) < 1:
        raise ValueError(f"feature map must be (N, C, H, W) with dims >= 1, got {x.shape}")
    return x


def conv2d(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """Stride-1 cross-correlation with 'same' zero padding over a dilated grid."""
    x = _check_feature(x)
    n, c, h, w = x.shape
    if c != p.in_channels:
        raise ValueError(f"input has {c} channels, kernel expects {p.in_channels}")
    k = p.kernel.shape[2]
    d = p.dilation
    pad = d * (k // 2)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out = np.zeros((n, p.out_channels, h, w))
    for i in range(k):
        for j in range(k):
            patch = xp[:, :, i * d : i * d + h, j * d : j * d + w]
            out += np.einsum("nchw,oc->nohw", patch, p.kernel[:, :, i, j])
    out += p.bias[None, :, None, None]
    return out


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def scaled_dot_product_attention(q, k, v, return_attention: bool = False):
    """softmax(q k^T / sqrt(d_k)) v over the last two axes."""
    d_k = q.shape[-1]
    attn = _softmax(q @ np.swapaxes(k, -1, -2) / np.sqrt(d_k))
    out = attn @ v
    if return_attention:
        return out, attn
    return out


def mhsa(x: np.ndarray, p: MHSAParams, return_attention: bool = False):
    """Multi-head self-attention over the H*W tokens of ``x``.

    Each head's attention output is projected by its own output matrix and
    the projections are summed with the shared bias. No positional encoding
    is added, so the map is equivariant to token permutations.
    """
    x = _check_feature(x)
    n, c, h, w = x.shape
    if c != p.in_channels:
        raise ValueError(f"input has {c} channels, attention expects {p.in_channels}")
    tokens = x.reshape(n, c, h * w).transpose(0, 2, 1)  # (N, L, C)
    q = np.einsum("nlc,hcd->nhld", tokens, p.w_q)
    k = np.einsum("nlc,hcd->nhld", tokens, p.w_k)
    v = np.einsum("nlc,hcd->nhld", tokens, p.w_v)
    heads, attn = scaled_dot_product_attention(q, k, v, return_attention=True)
    out = np.einsum("nhld,hdo->nlo", heads, p.w_out) + p.bias
    out = out.transpose(0, 2, 1).reshape(n, p.out_channels, h, w)
    if return_attention:
        return out, attn
    return out


def conformer_features(x: np.ndarray, p: HeadParams) -> np.ndarray:
    """Fused map: [vanilla conv | dilated conv | attention] along channels."""
    x = _check_feature(x)
    if x.shape[1] != p.channels:
        raise ValueError(f"input has {x.shape[1]} channels, head expects {p.channels}")
    return np.concatenate([conv2d(x, p.conv_vanilla), conv2d(x, p.conv_dilated), mhsa(x, p.mhsa)], axis=1)


def conformer_forward(x: np.ndarray, p: HeadParams) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(cls, reg)`` maps with A and 6*A channels."""
    fused = conformer_features(x, p)
    return conv2d(fused, p.cls_proj), conv2d(fused, p.reg_proj)


def init_head_params(
    channels: int,
    n_heads: int = 4,
    num_anchors: int = 1,
    seed: int = 0,
    kernel_size: int = 3,
    dilation: int = 2,
    proj_kernel_size: int = 1,
) -> HeadParams:
    """Deterministic random head parameters (scaled normal, zero biases)."""
    if channels % 4:
        raise ValueError(f"channel count {channels} not divisible by 4")
    width = channels // 2
    if width % n_heads:
        raise ValueError(f"attention width {width} not divisible by {n_heads} heads")
    d_k = width // n_heads
    rng = np.random.default_rng(seed)

    def conv(c_out, c_in, k, dil=1):
        std = 1.0 / np.sqrt(c_in * k * k)
        return ConvParams(rng.normal(0.0, std, (c_out, c_in, k, k)), np.zeros(c_out), dil)

    def proj(*shape):
        return rng.normal(0.0, 1.0 / np.sqrt(shape[-2]), shape)

    return HeadParams(
        conv_vanilla=conv(channels // 4, channels, kernel_size),
        conv_dilated=conv(channels // 4, channels, kernel_size, dilation),
        mhsa=MHSAParams(
            w_q=proj(n_heads, channels, d_k),
            w_k=proj(n_heads, channels, d_k),
            w_v=proj(n_heads, channels, d_k),
            w_out=proj(n_heads, d_k, width),
            bias=np.zeros(width),
        ),
        cls_proj=conv(num_anchors, channels, proj_kernel_size),
        reg_proj=conv(6 * num_anchors, channels, proj_kernel_size),
    )


def _tensor(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _untensor(entry: dict) -> np.ndarray:
    data = np.asarray(entry["data"], dtype=float)
    shape = tuple(entry["shape"])
    if data.size != int(np.prod(shape)):
        raise ValueError(f"tensor data length {data.size} does not match shape {shape}")
    return data.reshape(shape)


_CONVS = ("conv_vanilla", "conv_dilated", "cls_proj", "reg_proj")
_ATTN = ("w_q", "w_k", "w_v", "w_out", "bias")


def save_head_params(p: HeadParams, path) -> None:
    """Write a JSON tensor bundle: flat row-major data with explicit shapes."""
    tensors = {}
    dilations = {}
    for name in _CONVS:
        cp = getattr(p, name)
        tensors[f"{name}.kernel"] = _tensor(cp.kernel)
        tensors[f"{name}.bias"] = _tensor(cp.bias)
        dilations[name] = cp.dilation
    for name in _ATTN:
        tensors[f"mhsa.{name}"] = _tensor(getattr(p.mhsa, name))
    bundle = {"format": BUNDLE_FORMAT, "dilation": dilations, "tensors": tensors}
    Path(path).write_text(json.dumps(bundle))


def load_head_params(path) -> HeadParams:
    bundle = json.loads(Path(path).read_text())
    if bundle.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"unsupported head bundle format {bundle.get('format')!r}")
    t = bundle["tensors"]
    convs = {
        name: ConvParams(
            _untensor(t[f"{name}.kernel"]), _untensor(t[f"{name}.bias"]), bundle["dilation"][name]
        )
        for name in _CONVS
    }
    attn = MHSAParams(**{name: _untensor(t[f"mhsa.{name}"]) for name in _ATTN})
    return HeadParams(mhsa=attn, **convs)
