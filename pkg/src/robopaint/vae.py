"""Convolutional VAE for single-brushstroke images.

Encoder: ``num_blocks`` blocks of conv / batch-norm / leaky ReLU, each
followed by a skip capsule (conv, BN, leaky ReLU, conv, BN, plus identity).
All blocks but the last halve the resolution while it stays even. Two
linear heads give the latent mean and log-variance. The decoder mirrors
this with transposed convolutions and ends in a sigmoid.

Images cross the public API as numpy arrays of shape ``(B, H, W, 1)`` with
values in [0, 1]; ``H, W`` default to 32, 64.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .canvas import Canvas, render_sequence
from .errors import DomainError, FormatError, InvalidDatasetError, InvalidParameterError, ShapeError
from .stroke import Stroke, restrict_control

CHECKPOINT_MAGIC = b"BVAE"
CHECKPOINT_VERSION = 1
_DTYPES = {0: (torch.float32, "<f4"), 1: (torch.float64, "<f8"), 2: (torch.int64, "<i8")}


@dataclass(frozen=True)
class VaeConfig:
    latent_dim: int = 8
    num_blocks: int = 6
    base_channels: int = 16
    max_channels: int = 128
    leaky_slope: float = 0.2
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 5e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    beta: float = 1.0
    image_height: int = 32
    image_width: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim < 1:
            raise InvalidParameterError("latent_dim must be >= 1")
        if self.num_blocks < 1 or self.base_channels < 1:
            raise InvalidParameterError("num_blocks and base_channels must be >= 1")
        if self.batch_size < 1:
            raise InvalidParameterError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidParameterError("learning_rate must be positive")
        if self.epochs < 0:
            raise InvalidParameterError("epochs must be >= 0")

    @property
    def channels(self) -> list[int]:
        return [min(self.base_channels * 2 ** i, self.max_channels) for i in range(self.num_blocks)]

    @property
    def strides(self) -> list[int]:
        out, h, w = [], self.image_height, self.image_width
        for i in range(self.num_blocks):
            if i < self.num_blocks - 1 and h % 2 == 0 and w % 2 == 0:
                out.append(2)
                h, w = h // 2, w // 2
            else:
                out.append(1)
        return out

    @property
    def bottleneck(self) -> tuple[int, int, int]:
        f = 2 ** sum(s == 2 for s in self.strides)
        return self.channels[-1], self.image_height // f, self.image_width // f


class SkipCapsule(nn.Module):
    def __init__(self, ch: int, slope: float):
        super().__init__()
        self.conv1 = nn.Conv2d(ch, ch, 3, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(ch, eps=1e-5, momentum=0.1)
        self.act = nn.LeakyReLU(slope)
        self.conv2 = nn.Conv2d(ch, ch, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(ch, eps=1e-5, momentum=0.1)

    def forward(self, x):
        return x + self.bn2(self.conv2(self.act(self.bn1(self.conv1(x)))))


class Block(nn.Module):
    def __init__(self, c_in: int, c_out: int, stride: int, slope: float, transpose: bool = False):
        super().__init__()
        if transpose and stride == 2:
            self.conv = nn.ConvTranspose2d(c_in, c_out, 4, stride=2, padding=1, bias=False)
        elif transpose:
            self.conv = nn.ConvTranspose2d(c_in, c_out, 3, stride=1, padding=1, bias=False)
        else:
            self.conv = nn.Conv2d(c_in, c_out, 3, stride=stride, padding=1, bias=False)
        self.bn = nn.BatchNorm2d(c_out, eps=1e-5, momentum=0.1)
        self.act = nn.LeakyReLU(slope)
        self.capsule = SkipCapsule(c_out, slope)

    def forward(self, x):
        return self.capsule(self.act(self.bn(self.conv(x))))


class BrushstrokeVAE(nn.Module):
    def __init__(self, cfg: VaeConfig):
        super().__init__()
        self.cfg = cfg
        ch, st, slope = cfg.channels, cfg.strides, cfg.leaky_slope
        c_last, h_last, w_last = cfg.bottleneck
        flat = c_last * h_last * w_last

        enc_in = [1] + ch[:-1]
        self.encoder = nn.Sequential(*(Block(a, b, s, slope) for a, b, s in zip(enc_in, ch, st)))
        self.fc_mu = nn.Linear(flat, cfg.latent_dim)
        self.fc_logvar = nn.Linear(flat, cfg.latent_dim)

        self.fc_dec = nn.Linear(cfg.latent_dim, flat)
        self.dec_act = nn.LeakyReLU(slope)
        dec_out = [ch[0]] + ch[:-1]
        self.decoder = nn.Sequential(*(
            Block(ch[i], dec_out[i], st[i], slope, transpose=True)
            for i in reversed(range(cfg.num_blocks))
        ))
        self.head = nn.Conv2d(ch[0], 1, 3, padding=1)

    def encode(self, x: torch.Tensor):
        h = self.encoder(x).flatten(1)
        return self.fc_mu(h), self.fc_logvar(h)

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        c, h, w = self.cfg.bottleneck
        y = self.dec_act(self.fc_dec(z)).view(-1, c, h, w)
        return torch.sigmoid(self.head(self.decoder(y)))

    def forward(self, x: torch.Tensor, eps: torch.Tensor):
        mu, logvar = self.encode(x)
        return self.decode(reparameterize(mu, logvar, eps)), mu, logvar


def build_model(cfg: VaeConfig) -> BrushstrokeVAE:
    """Freshly initialised model; weights depend only on ``cfg.seed``."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(cfg.seed)
        model = BrushstrokeVAE(cfg)
    return model.eval()


# --- core maths ----------------------------------------------------------------

def reparameterize(mu, logvar, eps):
    """``mu + exp(logvar / 2) * eps``; works on tensors or arrays."""
    if isinstance(mu, torch.Tensor):
        return mu + torch.exp(0.5 * logvar) * eps
    return np.asarray(mu) + np.exp(0.5 * np.asarray(logvar)) * np.asarray(eps)


def loss(x, x_recon, mu, logvar, beta: float = 1.0):
    """Negative ELBO as ``(total, recon, kl)`` tensors, each a batch mean.

    ``recon`` is the binary cross-entropy summed over pixels; ``kl`` is the
    closed-form divergence of N(mu, exp(logvar)) from N(0, I).
    """
    x, x_recon, mu, logvar = (torch.as_tensor(v, dtype=torch.float64)
                              if not isinstance(v, torch.Tensor) else v
                              for v in (x, x_recon, mu, logvar))
    if x.shape != x_recon.shape or mu.shape != logvar.shape:
        raise ShapeError("loss inputs have mismatched shapes")
    for name, v in (("x", x), ("x_recon", x_recon)):
        if v.numel() and (v.min() < 0 or v.max() > 1):
            raise DomainError(f"{name} must lie in [0, 1]")
    batch = x.shape[0]
    recon = F.binary_cross_entropy(x_recon, x, reduction="sum") / batch
    kl = -0.5 * torch.sum(1.0 + logvar - mu * mu - torch.exp(logvar)) / batch
    return recon + beta * kl, recon, kl


# --- numpy-facing API ------------------------------------------------------------

def _to_nchw(model: BrushstrokeVAE, x) -> torch.Tensor:
    arr = np.asarray(x, dtype=np.float32)
    cfg = model.cfg
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[1:] != (cfg.image_height, cfg.image_width, 1) or arr.shape[0] == 0:
        raise ShapeError(f"expected (B, {cfg.image_height}, {cfg.image_width}, 1) images, "
                         f"got {arr.shape}")
    dtype = next(model.parameters()).dtype
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(0, 3, 1, 2))).to(dtype)


def _to_nhwc(t: torch.Tensor) -> np.ndarray:
    return t.detach().permute(0, 2, 3, 1).cpu().numpy().astype(np.float64)


def encode(model: BrushstrokeVAE, x) -> tuple[np.ndarray, np.ndarray]:
    model.eval()
    with torch.no_grad():
        mu, logvar = model.encode(_to_nchw(model, x))
    return mu.numpy().astype(np.float64), logvar.numpy().astype(np.float64)


def decode(model: BrushstrokeVAE, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != model.cfg.latent_dim or z.shape[0] == 0:
        raise ShapeError(f"expected (B, {model.cfg.latent_dim}) latents, got {z.shape}")
    model.eval()
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        out = model.decode(torch.from_numpy(z).to(dtype))
    return _to_nhwc(out)


def reconstruct(model: BrushstrokeVAE, x) -> np.ndarray:
    """Decode the posterior mean, i.e. reparameterise with eps = 0."""
    mu, _ = encode(model, x)
    return decode(model, mu)


def sample(model: BrushstrokeVAE, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    z = np.random.default_rng(seed).standard_normal((n, model.cfg.latent_dim))
    return decode(model, z)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    recon: float
    kl: float


def train(dataset, cfg: VaeConfig, model: BrushstrokeVAE | None = None,
          progress=None) -> tuple[BrushstrokeVAE, list[EpochStats]]:
    """Fit a VAE with Adam; returns the model (in eval mode) and per-epoch means.

    Shuffling and the reparameterisation noise come from one generator
    seeded with ``cfg.seed``, so a rerun with the same thread count gives
    the same history.
    """
    data = np.asarray(dataset, dtype=np.float32)
    if data.ndim == 3:
        data = data[..., None]
    if data.shape[0] == 0:
        raise InvalidDatasetError("training set is empty")
    model = build_model(cfg) if model is None else model
    x_all = _to_nchw(model, data)
    dtype = x_all.dtype
    gen = torch.Generator().manual_seed(cfg.seed)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate,
                           betas=(cfg.adam_beta1, cfg.adam_beta2), eps=cfg.adam_eps)
    n = x_all.shape[0]
    history: list[EpochStats] = []
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        perm = torch.randperm(n, generator=gen)
        sums = np.zeros(3)
        for lo in range(0, n, cfg.batch_size):
            xb = x_all[perm[lo:lo + cfg.batch_size]]
            eps = torch.randn(xb.shape[0], cfg.latent_dim, generator=gen, dtype=dtype)
            x_rec, mu, logvar = model(xb, eps)
            total, recon, kl = loss(xb, x_rec, mu, logvar, cfg.beta)
            opt.zero_grad()
            total.backward()
            opt.step()
            sums += xb.shape[0] * np.array([total.item(), recon.item(), kl.item()])
        stats = EpochStats(epoch, *(float(v) for v in sums / n))
        history.append(stats)
        if progress is not None:
            progress(stats)
    model.eval()
    return model, history


def write_history_csv(path: str | Path, history: Sequence[EpochStats]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "recon", "kl"])
        for h in history:
            w.writerow([h.epoch, repr(h.loss), repr(h.recon), repr(h.kl)])


# --- checkpoints -------------------------------------------------------------------

def save_checkpoint(path: str | Path, model: BrushstrokeVAE) -> None:
    """Little-endian: magic, u32 version, u32-prefixed JSON config, then every
    state tensor in declaration order as (u8 dtype, u8 ndim, u32 dims, data)."""
    cfg = json.dumps(asdict(model.cfg), sort_keys=True).encode("utf-8")
    codes = {v[0]: k for k, v in _DTYPES.items()}
    state = model.state_dict()
    parts = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(cfg)), cfg,
             struct.pack("<I", len(state))]
    for tensor in state.values():
        code = codes[tensor.dtype]
        parts.append(struct.pack("<BB", code, tensor.dim()))
        parts.append(struct.pack(f"<{tensor.dim()}I", *tensor.shape))
        parts.append(tensor.detach().cpu().numpy().astype(_DTYPES[code][1]).tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path: str | Path) -> BrushstrokeVAE:
    buf = Path(path).read_bytes()
    if buf[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a BVAE checkpoint")
    try:
        version, n_cfg = struct.unpack_from("<II", buf, 4)
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version {version}")
        pos = 12
        cfg = VaeConfig(**json.loads(buf[pos:pos + n_cfg].decode("utf-8")))
        pos += n_cfg
        (count,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        model = build_model(cfg)
        keys = list(model.state_dict().keys())
        if count != len(keys):
            raise FormatError(f"{path}: expected {len(keys)} tensors, found {count}")
        state = {}
        for key in keys:
            code, ndim = struct.unpack_from("<BB", buf, pos)
            pos += 2
            shape = struct.unpack_from(f"<{ndim}I", buf, pos)
            pos += 4 * ndim
            torch_dtype, np_dtype = _DTYPES[code]
            size = int(np.prod(shape)) if ndim else 1
            nbytes = size * np.dtype(np_dtype).itemsize
            arr = np.frombuffer(buf, dtype=np_dtype, count=size, offset=pos).reshape(shape)
            pos += nbytes
            state[key] = torch.from_numpy(arr.copy()).to(torch_dtype)
    except (struct.error, KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: corrupt checkpoint ({exc})") from exc
    model.load_state_dict(state)
    return model.eval()


# --- synthetic training corpus --------------------------------------------------------

def synthetic_corpus(n: int, seed: int, complex_fraction: float = 0.5,
                     shape: tuple[int, int] = (32, 64)) -> tuple[np.ndarray, list[str]]:
    """Render ``n`` brushstroke images on white, ``(n, H, W, 1)``.

    "simple" images hold one straight stroke; "complex" ones hold two or
    three bent strokes. Returns the images and the kind of each.
    """
    if n < 0:
        raise InvalidParameterError("n must be >= 0")
    rng = np.random.default_rng(seed)
    h, w = shape
    blank = Canvas.blank(w, h)
    images, kinds = [], []
    for _ in range(n):
        complex_ = rng.random() < complex_fraction
        strokes = []
        for _ in range(int(rng.integers(2, 4)) if complex_ else 1):
            x0, x2 = rng.uniform(0.1, 0.9, 2)
            y0, y2 = rng.uniform(0.2, 0.8, 2)
            raw = Stroke(x0, y0, *rng.uniform(0.0, 1.0, 2), x2, y2,
                         *rng.uniform(0.02, 0.05, 2), rng.uniform(0.0, 0.3))
            strokes.append(restrict_control(raw, 0.0 if complex_ else 1.0))
        images.append(render_sequence(blank, strokes).pixels)
        kinds.append("complex" if complex_ else "simple")
    arr = np.stack(images)[..., None] if images else np.zeros((0, h, w, 1))
    return arr, kinds
