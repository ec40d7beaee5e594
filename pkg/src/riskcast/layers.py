"""Neural network layers with hand-derived backward passes.

Shape conventions: sequence inputs are ``[T x C]`` (time on axis 0), weight
matrices act on column vectors, and every ``forward`` returns a cache object
that its matching ``backward`` consumes.  Backward passes return exact
analytic gradients and are verified against central finite differences in
the test suite.

Layers hold parameters only; forward/backward are pure given (parameters,
input, cache), so distinct samples can be evaluated concurrently as long as
parameter updates stay single-writer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .tensor import SeededRng, as_tensor

ACTIVATIONS = ("relu", "sigmoid", "tanh")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign to avoid overflow in exp for large |x|.
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activation(kind: str, x) -> np.ndarray:
    """Apply relu / sigmoid / tanh componentwise."""
    x = np.asarray(x, dtype=np.float64)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "sigmoid":
        return _sigmoid(x)
    if kind == "tanh":
        return np.tanh(x)
    raise ParameterError(f"unknown activation {kind!r}")


def activation_derivative(kind: str, x) -> np.ndarray:
    """Derivative of the activation with respect to its input, at ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if kind == "relu":
        return (x > 0).astype(np.float64)
    if kind == "sigmoid":
        s = _sigmoid(x)
        return s * (1.0 - s)
    if kind == "tanh":
        t = np.tanh(x)
        return 1.0 - t * t
    raise ParameterError(f"unknown activation {kind!r}")


# ---------------------------------------------------------------------------
# 1-d convolution over the time axis
# ---------------------------------------------------------------------------


@dataclass
class Conv1DCache:
    x: np.ndarray       # [T x C_in] forward input
    out_len: int


class Conv1DLayer:
    """Cross-correlation over the time axis with valid padding.

    ``y[t, c] = sum_m sum_n x[t+m, n] * kernels[c, m, n] + bias[c]`` for
    ``t`` in ``[0, T-k]``.  No kernel flip is applied.
    """

    def __init__(self, kernels, bias):
        self.kernels = as_tensor(kernels)
        self.bias = as_tensor(bias)
        if self.kernels.ndim != 3:
            raise DimensionError(
                f"conv kernels must be [C_out x k x C_in], got {list(self.kernels.shape)}"
            )
        if self.bias.shape != (self.kernels.shape[0],):
            raise DimensionError(
                f"conv bias shape {list(self.bias.shape)} does not match "
                f"C_out={self.kernels.shape[0]}"
            )

    @classmethod
    def initialize(cls, c_in: int, c_out: int, k: int, rng: SeededRng) -> "Conv1DLayer":
        """Kernels uniform on (-1/sqrt(k*C_in), +1/sqrt(k*C_in)), zero bias."""
        if min(c_in, c_out, k) < 1:
            raise ParameterError(f"conv dims must be >= 1, got c_in={c_in} c_out={c_out} k={k}")
        bound = 1.0 / np.sqrt(k * c_in)
        kernels = rng.uniforms(c_out * k * c_in, -bound, bound).reshape(c_out, k, c_in)
        return cls(kernels, np.zeros(c_out))

    @property
    def c_out(self) -> int:
        return self.kernels.shape[0]

    @property
    def k(self) -> int:
        return self.kernels.shape[1]

    @property
    def c_in(self) -> int:
        return self.kernels.shape[2]

    def forward(self, x) -> tuple[np.ndarray, Conv1DCache]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.c_in:
            raise DimensionError(
                f"conv input must be [T x {self.c_in}], got {list(x.shape)}"
            )
        t_len, k = x.shape[0], self.k
        if t_len < k:
            raise DimensionError(f"conv window: input length {t_len} < kernel width {k}")
        out_len = t_len - k + 1
        y = np.tile(self.bias, (out_len, 1))
        for m in range(k):
            y += x[m:m + out_len] @ self.kernels[:, m, :].T
        return y, Conv1DCache(x=x, out_len=out_len)

    def backward(self, cache: Conv1DCache, dy) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (dx, dkernels, dbias) for the cached forward call."""
        dy = np.asarray(dy, dtype=np.float64)
        if dy.shape != (cache.out_len, self.c_out):
            raise DimensionError(
                f"conv upstream gradient must be [{cache.out_len} x {self.c_out}], "
                f"got {list(dy.shape)}"
            )
        x, out_len, k = cache.x, cache.out_len, self.k
        dbias = dy.sum(axis=0)
        dkernels = np.empty_like(self.kernels)
        dx = np.zeros_like(x)
        for m in range(k):
            dkernels[:, m, :] = dy.T @ x[m:m + out_len]
            dx[m:m + out_len] += dy @ self.kernels[:, m, :]
        return dx, dkernels, dbias


# ---------------------------------------------------------------------------
# Max pooling
# ---------------------------------------------------------------------------


@dataclass
class MaxPool1DCache:
    argmax: np.ndarray  # [n_out x C] winning offset inside each window
    t_len: int
    window: int


def maxpool1d_forward(x, window: int) -> tuple[np.ndarray, MaxPool1DCache]:
    """Non-overlapping max over the time axis; ties go to the earliest index.

    Trailing rows that do not fill a window are dropped.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"maxpool input must be [T x C], got {list(x.shape)}")
    if window < 1:
        raise ParameterError(f"pool window must be >= 1, got {window}")
    t_len = x.shape[0]
    if t_len < window:
        raise DimensionError(f"pool window: input length {t_len} < window {window}")
    n_out = t_len // window
    blocks = x[: n_out * window].reshape(n_out, window, x.shape[1])
    argmax = blocks.argmax(axis=1)  # np.argmax returns the first maximum
    y = np.take_along_axis(blocks, argmax[:, None, :], axis=1)[:, 0, :]
    return y, MaxPool1DCache(argmax=argmax, t_len=t_len, window=window)


def maxpool1d_backward(cache: MaxPool1DCache, dy) -> np.ndarray:
    """Route upstream gradient to the argmax position of each window."""
    dy = np.asarray(dy, dtype=np.float64)
    n_out, n_ch = cache.argmax.shape
    if dy.shape != (n_out, n_ch):
        raise DimensionError(
            f"pool upstream gradient must be [{n_out} x {n_ch}], got {list(dy.shape)}"
        )
    dx = np.zeros((cache.t_len, n_ch))
    rows = cache.argmax + (np.arange(n_out) * cache.window)[:, None]
    dx[rows, np.arange(n_ch)[None, :]] = dy
    return dx


# ---------------------------------------------------------------------------
# LSTM
# ---------------------------------------------------------------------------


@dataclass
class LSTMCache:
    xs: np.ndarray
    h0: np.ndarray
    c0: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray
    hs: np.ndarray


class LSTMCell:
    """Single-layer LSTM unrolled over a ``[T x F]`` sequence.

    Gate blocks are stacked in the fixed order (i, f, g, o) along the first
    axis of ``w_x`` ``[4H x F]``, ``w_h`` ``[4H x H]`` and ``b`` ``[4H]``:

        z   = w_x @ x_t + w_h @ h_{t-1} + b
        i,f = sigmoid(z[0:H]), sigmoid(z[H:2H])
        g   = tanh(z[2H:3H])
        o   = sigmoid(z[3H:4H])
        c_t = f * c_{t-1} + i * g
        h_t = o * tanh(c_t)
    """

    def __init__(self, w_x, w_h, b):
        self.w_x = as_tensor(w_x)
        self.w_h = as_tensor(w_h)
        self.b = as_tensor(b)
        if self.w_x.ndim != 2 or self.w_x.shape[0] % 4 != 0:
            raise DimensionError(f"w_x must be [4H x F], got {list(self.w_x.shape)}")
        hidden = self.w_x.shape[0] // 4
        if self.w_h.shape != (4 * hidden, hidden):
            raise DimensionError(
                f"w_h must be [{4 * hidden} x {hidden}], got {list(self.w_h.shape)}"
            )
        if self.b.shape != (4 * hidden,):
            raise DimensionError(f"b must be [{4 * hidden}], got {list(self.b.shape)}")

    @classmethod
    def initialize(cls, input_size: int, hidden_size: int, rng: SeededRng) -> "LSTMCell":
        """w_x uniform by fan-in F, w_h uniform by fan-in H, zero biases."""
        if min(input_size, hidden_size) < 1:
            raise ParameterError(
                f"lstm dims must be >= 1, got input={input_size} hidden={hidden_size}"
            )
        bx = 1.0 / np.sqrt(input_size)
        bh = 1.0 / np.sqrt(hidden_size)
        w_x = rng.uniforms(4 * hidden_size * input_size, -bx, bx).reshape(4 * hidden_size, input_size)
        w_h = rng.uniforms(4 * hidden_size * hidden_size, -bh, bh).reshape(4 * hidden_size, hidden_size)
        return cls(w_x, w_h, np.zeros(4 * hidden_size))

    @property
    def hidden_size(self) -> int:
        return self.w_x.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.w_x.shape[1]

    def forward(self, xs, h0, c0) -> tuple[np.ndarray, LSTMCache]:
        xs = np.asarray(xs, dtype=np.float64)
        h0 = np.asarray(h0, dtype=np.float64)
        c0 = np.asarray(c0, dtype=np.float64)
        hid = self.hidden_size
        if xs.ndim != 2 or xs.shape[1] != self.input_size:
            raise DimensionError(
                f"lstm input must be [T x {self.input_size}], got {list(xs.shape)}"
            )
        if h0.shape != (hid,) or c0.shape != (hid,):
            raise DimensionError(
                f"lstm state must be [{hid}], got h0 {list(h0.shape)} c0 {list(c0.shape)}"
            )
        t_len = xs.shape[0]
        i_a = np.empty((t_len, hid))
        f_a = np.empty((t_len, hid))
        g_a = np.empty((t_len, hid))
        o_a = np.empty((t_len, hid))
        c_a = np.empty((t_len, hid))
        tc_a = np.empty((t_len, hid))
        hs = np.empty((t_len, hid))
        h, c = h0, c0
        for t in range(t_len):
            z = self.w_x @ xs[t] + self.w_h @ h + self.b
            i = _sigmoid(z[:hid])
            f = _sigmoid(z[hid:2 * hid])
            g = np.tanh(z[2 * hid:3 * hid])
            o = _sigmoid(z[3 * hid:])
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            i_a[t], f_a[t], g_a[t], o_a[t] = i, f, g, o
            c_a[t], tc_a[t], hs[t] = c, tc, h
        cache = LSTMCache(xs=xs, h0=h0, c0=c0, i=i_a, f=f_a, g=g_a, o=o_a,
                          c=c_a, tanh_c=tc_a, hs=hs)
        return hs, cache

    def backward(self, cache: LSTMCache, dhs) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Backpropagation through time; returns (dxs, dw_x, dw_h, db)."""
        dhs = np.asarray(dhs, dtype=np.float64)
        if dhs.shape != cache.hs.shape:
            raise DimensionError(
                f"lstm upstream gradient must be {list(cache.hs.shape)}, got {list(dhs.shape)}"
            )
        hid = self.hidden_size
        t_len = cache.xs.shape[0]
        dw_x = np.zeros_like(self.w_x)
        dw_h = np.zeros_like(self.w_h)
        db = np.zeros_like(self.b)
        dxs = np.empty_like(cache.xs)
        dh_next = np.zeros(hid)
        dc_next = np.zeros(hid)
        dz = np.empty(4 * hid)
        for t in range(t_len - 1, -1, -1):
            i, f, g, o = cache.i[t], cache.f[t], cache.g[t], cache.o[t]
            tc = cache.tanh_c[t]
            c_prev = cache.c[t - 1] if t > 0 else cache.c0
            h_prev = cache.hs[t - 1] if t > 0 else cache.h0
            dh = dhs[t] + dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            dz[:hid] = dc * g * i * (1.0 - i)
            dz[hid:2 * hid] = dc * c_prev * f * (1.0 - f)
            dz[2 * hid:3 * hid] = dc * i * (1.0 - g * g)
            dz[3 * hid:] = dh * tc * o * (1.0 - o)
            dw_x += np.outer(dz, cache.xs[t])
            dw_h += np.outer(dz, h_prev)
            db += dz
            dxs[t] = self.w_x.T @ dz
            dh_next = self.w_h.T @ dz
            dc_next = dc * f
        return dxs, dw_x, dw_h, db


# ---------------------------------------------------------------------------
# Dense layer
# ---------------------------------------------------------------------------


@dataclass
class DenseCache:
    x: np.ndarray


class DenseLayer:
    """Affine map y = W x + b."""

    def __init__(self, w, b):
        self.w = as_tensor(w)
        self.b = as_tensor(b)
        if self.w.ndim != 2 or self.b.shape != (self.w.shape[0],):
            raise DimensionError(
                f"dense shapes inconsistent: W {list(self.w.shape)}, b {list(self.b.shape)}"
            )

    @classmethod
    def initialize(cls, in_size: int, out_size: int, rng: SeededRng) -> "DenseLayer":
        if min(in_size, out_size) < 1:
            raise ParameterError(f"dense dims must be >= 1, got in={in_size} out={out_size}")
        bound = 1.0 / np.sqrt(in_size)
        w = rng.uniforms(out_size * in_size, -bound, bound).reshape(out_size, in_size)
        return cls(w, np.zeros(out_size))

    def forward(self, x) -> tuple[np.ndarray, DenseCache]:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.w.shape[1],):
            raise DimensionError(
                f"dense input must be [{self.w.shape[1]}], got {list(x.shape)}"
            )
        return self.w @ x + self.b, DenseCache(x=x)

    def backward(self, cache: DenseCache, dy) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (dx, dw, db)."""
        dy = np.asarray(dy, dtype=np.float64)
        if dy.shape != (self.w.shape[0],):
            raise DimensionError(
                f"dense upstream gradient must be [{self.w.shape[0]}], got {list(dy.shape)}"
            )
        return self.w.T @ dy, np.outer(dy, cache.x), dy.copy()


# ---------------------------------------------------------------------------
# Dropout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DropoutSpec:
    """Inverted dropout: kept entries are scaled by 1/(1-p) at train time,
    so inference is the exact identity."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ParameterError(f"dropout probability must be in [0, 1), got {self.p}")


def dropout_forward(spec: DropoutSpec, x, rng: SeededRng | None, mode: str):
    """Returns (y, mask).  The mask holds the applied scale factors
    (0 or 1/(1-p)); in infer mode the mask is None and y is x unchanged."""
    x = np.asarray(x, dtype=np.float64)
    if mode == "infer":
        return x, None
    if mode != "train":
        raise ParameterError(f"dropout mode must be 'train' or 'infer', got {mode!r}")
    if rng is None:
        raise ParameterError("train-mode dropout requires an rng")
    keep = rng.next_floats(x.size).reshape(x.shape) >= spec.p
    mask = keep.astype(np.float64) / (1.0 - spec.p)
    return x * mask, mask


def dropout_backward(mask: np.ndarray | None, dy) -> np.ndarray:
    dy = np.asarray(dy, dtype=np.float64)
    if mask is None:
        return dy.copy()
    if mask.shape != dy.shape:
        raise DimensionError(
            f"dropout mask shape {list(mask.shape)} does not match gradient {list(dy.shape)}"
        )
    return dy * mask
