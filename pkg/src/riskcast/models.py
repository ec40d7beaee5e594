"""Model assemblies: the Conv1D+LSTM hybrid regressor and the linear baseline.

Both models share a small duck-typed surface used by the trainer, the
gradient checker, and persistence: ``params()`` returning live named
parameter arrays, ``forward(x_seq, x_static, mode, rng)`` returning
``(score, cache)``, and ``backward(cache, dscore)`` returning
``(param_grads, dx_seq)``.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError, NumericalError
from .layers import (
    Conv1DLayer,
    DenseLayer,
    DropoutSpec,
    LSTMCell,
    dropout_backward,
    dropout_forward,
)
from .features import SampleSet
from .preprocess import Preprocess
from .tensor import SeededRng, derive_seed


@dataclass(frozen=True)
class ModelDims:
    """Geometry of the hybrid model's inputs and internals."""

    window: int                # days per sample (T)
    f_market: int              # market channels per day
    f_sentiment: int           # sentiment channels per day
    f_static: int              # static features per sample
    conv_channels: int = 8
    kernel_width: int = 3
    hidden_size: int = 32

    def __post_init__(self):
        if min(self.window, self.f_market, self.f_sentiment, self.f_static,
               self.conv_channels, self.kernel_width, self.hidden_size) < 1:
            raise DimensionError(f"all model dims must be >= 1: {self}")

    @property
    def f_seq(self) -> int:
        return self.f_market + self.f_sentiment

    @property
    def lstm_input(self) -> int:
        # Market channels pass straight through; conv output joins per day.
        return self.f_market + self.conv_channels

    @property
    def head_input(self) -> int:
        return self.hidden_size + self.f_static


@dataclass
class HybridCache:
    x_seq: np.ndarray
    x_static: np.ndarray
    conv_cache: object
    conv_pre: np.ndarray     # conv output before relu, [T x C_out]
    lstm_cache: object
    dropout_mask: np.ndarray | None
    head_cache: object
    pad: int


@dataclass
class Prediction:
    risk_score: float
    sample_date: dt.date


class HybridModel:
    """Conv1D branch over sentiment channels feeding an LSTM, dense head.

    Per sample: (1) the sentiment block of ``x_seq`` is left zero-padded by
    ``kernel_width - 1`` days and convolved so each day keeps an aligned
    feature vector, then passed through relu; (2) each day's market channels
    are concatenated with its conv features and run through the LSTM;
    (3) the final hidden state is dropout-regularized (train mode only) and
    concatenated with the static features; (4) a dense head emits one
    unbounded risk score (regression, no output activation).
    """

    kind = "hybrid"

    def __init__(self, dims: ModelDims, conv: Conv1DLayer, lstm: LSTMCell,
                 head: DenseLayer, dropout: DropoutSpec,
                 preprocess: Preprocess | None = None):
        if conv.c_in != dims.f_sentiment or conv.c_out != dims.conv_channels \
                or conv.k != dims.kernel_width:
            raise DimensionError("conv layer does not match declared dims")
        if lstm.input_size != dims.lstm_input or lstm.hidden_size != dims.hidden_size:
            raise DimensionError("lstm cell does not match declared dims")
        if head.w.shape != (1, dims.head_input):
            raise DimensionError("head layer does not match declared dims")
        self.dims = dims
        self.conv = conv
        self.lstm = lstm
        self.head = head
        self.dropout = dropout
        self.preprocess = preprocess

    @classmethod
    def initialize(cls, dims: ModelDims, seed: int, dropout_p: float = 0.2) -> "HybridModel":
        """Weights uniform on (-1/sqrt(fan_in), +1/sqrt(fan_in)), zero biases.

        Draw order is fixed (conv kernels, lstm w_x, lstm w_h, head w) so a
        seed fully determines the parameters.
        """
        rng = SeededRng(derive_seed(seed, 0x494E4954))  # weight-init stream
        conv = Conv1DLayer.initialize(dims.f_sentiment, dims.conv_channels,
                                      dims.kernel_width, rng)
        lstm = LSTMCell.initialize(dims.lstm_input, dims.hidden_size, rng)
        head = DenseLayer.initialize(dims.head_input, 1, rng)
        return cls(dims, conv, lstm, head, DropoutSpec(dropout_p))

    def params(self) -> dict[str, np.ndarray]:
        """Live parameter arrays keyed by stable names."""
        return {
            "conv.kernels": self.conv.kernels,
            "conv.bias": self.conv.bias,
            "lstm.w_x": self.lstm.w_x,
            "lstm.w_h": self.lstm.w_h,
            "lstm.b": self.lstm.b,
            "head.w": self.head.w,
            "head.b": self.head.b,
        }

    def n_params(self) -> int:
        return sum(p.size for p in self.params().values())

    def _validate_sample(self, x_seq: np.ndarray, x_static: np.ndarray) -> None:
        d = self.dims
        if x_seq.shape != (d.window, d.f_seq):
            raise DimensionError(
                f"x_seq must be [{d.window} x {d.f_seq}], got {list(x_seq.shape)}"
            )
        if x_static.shape != (d.f_static,):
            raise DimensionError(
                f"x_static must be [{d.f_static}], got {list(x_static.shape)}"
            )

    def forward(self, x_seq, x_static, mode: str = "infer",
                rng: SeededRng | None = None) -> tuple[float, HybridCache]:
        x_seq = np.asarray(x_seq, dtype=np.float64)
        x_static = np.asarray(x_static, dtype=np.float64)
        self._validate_sample(x_seq, x_static)
        d = self.dims
        pad = d.kernel_width - 1
        sent = x_seq[:, d.f_market:]
        padded = np.vstack([np.zeros((pad, d.f_sentiment)), sent]) if pad else sent
        conv_pre, conv_cache = self.conv.forward(padded)
        conv_out = np.maximum(conv_pre, 0.0)
        lstm_in = np.hstack([x_seq[:, :d.f_market], conv_out])
        hs, lstm_cache = self.lstm.forward(
            lstm_in, np.zeros(d.hidden_size), np.zeros(d.hidden_size)
        )
        h_last, mask = dropout_forward(self.dropout, hs[-1], rng, mode)
        head_in = np.concatenate([h_last, x_static])
        out, head_cache = self.head.forward(head_in)
        cache = HybridCache(x_seq=x_seq, x_static=x_static, conv_cache=conv_cache,
                            conv_pre=conv_pre, lstm_cache=lstm_cache,
                            dropout_mask=mask, head_cache=head_cache, pad=pad)
        return float(out[0]), cache

    def backward(self, cache: HybridCache, dscore: float) -> tuple[dict[str, np.ndarray], np.ndarray]:
        """Chain rule through head, dropout, BPTT, the concat split, relu,
        and the conv branch.  Returns (param gradients, dL/dx_seq)."""
        d = self.dims
        dhead_out = np.array([float(dscore)])
        dhead_in, dw_head, db_head = self.head.backward(cache.head_cache, dhead_out)
        dh_last = dropout_backward(cache.dropout_mask, dhead_in[:d.hidden_size])
        dhs = np.zeros((d.window, d.hidden_size))
        dhs[-1] = dh_last
        dlstm_in, dw_x, dw_h, db = self.lstm.backward(cache.lstm_cache, dhs)
        dconv_out = dlstm_in[:, d.f_market:]
        dconv_pre = dconv_out * (cache.conv_pre > 0)
        dpadded, dkernels, dbias = self.conv.backward(cache.conv_cache, dconv_pre)
        dx_seq = np.empty_like(cache.x_seq)
        dx_seq[:, :d.f_market] = dlstm_in[:, :d.f_market]
        dx_seq[:, d.f_market:] = dpadded[cache.pad:]
        grads = {
            "conv.kernels": dkernels,
            "conv.bias": dbias,
            "lstm.w_x": dw_x,
            "lstm.w_h": dw_h,
            "lstm.b": db,
            "head.w": dw_head,
            "head.b": db_head,
        }
        return grads, dx_seq


class LinearRegressionModel:
    """Ordinary linear regression over the flattened sample vector.

    The feature vector is ``[x_seq flattened row-major, x_static]`` and the
    ridge term is numerical jitter only, not a tuned regularizer.
    """

    kind = "linear"

    def __init__(self, weights, bias: float, ridge_lambda: float = 1e-8,
                 preprocess: Preprocess | None = None):
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.ndim != 1:
            raise DimensionError(f"weights must be 1-d, got {list(self.weights.shape)}")
        self.bias = np.array([float(bias)])
        self.ridge_lambda = float(ridge_lambda)
        self.preprocess = preprocess

    @property
    def n_features(self) -> int:
        return self.weights.size

    def params(self) -> dict[str, np.ndarray]:
        return {"weights": self.weights, "bias": self.bias}

    def n_params(self) -> int:
        return self.weights.size + 1

    def _flatten(self, x_seq, x_static) -> np.ndarray:
        flat = np.concatenate([np.ravel(x_seq), np.ravel(x_static)])
        if flat.size != self.n_features:
            raise DimensionError(
                f"sample flattens to {flat.size} features, model expects {self.n_features}"
            )
        return flat

    def forward(self, x_seq, x_static, mode: str = "infer",
                rng: SeededRng | None = None) -> tuple[float, np.ndarray]:
        flat = self._flatten(x_seq, x_static)
        return float(self.weights @ flat + self.bias[0]), flat

    def backward(self, cache: np.ndarray, dscore: float) -> tuple[dict[str, np.ndarray], np.ndarray]:
        grads = {"weights": float(dscore) * cache, "bias": np.array([float(dscore)])}
        return grads, cache


def linreg_fit(samples: SampleSet, ridge_lambda: float = 1e-8) -> LinearRegressionModel:
    """Exact ridge-jittered normal-equations solve on flattened samples."""
    n = len(samples)
    if n < 2:
        raise DataError(f"linear fit needs at least 2 samples, got {n}")
    flat = samples.x_seq.reshape(n, -1)
    design = np.hstack([flat, samples.x_static, np.ones((n, 1))])
    gram = design.T @ design + ridge_lambda * np.eye(design.shape[1])
    rhs = design.T @ samples.y
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"normal equations are singular even with jitter: {exc}") from exc
    if not np.all(np.isfinite(beta)):
        raise NumericalError("normal equations produced non-finite coefficients")
    return LinearRegressionModel(beta[:-1], beta[-1], ridge_lambda)


def linreg_objective(model: LinearRegressionModel, samples: SampleSet) -> float:
    """Ridge objective ||y - Zb||^2 + lambda ||b||^2 (bias included)."""
    n = len(samples)
    flat = samples.x_seq.reshape(n, -1)
    design = np.hstack([flat, samples.x_static, np.ones((n, 1))])
    beta = np.concatenate([model.weights, model.bias])
    resid = samples.y - design @ beta
    return float(resid @ resid + model.ridge_lambda * (beta @ beta))


def predict_batch(model, samples: SampleSet) -> list[Prediction]:
    """Inference-mode forward pass per sample; order preserved."""
    out = []
    for i in range(len(samples)):
        score, _ = model.forward(samples.x_seq[i], samples.x_static[i], mode="infer")
        out.append(Prediction(risk_score=score, sample_date=samples.dates[i]))
    return out


def prediction_scores(model, samples: SampleSet) -> np.ndarray:
    return np.array([p.risk_score for p in predict_batch(model, samples)])
