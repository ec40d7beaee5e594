import datetime as dt

import numpy as np
import pytest

from riskcast import HybridModel, ModelDims, SampleSet, SeededRng


def numeric_grad(loss_fn, array: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar loss with respect to ``array``,
    perturbing the array in place."""
    grad = np.empty_like(array)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + eps
        loss_plus = loss_fn()
        flat[i] = saved - eps
        loss_minus = loss_fn()
        flat[i] = saved
        gflat[i] = (loss_plus - loss_minus) / (2.0 * eps)
    return grad


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def tiny_dims(**overrides) -> ModelDims:
    base = dict(window=4, f_market=2, f_sentiment=3, f_static=3,
                conv_channels=2, kernel_width=3, hidden_size=3)
    base.update(overrides)
    return ModelDims(**base)


def tiny_hybrid(seed: int = 42, dropout_p: float = 0.2, **overrides) -> HybridModel:
    return HybridModel.initialize(tiny_dims(**overrides), seed=seed, dropout_p=dropout_p)


def random_samples(n: int, dims: ModelDims, seed: int = 0,
                   target_fn=None) -> SampleSet:
    """SampleSet with standard-normal features and targets in [0, 1]."""
    rng = SeededRng(seed)
    x_seq = rng.normals(n * dims.window * dims.f_seq).reshape(n, dims.window, dims.f_seq)
    x_static = rng.normals(n * dims.f_static).reshape(n, dims.f_static)
    if target_fn is None:
        y = rng.uniforms(n, 0.0, 1.0)
    else:
        y = np.array([target_fn(x_seq[i], x_static[i]) for i in range(n)])
    dates = [dt.date(2020, 1, 1) + dt.timedelta(days=i) for i in range(n)]
    return SampleSet(x_seq, x_static, y, dates)


@pytest.fixture
def rng():
    return np.random.default_rng(20240131)
