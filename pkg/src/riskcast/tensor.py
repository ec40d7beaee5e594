"""Dense float64 tensor arithmetic and the deterministic random stream.

Everything numeric in this package is a C-contiguous ``numpy.ndarray`` of
64-bit floats.  The helpers here add the contracts the rest of the code
relies on: zero-length dimensions are rejected, results are checked to be
finite, and all randomness flows through :class:`SeededRng`, a SplitMix64
generator chosen over platform RNGs so that a given seed reproduces the
same stream on every machine.
"""

from __future__ import annotations

import struct
from collections.abc import Sequence

import numpy as np

from .errors import DataError, DimensionError, NumericalError, ParameterError

_MASK64 = (1 << 64) - 1

# SplitMix64 constants (state increment and the two finalizer multipliers).
_GAMMA = 0x9E3779B97F4A7C15
_MIX_MUL_1 = 0xBF58476D1CE4E5B9
_MIX_MUL_2 = 0x94D049BB133111EB

_FLOAT_SCALE = 2.0 ** -53  # top 53 bits of a uint64 -> [0, 1)


def mix64(value: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit integer."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * _MIX_MUL_1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_MUL_2) & _MASK64
    return z ^ (z >> 31)


def float_bits(value: float) -> int:
    """IEEE-754 bit pattern of a float, for hashing floats into seeds."""
    return struct.unpack("<Q", struct.pack("<d", float(value)))[0]


def derive_seed(base: int, *parts: int) -> int:
    """Mix integer tags into ``base`` to obtain an independent child seed.

    The result depends only on ``base`` and the tag values, never on call
    order elsewhere, so parallel or reordered work derives identical seeds.
    """
    h = int(base) & _MASK64
    for part in parts:
        h = mix64(h ^ (int(part) & _MASK64))
    return h


class SeededRng:
    """Deterministic SplitMix64 stream.

    State update: ``state += 0x9E3779B97F4A7C15 (mod 2**64)``; each output is
    ``mix64(state)``.  Identical seeds produce bitwise-identical draw
    sequences across runs and platforms.  Instances are single-owner: to run
    work in parallel, :meth:`split` off child generators instead of sharing.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64

    @property
    def state(self) -> int:
        return self._state

    def split(self) -> "SeededRng":
        """Child generator seeded from this stream; advances this stream."""
        return SeededRng(self.next_uint64())

    def next_uint64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return mix64(self._state)

    def next_uint64s(self, n: int) -> np.ndarray:
        """Vectorized draw of ``n`` uint64s, identical to ``n`` scalar calls."""
        if n < 0:
            raise ParameterError(f"draw count must be >= 0, got {n}")
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self._state) + np.uint64(_GAMMA) * steps
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_MUL_1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_MUL_2)
        z = z ^ (z >> np.uint64(31))
        self._state = (self._state + n * _GAMMA) & _MASK64
        return z

    def next_float(self) -> float:
        """One draw uniform on [0, 1)."""
        return (self.next_uint64() >> 11) * _FLOAT_SCALE

    def next_floats(self, n: int) -> np.ndarray:
        return (self.next_uint64s(n) >> np.uint64(11)).astype(np.float64) * _FLOAT_SCALE

    def uniform(self, lo: float, hi: float) -> float:
        if not lo <= hi:
            raise ParameterError(f"uniform bounds require lo <= hi, got ({lo}, {hi})")
        return lo + (hi - lo) * self.next_float()

    def uniforms(self, n: int, lo: float, hi: float) -> np.ndarray:
        if not lo <= hi:
            raise ParameterError(f"uniform bounds require lo <= hi, got ({lo}, {hi})")
        return lo + (hi - lo) * self.next_floats(n)

    def normals(self, n: int, mu: float = 0.0, sigma: float = 1.0) -> np.ndarray:
        """Box-Muller normals; consumes exactly two uniforms per draw."""
        if sigma < 0:
            raise ParameterError(f"normal sigma must be >= 0, got {sigma}")
        u = self.next_floats(2 * n)
        u1 = 1.0 - u[0::2]  # (0, 1], keeps log() finite
        u2 = u[1::2]
        return mu + sigma * np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        return float(self.normals(1, mu, sigma)[0])

    def randint(self, n: int) -> int:
        """Integer in [0, n)."""
        if n <= 0:
            raise ParameterError(f"randint bound must be positive, got {n}")
        return self.next_uint64() % n

    def shuffle(self, values) -> None:
        """In-place Fisher-Yates shuffle of a list or 1-d array."""
        for i in range(len(values) - 1, 0, -1):
            j = self.next_uint64() % (i + 1)
            values[i], values[j] = values[j], values[i]

    def choice(self, values: Sequence):
        return values[self.randint(len(values))]


def as_tensor(values, shape: Sequence[int] | None = None) -> np.ndarray:
    """Validate ``values`` as a dense float64 tensor.

    Zero-length dimensions are rejected at construction, which lets every
    layer assume nonempty operands.  Non-finite entries are rejected too.
    """
    arr = np.asarray(values, dtype=np.float64)
    if shape is not None:
        expected = int(np.prod(shape)) if len(shape) else 0
        if arr.size != expected:
            raise DimensionError(
                f"data length {arr.size} does not match shape {list(shape)}"
            )
        arr = arr.reshape(shape)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if any(d <= 0 for d in arr.shape):
        raise DimensionError(f"zero-length dimension in shape {list(arr.shape)}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError("tensor contains non-finite values")
    return np.ascontiguousarray(arr)


def check_finite(arr: np.ndarray, context: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite values produced by {context}")
    return arr


def _validate_operand(arr, name: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if any(d <= 0 for d in arr.shape):
        raise DimensionError(
            f"operand {name} has a zero-length dimension: shape {list(arr.shape)}"
        )
    return arr


def matmul(a, b) -> np.ndarray:
    """Matrix product of 2-d tensors [m x k] @ [k x n]."""
    a = _validate_operand(a, "a")
    b = _validate_operand(b, "b")
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(
            f"matmul expects 2-d operands, got {list(a.shape)} and {list(b.shape)}"
        )
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul shape mismatch: {list(a.shape)} @ {list(b.shape)}"
        )
    return check_finite(a @ b, "matmul")


_ELEMENTWISE_OPS = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
}


def elementwise(op: str, a, b) -> np.ndarray:
    """Componentwise add/sub/mul of equal-shape tensors (no broadcasting)."""
    if op not in _ELEMENTWISE_OPS:
        raise ParameterError(f"unknown elementwise op {op!r}")
    a = _validate_operand(a, "a")
    b = _validate_operand(b, "b")
    if a.shape != b.shape:
        raise DimensionError(
            f"elementwise {op} shape mismatch: {list(a.shape)} vs {list(b.shape)}"
        )
    return check_finite(_ELEMENTWISE_OPS[op](a, b), f"elementwise {op}")


def reduce(op: str, a) -> float:
    """Full reduction of a nonempty tensor to a scalar."""
    if op not in ("sum", "mean", "max"):
        raise ParameterError(f"unknown reduce op {op!r}")
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        raise DataError("reduce of an empty tensor")
    if op == "sum":
        value = float(np.sum(a))
    elif op == "mean":
        value = float(np.sum(a) / a.size)
    else:
        value = float(np.max(a))
    if not np.isfinite(value):
        raise NumericalError(f"non-finite values produced by reduce {op}")
    return value


def random_tensor(rng: SeededRng, shape: Sequence[int], dist) -> np.ndarray:
    """Draw a tensor from ``dist``, advancing ``rng``.

    ``dist`` is ``("uniform", lo, hi)`` or ``("normal", mu, sigma)``.
    """
    if any(d <= 0 for d in shape):
        raise DimensionError(f"zero-length dimension in shape {list(shape)}")
    if not isinstance(dist, (tuple, list)) or len(dist) != 3:
        raise ParameterError(f"dist must be a (name, p1, p2) triple, got {dist!r}")
    name, p1, p2 = dist
    count = int(np.prod(shape))
    if name == "uniform":
        flat = rng.uniforms(count, float(p1), float(p2))
    elif name == "normal":
        flat = rng.normals(count, float(p1), float(p2))
    else:
        raise ParameterError(f"unknown distribution {name!r}")
    return flat.reshape(shape)
