"""CSV ingestion and writing, chronological splits, and model persistence.

File schemas (ISO-8601 dates, decimal floats, RFC-4180 quoting):

* ``market.csv``    - ``date,open,close,volume``
* ``financial.csv`` - ``date,profit,debt_ratio,cash_flow``
* ``macro.csv``     - ``date,gdp,cpi,interest_rate`` (folded into the static frame)
* ``news.csv``      - ``date,text``
* ``policy.csv``    - ``date,category``

Model files are a versioned, self-describing text format: the magic line
``RISKCAST-MODEL v1``, architecture headers, an embedded preprocessing
block, then flat parameter blocks.  Floats round-trip bit-exactly via
shortest-repr formatting.
"""

from __future__ import annotations

import csv
import datetime as dt
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ModelIOError, ParameterError, SchemaError
from .features import SampleSet
from .frames import TimeSeriesFrame
from .models import HybridModel, LinearRegressionModel, ModelDims
from .layers import Conv1DLayer, DenseLayer, DropoutSpec, LSTMCell
from .preprocess import Preprocess

MODEL_MAGIC = "RISKCAST-MODEL v1"

MARKET_COLUMNS = ("open", "close", "volume")
FINANCIAL_COLUMNS = ("profit", "debt_ratio", "cash_flow")
MACRO_COLUMNS = ("gdp", "cpi", "interest_rate")


# ---------------------------------------------------------------------------
# CSV loading
# ---------------------------------------------------------------------------


def _read_rows(path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected a header row") from None
        rows = [(reader.line_num, row) for row in reader if row]
    return [name.strip() for name in header], rows


def _parse_date(token: str, path, lineno: int) -> dt.date:
    try:
        return dt.date.fromisoformat(token.strip())
    except ValueError as exc:
        raise SchemaError(f"{path}:{lineno}: unparseable date {token!r}: {exc}") from exc


def _parse_float(token: str, column: str, path, lineno: int) -> float:
    try:
        return float(token)
    except ValueError as exc:
        raise SchemaError(
            f"{path}:{lineno}: unparseable value {token!r} in column {column!r}"
        ) from exc


def _load_numeric_csv(path, required: tuple[str, ...]) -> TimeSeriesFrame:
    """Shared loader: a ``date`` column plus named float columns.

    Extra columns are kept as floats.  Rows arriving out of order are
    sorted with a warning; duplicate dates are rejected.
    """
    header, rows = _read_rows(path)
    if not header or header[0] != "date":
        raise SchemaError(f"{path}: first column must be 'date', got {header[:1]}")
    for column in required:
        if column not in header[1:]:
            raise SchemaError(f"{path}: missing required column {column!r}")
    value_names = header[1:]
    parsed: list[tuple[dt.date, list[float]]] = []
    for lineno, row in rows:
        if len(row) != len(header):
            raise SchemaError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
        day = _parse_date(row[0], path, lineno)
        values = [
            _parse_float(tok, name, path, lineno)
            for name, tok in zip(value_names, row[1:])
        ]
        parsed.append((day, values))
    if not parsed:
        raise SchemaError(f"{path}: no data rows")
    days = [day for day, _ in parsed]
    if len(set(days)) != len(days):
        dupes = sorted({d for d in days if days.count(d) > 1})
        raise SchemaError(f"{path}: duplicate dates {dupes[:5]}")
    if any(days[i] > days[i + 1] for i in range(len(days) - 1)):
        warnings.warn(f"{path}: rows are out of date order; loading sorted", stacklevel=2)
        parsed.sort(key=lambda item: item[0])
    dates = [day for day, _ in parsed]
    matrix = np.array([values for _, values in parsed])
    return TimeSeriesFrame(dates, {name: matrix[:, i] for i, name in enumerate(value_names)})


def load_market_csv(path) -> TimeSeriesFrame:
    return _load_numeric_csv(path, MARKET_COLUMNS)


def load_financial_csv(path) -> TimeSeriesFrame:
    return _load_numeric_csv(path, FINANCIAL_COLUMNS)


def load_macro_csv(path) -> TimeSeriesFrame:
    return _load_numeric_csv(path, MACRO_COLUMNS)


def load_news_csv(path) -> list[tuple[dt.date, str]]:
    header, rows = _read_rows(path)
    if header[:2] != ["date", "text"]:
        raise SchemaError(f"{path}: expected header date,text, got {header}")
    items = []
    for lineno, row in rows:
        if len(row) != 2:
            raise SchemaError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
        items.append((_parse_date(row[0], path, lineno), row[1]))
    return items


def load_policy_csv(path) -> list[tuple[dt.date, str]]:
    header, rows = _read_rows(path)
    if header[:2] != ["date", "category"]:
        raise SchemaError(f"{path}: expected header date,category, got {header}")
    events = []
    for lineno, row in rows:
        if len(row) != 2:
            raise SchemaError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
        events.append((_parse_date(row[0], path, lineno), row[1].strip()))
    return events


# ---------------------------------------------------------------------------
# CSV writing
# ---------------------------------------------------------------------------


def write_frame_csv(frame: TimeSeriesFrame, path) -> None:
    """``date`` column followed by the frame's columns, full float precision."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        names = frame.column_names
        writer.writerow(["date", *names])
        for i, day in enumerate(frame.dates):
            writer.writerow([day.isoformat(), *(repr(float(frame.columns[n][i])) for n in names)])


def write_news_csv(items: list[tuple[dt.date, str]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["date", "text"])
        for day, text in items:
            writer.writerow([day.isoformat(), text])


def write_policy_csv(events: list[tuple[dt.date, str]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["date", "category"])
        for day, category in events:
            writer.writerow([day.isoformat(), category])


def write_predictions_csv(predictions, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["date", "risk_score"])
        for pred in predictions:
            writer.writerow([pred.sample_date.isoformat(), repr(pred.risk_score)])


# ---------------------------------------------------------------------------
# Dataset bundle
# ---------------------------------------------------------------------------


@dataclass
class DatasetBundle:
    """Everything one instrument's run consumes, loaded or synthesized."""

    market: TimeSeriesFrame
    financial: TimeSeriesFrame          # company financials plus macro, outer-joined
    news: list[tuple[dt.date, str]]
    policy: list[tuple[dt.date, str]]
    provenance: str = ""

    def __post_init__(self):
        if len(self.market) == 0:
            raise DataError("bundle has an empty market frame")
        lo, hi = self.market.dates[0], self.market.dates[-1]
        if len(self.financial) and (self.financial.dates[0] > hi or self.financial.dates[-1] < lo):
            raise DataError(
                f"financial dates {self.financial.dates[0]}..{self.financial.dates[-1]} "
                f"do not overlap market range {lo}..{hi}"
            )
        for name, days in (("news", [d for d, _ in self.news]),
                           ("policy", [d for d, _ in self.policy])):
            if days and (min(days) > hi or max(days) < lo):
                raise DataError(f"{name} dates do not overlap market range {lo}..{hi}")


def load_bundle(directory) -> DatasetBundle:
    """Load ``market/financial/macro/news/policy.csv`` from one directory.

    ``market.csv`` is required; the rest default to empty when absent.
    """
    from .frames import merge_outer

    def _path(name):
        return os.path.join(directory, name)

    market = load_market_csv(_path("market.csv"))
    financial = TimeSeriesFrame([], {})
    if os.path.exists(_path("financial.csv")):
        financial = load_financial_csv(_path("financial.csv"))
    if os.path.exists(_path("macro.csv")):
        macro = load_macro_csv(_path("macro.csv"))
        financial = merge_outer(financial, macro) if len(financial) else macro
    news = load_news_csv(_path("news.csv")) if os.path.exists(_path("news.csv")) else []
    policy = load_policy_csv(_path("policy.csv")) if os.path.exists(_path("policy.csv")) else []
    return DatasetBundle(market=market, financial=financial, news=news,
                         policy=policy, provenance=f"csv:{directory}")


# ---------------------------------------------------------------------------
# Chronological split
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    """Contiguous chronological train/validation/test fractions.

    Counts are floor allocations for train and validation; the remainder
    goes to the test block.
    """

    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0 for f in fracs):
            raise ParameterError(f"split fractions must be positive, got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ParameterError(f"split fractions must sum to 1, got {sum(fracs)!r}")


def split_counts(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    n_train = int(n * spec.train_frac)
    n_val = int(n * spec.val_frac)
    return n_train, n_val, n - n_train - n_val


def chronological_split(samples: SampleSet, spec: SplitSpec) -> tuple[SampleSet, SampleSet, SampleSet]:
    """Partition samples into contiguous, time-ordered train/val/test blocks."""
    n = len(samples)
    if n < 10:
        raise DataError(f"chronological split needs at least 10 samples, got {n}")
    n_train, n_val, n_test = split_counts(n, spec)
    if min(n_train, n_val, n_test) < 1:
        raise DataError(
            f"split of {n} samples leaves an empty block: {n_train}/{n_val}/{n_test}"
        )
    return (
        samples.subset(0, n_train),
        samples.subset(n_train, n_train + n_val),
        samples.subset(n_train + n_val, n),
    )


# ---------------------------------------------------------------------------
# Model persistence
# ---------------------------------------------------------------------------

_HYBRID_PARAM_ORDER = ("conv.kernels", "conv.bias", "lstm.w_x", "lstm.w_h",
                       "lstm.b", "head.w", "head.b")
_LINEAR_PARAM_ORDER = ("weights", "bias")
_VALUES_PER_LINE = 12


def _format_param(name: str, array: np.ndarray) -> list[str]:
    dims = " ".join(str(d) for d in array.shape)
    lines = [f"param {name} {array.ndim} {dims}"]
    flat = array.reshape(-1)
    for start in range(0, flat.size, _VALUES_PER_LINE):
        lines.append(" ".join(repr(float(v)) for v in flat[start:start + _VALUES_PER_LINE]))
    return lines


def save_model(model, path) -> None:
    """Write a model (and its preprocessing recipe, if any) as versioned text."""
    lines = [MODEL_MAGIC, f"kind {model.kind}"]
    if isinstance(model, HybridModel):
        d = model.dims
        lines += [
            f"window {d.window}",
            f"f_market {d.f_market}",
            f"f_sentiment {d.f_sentiment}",
            f"f_static {d.f_static}",
            f"conv_channels {d.conv_channels}",
            f"kernel_width {d.kernel_width}",
            f"hidden_size {d.hidden_size}",
            f"dropout_p {model.dropout.p!r}",
        ]
        order = _HYBRID_PARAM_ORDER
    elif isinstance(model, LinearRegressionModel):
        lines += [
            f"n_features {model.n_features}",
            f"ridge_lambda {model.ridge_lambda!r}",
        ]
        order = _LINEAR_PARAM_ORDER
    else:
        raise ModelIOError(f"cannot persist model of type {type(model).__name__}")
    if model.preprocess is not None:
        lines += model.preprocess.to_lines()
    params = model.params()
    for name in order:
        lines += _format_param(name, params[name])
    lines.append("end")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(lines) + "\n")


def _parse_model_text(path) -> tuple[dict[str, str], Preprocess | None, dict[str, np.ndarray]]:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        found = lines[0] if lines else "<empty file>"
        raise ModelIOError(
            f"{path}: not a recognized model file (expected {MODEL_MAGIC!r}, found {found!r})"
        )
    headers: dict[str, str] = {}
    preprocess: Preprocess | None = None
    params: dict[str, np.ndarray] = {}
    i = 1
    ended = False
    while i < len(lines):
        line = lines[i]
        tokens = line.split()
        if not tokens:
            i += 1
            continue
        if tokens[0] == "end":
            ended = True
            break
        if tokens[0] == "preprocess" and tokens[1:] == ["begin"]:
            block = []
            i += 1
            while i < len(lines) and lines[i].split() != ["preprocess", "end"]:
                block.append(lines[i])
                i += 1
            if i >= len(lines):
                raise ModelIOError(f"{path}: truncated inside the preprocess block")
            preprocess = Preprocess.from_lines(block)
            i += 1
            continue
        if tokens[0] == "param":
            if len(tokens) < 3:
                raise ModelIOError(f"{path}: malformed param header {line!r}")
            name = tokens[1]
            try:
                ndim = int(tokens[2])
                shape = tuple(int(t) for t in tokens[3:3 + ndim])
            except ValueError as exc:
                raise ModelIOError(f"{path}: malformed param header {line!r}") from exc
            if len(shape) != ndim:
                raise ModelIOError(f"{path}: malformed param header {line!r}")
            count = int(np.prod(shape))
            values: list[float] = []
            i += 1
            while len(values) < count:
                if i >= len(lines):
                    raise ModelIOError(
                        f"{path}: truncated file: parameter {name!r} has "
                        f"{len(values)} of {count} values"
                    )
                try:
                    values.extend(float(tok) for tok in lines[i].split())
                except ValueError as exc:
                    raise ModelIOError(f"{path}: bad value in parameter {name!r}: {exc}") from exc
                i += 1
            if len(values) != count:
                raise ModelIOError(
                    f"{path}: parameter {name!r} has {len(values)} values, expected {count}"
                )
            params[name] = np.array(values).reshape(shape)
            continue
        headers[tokens[0]] = line.split(maxsplit=1)[1] if len(tokens) > 1 else ""
        i += 1
    if not ended:
        raise ModelIOError(f"{path}: truncated file: missing end marker")
    return headers, preprocess, params


def load_model(path):
    """Reconstruct a model bit-exactly from :func:`save_model` output."""
    headers, preprocess, params = _parse_model_text(path)
    kind = headers.get("kind")
    try:
        if kind == "hybrid":
            dims = ModelDims(
                window=int(headers["window"]),
                f_market=int(headers["f_market"]),
                f_sentiment=int(headers["f_sentiment"]),
                f_static=int(headers["f_static"]),
                conv_channels=int(headers["conv_channels"]),
                kernel_width=int(headers["kernel_width"]),
                hidden_size=int(headers["hidden_size"]),
            )
            missing = [n for n in _HYBRID_PARAM_ORDER if n not in params]
            if missing:
                raise ModelIOError(f"{path}: missing parameters {missing}")
            model = HybridModel(
                dims,
                Conv1DLayer(params["conv.kernels"], params["conv.bias"]),
                LSTMCell(params["lstm.w_x"], params["lstm.w_h"], params["lstm.b"]),
                DenseLayer(params["head.w"], params["head.b"]),
                DropoutSpec(float(headers["dropout_p"])),
                preprocess=preprocess,
            )
            return model
        if kind == "linear":
            missing = [n for n in _LINEAR_PARAM_ORDER if n not in params]
            if missing:
                raise ModelIOError(f"{path}: missing parameters {missing}")
            expected = int(headers["n_features"])
            if params["weights"].size != expected:
                raise ModelIOError(
                    f"{path}: weights have {params['weights'].size} entries, "
                    f"header says {expected}"
                )
            return LinearRegressionModel(
                params["weights"],
                float(params["bias"][0]),
                float(headers["ridge_lambda"]),
                preprocess=preprocess,
            )
    except KeyError as exc:
        raise ModelIOError(f"{path}: missing header {exc}") from exc
    raise ModelIOError(f"{path}: unknown model kind {kind!r}")
