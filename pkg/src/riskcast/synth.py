"""Seeded synthetic market generator used in place of proprietary feeds.

One instrument per run.  The price path is a geometric random walk whose
volatility switches between two regimes and, when ``kappa > 0``, responds to
a planted daily sentiment signal: news text is sampled from the scoring
lexicon so that the aggregate compound score on day ``t`` anticipates the
realized volatility of the following days with coupling strength ``kappa``.
With the nonlinearity flag set, the volatility response also carries a
multiplicative sentiment-times-trend-sign term that a linear model cannot
fully capture.  Financial, macro, and policy series follow simple documented
processes.  Output is fully determined by the seed.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .data_io import DatasetBundle
from .errors import ParameterError
from .frames import TimeSeriesFrame, merge_outer
from .lexicon import default_lexicon
from .tensor import SeededRng, derive_seed

START_DATE = dt.date(2015, 1, 2)
POLICY_CATEGORIES = ("rate_cut", "rate_hike", "regulation_easing",
                     "regulation_tightening", "stimulus")

# Volatility process constants.
_DRIFT = 0.0002                 # daily log-return drift
_REGIME_VOL_MULT = 1.5          # high-regime volatility multiplier
_SENT_PHI = 0.85                # sentiment AR(1) persistence
_SENT_SD = 0.5                  # sentiment stationary standard deviation
_VOL_COUPLING = 1.5             # sentiment-to-log-vol coupling
_VOL_INTERACTION = 0.9          # sentiment x trend-sign coupling (nonlinearity)
_SENT_SMOOTH = 5                # days of sentiment smoothed into the vol driver
_TREND_LOOKBACK = 5             # days defining the recent trend sign

# News composition constants.
_WORDS_PER_ITEM = 6             # sentiment-bearing words per news item
_ITEM_NOISE_SD = 0.25           # per-item polarity noise around the daily signal
_FILLER_WORDS = (
    "markets", "shares", "trading", "session", "investors", "analysts",
    "report", "quarterly", "earnings", "index", "outlook", "guidance",
    "sector", "prices", "forecast",
)

_FINANCIAL_PERIOD = 63          # trading days between financial reports
_MACRO_PERIOD = 21              # trading days between macro readings
_POLICY_EVENT_PROB = 0.02       # per-day probability of a policy event


@dataclass(frozen=True)
class SynthConfig:
    n_days: int = 2000
    seed: int = 42
    base_vol: float = 0.01
    regime_shift_prob: float = 0.04
    kappa: float = 0.8          # sentiment signal strength in [0, 1]
    nonlinearity: bool = True

    def __post_init__(self):
        if self.n_days < 200:
            raise ParameterError(f"n_days must be >= 200, got {self.n_days}")
        if self.base_vol <= 0:
            raise ParameterError(f"base_vol must be positive, got {self.base_vol}")
        if not 0.0 <= self.regime_shift_prob <= 1.0:
            raise ParameterError(
                f"regime_shift_prob must lie in [0, 1], got {self.regime_shift_prob}"
            )
        if not 0.0 <= self.kappa <= 1.0:
            raise ParameterError(f"kappa must lie in [0, 1], got {self.kappa}")


def trading_days(start: dt.date, count: int) -> list[dt.date]:
    """``count`` consecutive weekdays starting at or after ``start``."""
    days = []
    day = start
    while len(days) < count:
        if day.weekday() < 5:
            days.append(day)
        day += dt.timedelta(days=1)
    return days


def _compose_news_item(rng: SeededRng, polarity: float,
                       pos_terms: list[str], neg_terms: list[str]) -> str:
    """Bag-of-words item whose lexicon compound tracks ``polarity``."""
    n_pos = int(_WORDS_PER_ITEM * (1.0 + polarity) / 2.0 + 0.5)
    n_neg = _WORDS_PER_ITEM - n_pos
    words = [pos_terms[rng.randint(len(pos_terms))] for _ in range(n_pos)]
    words += [neg_terms[rng.randint(len(neg_terms))] for _ in range(n_neg)]
    words += [_FILLER_WORDS[rng.randint(len(_FILLER_WORDS))]
              for _ in range(2 + rng.randint(3))]
    rng.shuffle(words)
    return " ".join(words)


def synth_generate(cfg: SynthConfig) -> DatasetBundle:
    """Generate one bundle; identical configs produce bitwise-identical output."""
    n = cfg.n_days
    rng_sent = SeededRng(derive_seed(cfg.seed, 1))
    rng_regime = SeededRng(derive_seed(cfg.seed, 2))
    rng_price = SeededRng(derive_seed(cfg.seed, 3))
    rng_open = SeededRng(derive_seed(cfg.seed, 4))
    rng_volume = SeededRng(derive_seed(cfg.seed, 5))
    rng_news = SeededRng(derive_seed(cfg.seed, 6))
    rng_financial = SeededRng(derive_seed(cfg.seed, 7))
    rng_macro = SeededRng(derive_seed(cfg.seed, 8))
    rng_policy = SeededRng(derive_seed(cfg.seed, 9))

    dates = trading_days(START_DATE, n)
    lexicon = default_lexicon()
    pos_terms = sorted(lexicon.positive)
    neg_terms = sorted(lexicon.negative)

    # Latent daily sentiment, AR(1) clipped to [-1, 1].
    innovation_sd = _SENT_SD * np.sqrt(1.0 - _SENT_PHI ** 2)
    sentiment = np.empty(n)
    s = 0.0
    for t in range(n):
        s = _SENT_PHI * s + rng_sent.normal(0.0, innovation_sd)
        sentiment[t] = min(1.0, max(-1.0, s))

    # Two-state Markov volatility regime.
    regime_mult = np.empty(n)
    high = False
    for t in range(n):
        if rng_regime.next_float() < cfg.regime_shift_prob:
            high = not high
        regime_mult[t] = _REGIME_VOL_MULT if high else 1.0

    closes = np.empty(n)
    opens = np.empty(n)
    volumes = np.empty(n)
    sigma = np.empty(n)
    prev_close = 100.0
    for t in range(n):
        driver = sentiment[max(0, t - _SENT_SMOOTH):t]
        smoothed = float(np.mean(driver)) if driver.size else 0.0
        if t >= _TREND_LOOKBACK + 1:
            trend = float(np.sign(closes[t - 1] - closes[t - 1 - _TREND_LOOKBACK]))
        else:
            trend = 0.0
        response = _VOL_COUPLING * smoothed
        if cfg.nonlinearity:
            response += _VOL_INTERACTION * smoothed * trend
        sigma[t] = cfg.base_vol * regime_mult[t] * np.exp(cfg.kappa * response)
        log_ret = _DRIFT + sigma[t] * rng_price.normal()
        closes[t] = prev_close * np.exp(log_ret)
        opens[t] = prev_close * np.exp(0.25 * sigma[t] * rng_open.normal())
        volumes[t] = 1e6 * (sigma[t] / cfg.base_vol) ** 0.8 * np.exp(0.35 * rng_volume.normal())
        prev_close = closes[t]

    market = TimeSeriesFrame(dates, {"open": opens, "close": closes, "volume": volumes})

    news: list[tuple[dt.date, str]] = []
    for t in range(n):
        n_items = 1 + (rng_news.next_float() < 0.5) + (rng_news.next_float() < 0.25)
        for _ in range(n_items):
            polarity = min(1.0, max(-1.0, sentiment[t] + rng_news.normal(0.0, _ITEM_NOISE_SD)))
            news.append((dates[t], _compose_news_item(rng_news, polarity, pos_terms, neg_terms)))

    # Quarterly financial reports: slow multiplicative walks.
    fin_rows = list(range(0, n, _FINANCIAL_PERIOD))
    profit, debt, cash = 120.0, 0.45, 85.0
    fin_cols = {"profit": [], "debt_ratio": [], "cash_flow": []}
    for _ in fin_rows:
        profit = max(5.0, profit * (1.0 + 0.01 + 0.05 * rng_financial.normal()))
        debt = min(0.85, max(0.15, debt + 0.03 * rng_financial.normal()))
        cash = profit * (0.7 + 0.15 * rng_financial.normal())
        fin_cols["profit"].append(profit)
        fin_cols["debt_ratio"].append(debt)
        fin_cols["cash_flow"].append(cash)
    financial = TimeSeriesFrame([dates[i] for i in fin_rows],
                                {k: np.array(v) for k, v in fin_cols.items()})

    # Monthly macro readings: gentle trends plus a clipped rate walk.
    macro_rows = list(range(0, n, _MACRO_PERIOD))
    gdp, cpi, rate = 100.0, 100.0, 2.0
    macro_cols = {"gdp": [], "cpi": [], "interest_rate": []}
    for _ in macro_rows:
        gdp *= 1.0 + 0.005 + 0.002 * rng_macro.normal()
        cpi *= 1.0 + 0.002 + 0.001 * rng_macro.normal()
        rate = min(8.0, max(0.0, rate + 0.1 * rng_macro.normal()))
        macro_cols["gdp"].append(gdp)
        macro_cols["cpi"].append(cpi)
        macro_cols["interest_rate"].append(rate)
    macro = TimeSeriesFrame([dates[i] for i in macro_rows],
                            {k: np.array(v) for k, v in macro_cols.items()})

    policy: list[tuple[dt.date, str]] = []
    for t in range(n):
        if rng_policy.next_float() < _POLICY_EVENT_PROB:
            policy.append((dates[t], POLICY_CATEGORIES[rng_policy.randint(len(POLICY_CATEGORIES))]))

    provenance = (
        f"synth(seed={cfg.seed}, n_days={cfg.n_days}, base_vol={cfg.base_vol}, "
        f"regime_shift_prob={cfg.regime_shift_prob}, kappa={cfg.kappa}, "
        f"nonlinearity={cfg.nonlinearity})"
    )
    return DatasetBundle(market=market, financial=merge_outer(financial, macro),
                         news=news, policy=policy, provenance=provenance)
