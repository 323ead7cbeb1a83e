"""Bundled synthetic market data for offline runs and demos.

The generator produces a deterministic noisy-sine price series shaped like
a small stock file: a categorical ticker column, a date-like string column,
and numeric close/volume columns. Tests and demos use it wherever a real
public dataset would otherwise have to be downloaded.

``noisy_sine_csv`` fixes the statistical content; ``padded_csv`` wraps it
with a filler column so the byte size can be pinned exactly (reward math
prices datasets by the byte).
"""

from __future__ import annotations

import numpy as np

DEFAULT_ROWS = 750
DEFAULT_SEED = 7


def noisy_sine_series(
    rows: int = DEFAULT_ROWS,
    seed: int = DEFAULT_SEED,
    base: float = 50.0,
    amplitude: float = 20.0,
    period: float = 50.0,
    ripple: float = 6.0,
    ripple_period: float = 7.0,
    noise: float = 1.5,
) -> np.ndarray:
    """Close prices: slow sine plus a fast ripple plus Gaussian noise."""
    rng = np.random.default_rng(seed)
    t = np.arange(rows, dtype=np.float64)
    series = (
        base
        + amplitude * np.sin(2.0 * np.pi * t / period)
        + ripple * np.sin(2.0 * np.pi * t / ripple_period)
        + noise * rng.standard_normal(rows)
    )
    return np.round(series, 4)


def noisy_sine_csv(
    rows: int = DEFAULT_ROWS,
    seed: int = DEFAULT_SEED,
    ticker: str = "SYN",
    **series_kwargs,
) -> bytes:
    """CSV bytes: stock,date,close,volume with ``rows`` data rows."""
    close = noisy_sine_series(rows=rows, seed=seed, **series_kwargs)
    rng = np.random.default_rng(seed + 1)
    volume = np.round(1000.0 + 200.0 * rng.random(rows), 2)
    lines = ["stock,date,close,volume"]
    for i in range(rows):
        week, day = divmod(i, 5)
        lines.append(f"{ticker},w{week:03d}d{day},{close[i]},{volume[i]}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def market_series_csv(rows: int = DEFAULT_ROWS, seed: int = DEFAULT_SEED, ticker: str = "SYN") -> bytes:
    """The bundled archetype-evaluation series: a noisy sine whose amplitude
    is modulated by a smoothly oscillating volume column.

    The close price is 50 + 22 * sin(2*pi*t/50) * (volume/1000) + noise with
    volume = 1000 + 450 * sin(2*pi*t/30) + noise, so predicting it requires
    combining the price phase with the current volume level. That
    multiplicative structure is what separates the gated archetypes from the
    plain recurrent one in the evaluation suite.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(rows, dtype=np.float64)
    volume = 1000.0 + 450.0 * np.sin(2.0 * np.pi * t / 30.0) + 30.0 * rng.standard_normal(rows)
    close = (
        50.0
        + 22.0 * np.sin(2.0 * np.pi * t / 50.0) * (volume / 1000.0)
        + 1.2 * rng.standard_normal(rows)
    )
    lines = ["stock,date,close,volume"]
    for i in range(rows):
        week, day = divmod(i, 5)
        lines.append(f"{ticker},w{week:03d}d{day},{round(float(close[i]), 4)},{round(float(volume[i]), 2)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def padded_csv(target_bytes: int, rows: int = DEFAULT_ROWS, seed: int = DEFAULT_SEED, ticker: str = "SYN") -> bytes:
    """Same series, plus a trailing categorical ``memo`` column sized so the
    file is exactly ``target_bytes`` long."""
    base = noisy_sine_csv(rows=rows, seed=seed, ticker=ticker)
    lines = base.decode("utf-8").splitlines()
    lines[0] += ",memo"
    skeleton = ("\n".join([lines[0]] + [line + "," for line in lines[1:]]) + "\n").encode("utf-8")
    deficit = target_bytes - len(skeleton)
    if deficit < 0:
        raise ValueError(
            f"target_bytes {target_bytes} is smaller than the {len(skeleton)}-byte skeleton"
        )
    per_row, remainder = divmod(deficit, rows)
    out = [lines[0]]
    for i, line in enumerate(lines[1:]):
        pad = per_row + (1 if i < remainder else 0)
        out.append(line + "," + "x" * pad)
    data = ("\n".join(out) + "\n").encode("utf-8")
    assert len(data) == target_bytes
    return data
