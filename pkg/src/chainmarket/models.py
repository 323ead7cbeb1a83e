"""The archetype model zoo: MLP, RNN, LSTM, and GRU behind one interface.

Users never supply their own networks; they pick an archetype and the
oracle builds, trains, and serves it. All four share a single data
pipeline: inputs are windows of ``training_lookback`` consecutive rows of
the numeric feature columns, min-max normalized with training-set
statistics, and the target is the ``target_attrib`` value ``time_lag``
steps after the window. Training is plain per-sample stochastic gradient
descent on squared error, one full pass per epoch, with global
gradient-norm clipping for the recurrent archetypes (disable it and the
plain RNN's instability becomes observable).

Architectures and parameter layout:

* mlp  — the window flattened to ``lookback * input_dim`` inputs, then
  ``num_hidden_layers`` tanh layers of ``hidden_dim``, then a linear head.
  Single-step only: it cannot emit a prediction per window position.
* rnn  — ``h_t = tanh(W [x_t; h_{t-1}] + b)`` per layer, linear head shared
  across steps.
* lstm — gates in i, f, g, o order computed from one combined matrix per
  layer, a single bias vector per layer.
* gru  — gates in r, z, n order with the reset gate applied to the hidden
  contribution of the candidate (``n = tanh(Wx_n x + b_n + r * (Uh_n h))``).

Every archetype implements an analytic backward pass; correctness is held
to central finite differences in the test suite. The complexity score that
drives pricing is ``parameter_count * archetype multiplier``.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ARCHETYPES = ("mlp", "rnn", "lstm", "gru")
RECURRENT_ARCHETYPES = ("rnn", "lstm", "gru")

#: Linear multipliers ordering gated recurrent nets above simpler ones.
COMPLEXITY_MULTS = {"mlp": 1.0, "rnn": 1.2, "gru": 1.6, "lstm": 1.8}

DEFAULT_LEARNING_RATE = 0.01
DEFAULT_GRAD_CLIP = 5.0
DEFAULT_TRAIN_FRACTION = 0.8

_BLOB_MAGIC = b"CMM1"


class ModelError(Exception):
    """Base class for model failures."""


class UnknownArchetypeError(ModelError):
    """Requested archetype is not one of mlp/rnn/lstm/gru."""


class InvalidHyperparamsError(ModelError):
    """Hyperparameter outside its documented range."""


class InsufficientRowsError(ModelError):
    """Not enough rows for a single (lookback + lag + 1) window."""


class TrainingDivergedError(ModelError):
    """Loss went non-finite; carries the last finite loss observed."""

    def __init__(self, message: str, last_loss: float | None) -> None:
        super().__init__(message)
        self.last_loss = last_loss


class ShapeMismatchError(ModelError):
    """Query input does not match (training_lookback, input_dim)."""


class MultiStepUnsupportedError(ModelError):
    """Archetype can only output one step at a time."""


class CorruptModelError(ModelError):
    """Model blob is truncated or otherwise unreadable."""


class DimensionMismatchError(ModelError):
    """Blob header dims disagree with the weight payload."""


@dataclass
class Hyperparams:
    """User-tunable training parameters, as they arrive in a train request."""

    num_epochs: int
    target_attrib: str
    hidden_dim: int
    num_hidden_layers: int
    time_lag: int
    training_lookback: int
    sub_split_value: int | None = None

    def validate(self) -> None:
        for name in ("num_epochs", "hidden_dim", "num_hidden_layers", "training_lookback"):
            value = getattr(self, name)
            if not isinstance(value, int) or not 1 <= value <= 10_000:
                raise InvalidHyperparamsError(f"{name} must be an integer in [1, 10000], got {value!r}")
        if not isinstance(self.time_lag, int) or not 0 <= self.time_lag <= 10_000:
            raise InvalidHyperparamsError(f"time_lag must be an integer in [0, 10000], got {self.time_lag!r}")
        if self.sub_split_value is not None and (
            not isinstance(self.sub_split_value, int) or self.sub_split_value < 0
        ):
            raise InvalidHyperparamsError(f"sub_split_value must be a non-negative integer, got {self.sub_split_value!r}")
        if not isinstance(self.target_attrib, str) or not self.target_attrib:
            raise InvalidHyperparamsError("target_attrib must be a non-empty column name")

    def to_dict(self) -> dict:
        return {
            "num_epochs": self.num_epochs,
            "target_attrib": self.target_attrib,
            "hidden_dim": self.hidden_dim,
            "num_hidden_layers": self.num_hidden_layers,
            "time_lag": self.time_lag,
            "training_lookback": self.training_lookback,
            "sub_split_value": self.sub_split_value,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Hyperparams":
        return cls(
            num_epochs=int(obj["num_epochs"]),
            target_attrib=obj["target_attrib"],
            hidden_dim=int(obj["hidden_dim"]),
            num_hidden_layers=int(obj["num_hidden_layers"]),
            time_lag=int(obj["time_lag"]),
            training_lookback=int(obj["training_lookback"]),
            sub_split_value=None if obj.get("sub_split_value") is None else int(obj["sub_split_value"]),
        )


@dataclass
class EvalReport:
    """Validation metrics. loss is mean squared error in normalized space;
    accuracy is clamp(1 - RMSE_normalized, 0, 1), the value the reward
    equations consume. predictions/targets are de-normalized.
    epoch_losses holds the mean training loss per epoch when the report
    came out of train()."""

    loss: float
    accuracy: float
    predictions: list[float]
    targets: list[float]
    epoch_losses: list[float] = field(default_factory=list)


def eval_metrics(pred_norm: np.ndarray, target_norm: np.ndarray) -> tuple[float, float]:
    """(MSE, accuracy) for normalized predictions against normalized targets."""
    diff = np.asarray(pred_norm, dtype=np.float64) - np.asarray(target_norm, dtype=np.float64)
    mse = float(np.mean(diff * diff))
    rmse = math.sqrt(mse)
    return mse, min(1.0, max(0.0, 1.0 - rmse))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


# ----------------------------------------------------------------------
# Parameter layout
# ----------------------------------------------------------------------


def param_layout(archetype: str, input_dim: int, hp: Hyperparams) -> list[tuple[str, tuple[int, ...], int]]:
    """Canonical (name, shape, fan_in) list; also the serialization order."""
    if archetype not in ARCHETYPES:
        raise UnknownArchetypeError(f"unknown archetype {archetype!r}, expected one of {ARCHETYPES}")
    if input_dim < 1:
        raise ModelError(f"input_dim must be >= 1, got {input_dim}")
    H, K, L = hp.hidden_dim, hp.num_hidden_layers, hp.training_lookback
    layout: list[tuple[str, tuple[int, ...], int]] = []
    if archetype == "mlp":
        fan = L * input_dim
        for k in range(K):
            layout.append((f"dense{k}.W", (H, fan), fan))
            layout.append((f"dense{k}.b", (H,), fan))
            fan = H
    elif archetype == "gru":
        d = input_dim
        for k in range(K):
            layout.append((f"cell{k}.Wx", (3 * H, d), d))
            layout.append((f"cell{k}.Uh", (3 * H, H), H))
            layout.append((f"cell{k}.b", (3 * H,), d + H))
            d = H
    else:
        gates = 4 if archetype == "lstm" else 1
        d = input_dim
        for k in range(K):
            layout.append((f"cell{k}.W", (gates * H, d + H), d + H))
            layout.append((f"cell{k}.b", (gates * H,), d + H))
            d = H
    layout.append(("head.w", (H,), H))
    layout.append(("head.b", (1,), H))
    return layout


def parameter_count(archetype: str, input_dim: int, hp: Hyperparams) -> int:
    return sum(int(np.prod(shape)) for _, shape, _ in param_layout(archetype, input_dim, hp))


def complexity_score(archetype: str, input_dim: int, hp: Hyperparams) -> float:
    return parameter_count(archetype, input_dim, hp) * COMPLEXITY_MULTS[archetype]


def _init_params(archetype: str, input_dim: int, hp: Hyperparams, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape, fan_in in param_layout(archetype, input_dim, hp):
        bound = 1.0 / math.sqrt(fan_in)
        params[name] = rng.uniform(-bound, bound, size=shape)
    return params


# ----------------------------------------------------------------------
# Forward / backward cores
# ----------------------------------------------------------------------


class _MlpCore:
    def __init__(self, params: dict[str, np.ndarray], input_dim: int, hp: Hyperparams) -> None:
        self.p = params
        self.K = hp.num_hidden_layers

    def forward(self, window: np.ndarray):
        x = window.reshape(-1)
        acts = [x]
        a = x
        for k in range(self.K):
            a = np.tanh(self.p[f"dense{k}.W"] @ a + self.p[f"dense{k}.b"])
            acts.append(a)
        y = float(self.p["head.w"] @ a + self.p["head.b"][0])
        return y, None, acts

    def backward(self, cache, dy: float) -> dict[str, np.ndarray]:
        acts = cache
        g = {name: np.zeros_like(arr) for name, arr in self.p.items()}
        g["head.w"] = dy * acts[-1]
        g["head.b"] = np.array([dy])
        da = dy * self.p["head.w"]
        for k in reversed(range(self.K)):
            a = acts[k + 1]
            dz = da * (1.0 - a * a)
            g[f"dense{k}.W"] = np.outer(dz, acts[k])
            g[f"dense{k}.b"] = dz
            da = self.p[f"dense{k}.W"].T @ dz
        return g


class _RnnCore:
    def __init__(self, params: dict[str, np.ndarray], input_dim: int, hp: Hyperparams) -> None:
        self.p = params
        self.D = input_dim
        self.H = hp.hidden_dim
        self.K = hp.num_hidden_layers
        # Bind arrays once; SGD updates are in-place so references stay valid.
        self.cells = [(params[f"cell{k}.W"], params[f"cell{k}.b"]) for k in range(self.K)]
        self.head_w = params["head.w"]
        self.head_b = params["head.b"]

    def forward(self, window: np.ndarray):
        L = window.shape[0]
        h = [np.zeros(self.H) for _ in range(self.K)]
        cache: list[list[tuple]] = []
        steps: list[float] = []
        for t in range(L):
            inp = window[t]
            per_layer = []
            for k, (W, b) in enumerate(self.cells):
                cat = np.concatenate((inp, h[k]))
                hk = np.tanh(W @ cat + b)
                per_layer.append((cat, hk))
                h[k] = hk
                inp = hk
            cache.append(per_layer)
            steps.append(float(self.head_w @ h[-1] + self.head_b[0]))
        return steps[-1], steps, cache

    def backward(self, cache, dy: float) -> dict[str, np.ndarray]:
        L = len(cache)
        g = {name: np.zeros_like(arr) for name, arr in self.p.items()}
        g_cells = [(g[f"cell{k}.W"], g[f"cell{k}.b"]) for k in range(self.K)]
        h_final = cache[-1][-1][1]
        g["head.w"] += dy * h_final
        g["head.b"] += np.array([dy])
        carry = [np.zeros(self.H) for _ in range(self.K)]
        for t in reversed(range(L)):
            from_above = None
            for k in reversed(range(self.K)):
                W, _ = self.cells[k]
                dh = carry[k].copy()
                if k == self.K - 1 and t == L - 1:
                    dh += dy * self.head_w
                if from_above is not None:
                    dh += from_above
                cat, hk = cache[t][k]
                dz = dh * (1.0 - hk * hk)
                gW, gb = g_cells[k]
                gW += np.outer(dz, cat)
                gb += dz
                dcat = W.T @ dz
                d_in = self.D if k == 0 else self.H
                from_above = dcat[:d_in] if k > 0 else None
                carry[k] = dcat[d_in:]
        return g


class _LstmCore:
    def __init__(self, params: dict[str, np.ndarray], input_dim: int, hp: Hyperparams) -> None:
        self.p = params
        self.D = input_dim
        self.H = hp.hidden_dim
        self.K = hp.num_hidden_layers
        self.cells = [(params[f"cell{k}.W"], params[f"cell{k}.b"]) for k in range(self.K)]
        self.head_w = params["head.w"]
        self.head_b = params["head.b"]

    def forward(self, window: np.ndarray):
        L = window.shape[0]
        H = self.H
        h = [np.zeros(H) for _ in range(self.K)]
        c = [np.zeros(H) for _ in range(self.K)]
        cache: list[list[tuple]] = []
        steps: list[float] = []
        for t in range(L):
            inp = window[t]
            per_layer = []
            for k, (W, b) in enumerate(self.cells):
                cat = np.concatenate((inp, h[k]))
                z = W @ cat + b
                i = _sigmoid(z[:H])
                f = _sigmoid(z[H:2 * H])
                gg = np.tanh(z[2 * H:3 * H])
                o = _sigmoid(z[3 * H:])
                c_prev = c[k]
                ck = f * c_prev + i * gg
                tc = np.tanh(ck)
                hk = o * tc
                per_layer.append((cat, i, f, gg, o, c_prev, tc))
                h[k], c[k] = hk, ck
                inp = hk
            cache.append(per_layer)
            steps.append(float(self.head_w @ h[-1] + self.head_b[0]))
        return steps[-1], steps, cache

    def backward(self, cache, dy: float) -> dict[str, np.ndarray]:
        L = len(cache)
        H = self.H
        g = {name: np.zeros_like(arr) for name, arr in self.p.items()}
        g_cells = [(g[f"cell{k}.W"], g[f"cell{k}.b"]) for k in range(self.K)]
        last = cache[-1][-1]
        h_final = last[4] * last[6]  # o * tanh(c)
        g["head.w"] += dy * h_final
        g["head.b"] += np.array([dy])
        dh_carry = [np.zeros(H) for _ in range(self.K)]
        dc_carry = [np.zeros(H) for _ in range(self.K)]
        for t in reversed(range(L)):
            from_above = None
            for k in reversed(range(self.K)):
                W, _ = self.cells[k]
                dh = dh_carry[k].copy()
                if k == self.K - 1 and t == L - 1:
                    dh += dy * self.head_w
                if from_above is not None:
                    dh += from_above
                cat, i, f, gg, o, c_prev, tc = cache[t][k]
                do = dh * tc
                dc = dc_carry[k] + dh * o * (1.0 - tc * tc)
                di = dc * gg
                df = dc * c_prev
                dgg = dc * i
                dc_carry[k] = dc * f
                dz = np.concatenate((
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dgg * (1.0 - gg * gg),
                    do * o * (1.0 - o),
                ))
                gW, gb = g_cells[k]
                gW += np.outer(dz, cat)
                gb += dz
                dcat = W.T @ dz
                d_in = self.D if k == 0 else self.H
                from_above = dcat[:d_in] if k > 0 else None
                dh_carry[k] = dcat[d_in:]
        return g


class _GruCore:
    def __init__(self, params: dict[str, np.ndarray], input_dim: int, hp: Hyperparams) -> None:
        self.p = params
        self.D = input_dim
        self.H = hp.hidden_dim
        self.K = hp.num_hidden_layers
        self.cells = [
            (params[f"cell{k}.Wx"], params[f"cell{k}.Uh"], params[f"cell{k}.b"])
            for k in range(self.K)
        ]
        self.head_w = params["head.w"]
        self.head_b = params["head.b"]

    def forward(self, window: np.ndarray):
        L = window.shape[0]
        H = self.H
        h = [np.zeros(H) for _ in range(self.K)]
        cache: list[list[tuple]] = []
        steps: list[float] = []
        for t in range(L):
            inp = window[t]
            per_layer = []
            for k, (Wx, Uh, b) in enumerate(self.cells):
                h_prev = h[k]
                gx = Wx @ inp + b
                gh = Uh @ h_prev
                r = _sigmoid(gx[:H] + gh[:H])
                z = _sigmoid(gx[H:2 * H] + gh[H:2 * H])
                n = np.tanh(gx[2 * H:] + r * gh[2 * H:])
                hk = (1.0 - z) * n + z * h_prev
                per_layer.append((inp, h_prev, r, z, n, gh[2 * H:]))
                h[k] = hk
                inp = hk
            cache.append(per_layer)
            steps.append(float(self.head_w @ h[-1] + self.head_b[0]))
        return steps[-1], steps, cache

    def backward(self, cache, dy: float) -> dict[str, np.ndarray]:
        L = len(cache)
        H = self.H
        g = {name: np.zeros_like(arr) for name, arr in self.p.items()}
        g_cells = [
            (g[f"cell{k}.Wx"], g[f"cell{k}.Uh"], g[f"cell{k}.b"]) for k in range(self.K)
        ]
        x_l, h_prev_l, r_l, z_l, n_l, _ = cache[-1][-1]
        h_final = (1.0 - z_l) * n_l + z_l * h_prev_l
        g["head.w"] += dy * h_final
        g["head.b"] += np.array([dy])
        carry = [np.zeros(H) for _ in range(self.K)]
        for t in reversed(range(L)):
            from_above = None
            for k in reversed(range(self.K)):
                Wx, Uh, _ = self.cells[k]
                dh = carry[k].copy()
                if k == self.K - 1 and t == L - 1:
                    dh += dy * self.head_w
                if from_above is not None:
                    dh += from_above
                x, h_prev, r, z, n, gh_n = cache[t][k]
                dz_gate = dh * (h_prev - n)
                dn = dh * (1.0 - z)
                dh_prev = dh * z
                dan = dn * (1.0 - n * n)
                dr = dan * gh_n
                dgh_n = dan * r
                dar = dr * r * (1.0 - r)
                daz = dz_gate * z * (1.0 - z)
                dgx = np.concatenate((dar, daz, dan))
                dgh = np.concatenate((dar, daz, dgh_n))
                gWx, gUh, gb = g_cells[k]
                gWx += np.outer(dgx, x)
                gb += dgx
                gUh += np.outer(dgh, h_prev)
                dh_prev = dh_prev + Uh.T @ dgh
                from_above = (Wx.T @ dgx) if k > 0 else None
                carry[k] = dh_prev
        return g


_CORES = {"mlp": _MlpCore, "rnn": _RnnCore, "lstm": _LstmCore, "gru": _GruCore}


# ----------------------------------------------------------------------
# TrainedModel
# ----------------------------------------------------------------------


@dataclass
class TrainedModel:
    """An archetype instance: weights, dims, and (after training) the
    normalization and metrics needed to answer queries."""

    model_name: str
    archetype: str
    hyperparams: Hyperparams
    input_dim: int
    params: dict[str, np.ndarray]
    complexity: float
    feature_columns: list[str] = field(default_factory=list)
    normalization: dict[str, tuple[float, float]] = field(default_factory=dict)
    trainer: str = ""
    ds_name: str = ""
    final_loss: float | None = None
    accuracy: float | None = None

    def core(self):
        return _CORES[self.archetype](self.params, self.input_dim, self.hyperparams)

    # -- normalization helpers ------------------------------------------

    def normalize_matrix(self, X: np.ndarray) -> np.ndarray:
        out = np.empty_like(X, dtype=np.float64)
        for j, col in enumerate(self.feature_columns):
            mn, mx = self.normalization[col]
            span = mx - mn
            out[:, j] = (X[:, j] - mn) / span if span > 0 else 0.0
        return out

    def normalize_target(self, value: float) -> float:
        mn, mx = self.normalization[self.hyperparams.target_attrib]
        span = mx - mn
        return (value - mn) / span if span > 0 else 0.0

    def denormalize_target(self, value: float) -> float:
        mn, mx = self.normalization[self.hyperparams.target_attrib]
        return mn + value * (mx - mn)


def create_model(archetype: str, input_dim: int, hyperparams: Hyperparams, seed: int = 0, model_name: str = "") -> TrainedModel:
    """Build an untrained model with seeded uniform fan-in initialization."""
    hyperparams.validate()
    params = _init_params(archetype, input_dim, hyperparams, seed)
    return TrainedModel(
        model_name=model_name,
        archetype=archetype,
        hyperparams=hyperparams,
        input_dim=input_dim,
        params=params,
        complexity=complexity_score(archetype, input_dim, hyperparams),
    )


def model_complexity(model: TrainedModel) -> float:
    return complexity_score(model.archetype, model.input_dim, model.hyperparams)


# ----------------------------------------------------------------------
# Windows and training
# ----------------------------------------------------------------------


def build_windows(X: np.ndarray, target_idx: int, lookback: int, lag: int) -> tuple[np.ndarray, np.ndarray]:
    """Sliding windows over rows of X; target is the value ``lag`` steps
    after the window ends."""
    n = X.shape[0]
    count = n - lookback - lag
    if count <= 0:
        raise InsufficientRowsError(
            f"{n} rows cannot form a window of lookback {lookback} plus lag {lag} "
            f"(need at least {lookback + lag + 1})"
        )
    windows = np.stack([X[t:t + lookback] for t in range(count)])
    targets = X[lookback + lag:lookback + lag + count, target_idx]
    return windows, targets


def _normalization_stats(X: np.ndarray, columns: list[str]) -> dict[str, tuple[float, float]]:
    return {
        col: (float(X[:, j].min()), float(X[:, j].max()))
        for j, col in enumerate(columns)
    }


def loss_and_grads(model: TrainedModel, window: np.ndarray, target: float) -> tuple[float, dict[str, np.ndarray]]:
    """Squared error on one normalized window plus its analytic gradients."""
    core = model.core()
    y, _, cache = core.forward(np.asarray(window, dtype=np.float64))
    err = y - target
    return err * err, core.backward(cache, 2.0 * err)


def _clip_grads(grads: dict[str, np.ndarray], clip: float) -> None:
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > clip and total > 0:
        scale = clip / total
        for g in grads.values():
            g *= scale


def train(
    model: TrainedModel,
    frame,
    *,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    grad_clip: float | None = DEFAULT_GRAD_CLIP,
) -> tuple[TrainedModel, EvalReport]:
    """Fit the model on a frame (already sub-split by the caller) and return
    it with a validation report.

    The frame's numeric columns are the features, in frame order; the
    target must be one of them. Gradient clipping applies to recurrent
    archetypes only; pass ``grad_clip=None`` to disable it.
    """
    hp = model.hyperparams
    hp.validate()
    features = frame.numeric_columns()
    if hp.target_attrib not in features:
        raise InvalidHyperparamsError(
            f"target_attrib {hp.target_attrib!r} is not a numeric column of the dataset"
        )
    if len(features) != model.input_dim:
        raise ShapeMismatchError(
            f"model expects input_dim {model.input_dim}, dataset has {len(features)} numeric columns"
        )
    X = frame.numeric_matrix(features)
    n = X.shape[0]
    if n < 2:
        raise InsufficientRowsError(f"need at least 2 rows, have {n}")
    cut = math.ceil(train_fraction * n)
    X_train, X_val = X[:cut], X[cut:]

    model.feature_columns = list(features)
    model.normalization = _normalization_stats(X_train, features)
    target_idx = features.index(hp.target_attrib)
    Xtr = model.normalize_matrix(X_train)
    Xva = model.normalize_matrix(X_val)
    win_tr, tgt_tr = build_windows(Xtr, target_idx, hp.training_lookback, hp.time_lag)
    win_va, tgt_va = build_windows(Xva, target_idx, hp.training_lookback, hp.time_lag)

    core = model.core()
    clip = grad_clip if model.archetype in RECURRENT_ARCHETYPES else None
    last_finite: float | None = None
    epoch_losses: list[float] = []
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for epoch in range(hp.num_epochs):
            epoch_total = 0.0
            for idx in range(win_tr.shape[0]):
                y, _, cache = core.forward(win_tr[idx])
                err = y - tgt_tr[idx]
                loss = err * err
                if not math.isfinite(loss):
                    raise TrainingDivergedError(
                        f"loss went non-finite at epoch {epoch}; "
                        f"last finite loss was {last_finite}",
                        last_loss=last_finite,
                    )
                last_finite = loss
                epoch_total += loss
                grads = core.backward(cache, 2.0 * err)
                if clip is not None:
                    _clip_grads(grads, clip)
                for name, grad in grads.items():
                    model.params[name] -= learning_rate * grad
            epoch_losses.append(epoch_total / win_tr.shape[0])

        preds = np.array([core.forward(win_va[i])[0] for i in range(win_va.shape[0])])
    if not np.all(np.isfinite(preds)):
        raise TrainingDivergedError(
            f"validation predictions went non-finite; last finite loss was {last_finite}",
            last_loss=last_finite,
        )
    mse, accuracy = eval_metrics(preds, tgt_va)
    report = EvalReport(
        loss=mse,
        accuracy=accuracy,
        predictions=[model.denormalize_target(float(p)) for p in preds],
        targets=[model.denormalize_target(float(t)) for t in tgt_va],
        epoch_losses=epoch_losses,
    )
    model.final_loss = mse
    model.accuracy = accuracy
    return model, report


def evaluate(model: TrainedModel, frame) -> EvalReport:
    """Score a trained model on fresh rows using its stored normalization."""
    if not model.normalization:
        raise ModelError("model has not been trained")
    hp = model.hyperparams
    X = frame.numeric_matrix(model.feature_columns)
    Xn = model.normalize_matrix(X)
    target_idx = model.feature_columns.index(hp.target_attrib)
    windows, targets = build_windows(Xn, target_idx, hp.training_lookback, hp.time_lag)
    core = model.core()
    preds = np.array([core.forward(windows[i])[0] for i in range(windows.shape[0])])
    mse, accuracy = eval_metrics(preds, targets)
    return EvalReport(
        loss=mse,
        accuracy=accuracy,
        predictions=[model.denormalize_target(float(p)) for p in preds],
        targets=[model.denormalize_target(float(t)) for t in targets],
    )


def _coerce_window(model: TrainedModel, input_window) -> np.ndarray:
    hp = model.hyperparams
    L, D = hp.training_lookback, model.input_dim
    w = np.asarray(input_window, dtype=np.float64)
    if w.ndim == 1:
        if D == 1 and w.shape[0] == L:
            w = w.reshape(L, 1)
        elif w.shape[0] == L * D:
            w = w.reshape(L, D)
    if w.shape != (L, D):
        raise ShapeMismatchError(
            f"input window must have shape ({L}, {D}), got {tuple(w.shape)}"
        )
    return w


def query(model: TrainedModel, input_window) -> float:
    """One de-normalized prediction for a raw-valued input window."""
    if not model.normalization:
        raise ModelError("model has not been trained")
    w = _coerce_window(model, input_window)
    wn = np.empty_like(w)
    for j, col in enumerate(model.feature_columns):
        mn, mx = model.normalization[col]
        span = mx - mn
        wn[:, j] = (w[:, j] - mn) / span if span > 0 else 0.0
    y, _, _ = model.core().forward(wn)
    return model.denormalize_target(float(y))


def query_steps(model: TrainedModel, input_window) -> list[float]:
    """Per-step predictions across the window; recurrent archetypes only."""
    if model.archetype == "mlp":
        raise MultiStepUnsupportedError("mlp outputs a single step only")
    if not model.normalization:
        raise ModelError("model has not been trained")
    w = _coerce_window(model, input_window)
    wn = np.empty_like(w)
    for j, col in enumerate(model.feature_columns):
        mn, mx = model.normalization[col]
        span = mx - mn
        wn[:, j] = (w[:, j] - mn) / span if span > 0 else 0.0
    _, steps, _ = model.core().forward(wn)
    return [model.denormalize_target(float(s)) for s in steps]


# ----------------------------------------------------------------------
# Serialization
# ----------------------------------------------------------------------


def save_model_bytes(model: TrainedModel) -> bytes:
    """Canonical blob: magic, 4-byte header length, canonical JSON header,
    then all weights as little-endian float64 in layout order."""
    layout = param_layout(model.archetype, model.input_dim, model.hyperparams)
    header = {
        "archetype": model.archetype,
        "input_dim": model.input_dim,
        "hyperparams": model.hyperparams.to_dict(),
        "feature_columns": model.feature_columns,
        "normalization": {k: [v[0], v[1]] for k, v in model.normalization.items()},
        "model_name": model.model_name,
        "trainer": model.trainer,
        "ds_name": model.ds_name,
        "complexity": model.complexity,
        "final_loss": model.final_loss,
        "accuracy": model.accuracy,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = b"".join(model.params[name].astype("<f8").tobytes() for name, _, _ in layout)
    return _BLOB_MAGIC + len(header_bytes).to_bytes(4, "big") + header_bytes + body


def load_model_bytes(data: bytes) -> TrainedModel:
    """Parse a model blob; the weight payload must agree exactly with the
    dimensions implied by the header."""
    if len(data) < 8 or data[:4] != _BLOB_MAGIC:
        raise CorruptModelError("not a model blob (bad magic)")
    header_len = int.from_bytes(data[4:8], "big")
    if len(data) < 8 + header_len:
        raise CorruptModelError("model blob truncated inside header")
    try:
        header = json.loads(data[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModelError(f"model header is not valid JSON: {exc}") from exc
    archetype = header.get("archetype")
    if archetype not in ARCHETYPES:
        raise CorruptModelError(f"unknown archetype {archetype!r} in header")
    hp = Hyperparams.from_dict(header["hyperparams"])
    input_dim = int(header["input_dim"])
    layout = param_layout(archetype, input_dim, hp)
    expected_floats = sum(int(np.prod(shape)) for _, shape, _ in layout)
    body = data[8 + header_len:]
    if len(body) != expected_floats * 8:
        raise DimensionMismatchError(
            f"weight payload holds {len(body) // 8} float64 values, "
            f"{archetype} at these dims needs {expected_floats}"
        )
    params: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape, _ in layout:
        count = int(np.prod(shape))
        params[name] = np.frombuffer(
            body, dtype="<f8", count=count, offset=offset
        ).astype(np.float64).reshape(shape)
        offset += count * 8
    return TrainedModel(
        model_name=header.get("model_name", ""),
        archetype=archetype,
        hyperparams=hp,
        input_dim=input_dim,
        params=params,
        complexity=float(header["complexity"]),
        feature_columns=list(header.get("feature_columns", [])),
        normalization={k: (float(v[0]), float(v[1])) for k, v in header.get("normalization", {}).items()},
        trainer=header.get("trainer", ""),
        ds_name=header.get("ds_name", ""),
        final_loss=header.get("final_loss"),
        accuracy=header.get("accuracy"),
    )


def save_model(model: TrainedModel, store, environment: str = "cas") -> str:
    """Serialize into an object store; returns the (integrity-checked) link."""
    return store.put(save_model_bytes(model), environment, name=f"{model.model_name}.model")


def load_model(link: str, store) -> TrainedModel:
    return load_model_bytes(store.get(link))


# ----------------------------------------------------------------------
# Model registry
# ----------------------------------------------------------------------


@dataclass
class ModelMeta:
    """Registry record for a trained, stored model."""

    model_name: str
    archetype: str
    ds_name: str
    complexity: float
    trainer: str
    link: str
    accuracy: float
    final_loss: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "model_name": self.model_name,
                "archetype": self.archetype,
                "ds_name": self.ds_name,
                "complexity": self.complexity,
                "trainer": self.trainer,
                "link": self.link,
                "accuracy": self.accuracy,
                "final_loss": self.final_loss,
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "ModelMeta":
        obj = json.loads(line)
        return cls(
            model_name=obj["model_name"],
            archetype=obj["archetype"],
            ds_name=obj["ds_name"],
            complexity=float(obj["complexity"]),
            trainer=obj["trainer"],
            link=obj["link"],
            accuracy=float(obj["accuracy"]),
            final_loss=float(obj["final_loss"]),
        )


class ModelRegistry:
    """Name -> ModelMeta map persisted one JSON object per line."""

    def __init__(self, registry_path: str | Path | None = None) -> None:
        self._lock = threading.RLock()
        self._models: dict[str, ModelMeta] = {}
        self._path = Path(registry_path) if registry_path else None
        if self._path and self._path.is_file():
            for line in self._path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    meta = ModelMeta.from_json(line)
                    self._models[meta.model_name] = meta

    def register(self, meta: ModelMeta) -> None:
        with self._lock:
            if meta.model_name in self._models:
                raise ModelError(f"model {meta.model_name!r} already registered")
            self._models[meta.model_name] = meta
            if self._path:
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(meta.to_json() + "\n")

    def get(self, model_name: str) -> ModelMeta | None:
        with self._lock:
            return self._models.get(model_name)

    def list_models(self) -> list[ModelMeta]:
        with self._lock:
            return list(self._models.values())
