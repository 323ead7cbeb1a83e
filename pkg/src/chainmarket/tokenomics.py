"""Reward equations, operation pricing, and the adjustable multiplier log.

All money is integer microALGO. Reward and price math runs through Decimal
so that values like floor(10^7 * 0.333) come out exact; a float never
reaches the ledger.

The oracle's economic knobs live in a RewardSchedule. Every change to any
field goes through :func:`log_mult_update`, which commits a zero-amount
self-payment carrying a <MULT_UPDATE> note before the schedule mutates, so
the chain alone is a complete audit log of pricing history.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from decimal import Decimal, ROUND_CEILING, ROUND_FLOOR
from pathlib import Path

from . import protocol
from .ledger import ChainAdapter

PRICE_KINDS = ("dataset_upload", "train_model", "query_model")

#: schedule field -> "calc" label carried in <MULT_UPDATE> notes
CALC_LABELS = {
    "dataset_mult": "dataset",
    "training_mult": "training",
    "fee_fraction": "fee_fraction",
    "dataset_upload_per_byte": "dataset_upload_per_byte",
    "training_per_complexity": "training_per_complexity",
    "query_per_complexity": "query_per_complexity",
}
FIELD_FOR_CALC = {v: k for k, v in CALC_LABELS.items()}


def _dec(value: float | int | str | Decimal) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, float):
        return Decimal(str(value))
    return Decimal(value)


def _floor(value: Decimal) -> int:
    return int(value.to_integral_value(rounding=ROUND_FLOOR))


def _ceil(value: Decimal) -> int:
    return int(value.to_integral_value(rounding=ROUND_CEILING))


def _check_accuracy(accuracy: float) -> None:
    if not 0.0 <= float(accuracy) <= 1.0:
        raise ValueError(f"accuracy must be in [0, 1], got {accuracy!r}")


def dataset_reward(ds_size: int, mult: float, accuracy: float) -> int:
    """Reward for a dataset whose training/query produced ``accuracy``:
    floor(ds_size * mult * accuracy) microALGO."""
    if ds_size < 0:
        raise ValueError(f"ds_size must be >= 0, got {ds_size}")
    _check_accuracy(accuracy)
    return _floor(_dec(ds_size) * _dec(mult) * _dec(accuracy))


def training_reward(mult: float, accuracy: float) -> int:
    """Reward for training a model that reached ``accuracy``:
    floor(mult * accuracy) microALGO."""
    _check_accuracy(accuracy)
    return _floor(_dec(mult) * _dec(accuracy))


def oracle_fee(amount: int, fee_fraction: float) -> int:
    """Cut of an incoming payment retained by the oracle host:
    floor(amount * fee_fraction). Remainder funds rewards."""
    if amount < 0:
        raise ValueError(f"amount must be >= 0, got {amount}")
    return _floor(_dec(amount) * _dec(fee_fraction))


@dataclass
class RewardSchedule:
    """The oracle's economic parameters. Mutate only via log_mult_update."""

    dataset_mult: float = 2.0
    training_mult: float = 10_000_000.0
    fee_fraction: float = 0.01
    dataset_upload_per_byte: float = 1.0
    training_per_complexity: float = 10_000.0
    query_per_complexity: float = 100.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be >= 0")
        if self.fee_fraction >= 1:
            raise ValueError("fee_fraction must be < 1")

    def save(self, path: str | Path) -> None:
        lines = [f"{f.name}={getattr(self, f.name)!r}" for f in fields(self)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RewardSchedule":
        values: dict[str, float] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, raw = line.partition("=")
            values[key.strip()] = float(raw.strip())
        return cls(**values)


def price(kind: str, schedule: RewardSchedule, *, ds_size: int | None = None, complexity: float | None = None) -> int:
    """Quote for one of the three paid operations, never below 1 microALGO.

    dataset_upload prices by size; train_model and query_model price by the
    model's complexity score, so simpler archetypes are cheaper.
    """
    if kind == "dataset_upload":
        if ds_size is None or ds_size < 0:
            raise ValueError("dataset_upload price needs ds_size >= 0")
        quoted = _ceil(_dec(ds_size) * _dec(schedule.dataset_upload_per_byte))
    elif kind == "train_model":
        if complexity is None:
            raise ValueError("train_model price needs a model complexity")
        quoted = _ceil(_dec(complexity) * _dec(schedule.training_per_complexity))
    elif kind == "query_model":
        if complexity is None:
            raise ValueError("query_model price needs a model complexity")
        quoted = _ceil(_dec(complexity) * _dec(schedule.query_per_complexity))
    else:
        raise ValueError(f"unknown price kind {kind!r}, expected one of {PRICE_KINDS}")
    return max(1, quoted)


def log_mult_update(
    schedule: RewardSchedule,
    field_name: str,
    new_value: float,
    chain: ChainAdapter,
    oracle_address: str,
) -> str:
    """Set a schedule field and log the change on-chain, atomically.

    The <MULT_UPDATE> note commits first; if the ledger rejects it the
    schedule stays unchanged. A no-op update (same value) is still logged,
    so the audit trail is complete.
    """
    if field_name not in CALC_LABELS:
        raise ValueError(f"unknown schedule field {field_name!r}")
    old_value = getattr(schedule, field_name)
    replacement = {field_name: float(new_value)}
    updated = RewardSchedule(  # validates the new value before anything is logged
        **{f.name: replacement.get(f.name, getattr(schedule, f.name)) for f in fields(schedule)}
    )
    note = protocol.make_note(
        protocol.MULT_UPDATE,
        {"calc": CALC_LABELS[field_name], "old": str(old_value), "new": str(new_value)},
    )
    txn_id = chain.submit_payment(oracle_address, oracle_address, 0, note)
    for f in fields(schedule):
        setattr(schedule, f.name, getattr(updated, f.name))
    return txn_id


def replay_schedule(initial: RewardSchedule, envelopes: list[protocol.NoteEnvelope]) -> RewardSchedule:
    """Fold <MULT_UPDATE> notes (in chain order) over an initial schedule."""
    state = RewardSchedule(**{f.name: getattr(initial, f.name) for f in fields(initial)})
    for env in envelopes:
        if env.op != protocol.MULT_UPDATE:
            continue
        args = protocol.validate_args(env.op, env.args)
        setattr(state, FIELD_FOR_CALC[args["calc"]], float(args["new"]))
    return state
