"""Reward equations, prices, fee split, and the on-chain multiplier log."""

from __future__ import annotations

import pytest

from chainmarket import protocol, tokenomics
from chainmarket.ledger import SimulatedLedger
from chainmarket.tokenomics import (
    RewardSchedule,
    dataset_reward,
    log_mult_update,
    oracle_fee,
    price,
    replay_schedule,
    training_reward,
)
from conftest import make_clock

ACCURACIES = (0.3, 0.5, 0.7, 0.9, 0.99)

#: Training rewards for mult 10^7 and 3*10^7 at the five accuracies.
TRAINING_TABLE = {
    10_000_000: (3_000_000, 5_000_000, 7_000_000, 9_000_000, 9_900_000),
    30_000_000: (9_000_000, 15_000_000, 21_000_000, 27_000_000, 29_700_000),
}

#: Dataset rewards for a 5 * 10^6 byte dataset at mult 2 and 6.
DATASET_TABLE = {
    2: (3_000_000, 5_000_000, 7_000_000, 9_000_000, 9_900_000),
    6: (9_000_000, 15_000_000, 21_000_000, 27_000_000, 29_700_000),
}

DS_SIZE = 5_000_000


@pytest.mark.parametrize("mult", sorted(TRAINING_TABLE))
def test_training_reward_table(mult):
    for accuracy, expected in zip(ACCURACIES, TRAINING_TABLE[mult]):
        assert training_reward(mult, accuracy) == expected


@pytest.mark.parametrize("mult", sorted(DATASET_TABLE))
def test_dataset_reward_table(mult):
    for accuracy, expected in zip(ACCURACIES, DATASET_TABLE[mult]):
        assert dataset_reward(DS_SIZE, mult, accuracy) == expected


def test_cross_table_identity():
    # A 5 MB dataset at mult m pays exactly what training pays at mult 5e6 * m.
    for mult in DATASET_TABLE:
        for accuracy in ACCURACIES:
            assert dataset_reward(DS_SIZE, mult, accuracy) == training_reward(DS_SIZE * mult, accuracy)


def test_floor_is_exact_not_float_floor():
    assert training_reward(10 ** 7, 0.333) == 3_330_000
    assert dataset_reward(10, 0.25, 0.5) == 1  # 1.25 floors to 1


def test_zero_accuracy_pays_nothing():
    assert dataset_reward(10 ** 9, 99.0, 0.0) == 0
    assert training_reward(10 ** 9, 0.0) == 0


def test_accuracy_out_of_range_rejected():
    for bad in (-0.01, 1.01):
        with pytest.raises(ValueError):
            training_reward(10, bad)
        with pytest.raises(ValueError):
            dataset_reward(10, 1, bad)


def test_rewards_monotone():
    last = -1
    for accuracy in ACCURACIES:
        value = dataset_reward(DS_SIZE, 2, accuracy)
        assert value >= last
        last = value
    assert dataset_reward(DS_SIZE + 1, 2, 0.5) >= dataset_reward(DS_SIZE, 2, 0.5)
    assert training_reward(2 * 10 ** 7, 0.5) >= training_reward(10 ** 7, 0.5)


def test_rewards_are_integers():
    for accuracy in (0.123456, 0.999999, 1.0):
        assert isinstance(training_reward(10 ** 7, accuracy), int)
        assert isinstance(dataset_reward(DS_SIZE, 2.5, accuracy), int)


# ----------------------------------------------------------------------
# Prices
# ----------------------------------------------------------------------


def test_price_floor_is_one_microalgo():
    schedule = RewardSchedule()
    assert price("dataset_upload", schedule, ds_size=0) == 1


def test_price_examples():
    schedule = RewardSchedule()
    assert price("dataset_upload", schedule, ds_size=5_000_000) == 5_000_000
    assert price("query_model", schedule, complexity=61.0) == 6_100
    assert price("train_model", schedule, complexity=61.0) == 610_000


def test_price_increases_with_complexity():
    schedule = RewardSchedule()
    assert price("train_model", schedule, complexity=120.0) > price("train_model", schedule, complexity=61.0)


def test_unknown_price_kind():
    with pytest.raises(ValueError):
        price("rent_gpu", RewardSchedule(), ds_size=1)


# ----------------------------------------------------------------------
# Oracle fee
# ----------------------------------------------------------------------


def test_fee_examples_and_partition():
    assert oracle_fee(1_000_000, 0.01) == 10_000
    assert oracle_fee(123, 0.0) == 0
    for amount in (0, 1, 999, 10 ** 9, 123_456_789):
        fee = oracle_fee(amount, 0.013)
        assert fee + (amount - fee) == amount
        assert 0 <= fee <= amount


# ----------------------------------------------------------------------
# Schedule and its on-chain log
# ----------------------------------------------------------------------


def chain_with_oracle() -> SimulatedLedger:
    ledger = SimulatedLedger(clock=make_clock())
    ledger.faucet("oracle", 10 ** 9)
    return ledger


def test_mult_update_logged_on_chain():
    ledger = chain_with_oracle()
    schedule = RewardSchedule(dataset_mult=2.0)
    log_mult_update(schedule, "dataset_mult", 6.0, ledger, "oracle")
    assert schedule.dataset_mult == 6.0
    env = protocol.decode_note(ledger.transactions()[-1].note)
    assert env.op == protocol.MULT_UPDATE
    assert env.args["calc"] == "dataset" and env.args["old"] == "2.0" and env.args["new"] == "6.0"


def test_noop_update_still_logged():
    ledger = chain_with_oracle()
    schedule = RewardSchedule()
    before = len(ledger.transactions())
    log_mult_update(schedule, "training_mult", schedule.training_mult, ledger, "oracle")
    assert len(ledger.transactions()) == before + 1


def test_ledger_rejection_leaves_schedule_unchanged():
    ledger = SimulatedLedger(clock=make_clock())  # oracle account unfunded
    schedule = RewardSchedule(dataset_mult=2.0)
    with pytest.raises(Exception):
        log_mult_update(schedule, "dataset_mult", 6.0, ledger, "oracle")
    assert schedule.dataset_mult == 2.0


def test_invalid_values_rejected_before_logging():
    ledger = chain_with_oracle()
    schedule = RewardSchedule()
    before = len(ledger.transactions())
    with pytest.raises(ValueError):
        log_mult_update(schedule, "fee_fraction", 1.5, ledger, "oracle")
    with pytest.raises(ValueError):
        log_mult_update(schedule, "not_a_field", 1.0, ledger, "oracle")
    assert len(ledger.transactions()) == before  # nothing logged for rejected updates
    assert schedule == RewardSchedule()


def test_replaying_mult_updates_reproduces_schedule():
    ledger = chain_with_oracle()
    schedule = RewardSchedule()
    initial = RewardSchedule()
    log_mult_update(schedule, "dataset_mult", 6.0, ledger, "oracle")
    log_mult_update(schedule, "training_mult", 3e7, ledger, "oracle")
    log_mult_update(schedule, "fee_fraction", 0.02, ledger, "oracle")
    log_mult_update(schedule, "dataset_mult", 2.5, ledger, "oracle")
    envelopes = [protocol.decode_note(t.note) for t in ledger.transactions() if t.note]
    rebuilt = replay_schedule(initial, envelopes)
    assert rebuilt == schedule


def test_schedule_file_round_trip(tmp_path):
    schedule = RewardSchedule(dataset_mult=3.5, fee_fraction=0.015)
    path = tmp_path / "schedule.conf"
    schedule.save(path)
    assert RewardSchedule.load(path) == schedule


def test_schedule_validation():
    with pytest.raises(ValueError):
        RewardSchedule(fee_fraction=1.0)
    with pytest.raises(ValueError):
        RewardSchedule(dataset_mult=-1.0)
