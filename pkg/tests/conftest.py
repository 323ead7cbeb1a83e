"""Shared fixtures: deterministic clocks and a full in-process marketplace."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import pytest

from chainmarket import tokenomics
from chainmarket.client import ClientConfig, ClientNode, ClientService
from chainmarket.ledger import SimulatedLedger
from chainmarket.oracle import OracleConfig, OracleNode, OracleService

ORACLE_ADDRESS = "oracle-host"
ORACLE_FUNDS = 5_000_000_000


def make_clock(start: int = 1_000_000, step: int = 1_000):
    """Deterministic millisecond clock advancing ``step`` per call."""
    counter = itertools.count(start, step)
    return lambda: next(counter)


def wait_for(predicate, timeout: float = 30.0, interval: float = 0.02):
    """Poll until predicate() is truthy; fail the test on timeout."""
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        value = predicate()
        if value:
            return value
        time.sleep(interval)
    raise AssertionError("condition not reached within timeout")


@dataclass
class Market:
    ledger: SimulatedLedger
    oracle_node: OracleNode
    oracle_service: OracleService
    client_node: ClientNode
    client_service: ClientService

    @property
    def client_url(self) -> str:
        return self.client_service.url

    @property
    def oracle_url(self) -> str:
        return self.oracle_service.url


@pytest.fixture
def market(tmp_path):
    """A live marketplace: simulated ledger, oracle + client services with
    fast polling, oracle funded for rewards and refunds."""
    ledger = SimulatedLedger(log_path=tmp_path / "chain.jsonl")
    ledger.faucet(ORACLE_ADDRESS, ORACLE_FUNDS)
    oracle_config = OracleConfig(
        storage_root=tmp_path / "oracle",
        oracle_address=ORACLE_ADDRESS,
        poll_interval_s=0.02,
        model_seed=0,
    )
    oracle_node = OracleNode(ledger, oracle_config, schedule=tokenomics.RewardSchedule())
    oracle_service = OracleService(oracle_node).start()
    client_config = ClientConfig(
        data_dir=tmp_path / "client",
        oracle_url=oracle_service.url,
        oracle_address=ORACLE_ADDRESS,
        store_root=tmp_path / "oracle",  # shared content-addressed namespace
        poll_interval_s=0.02,
    )
    client_node = ClientNode(ledger, client_config)
    client_service = ClientService(client_node).start()
    m = Market(ledger, oracle_node, oracle_service, client_node, client_service)
    yield m
    client_service.stop()
    oracle_service.stop()
    ledger.close()
