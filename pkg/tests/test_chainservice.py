"""Chain service + HTTP adapter: the seam where a real chain would plug in."""

from __future__ import annotations

import json
import signal
import subprocess
import sys
import time

import pytest

from chainmarket import protocol, tokenomics
from chainmarket.chainservice import HttpChainAdapter, run_chain_service
from chainmarket.client import ClientConfig, ClientNode, ClientService
from chainmarket.httpjson import ApiError
from chainmarket.ledger import SimulatedLedger
from chainmarket.oracle import OracleConfig, OracleNode, OracleService
from chainmarket.sampledata import noisy_sine_csv
from conftest import make_clock, wait_for


@pytest.fixture
def served_chain():
    ledger = SimulatedLedger(clock=make_clock())
    server = run_chain_service(ledger)
    adapter = HttpChainAdapter(server.url)
    yield ledger, adapter
    server.stop()


def test_adapter_round_trip(served_chain):
    ledger, adapter = served_chain
    adapter.faucet("A", 10_000_000)
    assert adapter.balance("A") == 10_000_000
    note = protocol.make_note(protocol.REWARD, {"reason": "dataset_usage", "ref_name": "d", "accuracy": "1"})
    txn_id = adapter.submit_payment("A", "B", 2_500, note)
    assert adapter.balance("B") == 2_500
    got = adapter.lookup("B", 0)
    assert [t.id for t in got] == [txn_id]
    assert protocol.decode_note(got[0].note).op == protocol.REWARD
    assert any(t.id == txn_id for t in adapter.log_for("A"))


def test_adapter_surfaces_rejections(served_chain):
    _, adapter = served_chain
    with pytest.raises(ApiError, match="unknown sender"):
        adapter.submit_payment("ghost", "B", 1)


def test_marketplace_runs_over_http_adapter(served_chain, tmp_path):
    """Oracle and client sharing the chain only through the HTTP seam."""
    _, adapter = served_chain
    adapter.faucet("oracle-host", 10 ** 10)
    oracle_service = OracleService(OracleNode(
        adapter,
        OracleConfig(storage_root=tmp_path / "oracle", oracle_address="oracle-host", poll_interval_s=0.02),
        schedule=tokenomics.RewardSchedule(),
    )).start()
    client_service = ClientService(ClientNode(adapter, ClientConfig(
        data_dir=tmp_path / "client",
        oracle_url=oracle_service.url,
        oracle_address="oracle-host",
        store_root=tmp_path / "oracle",
        poll_interval_s=0.02,
    ))).start()
    try:
        client = client_service.node
        client.faucet("alice", 10 ** 9)
        csv = noisy_sine_csv(rows=80, seed=2)
        link = client.stage_bytes(csv)
        client.submit("alice", protocol.UP_DATASET,
                      {"ds_name": "d1", "ds_link": link, "ds_size": str(len(csv))})
        updates = wait_for(lambda: client.fetch_updates("alice"), timeout=60)
        assert updates[0]["args"]["status"] == "ok"
    finally:
        client_service.stop()
        oracle_service.stop()


def test_node_ledger_command_serves_chain(tmp_path):
    """The CLI's long-running ledger role, exercised as a real process."""
    config = {"http_host": "127.0.0.1", "http_port": 0, "faucets": {"A": 5_000_000}}
    config_path = tmp_path / "ledger.json"
    config_path.write_text(json.dumps(config))
    proc = subprocess.Popen(
        [sys.executable, "-m", "chainmarket.cli", "node", "ledger", "--config", str(config_path)],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    try:
        line = proc.stdout.readline().strip()
        assert line.startswith("ledger service at http://")
        url = line.split()[-1]
        adapter = HttpChainAdapter(url)
        deadline = time.time() + 5
        while adapter.balance("A") != 5_000_000 and time.time() < deadline:
            time.sleep(0.05)
        assert adapter.balance("A") == 5_000_000
        adapter.submit_payment("A", "B", 123)
        assert adapter.balance("B") == 123
    finally:
        proc.send_signal(signal.SIGTERM)
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
    assert proc.returncode == 0
