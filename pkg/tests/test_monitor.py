"""Monitor: exactly-once dispatch over an at-least-once, unordered indexer."""

from __future__ import annotations

import threading

import pytest

from chainmarket import monitor, protocol
from chainmarket.ledger import SimulatedLedger, Transaction
from chainmarket.monitor import MonitorState, poll_once
from conftest import make_clock

NOTE = protocol.make_note("<REWARD>", {"reason": "dataset_usage", "ref_name": "d", "accuracy": "1"})


def make_txn(i: int, ts: int, note: bytes = NOTE, receiver: str = "me") -> Transaction:
    return Transaction(f"tx{i:04d}", "you", receiver, 0, note, i, ts)


class ScriptedAdapter:
    """Returns pre-scripted lookup batches, then repeats the last one."""

    def __init__(self, batches):
        self.batches = list(batches)
        self.calls = 0

    def lookup(self, recipient, min_timestamp):
        batch = self.batches[min(self.calls, len(self.batches) - 1)]
        self.calls += 1
        if isinstance(batch, Exception):
            raise batch
        return [t for t in batch if t.timestamp >= min_timestamp]

    def submit_payment(self, *a, **k):
        raise NotImplementedError

    def balance(self, address):
        return 0


def test_duplicates_within_one_batch_dispatch_once():
    t1, t2, t3 = make_txn(1, 100), make_txn(2, 200), make_txn(3, 300)
    state = MonitorState("me")
    events, state = poll_once(state, ScriptedAdapter([[t1, t2, t2, t3]]))
    assert [t.id for t, _ in events] == ["tx0001", "tx0002", "tx0003"]


def test_second_poll_with_no_new_commits_is_empty():
    t1 = make_txn(1, 100)
    adapter = ScriptedAdapter([[t1], [t1]])
    state = MonitorState("me")
    events, state = poll_once(state, adapter)
    assert len(events) == 1
    events, state = poll_once(state, adapter)
    assert events == []


def test_events_sorted_by_timestamp_then_id():
    txns = [make_txn(3, 300), make_txn(1, 100), make_txn(2, 100)]
    events, _ = poll_once(MonitorState("me"), ScriptedAdapter([txns]))
    assert [t.id for t, _ in events] == ["tx0001", "tx0002", "tx0003"]


def test_adapter_failure_leaves_state_unchanged():
    state = MonitorState("me", min_timestamp=123, seen={"x": 456})
    events, state2 = poll_once(state, ScriptedAdapter([RuntimeError("indexer down")]))
    assert events == []
    assert state2.min_timestamp == 123 and state2.seen == {"x": 456}


def test_undecodable_note_skipped_but_marked_seen():
    good, bad = make_txn(1, 100), make_txn(2, 200, note=b"%%%not-base64%%%")
    adapter = ScriptedAdapter([[good, bad], [good, bad]])
    state = MonitorState("me")
    events, state = poll_once(state, adapter)
    assert [t.id for t, _ in events] == ["tx0001"]
    assert "tx0002" in state.seen
    events, state = poll_once(state, adapter)
    assert events == []  # the bad one is not retried


def test_min_timestamp_trails_by_lateness_window():
    state = MonitorState("me", lateness_window_ms=1_000)
    events, state = poll_once(state, ScriptedAdapter([[make_txn(1, 5_000), make_txn(2, 6_000)]]))
    assert state.min_timestamp == 5_000  # newest (6000) minus window
    assert len(events) == 2


def test_seen_registry_compacts_below_cursor():
    state = MonitorState("me", lateness_window_ms=100)
    adapter = ScriptedAdapter([[make_txn(1, 1_000)], [make_txn(2, 10_000)]])
    _, state = poll_once(state, adapter)
    assert "tx0001" in state.seen
    _, state = poll_once(state, adapter)
    # cursor moved to 9_900; the old id can never be returned again
    assert "tx0001" not in state.seen and "tx0002" in state.seen


def test_state_file_round_trip(tmp_path):
    state = MonitorState("me", min_timestamp=777, seen={"a": 800, "b": 900})
    path = tmp_path / "monitor.state"
    state.save(path)
    text = path.read_text()
    assert text.splitlines()[0] == "min_timestamp=777"
    loaded = MonitorState.load(path, "me")
    assert loaded.min_timestamp == 777
    assert set(loaded.seen) == {"a", "b"}


def test_restart_does_not_redispatch(tmp_path):
    txns = [make_txn(i, 100 * i) for i in range(1, 6)]
    adapter = ScriptedAdapter([txns])
    state = MonitorState("me")
    events, state = poll_once(state, adapter)
    assert len(events) == 5
    path = tmp_path / "monitor.state"
    state.save(path)
    fresh = MonitorState.load(path, "me")
    events, _ = poll_once(fresh, adapter)
    assert events == []


def exercise_exactly_once(n_txns: int, dup: float, skip: float, seed: int, restart_at: int, tmp_path) -> None:
    """Commit n transactions, poll through fault injection (with one restart),
    and require the dispatched multiset to equal the committed set exactly."""
    ledger = SimulatedLedger(clock=make_clock())
    ledger.faucet("sender", 10 ** 12)
    committed = [ledger.submit_payment("sender", "me", 0, NOTE) for _ in range(n_txns)]
    ledger.set_fault_injection(duplicate_prob=dup, skip_prob=skip, reorder=True, seed=seed)

    dispatched: list[str] = []
    state = MonitorState("me", lateness_window_ms=10 ** 9)
    state_path = tmp_path / "m.state"
    polls = 0
    while len(set(dispatched)) < n_txns and polls < 500:
        events, state = poll_once(state, ledger)
        dispatched.extend(t.id for t, _ in events)
        polls += 1
        if polls == restart_at:
            state.save(state_path)
            state = MonitorState.load(state_path, "me", lateness_window_ms=10 ** 9)
    assert sorted(dispatched) == sorted(set(dispatched)), "an id was dispatched twice"
    assert set(dispatched) == set(committed), "coverage incomplete"


def test_exactly_once_under_faults_with_restart(tmp_path):
    exercise_exactly_once(100, dup=0.5, skip=0.3, seed=9, restart_at=2, tmp_path=tmp_path)


def test_run_isolates_dispatcher_exceptions():
    txns = [make_txn(i, 100 * i) for i in (1, 2, 3)]
    adapter = ScriptedAdapter([txns])
    state = MonitorState("me", poll_interval_s=0.01)
    stop = threading.Event()
    got: list[str] = []

    def dispatcher(txn, envelope):
        if txn.id == "tx0002":
            raise RuntimeError("boom")
        got.append(txn.id)

    thread = threading.Thread(target=monitor.run, args=(state, adapter, dispatcher, stop))
    thread.start()
    try:
        deadline = 100
        while len(got) < 2 and deadline:
            stop.wait(0.01)
            deadline -= 1
    finally:
        stop.set()
        thread.join(timeout=5)
    assert got == ["tx0001", "tx0003"]
    assert set(state.seen) == {"tx0001", "tx0002", "tx0003"}


def test_run_persists_state_and_shuts_down_cleanly(tmp_path):
    adapter = ScriptedAdapter([[make_txn(1, 100)]])
    state = MonitorState("me", poll_interval_s=0.01)
    stop = threading.Event()
    path = tmp_path / "m.state"
    thread = threading.Thread(
        target=monitor.run, args=(state, adapter, lambda t, e: None, stop), kwargs={"state_path": path}
    )
    thread.start()
    deadline = 200
    while not path.is_file() and deadline:
        stop.wait(0.01)
        deadline -= 1
    stop.set()
    thread.join(timeout=5)
    assert not thread.is_alive()
    assert "tx0001" in MonitorState.load(path, "me").seen
