#!/usr/bin/env python3
"""Walkthrough: surviving a flaky indexer.

The indexer facility may return a transaction twice, or not at all on some
polls, and in any order. The monitor turns that mess into exactly-once
delivery using two defenses: a seen-id registry and a minimum timestamp
that trails the newest handled transaction by a lateness window.
"""

from chainmarket import protocol
from chainmarket.ledger import SimulatedLedger
from chainmarket.monitor import MonitorState, poll_once

chain = SimulatedLedger()
chain.faucet("sender", 10 ** 10)

note = protocol.make_note(
    protocol.REWARD, {"reason": "dataset_usage", "ref_name": "d", "accuracy": "1"}
)
committed = [chain.submit_payment("sender", "watched", 0, note) for _ in range(50)]
print("committed:", len(committed), "transactions to 'watched'")

# Crank up the fault injection: half the results duplicated, a third
# transiently skipped, order shuffled.
chain.set_fault_injection(duplicate_prob=0.5, skip_prob=0.3, reorder=True, seed=1)

raw = chain.lookup("watched", 0)
print("one raw indexer poll returned", len(raw), "entries",
      f"({len(set(t.id for t in raw))} unique)")

state = MonitorState("watched")
dispatched = []
polls = 0
while len(dispatched) < len(committed):
    events, state = poll_once(state, chain)
    dispatched.extend(txn.id for txn, _ in events)
    polls += 1

print(f"\nmonitor needed {polls} polls to cover everything")
print("dispatched exactly once each:", sorted(dispatched) == sorted(set(dispatched)))
print("coverage complete:", set(dispatched) == set(committed))
print("seen-registry size (after compaction):", len(state.seen))
