#!/usr/bin/env python3
"""Walkthrough: the economics — rewards, prices, fees, and the audit log.

Prints the reward tables, shows operation pricing, and demonstrates that
every multiplier change is a chain transaction that anyone can fold back
into the current schedule.
"""

from chainmarket import protocol, tokenomics
from chainmarket.ledger import SimulatedLedger
from chainmarket.tokenomics import (
    RewardSchedule, dataset_reward, log_mult_update, oracle_fee, price,
    replay_schedule, training_reward,
)

accuracies = (0.3, 0.5, 0.7, 0.9, 0.99)

print("training rewards, floor(mult * accuracy):")
print(f"{'accuracy':>8s} {'mult=1e7':>12s} {'mult=3e7':>12s}")
for a in accuracies:
    print(f"{a:8.2f} {training_reward(10**7, a):12,d} {training_reward(3*10**7, a):12,d}")

print("\ndataset rewards for a 5_000_000-byte upload, floor(size * mult * accuracy):")
print(f"{'accuracy':>8s} {'mult=2':>12s} {'mult=6':>12s}")
for a in accuracies:
    print(f"{a:8.2f} {dataset_reward(5_000_000, 2, a):12,d} {dataset_reward(5_000_000, 6, a):12,d}")

print("\n(the two tables agree: 5e6 bytes at mult m pays like training at mult 5e6*m)")

schedule = RewardSchedule()
print("\nprices at the default schedule:")
print("  upload 5 MB:       ", price("dataset_upload", schedule, ds_size=5_000_000), "microALGO")
print("  train (complexity 126):", price("train_model", schedule, complexity=126.0))
print("  query (complexity 126):", price("query_model", schedule, complexity=126.0))

payment = 1_260_000
fee = oracle_fee(payment, schedule.fee_fraction)
print(f"\noracle host keeps {fee} of a {payment} payment; {payment - fee} funds rewards")

# Every schedule change is logged on-chain before it takes effect.
chain = SimulatedLedger()
chain.faucet("oracle", 10 ** 9)
log_mult_update(schedule, "dataset_mult", 6.0, chain, "oracle")
log_mult_update(schedule, "fee_fraction", 0.02, chain, "oracle")

envelopes = [protocol.decode_note(t.note) for t in chain.transactions() if t.note]
rebuilt = replay_schedule(RewardSchedule(), envelopes)
print("\nreplaying the on-chain log reproduces the live schedule:", rebuilt == schedule)
for env in envelopes:
    print("  ", env.op, env.args)
