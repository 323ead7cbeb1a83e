#!/usr/bin/env python3
"""Walkthrough: the simulated ledger and the note wire format.

Every marketplace message is a payment transaction with a note attached.
This script mints some funds, moves money around, shows the flat-fee
accounting, and round-trips a request note through the canonical encoding.
"""

from chainmarket import ledger as ledger_mod
from chainmarket import protocol
from chainmarket.ledger import SimulatedLedger

chain = SimulatedLedger()

# Mint starting balances through the faucet (a genesis-account transfer).
chain.faucet("alice", 10_000_000)
chain.faucet("bob", 10_000_000)
print("alice:", chain.balance("alice"), "microALGO")
print("bob:  ", chain.balance("bob"), "microALGO")

# A plain payment. The sender also pays the flat network fee, which lands
# in a fee-sink account, so no money is ever created or destroyed.
chain.submit_payment("alice", "bob", 3_000_000)
print("\nafter alice pays bob 3_000_000:")
print("alice:", chain.balance("alice"))
print("bob:  ", chain.balance("bob"))
print("fees: ", chain.balance(ledger_mod.FEE_SINK_ADDRESS))
print("conservation holds:", chain.conservation_holds())

# Requests ride in notes: a base64-encoded canonical JSON envelope.
envelope = protocol.NoteEnvelope(
    protocol.QUERY_MODEL, {"model_name": "m1", "input": "[1.0,2.0]"}
)
note = protocol.encode_note(envelope)
print("\nencoded note:", note.decode()[:60], "...")
print("decodes back:", protocol.decode_note(note))

# A zero-amount self-payment is the cheapest possible note carrier; the
# oracle uses exactly this trick to log schedule changes on-chain.
txn_id = chain.submit_payment("alice", "alice", 0, note)
print("\nnote-carrier transaction:", txn_id)
print("alice only lost the fee:", chain.balance("alice"))

# Oversized payloads are rejected up front: big things travel by reference.
try:
    protocol.encode_note(protocol.NoteEnvelope("<X>", {"blob": "x" * 2000}))
except protocol.NoteSizeError as exc:
    print("\noversized note rejected:", exc)
