"""Simulated blockchain ledger with instant finality and an indexer.

One ledger instance is the whole chain: accounts, note-carrying payment
transactions, and a lookup facility that mimics a real indexer, including
(optionally) its failure modes. Every committed transaction is final the
moment ``submit_payment`` returns; rounds are a plain counter and
timestamps come from an injectable clock so tests are deterministic.

A flat network fee is charged on every payment and credited to a
distinguished fee-sink account, which keeps the conservation identity
simple: the sum of all account balances (fee sink included) always equals
the total ever minted through the faucet.

The ``ChainAdapter`` protocol is the seam where a real chain client would
plug in; the monitor and both node types only ever talk through it.
"""

from __future__ import annotations

import base64
import json
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol

FLAT_FEE = 1_000  # microALGO per transaction, credited to the fee sink

GENESIS_ADDRESS = "__genesis__"
FEE_SINK_ADDRESS = "__fees__"

MICROALGO_PER_ALGO = 1_000_000


class LedgerError(Exception):
    """Base class for ledger rejections."""


class UnknownAccountError(LedgerError):
    """Sender address has never held a balance."""


class InsufficientBalanceError(LedgerError):
    """Sender cannot cover amount plus the flat fee."""


@dataclass(frozen=True)
class Transaction:
    """A committed, immutable ledger entry."""

    id: str
    sender: str
    receiver: str
    amount: int
    note: bytes
    round: int
    timestamp: int  # milliseconds

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "sender": self.sender,
                "receiver": self.receiver,
                "amount": self.amount,
                "note": base64.b64encode(self.note).decode("ascii"),
                "round": self.round,
                "timestamp": self.timestamp,
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "Transaction":
        obj = json.loads(line)
        return cls(
            id=obj["id"],
            sender=obj["sender"],
            receiver=obj["receiver"],
            amount=int(obj["amount"]),
            note=base64.b64decode(obj["note"]),
            round=int(obj["round"]),
            timestamp=int(obj["timestamp"]),
        )


class ChainAdapter(Protocol):
    """What a node needs from a chain: submit, look up inbound, read balances.

    ``lookup`` is at-least-once: it returns every committed transaction to
    the recipient with timestamp >= min_timestamp at least once over
    repeated polls, but any single call may contain duplicates, omissions
    (transient), or arbitrary order. The monitor is built to survive this.
    """

    def submit_payment(self, sender: str, receiver: str, amount: int, note: bytes = b"") -> str: ...

    def lookup(self, recipient: str, min_timestamp: int) -> list[Transaction]: ...

    def balance(self, address: str) -> int: ...


class SimulatedLedger:
    """In-process chain with a single serialized commit point.

    Concurrent submitters are safe and observe a total order; lookups may
    run concurrently with commits and see any committed prefix. When
    ``log_path`` is given, every commit is appended to a JSONL log that
    :meth:`replay` can turn back into an identical ledger.
    """

    def __init__(
        self,
        clock: Callable[[], int] | None = None,
        log_path: str | Path | None = None,
    ) -> None:
        self._clock = clock or (lambda: int(time.time() * 1000))
        self._lock = threading.RLock()
        self._balances: dict[str, int] = {FEE_SINK_ADDRESS: 0}
        self._txns: list[Transaction] = []
        self._ids: set[str] = set()
        self._round = 0
        self._last_ts = 0
        self._minted = 0
        self._counter = 0
        self._log_path = Path(log_path) if log_path else None
        self._log_file = open(self._log_path, "a", encoding="utf-8") if self._log_path else None
        # Indexer fault injection, default off.
        self._dup_prob = 0.0
        self._skip_prob = 0.0
        self._reorder = False
        self._fault_rng = random.Random(0)

    # ------------------------------------------------------------------
    # ChainAdapter surface
    # ------------------------------------------------------------------

    def submit_payment(self, sender: str, receiver: str, amount: int, note: bytes = b"") -> str:
        """Commit a payment; atomic, instantly final.

        The sender pays ``amount + FLAT_FEE``; the fee goes to the fee
        sink. A rejected payment changes no state at all.
        """
        if not isinstance(amount, int) or amount < 0:
            raise LedgerError(f"amount must be a non-negative integer, got {amount!r}")
        with self._lock:
            if sender not in self._balances:
                raise UnknownAccountError(f"unknown sender {sender!r}")
            if self._balances[sender] < amount + FLAT_FEE:
                raise InsufficientBalanceError(
                    f"{sender} holds {self._balances[sender]} microALGO, "
                    f"needs {amount + FLAT_FEE} (amount + fee {FLAT_FEE})"
                )
            self._balances[sender] -= amount + FLAT_FEE
            self._balances[receiver] = self._balances.get(receiver, 0) + amount
            self._balances[FEE_SINK_ADDRESS] += FLAT_FEE
            return self._commit(sender, receiver, amount, note).id

    def lookup(self, recipient: str, min_timestamp: int) -> list[Transaction]:
        """Indexer query: committed transactions to ``recipient`` at or after
        ``min_timestamp``.

        With fault injection enabled this deliberately misbehaves the way a
        real indexer was observed to: duplicates, transient skips (a skipped
        transaction reappears on a later call), and reordering.
        """
        with self._lock:
            matches = [
                t for t in self._txns
                if t.receiver == recipient and t.timestamp >= min_timestamp
            ]
        if self._dup_prob == 0.0 and self._skip_prob == 0.0 and not self._reorder:
            return matches
        out: list[Transaction] = []
        for txn in matches:
            if self._skip_prob and self._fault_rng.random() < self._skip_prob:
                continue
            out.append(txn)
            if self._dup_prob and self._fault_rng.random() < self._dup_prob:
                out.append(txn)
        if self._reorder:
            self._fault_rng.shuffle(out)
        return out

    def balance(self, address: str) -> int:
        with self._lock:
            return self._balances.get(address, 0)

    # ------------------------------------------------------------------
    # Simulation-only operations
    # ------------------------------------------------------------------

    def faucet(self, address: str, amount: int, note: bytes = b"") -> str:
        """Mint new microALGO to ``address`` via the genesis account (no fee)."""
        if not isinstance(amount, int) or amount < 0:
            raise LedgerError(f"faucet amount must be a non-negative integer, got {amount!r}")
        with self._lock:
            self._balances[address] = self._balances.get(address, 0) + amount
            self._minted += amount
            return self._commit(GENESIS_ADDRESS, address, amount, note).id

    def set_fault_injection(
        self,
        duplicate_prob: float = 0.0,
        skip_prob: float = 0.0,
        reorder: bool = False,
        seed: int = 0,
    ) -> None:
        """Configure indexer misbehavior; probabilities must be < 1 for
        lookups to eventually cover everything."""
        if not (0.0 <= duplicate_prob < 1.0 and 0.0 <= skip_prob < 1.0):
            raise ValueError("fault probabilities must be in [0, 1)")
        self._dup_prob = duplicate_prob
        self._skip_prob = skip_prob
        self._reorder = reorder
        self._fault_rng = random.Random(seed)

    # ------------------------------------------------------------------
    # Inspection / audit
    # ------------------------------------------------------------------

    def transactions(self) -> list[Transaction]:
        """Snapshot of the full commit log, in commit order."""
        with self._lock:
            return list(self._txns)

    def log_for(self, address: str) -> list[Transaction]:
        """All committed transactions where ``address`` is sender or receiver."""
        with self._lock:
            return [t for t in self._txns if address in (t.sender, t.receiver)]

    def balances(self) -> dict[str, int]:
        with self._lock:
            return dict(self._balances)

    @property
    def total_minted(self) -> int:
        with self._lock:
            return self._minted

    def conservation_holds(self) -> bool:
        """Sum of all balances (fee sink included) equals total minted."""
        with self._lock:
            return sum(self._balances.values()) == self._minted

    def close(self) -> None:
        if self._log_file:
            self._log_file.close()
            self._log_file = None

    # ------------------------------------------------------------------
    # Internals
    # ------------------------------------------------------------------

    def _commit(self, sender: str, receiver: str, amount: int, note: bytes) -> Transaction:
        # Caller holds the lock and has already moved balances.
        self._counter += 1
        self._round += 1
        ts = max(self._clock(), self._last_ts)
        self._last_ts = ts
        txn = Transaction(
            id=f"tx{self._counter:010d}",
            sender=sender,
            receiver=receiver,
            amount=amount,
            note=bytes(note),
            round=self._round,
            timestamp=ts,
        )
        self._txns.append(txn)
        self._ids.add(txn.id)
        if self._log_file:
            self._log_file.write(txn.to_json() + "\n")
            self._log_file.flush()
        return txn

    @classmethod
    def replay(cls, log_path: str | Path) -> "SimulatedLedger":
        """Rebuild a ledger from its commit log; balances come out exact."""
        ledger = cls(clock=lambda: 0)
        with open(log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                txn = Transaction.from_json(line)
                ledger._apply_replayed(txn)
        return ledger

    def _apply_replayed(self, txn: Transaction) -> None:
        with self._lock:
            if txn.sender == GENESIS_ADDRESS:
                self._balances[txn.receiver] = self._balances.get(txn.receiver, 0) + txn.amount
                self._minted += txn.amount
            else:
                self._balances[txn.sender] -= txn.amount + FLAT_FEE
                self._balances[txn.receiver] = self._balances.get(txn.receiver, 0) + txn.amount
                self._balances[FEE_SINK_ADDRESS] += FLAT_FEE
            self._txns.append(txn)
            self._ids.add(txn.id)
            self._round = txn.round
            self._last_ts = max(self._last_ts, txn.timestamp)
            self._counter += 1
