"""Exactly-once transaction monitor.

Both node types embed this loop: poll the indexer for inbound
transactions, weed out duplicates, decode notes, and hand each event to a
dispatcher exactly once. The indexer is only at-least-once (it may skip a
transaction on one poll and return it twice on the next), so the monitor
keeps two defenses:

* a registry of every transaction id it has ever handled, and
* a minimum timestamp that advances conservatively, trailing the newest
  handled transaction by a lateness window, so a transiently skipped old
  transaction is still inside the query range when it finally shows up.

Ids older than the minimum timestamp can never be returned again, so the
registry is compacted against it and stays bounded.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import protocol
from .ledger import ChainAdapter, Transaction

logger = logging.getLogger(__name__)

DEFAULT_LATENESS_WINDOW_MS = 60_000
DEFAULT_POLL_INTERVAL_S = 1.0

Dispatcher = Callable[[Transaction, protocol.NoteEnvelope], None]


@dataclass
class MonitorState:
    """Poll cursor plus the seen-id registry, persistable across restarts."""

    watched_address: str
    min_timestamp: int = 0
    seen: dict[str, int] = field(default_factory=dict)  # txn id -> timestamp
    lateness_window_ms: int = DEFAULT_LATENESS_WINDOW_MS
    poll_interval_s: float = DEFAULT_POLL_INTERVAL_S

    def save(self, path: str | Path) -> None:
        """Write state atomically: min_timestamp line, then one id per line."""
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        lines = [f"min_timestamp={self.min_timestamp}"]
        lines.extend(self.seen)
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def load(
        cls,
        path: str | Path,
        watched_address: str,
        lateness_window_ms: int = DEFAULT_LATENESS_WINDOW_MS,
        poll_interval_s: float = DEFAULT_POLL_INTERVAL_S,
    ) -> "MonitorState":
        """Restore persisted state; loaded ids are pinned at min_timestamp so
        they survive compaction until the cursor genuinely moves past them."""
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or not lines[0].startswith("min_timestamp="):
            raise ValueError(f"{path}: not a monitor state file")
        min_ts = int(lines[0].split("=", 1)[1])
        seen = {line: min_ts for line in lines[1:] if line}
        return cls(
            watched_address=watched_address,
            min_timestamp=min_ts,
            seen=seen,
            lateness_window_ms=lateness_window_ms,
            poll_interval_s=poll_interval_s,
        )


def _collect_new(state: MonitorState, adapter: ChainAdapter) -> list[Transaction]:
    """One indexer query, de-duplicated against the registry and within the
    batch itself, sorted by (timestamp, id). Adapter failure yields []."""
    try:
        raw = adapter.lookup(state.watched_address, state.min_timestamp)
    except Exception as exc:
        logger.warning("indexer lookup failed for %s: %s", state.watched_address, exc)
        return []
    fresh: dict[str, Transaction] = {}
    for txn in raw:
        if txn.id not in state.seen and txn.id not in fresh:
            fresh[txn.id] = txn
    return sorted(fresh.values(), key=lambda t: (t.timestamp, t.id))


def _mark_seen(state: MonitorState, txn: Transaction) -> None:
    state.seen[txn.id] = txn.timestamp


def _advance_cursor(state: MonitorState, handled: list[Transaction]) -> None:
    if not handled:
        return
    newest = max(t.timestamp for t in handled)
    state.min_timestamp = max(state.min_timestamp, newest - state.lateness_window_ms)
    # Compact: ids below the cursor can never be returned by lookup again.
    if state.seen:
        stale = [i for i, ts in state.seen.items() if ts < state.min_timestamp]
        for i in stale:
            del state.seen[i]


def poll_once(
    state: MonitorState, adapter: ChainAdapter
) -> tuple[list[tuple[Transaction, protocol.NoteEnvelope]], MonitorState]:
    """Poll once and return each newly seen, decodable transaction exactly
    once, in (timestamp, id) order.

    Transactions whose notes do not decode are logged and skipped but still
    marked seen. On adapter failure the state is unchanged and the events
    list is empty; the next poll simply retries.
    """
    new_txns = _collect_new(state, adapter)
    events: list[tuple[Transaction, protocol.NoteEnvelope]] = []
    for txn in new_txns:
        try:
            envelope = protocol.decode_note(txn.note)
        except protocol.NoteError as exc:
            logger.info("skipping undecodable note on %s: %s", txn.id, exc)
        else:
            events.append((txn, envelope))
        _mark_seen(state, txn)
    _advance_cursor(state, new_txns)
    return events, state


def run(
    state: MonitorState,
    adapter: ChainAdapter,
    dispatcher: Dispatcher,
    stop: threading.Event,
    state_path: str | Path | None = None,
) -> None:
    """Poll forever (until ``stop`` is set), dispatching each event exactly once.

    An id is marked seen only after the dispatcher has acknowledged the
    event by returning or raising; a dispatcher exception is isolated to
    its event (logged, counted as seen, loop continues). State is persisted
    every iteration so a restart is duplicate-safe.
    """
    while not stop.is_set():
        new_txns = _collect_new(state, adapter)
        for txn in new_txns:
            try:
                envelope = protocol.decode_note(txn.note)
            except protocol.NoteError as exc:
                logger.info("skipping undecodable note on %s: %s", txn.id, exc)
            else:
                try:
                    dispatcher(txn, envelope)
                except Exception:
                    logger.exception("dispatcher failed on %s; event dropped", txn.id)
            _mark_seen(state, txn)
        _advance_cursor(state, new_txns)
        if state_path is not None:
            state.save(state_path)
        stop.wait(state.poll_interval_s)
