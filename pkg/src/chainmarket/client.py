"""The client node: HTTP gateway between users and the marketplace.

The client turns user actions into priced on-chain request transactions and
watches the chain for the oracle's answers. Price queries never touch the
chain; they are forwarded to the oracle's HTTP endpoint, which is exactly
what keeps the transaction log free of "what does X cost?" noise.

Each registered user maps to a ledger address (a local account store stands
in for a hosted user database). The client runs one monitor per user
address; decoded response and reward notes are queued per user and drained
at most once by fetch_updates. A names cache backs the UI dropdowns and is
refreshed on page load and after every submitted transaction, flipping to
stale (rather than failing) when the oracle is unreachable.
"""

from __future__ import annotations

import base64
import json
import logging
import threading
import time
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

from . import httpjson, monitor, protocol
from .httpjson import ApiError, JsonHttpServer, TransportError
from .ledger import ChainAdapter

logger = logging.getLogger(__name__)


class ClientError(Exception):
    """User-facing client failures (unknown user, bad submit, quote race)."""


class QuoteRaisedError(ClientError):
    """Price rose between the displayed quote and the submit."""


@dataclass
class ClientConfig:
    data_dir: Path
    oracle_url: str
    oracle_address: str = "oracle"
    #: Root of the content-addressed store shared with the oracle (the
    #: stand-in for a remote file network). Staged uploads land here.
    store_root: Path | None = None
    poll_interval_s: float = 1.0
    lateness_window_ms: int = 60_000
    http_host: str = "127.0.0.1"
    http_port: int = 0
    static_dir: Path | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "ClientConfig":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in dataclass_fields(cls)}
        kwargs = {k: v for k, v in obj.items() if k in known}
        kwargs["data_dir"] = Path(kwargs["data_dir"])
        for key in ("static_dir", "store_root"):
            if kwargs.get(key):
                kwargs[key] = Path(kwargs[key])
        if "poll_interval_ms" in obj:
            kwargs["poll_interval_s"] = obj["poll_interval_ms"] / 1000.0
        return cls(**kwargs)


@dataclass
class NameCache:
    datasets: list[str] = field(default_factory=list)
    models: list[str] = field(default_factory=list)
    last_refresh: float = 0.0
    stale: bool = True


class ClientNode:
    """Gateway state: accounts, per-user monitors, update queues, caches."""

    def __init__(self, adapter: ChainAdapter, config: ClientConfig) -> None:
        self.adapter = adapter
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        (self.data_dir / "monitors").mkdir(exist_ok=True)
        self._lock = threading.RLock()
        self._accounts: dict[str, str] = {}
        self._accounts_path = self.data_dir / "accounts.json"
        if self._accounts_path.is_file():
            self._accounts = json.loads(self._accounts_path.read_text(encoding="utf-8"))
        self._updates: dict[str, list[dict]] = {}
        self._updates_path = self.data_dir / "updates.json"
        if self._updates_path.is_file():
            self._updates = json.loads(self._updates_path.read_text(encoding="utf-8"))
        self.names = NameCache()
        self._monitors: dict[str, tuple[threading.Event, threading.Thread]] = {}
        self._stopped = False

    # ------------------------------------------------------------------
    # Accounts
    # ------------------------------------------------------------------

    def register_user(self, user: str) -> str:
        """Map a user name to a fresh ledger address (stable across restarts)."""
        if not user or "/" in user:
            raise ClientError(f"invalid user name {user!r}")
        with self._lock:
            if user in self._accounts:
                return self._accounts[user]
            address = f"acct-{user}-{len(self._accounts):04d}"
            self._accounts[user] = address
            self._save_accounts()
        self._ensure_monitor(user, address)
        return address

    def address_of(self, user: str) -> str:
        with self._lock:
            if user not in self._accounts:
                raise ClientError(f"unknown user {user!r}; register or faucet first")
            return self._accounts[user]

    def users(self) -> dict[str, str]:
        with self._lock:
            return dict(self._accounts)

    def _save_accounts(self) -> None:
        tmp = self._accounts_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self._accounts, indent=2, sort_keys=True), encoding="utf-8")
        tmp.replace(self._accounts_path)

    def faucet(self, user: str, amount: int) -> tuple[str, str]:
        """Simulated-ledger funding; registers the user on first use."""
        if not hasattr(self.adapter, "faucet"):
            raise ClientError("the configured chain adapter has no faucet")
        address = self.register_user(user)
        txn_id = self.adapter.faucet(address, amount)
        return txn_id, address

    # ------------------------------------------------------------------
    # Prices and names (HTTP to the oracle; never on-chain)
    # ------------------------------------------------------------------

    def get_price(self, kind: str, params: dict) -> int:
        if kind not in ("dataset_upload", "train_model", "query_model"):
            raise ClientError(f"unknown price kind {kind!r}")
        payload = {"kind": kind, **{k: str(v) for k, v in params.items()}}
        obj = httpjson.get_json(f"{self.config.oracle_url}/price", payload)
        return int(obj["price_microalgo"])

    def refresh_names(self) -> None:
        try:
            datasets = httpjson.get_json(f"{self.config.oracle_url}/datasets")["datasets"]
            models_ = httpjson.get_json(f"{self.config.oracle_url}/models")["models"]
        except (TransportError, ApiError) as exc:
            logger.warning("name refresh failed, serving stale cache: %s", exc)
            self.names.stale = True
            return
        self.names = NameCache(
            datasets=[d["ds_name"] for d in datasets],
            models=[m["model_name"] for m in models_],
            last_refresh=time.time(),
            stale=False,
        )

    def list_names(self, kind: str) -> tuple[list[str], bool]:
        if kind not in ("datasets", "models"):
            raise ClientError(f"unknown name kind {kind!r}")
        self.refresh_names()
        return (list(getattr(self.names, kind)), self.names.stale)

    # ------------------------------------------------------------------
    # Submitting requests
    # ------------------------------------------------------------------

    def quote_for(self, op: str, args: dict) -> int:
        if op == protocol.UP_DATASET:
            return self.get_price("dataset_upload", {"ds_size": args["ds_size"]})
        if op == protocol.TRAIN_MODEL:
            keys = ("raw_model", "ds_name", "hidden_dim", "num_hidden_layers", "training_lookback")
            return self.get_price("train_model", {k: args[k] for k in keys})
        if op == protocol.QUERY_MODEL:
            return self.get_price("query_model", {"model_name": args["model_name"]})
        raise ClientError(f"{op} is not a submittable request op")

    def submit(self, user: str, op: str, args: dict, max_price: int | None = None) -> str:
        """Validate, price, and pay for a request; returns the transaction id.

        Schema problems reject before any spend. When the caller passes the
        price they were shown as max_price, a quote that rose in the
        meantime rejects too (re-confirm with the new price).
        """
        address = self.address_of(user)
        try:
            normalized = protocol.validate_args(op, args)
        except protocol.NoteError as exc:
            raise ClientError(f"invalid request: {exc}") from exc
        quote = self.quote_for(op, normalized)
        if max_price is not None and quote > max_price:
            raise QuoteRaisedError(
                f"price is now {quote} microALGO, above the confirmed {max_price}; resubmit to accept"
            )
        note = protocol.make_note(op, normalized)
        txn_id = self.adapter.submit_payment(address, self.config.oracle_address, quote, note)
        self._ensure_monitor(user, address)
        self.refresh_names()
        return txn_id

    def stage_bytes(self, data: bytes) -> str:
        """Place raw dataset bytes where the oracle can fetch them, returning
        the content-addressed link to put in an upload request."""
        from .datastore import ObjectStore

        root = self.config.store_root or (Path(self.config.data_dir) / "outbox")
        return ObjectStore(root).put(data, "cas")

    # ------------------------------------------------------------------
    # Updates
    # ------------------------------------------------------------------

    def _ensure_monitor(self, user: str, address: str) -> None:
        with self._lock:
            if address in self._monitors or self._stopped:
                return
            state_path = self.data_dir / "monitors" / f"{address}.state"
            if state_path.is_file():
                state = monitor.MonitorState.load(
                    state_path, address,
                    lateness_window_ms=self.config.lateness_window_ms,
                    poll_interval_s=self.config.poll_interval_s,
                )
            else:
                state = monitor.MonitorState(
                    watched_address=address,
                    lateness_window_ms=self.config.lateness_window_ms,
                    poll_interval_s=self.config.poll_interval_s,
                )
            stop = threading.Event()

            def dispatcher(txn, envelope, user=user):
                self._enqueue_update(user, txn, envelope)

            thread = threading.Thread(
                target=monitor.run,
                args=(state, self.adapter, dispatcher, stop),
                kwargs={"state_path": state_path},
                name=f"client-monitor-{address}",
                daemon=True,
            )
            self._monitors[address] = (stop, thread)
            thread.start()

    def _enqueue_update(self, user: str, txn, envelope: protocol.NoteEnvelope) -> None:
        if envelope.op not in protocol.RESPONSE_OPS and envelope.op != protocol.REWARD:
            return
        update = {
            "txn_id": txn.id,
            "op": envelope.op,
            "args": envelope.args,
            "amount": txn.amount,
            "sender": txn.sender,
            "timestamp": txn.timestamp,
        }
        with self._lock:
            self._updates.setdefault(user, []).append(update)
            self._save_updates()

    def _save_updates(self) -> None:
        tmp = self._updates_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self._updates), encoding="utf-8")
        tmp.replace(self._updates_path)

    def fetch_updates(self, user: str) -> list[dict]:
        """Drain the user's queued updates, oldest first, at most once each."""
        with self._lock:
            pending = self._updates.pop(user, [])
            if pending:
                self._save_updates()
        return pending

    # ------------------------------------------------------------------
    # History
    # ------------------------------------------------------------------

    def history(self, address: str) -> list[dict]:
        """Commit-log view for one address, decoded notes included."""
        if not hasattr(self.adapter, "log_for"):
            raise ClientError("the configured chain adapter exposes no commit log")
        out = []
        for txn in self.adapter.log_for(address):
            entry = {
                "id": txn.id,
                "sender": txn.sender,
                "receiver": txn.receiver,
                "amount": txn.amount,
                "round": txn.round,
                "timestamp": txn.timestamp,
                "note": base64.b64encode(txn.note).decode("ascii"),
            }
            try:
                env = protocol.decode_note(txn.note)
                entry["op"] = env.op
                entry["args"] = env.args
            except protocol.NoteError:
                pass
            out.append(entry)
        return out

    def stop_monitors(self) -> None:
        with self._lock:
            self._stopped = True
            monitors = list(self._monitors.values())
        for stop, thread in monitors:
            stop.set()
        for stop, thread in monitors:
            thread.join(timeout=5)

    # ------------------------------------------------------------------
    # HTTP API
    # ------------------------------------------------------------------

    def http_routes(self, server: JsonHttpServer) -> None:
        def price(query, _body):
            kind = query.pop("kind", None)
            if kind is None:
                raise ApiError(400, "missing price kind")
            try:
                return {"price_microalgo": self.get_price(kind, query)}
            except ClientError as exc:
                raise ApiError(400, str(exc))
            except TransportError as exc:
                raise ApiError(502, f"oracle unreachable: {exc}")

        def names(query, _body):
            kind = query.get("kind", "")
            try:
                values, stale = self.list_names(kind)
            except ClientError as exc:
                raise ApiError(400, str(exc))
            return {"names": values, "stale": stale}

        def submit(_query, body):
            if not body or not all(k in body for k in ("op", "args", "user")):
                raise ApiError(400, "submit needs op, args, and user")
            try:
                txn_id = self.submit(
                    body["user"], body["op"], body["args"], max_price=body.get("max_price")
                )
            except QuoteRaisedError as exc:
                raise ApiError(409, str(exc))
            except (ClientError, protocol.NoteError) as exc:
                raise ApiError(400, str(exc))
            except TransportError as exc:
                raise ApiError(502, f"oracle unreachable: {exc}")
            except Exception as exc:
                raise ApiError(400, str(exc))
            return {"txn_id": txn_id}

        def updates(query, _body):
            user = query.get("user")
            if not user:
                raise ApiError(400, "missing user")
            return {"updates": self.fetch_updates(user)}

        def history(query, _body):
            address = query.get("address")
            if not address:
                raise ApiError(400, "missing address")
            try:
                return {"transactions": self.history(address)}
            except ClientError as exc:
                raise ApiError(400, str(exc))

        def faucet(_query, body):
            if not body or "user" not in body or "amount" not in body:
                raise ApiError(400, "faucet needs user and amount")
            try:
                txn_id, address = self.faucet(body["user"], int(body["amount"]))
            except (ClientError, ValueError) as exc:
                raise ApiError(400, str(exc))
            return {"txn_id": txn_id, "address": address}

        def stage(_query, body):
            if not body or "data_b64" not in body:
                raise ApiError(400, "stage needs base64 data")
            try:
                raw = base64.b64decode(body["data_b64"], validate=True)
            except Exception as exc:
                raise ApiError(400, f"bad base64: {exc}")
            return {"ds_link": self.stage_bytes(raw), "ds_size": len(raw)}

        def users(_query, _body):
            return {"users": self.users()}

        server.add_route("GET", "/api/price", price)
        server.add_route("GET", "/api/names", names)
        server.add_route("POST", "/api/submit", submit)
        server.add_route("GET", "/api/updates", updates)
        server.add_route("GET", "/api/history", history)
        server.add_route("POST", "/api/faucet", faucet)
        server.add_route("POST", "/api/stage", stage)
        server.add_route("GET", "/api/users", users)


class ClientService:
    """Client node plus its HTTP server as one lifecycle."""

    def __init__(self, node: ClientNode) -> None:
        self.node = node
        self.http = JsonHttpServer(
            node.config.http_host, node.config.http_port, static_dir=node.config.static_dir
        )
        node.http_routes(self.http)

    @property
    def url(self) -> str:
        return self.http.url

    def start(self) -> "ClientService":
        # Resume monitors for already-known users.
        for user, address in self.node.users().items():
            self.node._ensure_monitor(user, address)
        self.http.start()
        return self

    def stop(self) -> None:
        self.node.stop_monitors()
        self.http.stop()


def run_client(config: ClientConfig, adapter: ChainAdapter) -> ClientService:
    return ClientService(ClientNode(adapter, config)).start()
