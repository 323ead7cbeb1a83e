"""HTTP front for a simulated ledger plus the matching chain adapter.

A single process hosts the SimulatedLedger and serves it over HTTP; oracle
and client processes then talk to the chain through HttpChainAdapter, which
implements the same ChainAdapter surface as the in-process ledger. This is
the substitution seam a real chain client would occupy.
"""

from __future__ import annotations

import base64

from . import httpjson
from .httpjson import ApiError, JsonHttpServer
from .ledger import SimulatedLedger, Transaction


def _txn_to_obj(txn: Transaction) -> dict:
    return {
        "id": txn.id,
        "sender": txn.sender,
        "receiver": txn.receiver,
        "amount": txn.amount,
        "note": base64.b64encode(txn.note).decode("ascii"),
        "round": txn.round,
        "timestamp": txn.timestamp,
    }

def _obj_to_txn(obj: dict) -> Transaction:
    return Transaction(
        id=obj["id"],
        sender=obj["sender"],
        receiver=obj["receiver"],
        amount=int(obj["amount"]),
        note=base64.b64decode(obj["note"]),
        round=int(obj["round"]),
        timestamp=int(obj["timestamp"]),
    )


def run_chain_service(ledger: SimulatedLedger, host: str = "127.0.0.1", port: int = 0) -> JsonHttpServer:
    """Serve a ledger over HTTP; caller owns stop()."""
    server = JsonHttpServer(host, port)

    def submit(_query, body) -> dict:
        if not body:
            raise ApiError(400, "submit needs a JSON body")
        try:
            txn_id = ledger.submit_payment(
                body["sender"],
                body["receiver"],
                int(body["amount"]),
                base64.b64decode(body.get("note", "")),
            )
        except KeyError as exc:
            raise ApiError(400, f"missing field {exc}")
        except Exception as exc:
            raise ApiError(400, str(exc))
        return {"txn_id": txn_id}

    def faucet(_query, body) -> dict:
        if not body:
            raise ApiError(400, "faucet needs a JSON body")
        try:
            txn_id = ledger.faucet(body["address"], int(body["amount"]))
        except Exception as exc:
            raise ApiError(400, str(exc))
        return {"txn_id": txn_id}

    def lookup(query, _body) -> dict:
        recipient = query.get("recipient", "")
        min_ts = int(query.get("min_timestamp", 0))
        return {"transactions": [_txn_to_obj(t) for t in ledger.lookup(recipient, min_ts)]}

    def balance(query, _body) -> dict:
        return {"balance": ledger.balance(query.get("address", ""))}

    def log(query, _body) -> dict:
        address = query.get("address")
        txns = ledger.log_for(address) if address else ledger.transactions()
        return {"transactions": [_txn_to_obj(t) for t in txns]}

    server.add_route("POST", "/submit", submit)
    server.add_route("POST", "/faucet", faucet)
    server.add_route("GET", "/lookup", lookup)
    server.add_route("GET", "/balance", balance)
    server.add_route("GET", "/log", log)
    server.start()
    return server


class HttpChainAdapter:
    """ChainAdapter talking to a remote chain service."""

    def __init__(self, base_url: str, timeout: float = 10.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def submit_payment(self, sender: str, receiver: str, amount: int, note: bytes = b"") -> str:
        payload = {
            "sender": sender,
            "receiver": receiver,
            "amount": amount,
            "note": base64.b64encode(note).decode("ascii"),
        }
        return httpjson.post_json(f"{self.base_url}/submit", payload, timeout=self.timeout)["txn_id"]

    def lookup(self, recipient: str, min_timestamp: int) -> list[Transaction]:
        obj = httpjson.get_json(
            f"{self.base_url}/lookup",
            {"recipient": recipient, "min_timestamp": min_timestamp},
            timeout=self.timeout,
        )
        return [_obj_to_txn(o) for o in obj["transactions"]]

    def balance(self, address: str) -> int:
        return int(httpjson.get_json(f"{self.base_url}/balance", {"address": address}, timeout=self.timeout)["balance"])

    def faucet(self, address: str, amount: int) -> str:
        return httpjson.post_json(f"{self.base_url}/faucet", {"address": address, "amount": amount}, timeout=self.timeout)["txn_id"]

    def log_for(self, address: str) -> list[Transaction]:
        obj = httpjson.get_json(f"{self.base_url}/log", {"address": address}, timeout=self.timeout)
        return [_obj_to_txn(o) for o in obj["transactions"]]
