"""Client node: price proxying, submits, update queues, names, history."""

from __future__ import annotations

import base64

import pytest

from chainmarket import protocol
from chainmarket.client import ClientError, QuoteRaisedError
from chainmarket.httpjson import TransportError, get_json, post_json
from chainmarket.sampledata import noisy_sine_csv
from conftest import wait_for

CSV = noisy_sine_csv(rows=120, seed=3)


def fund(market, user="alice", amount=10 ** 10):
    txn_id, address = market.client_node.faucet(user, amount)
    return address


def upload_via_client(market, user="alice", name="ds1"):
    link = market.client_node.stage_bytes(CSV)
    return market.client_node.submit(
        user,
        protocol.UP_DATASET,
        {"ds_name": name, "ds_link": link, "ds_size": str(len(CSV)), "sub_split_attrib": "stock"},
    )


def test_faucet_creates_and_funds_account(market):
    address = fund(market, amount=123_456)
    assert market.ledger.balance(address) == 123_456
    assert market.client_node.users()["alice"] == address


def test_price_proxies_oracle_without_chain_traffic(market):
    fund(market)
    before = len(market.ledger.transactions())
    price = market.client_node.get_price("dataset_upload", {"ds_size": 5_000_000})
    assert price == 5_000_000
    for _ in range(5):
        market.client_node.get_price("dataset_upload", {"ds_size": 123})
    assert len(market.ledger.transactions()) == before  # price queries never hit the chain


def test_unknown_price_kind_fails_before_any_oracle_call(market):
    with pytest.raises(ClientError):
        market.client_node.get_price("rent_gpu", {})


def test_submit_schema_error_spends_nothing(market):
    fund(market)
    before = len(market.ledger.transactions())
    with pytest.raises(ClientError, match="ds_name"):
        market.client_node.submit("alice", protocol.UP_DATASET, {"ds_link": "cas://x", "ds_size": "5"})
    assert len(market.ledger.transactions()) == before


def test_submit_unknown_user_rejected(market):
    with pytest.raises(ClientError, match="unknown user"):
        market.client_node.submit("nobody", protocol.QUERY_MODEL, {"model_name": "m", "input": "[1]"})


def test_upload_round_trip_and_single_delivery(market):
    fund(market)
    txn_id = upload_via_client(market)
    txn = next(t for t in market.ledger.transactions() if t.id == txn_id)
    assert txn.receiver == "oracle-host"
    assert protocol.decode_note(txn.note).op == protocol.UP_DATASET

    updates = wait_for(lambda: market.client_node.fetch_updates("alice"))
    assert [u["op"] for u in updates] == [protocol.DATASET_UP]
    assert updates[0]["args"]["status"] == "ok"
    assert market.client_node.fetch_updates("alice") == []  # at most once


def test_quote_race_rejected(market):
    fund(market)
    link = market.client_node.stage_bytes(CSV)
    args = {"ds_name": "ds2", "ds_link": link, "ds_size": str(len(CSV))}
    quote = market.client_node.quote_for(protocol.UP_DATASET, protocol.validate_args(protocol.UP_DATASET, args))
    market.oracle_node.update_schedule("dataset_upload_per_byte", 3.0)
    with pytest.raises(QuoteRaisedError):
        market.client_node.submit("alice", protocol.UP_DATASET, args, max_price=quote)


def test_names_refresh_after_upload(market):
    fund(market)
    names, stale = market.client_node.list_names("datasets")
    assert names == [] and stale is False
    upload_via_client(market)
    wait_for(lambda: market.oracle_node.datasets.get_meta("ds1"))
    names, stale = market.client_node.list_names("datasets")
    assert names == ["ds1"] and stale is False


def test_oracle_down_serves_stale_names(market):
    fund(market)
    upload_via_client(market)
    wait_for(lambda: market.oracle_node.datasets.get_meta("ds1"))
    market.client_node.list_names("datasets")
    market.oracle_service.http.stop()
    names, stale = market.client_node.list_names("datasets")
    assert names == ["ds1"] and stale is True
    with pytest.raises(TransportError):
        market.client_node.get_price("dataset_upload", {"ds_size": 1})


def test_history_shows_decoded_notes(market):
    address = fund(market)
    txn_id = upload_via_client(market)
    entries = market.client_node.history(address)
    mine = [e for e in entries if e["id"] == txn_id]
    assert mine and mine[0]["op"] == protocol.UP_DATASET
    assert any(e["sender"] == "__genesis__" for e in entries)  # the faucet txn


def test_updates_arrive_in_response_order(market):
    fund(market)
    upload_via_client(market, name="dsA")
    wait_for(lambda: market.oracle_node.datasets.get_meta("dsA"))
    upload_via_client(market, name="dsB")
    updates = wait_for(
        lambda: (market.client_node._updates.get("alice") or None)
        if len(market.client_node._updates.get("alice", [])) >= 2 else None
    )
    got = market.client_node.fetch_updates("alice")
    names = [u["args"]["ds_name"] for u in got if u["op"] == protocol.DATASET_UP]
    assert names == ["dsA", "dsB"]
    assert got == sorted(got, key=lambda u: (u["timestamp"], u["txn_id"]))


# ----------------------------------------------------------------------
# HTTP API surface
# ----------------------------------------------------------------------


def test_http_api_round_trip(market):
    url = market.client_url
    obj = post_json(f"{url}/api/faucet", {"user": "carol", "amount": 10 ** 9})
    assert obj["address"].startswith("acct-carol")
    price = get_json(f"{url}/api/price", {"kind": "dataset_upload", "ds_size": 10})
    assert price["price_microalgo"] == 10
    staged = post_json(f"{url}/api/stage", {"data_b64": base64.b64encode(CSV).decode()})
    assert staged["ds_size"] == len(CSV)
    submit = post_json(f"{url}/api/submit", {
        "user": "carol",
        "op": protocol.UP_DATASET,
        "args": {"ds_name": "dsc", "ds_link": staged["ds_link"], "ds_size": str(len(CSV))},
    })
    assert submit["txn_id"]
    updates = wait_for(lambda: get_json(f"{url}/api/updates", {"user": "carol"})["updates"])
    assert updates[0]["args"]["status"] == "ok"
    history = get_json(f"{url}/api/history", {"address": obj["address"]})
    assert any(t["id"] == submit["txn_id"] for t in history["transactions"])
    names = get_json(f"{url}/api/names", {"kind": "datasets"})
    assert "dsc" in names["names"]
    users = get_json(f"{url}/api/users")
    assert "carol" in users["users"]


def test_http_api_error_mapping(market):
    url = market.client_url
    from chainmarket.httpjson import ApiError
    with pytest.raises(ApiError) as err:
        get_json(f"{url}/api/price", {"kind": "bogus"})
    assert err.value.status == 400
    with pytest.raises(ApiError) as err:
        post_json(f"{url}/api/submit", {"user": "ghost"})
    assert err.value.status == 400
    with pytest.raises(ApiError) as err:
        get_json(f"{url}/api/updates", {})
    assert err.value.status == 400