"""CLI: thin HTTP mappings, machine-parseable output, exit codes."""

from __future__ import annotations

import json

import pytest

from chainmarket import cli
from chainmarket.sampledata import noisy_sine_csv
from conftest import wait_for

CSV = noisy_sine_csv(rows=120, seed=3)


def run_cli(market, capsys, *argv, user="alice", fmt="json"):
    code = cli.main(["--node", market.client_url, "--user", user, "--format", fmt, *argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(market, capsys, *argv, user="alice"):
    code, out, err = run_cli(market, capsys, *argv, user=user)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def funded(market, capsys):
    run_json(market, capsys, "faucet", "alice", str(10 ** 10))
    return market


def staged_dataset(market, capsys, tmp_path, name="ds1"):
    path = tmp_path / "data.csv"
    path.write_bytes(CSV)
    return run_json(
        market, capsys, "upload", str(path), "--name", name, "--split-attrib", "stock"
    )


def test_faucet_and_plain_format(market, capsys):
    code, out, err = run_cli(market, capsys, "faucet", "bob", "5000", fmt="plain")
    assert code == 0
    assert "funded" in out


def test_price_quote(funded, capsys):
    obj = run_json(funded, capsys, "price", "dataset_upload", "--size", "5000000")
    assert obj["price_microalgo"] == 5_000_000


def test_price_requires_size(funded, capsys):
    code, _, err = run_cli(funded, capsys, "price", "dataset_upload")
    assert code == 2 and "size" in err


def test_upload_then_names(funded, capsys, tmp_path):
    obj = staged_dataset(funded, capsys, tmp_path)
    assert obj["txn_id"] and obj["ds_link"].startswith("cas://")
    wait_for(lambda: funded.oracle_node.datasets.get_meta("ds1"))
    names = run_json(funded, capsys, "names", "datasets")
    assert names["names"] == ["ds1"]


def test_full_train_query_updates_flow(funded, capsys, tmp_path):
    staged_dataset(funded, capsys, tmp_path)
    wait_for(lambda: funded.oracle_node.datasets.get_meta("ds1"))
    train = run_json(
        funded, capsys, "train", "rnn", "--dataset", "ds1", "--name", "m1",
        "--epochs", "3", "--hidden-dim", "4", "--lookback", "5", "--sub-split", "0",
    )
    assert train["txn_id"]
    wait_for(lambda: funded.oracle_node.models.get("m1"), timeout=60)
    query = run_json(funded, capsys, "query", "m1", "--row", "ds1:10")
    assert query["txn_id"]

    def trained_update():
        got = run_json(funded, capsys, "updates")
        return got["updates"] or None

    collected = []
    wait_for(lambda: (collected.extend(trained_update() or []) or None)
             or (collected if len(collected) >= 4 else None), timeout=60)
    ops = [u["op"] for u in collected]
    assert "<MODEL_TRAINED>" in ops and "<QUERY_RESULT>" in ops
    assert ops.count("<REWARD>") >= 2  # dataset reward at train + both at query


def test_query_requires_exactly_one_input(funded, capsys):
    code, _, err = run_cli(funded, capsys, "query", "m1")
    assert code == 2 and "exactly one" in err
    code, _, err = run_cli(funded, capsys, "query", "m1", "--input", "[1]", "--row", "d:1")
    assert code == 2


def test_history_lists_transactions(funded, capsys):
    address = funded.client_node.address_of("alice")
    obj = run_json(funded, capsys, "history", address)
    assert any(t["sender"] == "__genesis__" for t in obj["transactions"])


def test_api_error_exit_code(funded, capsys):
    code, _, err = run_cli(funded, capsys, "price", "query_model", "--model", "ghost")
    assert code == 2 and "error" in err


def test_transport_error_exit_code(market, capsys):
    code = cli.main(["--node", "http://127.0.0.1:9", "--format", "json", "names", "datasets"])
    err = capsys.readouterr().err
    assert code == 3 and "transport error" in err


def test_updates_empty_is_exit_zero(funded, capsys):
    code, out, _ = run_cli(funded, capsys, "updates", fmt="plain")
    assert code == 0 and out.strip() == ""


def test_train_flag_defaults_are_the_evaluation_config():
    parser = cli.build_parser()
    args = parser.parse_args(["train", "gru", "--dataset", "d", "--name", "m"])
    assert (args.epochs, args.target, args.hidden_dim, args.layers, args.lag, args.lookback) == (
        70, "close", 5, 1, 0, 10,
    )
    assert args.sub_split is None


def test_json_output_parses_for_every_read_command(funded, capsys, tmp_path):
    staged_dataset(funded, capsys, tmp_path, name="dsj")
    for argv in (["names", "datasets"], ["names", "models"], ["updates"],
                 ["price", "dataset_upload", "--size", "10"]):
        obj = run_json(funded, capsys, *argv)
        assert isinstance(obj, dict)