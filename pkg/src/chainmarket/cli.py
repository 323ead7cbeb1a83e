"""Command-line client for headless operation of the marketplace.

Every user action maps onto the client node's HTTP API; ``node`` starts the
long-running services themselves. Training flags default to the standard
evaluation configuration (70 epochs, hidden size 5, one layer, lookback 10,
no lag, target column "close"), so a canonical training run needs nothing
beyond the archetype, dataset, and a model name.

Exit codes: 0 success, 2 usage or API error, 3 transport error (the node or
oracle could not be reached).
"""

from __future__ import annotations

import argparse
import base64
import json
import os
import signal
import sys
import threading
from pathlib import Path

from . import httpjson, protocol
from .httpjson import ApiError, TransportError

DEFAULT_NODE_URL = "http://127.0.0.1:8650"

TRAIN_DEFAULTS = {
    "epochs": 70,
    "target": "close",
    "hidden_dim": 5,
    "layers": 1,
    "lag": 0,
    "lookback": 10,
}


def _emit(args: argparse.Namespace, payload: dict, plain: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True))
    elif plain:
        print(plain)


def _post(args: argparse.Namespace, path: str, body: dict) -> dict:
    return httpjson.post_json(args.node.rstrip("/") + path, body)


def _get(args: argparse.Namespace, path: str, params: dict | None = None) -> dict:
    return httpjson.get_json(args.node.rstrip("/") + path, params)


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------


def cmd_price(args: argparse.Namespace) -> int:
    params: dict = {}
    if args.kind == "dataset_upload":
        if args.size is None:
            print("error: price dataset_upload needs --size", file=sys.stderr)
            return 2
        params["ds_size"] = args.size
    elif args.kind == "train_model":
        if not args.dataset:
            print("error: price train_model needs --dataset", file=sys.stderr)
            return 2
        params.update(
            raw_model=args.archetype,
            ds_name=args.dataset,
            hidden_dim=args.hidden_dim,
            num_hidden_layers=args.layers,
            training_lookback=args.lookback,
        )
    elif args.kind == "query_model":
        if not args.model:
            print("error: price query_model needs --model", file=sys.stderr)
            return 2
        params["model_name"] = args.model
    obj = _get(args, "/api/price", {"kind": args.kind, **params})
    _emit(args, obj, f"{obj['price_microalgo']} microALGO")
    return 0


def cmd_upload(args: argparse.Namespace) -> int:
    data = Path(args.file).read_bytes()
    staged = _post(args, "/api/stage", {"data_b64": base64.b64encode(data).decode("ascii")})
    quote = _get(args, "/api/price", {"kind": "dataset_upload", "ds_size": staged["ds_size"]})
    request_args = {
        "ds_name": args.name,
        "ds_link": staged["ds_link"],
        "ds_size": str(staged["ds_size"]),
    }
    if args.time_attrib:
        request_args["time_attrib"] = args.time_attrib
    if args.split_attrib:
        request_args["sub_split_attrib"] = args.split_attrib
    obj = _post(
        args,
        "/api/submit",
        {
            "op": protocol.UP_DATASET,
            "args": request_args,
            "user": args.user,
            "max_price": quote["price_microalgo"],
        },
    )
    payload = {**obj, "ds_link": staged["ds_link"], "price_microalgo": quote["price_microalgo"]}
    _emit(args, payload, f"submitted {obj['txn_id']} ({quote['price_microalgo']} microALGO)")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    request_args = {
        "raw_model": args.archetype,
        "ds_name": args.dataset,
        "new_model_name": args.name,
        "num_epochs": str(args.epochs),
        "target_attrib": args.target,
        "hidden_dim": str(args.hidden_dim),
        "num_hidden_layers": str(args.layers),
        "time_lag": str(args.lag),
        "training_lookback": str(args.lookback),
    }
    if args.sub_split is not None:
        request_args["sub_split_value"] = str(args.sub_split)
    quote = _get(
        args,
        "/api/price",
        {
            "kind": "train_model",
            "raw_model": args.archetype,
            "ds_name": args.dataset,
            "hidden_dim": args.hidden_dim,
            "num_hidden_layers": args.layers,
            "training_lookback": args.lookback,
        },
    )
    obj = _post(
        args,
        "/api/submit",
        {
            "op": protocol.TRAIN_MODEL,
            "args": request_args,
            "user": args.user,
            "max_price": quote["price_microalgo"],
        },
    )
    payload = {**obj, "price_microalgo": quote["price_microalgo"]}
    _emit(args, payload, f"submitted {obj['txn_id']} ({quote['price_microalgo']} microALGO)")
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    if (args.input is None) == (args.row is None):
        print("error: query needs exactly one of --input or --row", file=sys.stderr)
        return 2
    quote = _get(args, "/api/price", {"kind": "query_model", "model_name": args.model})
    obj = _post(
        args,
        "/api/submit",
        {
            "op": protocol.QUERY_MODEL,
            "args": {"model_name": args.model, "input": args.input if args.input is not None else args.row},
            "user": args.user,
            "max_price": quote["price_microalgo"],
        },
    )
    payload = {**obj, "price_microalgo": quote["price_microalgo"]}
    _emit(args, payload, f"submitted {obj['txn_id']} ({quote['price_microalgo']} microALGO)")
    return 0


def cmd_updates(args: argparse.Namespace) -> int:
    obj = _get(args, "/api/updates", {"user": args.user})
    lines = []
    for update in obj["updates"]:
        detail = " ".join(f"{k}={v}" for k, v in sorted(update["args"].items()))
        lines.append(f"{update['op']} {detail}")
    _emit(args, obj, "\n".join(lines))
    return 0


def cmd_names(args: argparse.Namespace) -> int:
    obj = _get(args, "/api/names", {"kind": args.kind})
    plain = "\n".join(obj["names"]) + (" (stale)" if obj.get("stale") else "")
    _emit(args, obj, plain.strip())
    return 0


def cmd_history(args: argparse.Namespace) -> int:
    obj = _get(args, "/api/history", {"address": args.address})
    lines = [
        f"{t['id']} {t['sender']} -> {t['receiver']} {t['amount']} {t.get('op', '')}".rstrip()
        for t in obj["transactions"]
    ]
    _emit(args, obj, "\n".join(lines))
    return 0


def cmd_faucet(args: argparse.Namespace) -> int:
    obj = _post(args, "/api/faucet", {"user": args.target_user, "amount": args.amount})
    _emit(args, obj, f"{obj['address']} funded ({obj['txn_id']})")
    return 0


def cmd_node(args: argparse.Namespace) -> int:
    from . import chainservice, client, ledger, oracle

    raw = json.loads(Path(args.config).read_text(encoding="utf-8"))

    def build_adapter():
        cfg = raw.get("ledger", {"mode": "simulated"})
        if cfg.get("mode") == "adapter":
            return chainservice.HttpChainAdapter(cfg["url"])
        chain = ledger.SimulatedLedger(log_path=cfg.get("log_path"))
        for address, amount in cfg.get("faucets", {}).items():
            chain.faucet(address, int(amount))
        return chain

    stop = threading.Event()
    signal.signal(signal.SIGINT, lambda *_: stop.set())
    signal.signal(signal.SIGTERM, lambda *_: stop.set())

    if args.role == "ledger":
        chain = ledger.SimulatedLedger(log_path=raw.get("log_path"))
        for address, amount in raw.get("faucets", {}).items():
            chain.faucet(address, int(amount))
        server = chainservice.run_chain_service(
            chain, raw.get("http_host", "127.0.0.1"), raw.get("http_port", 0)
        )
        print(f"ledger service at {server.url}", flush=True)
        stop.wait()
        server.stop()
        return 0

    if args.role == "oracle":
        service = oracle.run_oracle(oracle.OracleConfig.from_file(args.config), build_adapter())
        print(f"oracle node at {service.url}", flush=True)
        stop.wait()
        service.stop()
        return 0

    service = client.run_client(client.ClientConfig.from_file(args.config), build_adapter())
    print(f"client node at {service.url}", flush=True)
    stop.wait()
    service.stop()
    return 0


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chainmarket", description=__doc__)
    parser.add_argument("--node", default=os.environ.get("CHAINMARKET_NODE", DEFAULT_NODE_URL),
                        help="client node URL (env CHAINMARKET_NODE)")
    parser.add_argument("--user", default=os.environ.get("CHAINMARKET_USER", "user"),
                        help="acting user name (env CHAINMARKET_USER)")
    parser.add_argument("--format", choices=("plain", "json"), default="plain")
    sub = parser.add_subparsers(dest="command", required=True)

    node = sub.add_parser("node", help="run a long-lived node")
    node.add_argument("role", choices=("oracle", "client", "ledger"))
    node.add_argument("--config", required=True)
    node.set_defaults(func=cmd_node)

    price = sub.add_parser("price", help="quote an operation price (HTTP only, never on-chain)")
    price.add_argument("kind", choices=("dataset_upload", "train_model", "query_model"))
    price.add_argument("--size", type=int, help="dataset size in bytes")
    price.add_argument("--model", help="model name for query_model")
    price.add_argument("--dataset", help="dataset name for train_model")
    price.add_argument("--archetype", choices=protocol.RAW_MODELS, default="gru")
    price.add_argument("--hidden-dim", type=int, default=TRAIN_DEFAULTS["hidden_dim"], dest="hidden_dim")
    price.add_argument("--layers", type=int, default=TRAIN_DEFAULTS["layers"])
    price.add_argument("--lookback", type=int, default=TRAIN_DEFAULTS["lookback"])
    price.set_defaults(func=cmd_price)

    upload = sub.add_parser("upload", help="stage a CSV file and submit an upload request")
    upload.add_argument("file")
    upload.add_argument("--name", required=True)
    upload.add_argument("--time-attrib", dest="time_attrib")
    upload.add_argument("--split-attrib", dest="split_attrib")
    upload.set_defaults(func=cmd_upload)

    train = sub.add_parser("train", help="submit a training request")
    train.add_argument("archetype", choices=protocol.RAW_MODELS)
    train.add_argument("--dataset", required=True)
    train.add_argument("--name", required=True)
    train.add_argument("--epochs", type=int, default=TRAIN_DEFAULTS["epochs"])
    train.add_argument("--target", default=TRAIN_DEFAULTS["target"])
    train.add_argument("--hidden-dim", type=int, default=TRAIN_DEFAULTS["hidden_dim"], dest="hidden_dim")
    train.add_argument("--layers", type=int, default=TRAIN_DEFAULTS["layers"])
    train.add_argument("--lag", type=int, default=TRAIN_DEFAULTS["lag"])
    train.add_argument("--lookback", type=int, default=TRAIN_DEFAULTS["lookback"])
    train.add_argument("--sub-split", type=int, default=None, dest="sub_split",
                       help="integer id of the attribute value to train on")
    train.set_defaults(func=cmd_train)

    query = sub.add_parser("query", help="submit a query request")
    query.add_argument("model")
    query.add_argument("--input", help="JSON array input window")
    query.add_argument("--row", help="dataset row reference ds_name:row_index")
    query.set_defaults(func=cmd_query)

    updates = sub.add_parser("updates", help="drain queued oracle responses for the user")
    updates.set_defaults(func=cmd_updates)

    names = sub.add_parser("names", help="list registered dataset or model names")
    names.add_argument("kind", choices=("datasets", "models"))
    names.set_defaults(func=cmd_names)

    history = sub.add_parser("history", help="commit-log view for an address")
    history.add_argument("address")
    history.set_defaults(func=cmd_history)

    faucet = sub.add_parser("faucet", help="fund a user (simulated ledger only)")
    faucet.add_argument("target_user")
    faucet.add_argument("amount", type=int)
    faucet.set_defaults(func=cmd_faucet)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 3
    except ApiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
