"""Chain-replay audit: reconstruct marketplace state from transactions alone.

Every oracle effect carries a protocol note, so walking the commit log is
enough to rebuild the dataset and model registries, the reward history, and
the multiplier schedule. Nodes use this to verify themselves; users get the
same transparency through the client's history endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import protocol, tokenomics
from .ledger import Transaction


@dataclass
class RebuiltState:
    """What the chain alone says the marketplace looks like."""

    datasets: dict[str, dict] = field(default_factory=dict)
    models: dict[str, dict] = field(default_factory=dict)
    rewards: list[dict] = field(default_factory=list)
    responses: dict[str, list[str]] = field(default_factory=dict)  # request id -> response txn ids
    requests: dict[str, dict] = field(default_factory=dict)


def replay_registries(transactions: list[Transaction]) -> RebuiltState:
    """Fold the commit log into registries, pairing requests with the
    req-tagged responses the oracle sent back."""
    state = RebuiltState()
    for txn in transactions:
        try:
            env = protocol.decode_note(txn.note)
        except protocol.NoteError:
            continue
        args = env.args
        if env.op in protocol.REQUEST_OPS:
            state.requests[txn.id] = {"op": env.op, "args": args, "payer": txn.sender, "paid": txn.amount}
        elif env.op in protocol.RESPONSE_OPS:
            req = args.get("req", "")
            state.responses.setdefault(req, []).append(txn.id)
            request = state.requests.get(req)
            if env.op == protocol.DATASET_UP and args.get("status") == "ok" and request:
                state.datasets[args["ds_name"]] = {
                    "ds_name": args["ds_name"],
                    "ds_link": request["args"].get("ds_link", ""),
                    "ds_size": int(request["args"].get("ds_size", "0")),
                    "uploader": request["payer"],
                }
            if env.op == protocol.MODEL_TRAINED and "status" not in args and request:
                state.models[args["model_name"]] = {
                    "model_name": args["model_name"],
                    "archetype": request["args"].get("raw_model", ""),
                    "ds_name": request["args"].get("ds_name", ""),
                    "trainer": request["payer"],
                    "accuracy": float(args["accuracy"]),
                    "final_loss": float(args["loss"]),
                }
        elif env.op == protocol.REWARD:
            state.rewards.append(
                {
                    "txn_id": txn.id,
                    "recipient": txn.receiver,
                    "amount": txn.amount,
                    "reason": args.get("reason", ""),
                    "ref_name": args.get("ref_name", ""),
                    "accuracy": float(args.get("accuracy", "0")),
                    "req": args.get("req", ""),
                }
            )
    return state


def replay_schedule(initial: tokenomics.RewardSchedule, transactions: list[Transaction]) -> tokenomics.RewardSchedule:
    """Fold the on-chain <MULT_UPDATE> log over an initial schedule."""
    envelopes = []
    for txn in transactions:
        try:
            envelopes.append(protocol.decode_note(txn.note))
        except protocol.NoteError:
            continue
    return tokenomics.replay_schedule(initial, envelopes)


def verify_reward_amounts(state: RebuiltState, schedule: tokenomics.RewardSchedule) -> list[str]:
    """Check every on-chain reward against the equations, given the accuracy
    the note itself reports. Returns a list of discrepancies (empty = clean)."""
    problems = []
    for reward in state.rewards:
        accuracy = reward["accuracy"]
        if reward["reason"] == "model_training":
            expected = tokenomics.training_reward(schedule.training_mult, accuracy)
        else:
            ds = state.datasets.get(reward["ref_name"])
            if ds is None:
                problems.append(f"reward {reward['txn_id']} references unknown dataset {reward['ref_name']!r}")
                continue
            expected = tokenomics.dataset_reward(ds["ds_size"], schedule.dataset_mult, accuracy)
        if expected != reward["amount"]:
            problems.append(
                f"reward {reward['txn_id']} pays {reward['amount']}, equations say {expected}"
            )
    return problems
