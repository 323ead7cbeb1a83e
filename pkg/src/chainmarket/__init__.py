"""chainmarket: a decentralized marketplace for predictive models.

Nodes communicate exclusively through notes attached to ledger payments:
clients submit priced requests (upload a dataset, train an archetype model,
query a trained model), an oracle executes them and answers with response
and reward transactions, and everything is auditable by replaying the
chain. The ledger is simulated with instant finality behind a chain-adapter
seam where a real chain client could be substituted.
"""

from .ledger import (
    FLAT_FEE,
    ChainAdapter,
    InsufficientBalanceError,
    LedgerError,
    SimulatedLedger,
    Transaction,
    UnknownAccountError,
)
from .protocol import (
    NoteEnvelope,
    decode_note,
    encode_note,
    make_note,
    validate_args,
)
from .tokenomics import (
    RewardSchedule,
    dataset_reward,
    log_mult_update,
    oracle_fee,
    price,
    training_reward,
)
from .datastore import DatasetMeta, DatasetStore, TableFrame, parse_csv, split_by_attribute, train_validation_split
from .models import (
    ARCHETYPES,
    EvalReport,
    Hyperparams,
    ModelRegistry,
    TrainedModel,
    create_model,
    evaluate,
    load_model,
    model_complexity,
    query,
    query_steps,
    save_model,
    train,
)
from .monitor import MonitorState, poll_once
from .oracle import OracleConfig, OracleNode, OracleService, run_oracle
from .client import ClientConfig, ClientNode, ClientService, run_client

__version__ = "0.1.0"

__all__ = [
    "ARCHETYPES",
    "ChainAdapter",
    "ClientConfig",
    "ClientNode",
    "ClientService",
    "DatasetMeta",
    "DatasetStore",
    "EvalReport",
    "FLAT_FEE",
    "Hyperparams",
    "InsufficientBalanceError",
    "LedgerError",
    "ModelRegistry",
    "MonitorState",
    "NoteEnvelope",
    "OracleConfig",
    "OracleNode",
    "OracleService",
    "RewardSchedule",
    "SimulatedLedger",
    "TableFrame",
    "TrainedModel",
    "Transaction",
    "UnknownAccountError",
    "create_model",
    "dataset_reward",
    "decode_note",
    "encode_note",
    "evaluate",
    "load_model",
    "log_mult_update",
    "make_note",
    "model_complexity",
    "oracle_fee",
    "parse_csv",
    "poll_once",
    "price",
    "query",
    "query_steps",
    "run_client",
    "run_oracle",
    "save_model",
    "split_by_attribute",
    "train",
    "train_validation_split",
    "training_reward",
    "validate_args",
]
