"""The oracle node: executes priced jobs arriving as note transactions.

Flow per request: the monitor hands over an inbound transaction, the
dispatcher validates its note against the opcode schema and journals a job,
and a single worker executes jobs in arrival order. Every job ends with
exactly one response transaction back to the payer (carrying the refund
when the job failed) plus zero or more reward transactions, each tagged
with the originating request id so the chain alone is a complete audit log
and restarts cannot double-pay.

Money handling: a failed job refunds the full amount paid (the oracle
absorbs the network fee). On success the oracle keeps a configured fee
fraction of the payment; the remainder notionally funds rewards, and when
the reward equations exceed it the difference comes out of the oracle's own
balance and the shortfall is logged.

Pricing races: each job snapshots the reward schedule when it is accepted,
so a multiplier update while a request is in flight does not change what
that request is charged or paid.
"""

from __future__ import annotations

import json
import logging
import queue
import re
import threading
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

from . import datastore, models, monitor, protocol, tokenomics
from .httpjson import ApiError, JsonHttpServer
from .ledger import ChainAdapter

logger = logging.getLogger(__name__)

_ROW_REF_RE = re.compile(r"^(?P<ds>.+):(?P<row>[0-9]+)$")


@dataclass
class OracleConfig:
    storage_root: Path
    oracle_address: str = "oracle"
    schedule_path: Path | None = None
    poll_interval_s: float = 1.0
    lateness_window_ms: int = 60_000
    http_host: str = "127.0.0.1"
    http_port: int = 0
    worker_count: int = 1  # sequential execution; kept for config surface
    model_seed: int = 0
    train_fraction: float = models.DEFAULT_TRAIN_FRACTION
    learning_rate: float = models.DEFAULT_LEARNING_RATE
    grad_clip: float | None = models.DEFAULT_GRAD_CLIP

    @classmethod
    def from_file(cls, path: str | Path) -> "OracleConfig":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in dataclass_fields(cls)}
        kwargs = {k: v for k, v in obj.items() if k in known}
        kwargs["storage_root"] = Path(kwargs["storage_root"])
        if kwargs.get("schedule_path"):
            kwargs["schedule_path"] = Path(kwargs["schedule_path"])
        if "poll_interval_ms" in obj:
            kwargs["poll_interval_s"] = obj["poll_interval_ms"] / 1000.0
        return cls(**kwargs)


@dataclass
class PendingJob:
    """One marketplace request, keyed by its request transaction id."""

    request_txn_id: str
    op: str
    args: dict
    payer: str
    paid: int
    schedule: dict
    status: str = "queued"  # queued -> running -> done | failed (forward only)
    preset_error: str | None = None


@dataclass
class JobOutcome:
    """What a handler decided: the response note plus any money movements."""

    response_args: dict
    refund: int = 0
    rewards: list[tuple[str, int, dict]] = field(default_factory=list)
    error: str | None = None


class JobJournal:
    """Append-only JSONL record of job lifecycle events.

    Replaying the journal after a crash tells the oracle which requests are
    already executed and which still owe effects, making job execution
    exactly-once per request transaction id.
    """

    def __init__(self, path: str | Path) -> None:
        self._path = Path(path)
        self._lock = threading.Lock()
        self.jobs: dict[str, dict] = {}
        if self._path.is_file():
            for line in self._path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._fold(json.loads(line))

    def _fold(self, event: dict) -> None:
        record = self.jobs.setdefault(event["id"], {"phase": "queued"})
        kind = event["event"]
        if kind == "queued":
            record.update(
                phase="queued",
                op=event["op"],
                args=event["args"],
                payer=event["payer"],
                paid=event["paid"],
                schedule=event["schedule"],
                preset_error=event.get("preset_error"),
            )
        elif kind == "done":
            record.update(
                phase="done",
                status=event["status"],
                response_args=event["response_args"],
                refund=event["refund"],
                rewards=event["rewards"],
            )
        elif kind == "responded":
            record["phase"] = "responded"

    def append(self, event: dict) -> None:
        with self._lock:
            self._fold(event)
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def phase(self, txn_id: str) -> str | None:
        record = self.jobs.get(txn_id)
        return record["phase"] if record else None


class OracleNode:
    """Dataset saves, model training, and queries, driven by chain notes."""

    def __init__(
        self,
        adapter: ChainAdapter,
        config: OracleConfig,
        schedule: tokenomics.RewardSchedule | None = None,
    ) -> None:
        self.adapter = adapter
        self.config = config
        root = Path(config.storage_root)
        root.mkdir(parents=True, exist_ok=True)
        if schedule is not None:
            self.schedule = schedule
        elif config.schedule_path and Path(config.schedule_path).is_file():
            self.schedule = tokenomics.RewardSchedule.load(config.schedule_path)
        else:
            self.schedule = tokenomics.RewardSchedule()
        self.datasets = datastore.DatasetStore(root, registry_path=root / "datasets.jsonl")
        self.models = models.ModelRegistry(registry_path=root / "models.jsonl")
        self.journal = JobJournal(root / "jobs.jsonl")
        self._queue: "queue.Queue[PendingJob]" = queue.Queue()
        self._exec_lock = threading.Lock()
        self.stats = {"fees_retained": 0, "rewards_paid": 0, "refunds": 0, "shortfall": 0}

    # ------------------------------------------------------------------
    # Dispatch (called by the monitor loop)
    # ------------------------------------------------------------------

    def dispatch(self, txn, envelope: protocol.NoteEnvelope) -> None:
        """Turn an inbound request transaction into a journaled job."""
        if envelope.op not in protocol.REQUEST_OPS:
            # No payment contract exists for non-request notes; ignore.
            logger.info("ignoring non-request note %s on %s", envelope.op, txn.id)
            return
        if self.journal.phase(txn.id) is not None:
            logger.info("request %s already journaled; skipping duplicate dispatch", txn.id)
            return
        preset_error = None
        args: dict = envelope.args
        try:
            args = protocol.validate_args(envelope.op, envelope.args)
        except protocol.NoteError as exc:
            preset_error = f"schema: {exc}"
        job = PendingJob(
            request_txn_id=txn.id,
            op=envelope.op,
            args=args,
            payer=txn.sender,
            paid=txn.amount,
            schedule=self._schedule_snapshot(),
            preset_error=preset_error,
        )
        self.journal.append(
            {
                "event": "queued",
                "id": job.request_txn_id,
                "op": job.op,
                "args": {k: protocol._stringify(v) for k, v in job.args.items()},
                "payer": job.payer,
                "paid": job.paid,
                "schedule": job.schedule,
                "preset_error": preset_error,
            }
        )
        self._queue.put(job)

    def _schedule_snapshot(self) -> dict:
        return {f.name: getattr(self.schedule, f.name) for f in dataclass_fields(self.schedule)}

    # ------------------------------------------------------------------
    # Execution
    # ------------------------------------------------------------------

    def execute(self, job: PendingJob, verify_effects: bool = False) -> JobOutcome:
        """Run one job to completion, exactly once per request id."""
        with self._exec_lock:
            phase = self.journal.phase(job.request_txn_id)
            if phase == "responded":
                return JobOutcome(response_args={}, error="already completed")
            if phase == "done":
                record = self.journal.jobs[job.request_txn_id]
                outcome = JobOutcome(
                    response_args=record["response_args"],
                    refund=record["refund"],
                    rewards=[tuple(r) for r in record["rewards"]],
                    error=None if record["status"] == "done" else "failed earlier",
                )
            else:
                job.status = "running"
                outcome = self._run_handler(job)
                job.status = "failed" if outcome.error else "done"
                self.journal.append(
                    {
                        "event": "done",
                        "id": job.request_txn_id,
                        "status": job.status,
                        "response_args": outcome.response_args,
                        "refund": outcome.refund,
                        "rewards": [list(r) for r in outcome.rewards],
                    }
                )
            self._deliver(job, outcome, verify=verify_effects)
            return outcome

    def _run_handler(self, job: PendingJob) -> JobOutcome:
        if job.preset_error:
            return self._fail(job, job.preset_error)
        try:
            if job.op == protocol.UP_DATASET:
                return self.handle_up_dataset(job)
            if job.op == protocol.TRAIN_MODEL:
                return self.handle_train_model(job)
            if job.op == protocol.QUERY_MODEL:
                return self.handle_query_model(job)
            return self._fail(job, f"unhandled opcode {job.op}")
        except Exception as exc:
            logger.exception("job %s raised", job.request_txn_id)
            return self._fail(job, str(exc))

    def _fail(self, job: PendingJob, message: str) -> JobOutcome:
        args = self._error_response_args(job, message)
        return JobOutcome(response_args=args, refund=job.paid, error=message)

    def _error_response_args(self, job: PendingJob, message: str) -> dict:
        status = f"error: {message}"
        if job.op == protocol.UP_DATASET:
            return {"ds_name": str(job.args.get("ds_name", "?")), "status": status}
        if job.op == protocol.TRAIN_MODEL:
            # loss/accuracy are placeholders on failure; status carries the error
            return {
                "model_name": str(job.args.get("new_model_name", "?")),
                "loss": "0",
                "accuracy": "0",
                "status": status,
            }
        return {
            "model_name": str(job.args.get("model_name", "?")),
            "output": "[]",
            "status": status,
        }

    # ------------------------------------------------------------------
    # Handlers
    # ------------------------------------------------------------------

    def handle_up_dataset(self, job: PendingJob) -> JobOutcome:
        args = job.args
        schedule = tokenomics.RewardSchedule(**job.schedule)
        try:
            raw = self.datasets.fetch(args["ds_link"])
        except datastore.DatastoreError as exc:
            return self._fail(job, f"fetch: {exc}")
        quoted = tokenomics.price("dataset_upload", schedule, ds_size=len(raw))
        if job.paid < quoted:
            return self._fail(job, f"underpaid: price is {quoted}, paid {job.paid}")
        try:
            meta = self.datasets.save_dataset(
                raw,
                args["ds_name"],
                environment="cas",
                uploader=job.payer,
                time_attrib=args.get("time_attrib"),
                sub_split_attrib=args.get("sub_split_attrib"),
            )
        except datastore.DuplicateDatasetError:
            return self._fail(job, "duplicate")
        except datastore.DatastoreError as exc:
            return self._fail(job, str(exc))
        self._account_fee(job, schedule)
        return JobOutcome(response_args={"ds_name": meta.ds_name, "status": "ok"})

    def handle_train_model(self, job: PendingJob) -> JobOutcome:
        args = job.args
        schedule = tokenomics.RewardSchedule(**job.schedule)
        meta = self.datasets.get_meta(args["ds_name"])
        if meta is None:
            return self._fail(job, f"unknown dataset {args['ds_name']!r}")
        if self.models.get(args["new_model_name"]) is not None:
            return self._fail(job, f"duplicate model name {args['new_model_name']!r}")
        hp = models.Hyperparams(
            num_epochs=args["num_epochs"],
            target_attrib=args["target_attrib"],
            hidden_dim=args["hidden_dim"],
            num_hidden_layers=args["num_hidden_layers"],
            time_lag=args["time_lag"],
            training_lookback=args["training_lookback"],
            sub_split_value=args.get("sub_split_value"),
        )
        try:
            hp.validate()
            frame = self._training_frame(meta, hp)
        except (models.ModelError, datastore.DatastoreError) as exc:
            return self._fail(job, str(exc))
        input_dim = len(frame.numeric_columns())
        if input_dim == 0:
            return self._fail(job, "dataset has no numeric columns")
        quoted = tokenomics.price(
            "train_model",
            schedule,
            complexity=models.complexity_score(args["raw_model"], input_dim, hp),
        )
        if job.paid < quoted:
            return self._fail(job, f"underpaid: price is {quoted}, paid {job.paid}")
        model = models.create_model(
            args["raw_model"], input_dim, hp,
            seed=self.config.model_seed, model_name=args["new_model_name"],
        )
        model.trainer = job.payer
        model.ds_name = meta.ds_name
        try:
            model, report = models.train(
                model,
                frame,
                train_fraction=self.config.train_fraction,
                learning_rate=self.config.learning_rate,
                grad_clip=self.config.grad_clip,
            )
        except models.TrainingDivergedError as exc:
            return self._fail(job, f"training diverged (last finite loss {exc.last_loss})")
        except models.ModelError as exc:
            return self._fail(job, str(exc))
        link = models.save_model(model, self.datasets.store, environment="cas")
        self.models.register(
            models.ModelMeta(
                model_name=model.model_name,
                archetype=model.archetype,
                ds_name=model.ds_name,
                complexity=model.complexity,
                trainer=model.trainer,
                link=link,
                accuracy=report.accuracy,
                final_loss=report.loss,
            )
        )
        reward = tokenomics.dataset_reward(meta.ds_size, schedule.dataset_mult, report.accuracy)
        rewards = [
            (
                meta.uploader,
                reward,
                {
                    "reason": "dataset_usage",
                    "ref_name": meta.ds_name,
                    "accuracy": repr(report.accuracy),
                },
            )
        ]
        self._account_fee(job, schedule, rewards_total=reward)
        return JobOutcome(
            response_args={
                "model_name": model.model_name,
                "loss": repr(report.loss),
                "accuracy": repr(report.accuracy),
            },
            rewards=rewards,
        )

    def handle_query_model(self, job: PendingJob) -> JobOutcome:
        args = job.args
        schedule = tokenomics.RewardSchedule(**job.schedule)
        meta = self.models.get(args["model_name"])
        if meta is None:
            return self._fail(job, f"unknown model {args['model_name']!r}")
        quoted = tokenomics.price("query_model", schedule, complexity=meta.complexity)
        if job.paid < quoted:
            return self._fail(job, f"underpaid: price is {quoted}, paid {job.paid}")
        try:
            model = models.load_model(meta.link, self.datasets.store)
        except (models.ModelError, datastore.DatastoreError) as exc:
            return self._fail(job, f"stored model unreadable: {exc}")

        raw_input = args["input"]
        ref = _ROW_REF_RE.match(raw_input)
        rewards: list[tuple[str, int, dict]] = []
        extras: dict[str, str] = {}
        try:
            if ref and self.datasets.get_meta(ref.group("ds")) is not None:
                prediction, accuracy = self._query_row_reference(
                    model, ref.group("ds"), int(ref.group("row"))
                )
                if accuracy is not None:
                    extras["accuracy"] = repr(accuracy)
                    ds_meta = self.datasets.get_meta(model.ds_name)
                    rewards.append(
                        (
                            meta.trainer,
                            tokenomics.training_reward(schedule.training_mult, accuracy),
                            {
                                "reason": "model_training",
                                "ref_name": meta.model_name,
                                "accuracy": repr(accuracy),
                            },
                        )
                    )
                    rewards.append(
                        (
                            ds_meta.uploader,
                            tokenomics.dataset_reward(ds_meta.ds_size, schedule.dataset_mult, accuracy),
                            {
                                "reason": "dataset_usage",
                                "ref_name": ds_meta.ds_name,
                                "accuracy": repr(accuracy),
                            },
                        )
                    )
            else:
                window = self._parse_input_array(raw_input)
                prediction = models.query(model, window)
                if model.archetype in models.RECURRENT_ARCHETYPES:
                    steps = models.query_steps(model, window)
                    extras["steps"] = json.dumps([round(s, 8) for s in steps])
        except (models.ModelError, datastore.DatastoreError, ValueError) as exc:
            return self._fail(job, str(exc))

        self._account_fee(job, schedule, rewards_total=sum(r[1] for r in rewards))
        response = {
            "model_name": meta.model_name,
            "output": json.dumps([round(prediction, 8)]),
        }
        response.update(extras)
        return JobOutcome(response_args=response, rewards=rewards)

    # ------------------------------------------------------------------
    # Handler helpers
    # ------------------------------------------------------------------

    def _training_frame(self, meta: datastore.DatasetMeta, hp: models.Hyperparams):
        frame = self.datasets.load_dataset(meta.ds_link)
        if hp.sub_split_value is not None:
            if meta.sub_split_attrib is None:
                raise datastore.UnknownAttributeError(
                    f"dataset {meta.ds_name!r} has no sub-split attribute"
                )
            frame = datastore.split_by_attribute(frame, meta.sub_split_attrib, hp.sub_split_value)
        return frame

    def _query_row_reference(self, model: models.TrainedModel, ds_name: str, row: int):
        """Prediction for a window taken from the model's own dataset, plus
        per-query accuracy when the true target row exists."""
        if ds_name != model.ds_name:
            raise ValueError(
                f"row reference names dataset {ds_name!r}, model was trained on {model.ds_name!r}"
            )
        meta = self.datasets.get_meta(ds_name)
        frame = self._training_frame(meta, model.hyperparams)
        X = frame.numeric_matrix(model.feature_columns)
        L = model.hyperparams.training_lookback
        lag = model.hyperparams.time_lag
        if row < 0 or row + L > X.shape[0]:
            raise ValueError(
                f"row {row} does not leave room for a {L}-step window in {X.shape[0]} rows"
            )
        prediction = models.query(model, X[row:row + L])
        truth_row = row + L + lag
        if truth_row >= X.shape[0]:
            return prediction, None
        target_idx = model.feature_columns.index(model.hyperparams.target_attrib)
        truth = float(X[truth_row, target_idx])
        diff = abs(model.normalize_target(prediction) - model.normalize_target(truth))
        accuracy = min(1.0, max(0.0, 1.0 - diff))
        return prediction, accuracy

    def _parse_input_array(self, raw: str):
        try:
            arr = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"input is neither a dataset row reference nor a JSON array: {exc}")
        if not isinstance(arr, list):
            raise ValueError("input JSON must be an array")
        return arr

    def _account_fee(self, job: PendingJob, schedule: tokenomics.RewardSchedule, rewards_total: int = 0) -> None:
        fee = tokenomics.oracle_fee(job.paid, schedule.fee_fraction)
        self.stats["fees_retained"] += fee
        self.stats["rewards_paid"] += rewards_total
        remainder = job.paid - fee
        if rewards_total > remainder:
            shortfall = rewards_total - remainder
            self.stats["shortfall"] += shortfall
            logger.warning(
                "job %s rewards %d exceed funded remainder %d; oracle covers %d",
                job.request_txn_id, rewards_total, remainder, shortfall,
            )

    # ------------------------------------------------------------------
    # Effect delivery (response + rewards), idempotent across restarts
    # ------------------------------------------------------------------

    def _deliver(self, job: PendingJob, outcome: JobOutcome, verify: bool) -> None:
        response_op = protocol.RESPONSE_FOR[job.op]
        note_args = dict(outcome.response_args)
        note_args["req"] = job.request_txn_id
        if not (verify and self._effect_on_chain(job.payer, response_op, job.request_txn_id)):
            if outcome.refund:
                self.stats["refunds"] += outcome.refund
            try:
                self.adapter.submit_payment(
                    self.config.oracle_address,
                    job.payer,
                    outcome.refund,
                    protocol.make_note(response_op, note_args),
                )
            except Exception:
                logger.exception("could not send response for %s", job.request_txn_id)
        for recipient, amount, reward_args in outcome.rewards:
            tagged = dict(reward_args)
            tagged["req"] = job.request_txn_id
            if verify and self._effect_on_chain(
                recipient, protocol.REWARD, job.request_txn_id, reason=reward_args.get("reason")
            ):
                continue
            try:
                self.adapter.submit_payment(
                    self.config.oracle_address,
                    recipient,
                    amount,
                    protocol.make_note(protocol.REWARD, tagged),
                )
            except Exception:
                logger.exception("could not pay reward for %s", job.request_txn_id)
        self.journal.append({"event": "responded", "id": job.request_txn_id})

    def _effect_on_chain(self, recipient: str, op: str, req: str, reason: str | None = None) -> bool:
        try:
            inbound = self.adapter.lookup(recipient, 0)
        except Exception:
            return False
        for txn in inbound:
            try:
                env = protocol.decode_note(txn.note)
            except protocol.NoteError:
                continue
            if env.op != op or env.args.get("req") != req:
                continue
            if reason is not None and env.args.get("reason") != reason:
                continue
            return True
        return False

    def resume(self) -> None:
        """Finish whatever a previous process left behind: re-run jobs that
        never completed and re-deliver effects that may not have gone out."""
        for txn_id, record in list(self.journal.jobs.items()):
            if record["phase"] == "responded":
                continue
            job = PendingJob(
                request_txn_id=txn_id,
                op=record["op"],
                args=protocol.validate_args(record["op"], record["args"])
                if not record.get("preset_error") else record["args"],
                payer=record["payer"],
                paid=record["paid"],
                schedule=record["schedule"],
                preset_error=record.get("preset_error"),
            )
            self.execute(job, verify_effects=True)

    # ------------------------------------------------------------------
    # Pricing / HTTP surface
    # ------------------------------------------------------------------

    def quote(self, kind: str, params: dict) -> int:
        if kind == "dataset_upload":
            try:
                ds_size = int(params["ds_size"])
            except (KeyError, ValueError):
                raise ApiError(400, "dataset_upload price needs integer ds_size")
            return tokenomics.price(kind, self.schedule, ds_size=ds_size)
        if kind == "train_model":
            missing = [k for k in ("raw_model", "ds_name", "hidden_dim", "num_hidden_layers", "training_lookback") if k not in params]
            if missing:
                raise ApiError(400, f"train_model price needs {', '.join(missing)}")
            if params["raw_model"] not in models.ARCHETYPES:
                raise ApiError(400, f"unknown archetype {params['raw_model']!r}")
            meta = self.datasets.get_meta(params["ds_name"])
            if meta is None:
                raise ApiError(404, f"unknown dataset {params['ds_name']!r}")
            input_dim = sum(1 for _, kind_ in meta.schema if kind_ == "numeric")
            try:
                hp = models.Hyperparams(
                    num_epochs=int(params.get("num_epochs", 1)),
                    target_attrib=str(params.get("target_attrib", "x")),
                    hidden_dim=int(params["hidden_dim"]),
                    num_hidden_layers=int(params["num_hidden_layers"]),
                    time_lag=int(params.get("time_lag", 0)),
                    training_lookback=int(params["training_lookback"]),
                )
                complexity = models.complexity_score(params["raw_model"], input_dim, hp)
            except (ValueError, models.ModelError) as exc:
                raise ApiError(400, str(exc))
            return tokenomics.price(kind, self.schedule, complexity=complexity)
        if kind == "query_model":
            meta = self.models.get(params.get("model_name", ""))
            if meta is None:
                raise ApiError(404, f"unknown model {params.get('model_name')!r}")
            return tokenomics.price(kind, self.schedule, complexity=meta.complexity)
        raise ApiError(400, f"unknown price kind {kind!r}")

    def update_schedule(self, field_name: str, new_value: float) -> str:
        """Adjust one economic knob, logging the change on-chain first."""
        txn_id = tokenomics.log_mult_update(
            self.schedule, field_name, new_value, self.adapter, self.config.oracle_address
        )
        if self.config.schedule_path:
            self.schedule.save(self.config.schedule_path)
        return txn_id

    def http_routes(self, server: JsonHttpServer) -> None:
        def price_route(query: dict, _body) -> dict:
            kind = query.pop("kind", None)
            if kind is None:
                raise ApiError(400, "missing price kind")
            return {"price_microalgo": self.quote(kind, query)}

        def datasets_route(_query, _body) -> dict:
            return {"datasets": [json.loads(m.to_json()) for m in self.datasets.list_datasets()]}

        def models_route(_query, _body) -> dict:
            return {"models": [json.loads(m.to_json()) for m in self.models.list_models()]}

        server.add_route("GET", "/price", price_route)
        server.add_route("GET", "/datasets", datasets_route)
        server.add_route("GET", "/models", models_route)


class OracleService:
    """Monitor loop + worker + HTTP server wrapped into one lifecycle."""

    def __init__(self, node: OracleNode) -> None:
        self.node = node
        self._stop = threading.Event()
        root = Path(node.config.storage_root)
        self._state_path = root / "monitor.state"
        if self._state_path.is_file():
            self._monitor_state = monitor.MonitorState.load(
                self._state_path,
                node.config.oracle_address,
                lateness_window_ms=node.config.lateness_window_ms,
                poll_interval_s=node.config.poll_interval_s,
            )
        else:
            self._monitor_state = monitor.MonitorState(
                watched_address=node.config.oracle_address,
                lateness_window_ms=node.config.lateness_window_ms,
                poll_interval_s=node.config.poll_interval_s,
            )
        self.http = JsonHttpServer(node.config.http_host, node.config.http_port)
        node.http_routes(self.http)
        self._threads: list[threading.Thread] = []

    @property
    def url(self) -> str:
        return self.http.url

    def start(self) -> "OracleService":
        self.node.resume()
        self.http.start()
        monitor_thread = threading.Thread(
            target=monitor.run,
            args=(self._monitor_state, self.node.adapter, self.node.dispatch, self._stop),
            kwargs={"state_path": self._state_path},
            name="oracle-monitor",
            daemon=True,
        )
        worker_thread = threading.Thread(target=self._worker, name="oracle-worker", daemon=True)
        self._threads = [monitor_thread, worker_thread]
        for t in self._threads:
            t.start()
        return self

    def _worker(self) -> None:
        while not self._stop.is_set():
            try:
                job = self.node._queue.get(timeout=0.05)
            except queue.Empty:
                continue
            try:
                self.node.execute(job)
            except Exception:
                logger.exception("worker failed on %s", job.request_txn_id)

    def stop(self) -> None:
        self._stop.set()
        for t in self._threads:
            t.join(timeout=10)
        self.http.stop()


def run_oracle(config: OracleConfig, adapter: ChainAdapter, schedule: tokenomics.RewardSchedule | None = None) -> OracleService:
    """Build and start an oracle service; caller owns stop()."""
    return OracleService(OracleNode(adapter, config, schedule=schedule)).start()
