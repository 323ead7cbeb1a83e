"""Transaction-note wire format and opcode registry.

Every request, response, and reward notice between marketplace nodes rides
in the note field of a ledger payment. A note is the base64 encoding of one
canonical JSON object ``{"args": {...}, "op": "<NAME>"}`` with
lexicographically sorted keys and no insignificant whitespace, so equal
envelopes always produce byte-identical notes.

All argument values travel as strings and are parsed back per opcode schema
(:func:`validate_args`); this keeps microALGO amounts and other integers out
of JSON number territory. Unknown extra keys are preserved untouched, which
lets nodes attach bookkeeping data (e.g. the originating request id) without
breaking older peers.
"""

from __future__ import annotations

import base64
import binascii
import json
import math
import re
from dataclasses import dataclass, field

MAX_NOTE_JSON_BYTES = 1000

_OP_PATTERN = re.compile(r"^<[A-Z_]+>$")

UP_DATASET = "<UP_DATASET>"
DATASET_UP = "<DATASET_UP>"
TRAIN_MODEL = "<TRAIN_MODEL>"
MODEL_TRAINED = "<MODEL_TRAINED>"
QUERY_MODEL = "<QUERY_MODEL>"
QUERY_RESULT = "<QUERY_RESULT>"
REWARD = "<REWARD>"
MULT_UPDATE = "<MULT_UPDATE>"

#: Request opcode -> the single response opcode that answers it.
RESPONSE_FOR = {
    UP_DATASET: DATASET_UP,
    TRAIN_MODEL: MODEL_TRAINED,
    QUERY_MODEL: QUERY_RESULT,
}

REQUEST_OPS = frozenset(RESPONSE_FOR)
RESPONSE_OPS = frozenset(RESPONSE_FOR.values())
ALL_OPS = REQUEST_OPS | RESPONSE_OPS | {REWARD, MULT_UPDATE}

RAW_MODELS = ("mlp", "rnn", "lstm", "gru")

REWARD_REASONS = ("dataset_usage", "model_training")

#: Schedule fields that may appear as the "calc" of a <MULT_UPDATE> note.
SCHEDULE_CALCS = (
    "dataset",
    "training",
    "fee_fraction",
    "dataset_upload_per_byte",
    "training_per_complexity",
    "query_per_complexity",
)


class NoteError(Exception):
    """Base class for note protocol failures."""


class NoteSizeError(NoteError):
    """Canonical serialization exceeds the note byte limit."""


class NoteEncodeError(NoteError):
    """Envelope cannot be serialized (bad opcode shape, non-scalar value)."""


class NoteDecodeError(NoteError):
    """Raw bytes are not valid base64."""


class MalformedEnvelopeError(NoteError):
    """Base64 decoded, but the payload is not a valid envelope."""


class SchemaError(NoteError):
    """Arguments do not satisfy the opcode's schema."""


class UnknownOpcodeError(NoteError):
    """Opcode decodes fine but is not in the registry; rejected at dispatch."""


@dataclass
class NoteEnvelope:
    """Decoded note: an opcode plus a flat map of named string arguments."""

    op: str
    args: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ArgField:
    kind: str  # "str" | "int" | "decimal"
    required: bool = True
    choices: tuple[str, ...] | None = None


#: Per-opcode argument schemas. Values are strings on the wire; "int" and
#: "decimal" fields are parsed by validate_args. Extra keys are tolerated.
SCHEMAS: dict[str, dict[str, ArgField]] = {
    UP_DATASET: {
        "ds_name": ArgField("str"),
        "ds_link": ArgField("str"),
        "ds_size": ArgField("int"),
        "time_attrib": ArgField("str", required=False),
        "sub_split_attrib": ArgField("str", required=False),
    },
    DATASET_UP: {
        "ds_name": ArgField("str"),
        "status": ArgField("str"),
    },
    TRAIN_MODEL: {
        "raw_model": ArgField("str", choices=RAW_MODELS),
        "ds_name": ArgField("str"),
        "new_model_name": ArgField("str"),
        "num_epochs": ArgField("int"),
        "target_attrib": ArgField("str"),
        "hidden_dim": ArgField("int"),
        "num_hidden_layers": ArgField("int"),
        "time_lag": ArgField("int"),
        "training_lookback": ArgField("int"),
        "sub_split_value": ArgField("int", required=False),
    },
    MODEL_TRAINED: {
        "model_name": ArgField("str"),
        "loss": ArgField("decimal"),
        "accuracy": ArgField("decimal"),
    },
    QUERY_MODEL: {
        "model_name": ArgField("str"),
        "input": ArgField("str"),
    },
    QUERY_RESULT: {
        "model_name": ArgField("str"),
        "output": ArgField("str"),
    },
    REWARD: {
        "reason": ArgField("str", choices=REWARD_REASONS),
        "ref_name": ArgField("str"),
        "accuracy": ArgField("decimal"),
    },
    MULT_UPDATE: {
        "calc": ArgField("str", choices=SCHEDULE_CALCS),
        "old": ArgField("decimal"),
        "new": ArgField("decimal"),
    },
}

_INT_RE = re.compile(r"^[+-]?[0-9]+$")


def _stringify(value: object) -> str:
    """Canonical string form of a scalar argument value."""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    raise NoteEncodeError(f"argument value must be a scalar, got {type(value).__name__}")


def encode_note(envelope: NoteEnvelope) -> bytes:
    """Serialize an envelope to its canonical base64 note bytes.

    Raises NoteSizeError when the canonical JSON exceeds
    MAX_NOTE_JSON_BYTES; oversized payloads must travel by reference
    (a dataset link or content address), never inline.
    """
    if not isinstance(envelope.op, str) or not _OP_PATTERN.match(envelope.op):
        raise NoteEncodeError(f"opcode {envelope.op!r} does not match <UPPER_CASE> shape")
    args = {}
    for key, value in envelope.args.items():
        if not isinstance(key, str):
            raise NoteEncodeError("argument names must be strings")
        args[key] = _stringify(value)
    raw = json.dumps({"args": args, "op": envelope.op}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    if len(raw) > MAX_NOTE_JSON_BYTES:
        raise NoteSizeError(
            f"canonical note JSON is {len(raw)} bytes, limit is {MAX_NOTE_JSON_BYTES}"
        )
    return base64.b64encode(raw)


def decode_note(raw: bytes | str) -> NoteEnvelope:
    """Decode note bytes back into an envelope.

    Key order in the JSON does not matter. Raises NoteDecodeError for
    invalid base64 and MalformedEnvelopeError for anything that decodes
    but is not an envelope; callers (the monitor) log and skip such
    transactions rather than crashing.
    """
    if isinstance(raw, str):
        raw = raw.encode("ascii", errors="replace")
    try:
        payload = base64.b64decode(raw, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise NoteDecodeError(f"invalid base64: {exc}") from exc
    try:
        obj = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedEnvelopeError(f"note payload is not JSON: {exc}") from exc
    if not isinstance(obj, dict) or "op" not in obj:
        raise MalformedEnvelopeError("note JSON has no \"op\" field")
    op = obj["op"]
    if not isinstance(op, str) or not _OP_PATTERN.match(op):
        raise MalformedEnvelopeError(f"opcode {op!r} does not match <UPPER_CASE> shape")
    raw_args = obj.get("args", {})
    if not isinstance(raw_args, dict):
        raise MalformedEnvelopeError("\"args\" must be an object")
    args: dict[str, str] = {}
    for key, value in raw_args.items():
        if not isinstance(value, (str, bool, int, float)):
            raise MalformedEnvelopeError(f"argument {key!r} is not a scalar")
        args[key] = _stringify(value)
    return NoteEnvelope(op=op, args=args)


def validate_args(op: str, args: dict[str, object]) -> dict[str, object]:
    """Check args against the opcode's schema and normalize typed fields.

    Integer fields come back as int, decimal fields as float, everything
    else as str. Unknown extra keys are preserved unchanged. Raises
    SchemaError naming the offending key.
    """
    schema = SCHEMAS.get(op)
    if schema is None:
        raise UnknownOpcodeError(f"opcode {op} is not in the registry")
    normalized: dict[str, object] = {}
    for key, spec in schema.items():
        if key not in args:
            if spec.required:
                raise SchemaError(f"missing required argument {key!r} for {op}")
            continue
        normalized[key] = _coerce(op, key, spec, args[key])
    for key, value in args.items():
        if key not in schema:
            normalized[key] = value
    return normalized


def _coerce(op: str, key: str, spec: ArgField, value: object) -> object:
    if spec.kind == "int":
        if isinstance(value, bool):
            raise SchemaError(f"argument {key!r} for {op} must be an integer")
        if isinstance(value, int):
            return value
        if isinstance(value, str) and _INT_RE.match(value):
            return int(value)
        raise SchemaError(f"argument {key!r} for {op} must be an integer, got {value!r}")
    if spec.kind == "decimal":
        if isinstance(value, bool):
            raise SchemaError(f"argument {key!r} for {op} must be a decimal")
        if isinstance(value, (int, float)):
            number = float(value)
        elif isinstance(value, str):
            try:
                number = float(value)
            except ValueError:
                raise SchemaError(f"argument {key!r} for {op} must be a decimal, got {value!r}") from None
        else:
            raise SchemaError(f"argument {key!r} for {op} must be a decimal")
        if not math.isfinite(number):
            raise SchemaError(f"argument {key!r} for {op} must be finite")
        return number
    if not isinstance(value, str):
        raise SchemaError(f"argument {key!r} for {op} must be a string")
    if spec.choices is not None and value not in spec.choices:
        raise SchemaError(f"argument {key!r} for {op} must be one of {spec.choices}, got {value!r}")
    return value


def make_note(op: str, args: dict[str, object]) -> bytes:
    """Convenience: stringify args and encode in one step."""
    return encode_note(NoteEnvelope(op=op, args={k: _stringify(v) for k, v in args.items()}))
