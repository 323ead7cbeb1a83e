/**
 * Pure view-model logic for the dashboard panels.
 *
 * Everything here is plain data in, plain data out, so the behavior that
 * matters (feed ordering, pending-row resolution, price parameter
 * validation) is testable without a DOM.
 */

import type { HistoryEntry, Update } from "./api.js";

export const TRAIN_DEFAULTS = {
  num_epochs: "70",
  target_attrib: "close",
  hidden_dim: "5",
  num_hidden_layers: "1",
  time_lag: "0",
  training_lookback: "10",
} as const;

export interface PendingSubmission {
  txnId: string;
  label: string;
  submittedAt: number;
  status: "pending" | "done" | "error";
  detail?: string;
}

export interface FeedbackState {
  pending: PendingSubmission[];
  feed: Update[];
}

export function emptyFeedback(): FeedbackState {
  return { pending: [], feed: [] };
}

export function trackSubmission(
  state: FeedbackState,
  txnId: string,
  label: string,
  now: number,
): FeedbackState {
  return {
    ...state,
    pending: [...state.pending, { txnId, label, submittedAt: now, status: "pending" }],
  };
}

/** Append updates in exactly the order the node delivered them and resolve
 * any pending rows they answer (responses carry the request id in `req`). */
export function applyUpdates(state: FeedbackState, updates: Update[]): FeedbackState {
  if (updates.length === 0) return state;
  const pending = state.pending.map((row) => {
    const answer = updates.find((u) => u.args["req"] === row.txnId && u.op !== "<REWARD>");
    if (!answer) return row;
    const failed = (answer.args["status"] ?? "ok").startsWith("error");
    return {
      ...row,
      status: failed ? ("error" as const) : ("done" as const),
      detail: describeUpdate(answer),
    };
  });
  return { pending, feed: [...state.feed, ...updates] };
}

export function describeUpdate(update: Update): string {
  const args = update.args;
  switch (update.op) {
    case "<DATASET_UP>":
      return `dataset ${args["ds_name"]}: ${args["status"]}`;
    case "<MODEL_TRAINED>":
      if (args["status"]) return `model ${args["model_name"]}: ${args["status"]}`;
      return `model ${args["model_name"]} trained, loss ${shortNumber(args["loss"])}, accuracy ${shortNumber(args["accuracy"])}`;
    case "<QUERY_RESULT>":
      if (args["status"]) return `query ${args["model_name"]}: ${args["status"]}`;
      return `query ${args["model_name"]} -> ${args["output"]}`;
    case "<REWARD>":
      return `reward ${formatMicroalgo(update.amount)} (${args["reason"]} for ${args["ref_name"]})`;
    default:
      return `${update.op}`;
  }
}

function shortNumber(raw: string | undefined): string {
  if (raw === undefined) return "?";
  const value = Number(raw);
  return Number.isFinite(value) ? value.toPrecision(4) : raw;
}

export function formatMicroalgo(amount: number): string {
  if (Math.abs(amount) >= 1_000_000) {
    return `${(amount / 1_000_000).toLocaleString()} ALGO`;
  }
  return `${amount.toLocaleString()} microALGO`;
}

// ----------------------------------------------------------------------
// Price explorer
// ----------------------------------------------------------------------

export type PriceKind = "dataset_upload" | "train_model" | "query_model";

export interface PriceForm {
  kind: PriceKind;
  size: string;
  archetype: string;
  dataset: string;
  model: string;
  hiddenDim: string;
  layers: string;
  lookback: string;
}

export function defaultPriceForm(): PriceForm {
  return {
    kind: "dataset_upload",
    size: "5000000",
    archetype: "gru",
    dataset: "",
    model: "",
    hiddenDim: TRAIN_DEFAULTS.hidden_dim,
    layers: TRAIN_DEFAULTS.num_hidden_layers,
    lookback: TRAIN_DEFAULTS.training_lookback,
  };
}

/** Build /api/price params from the form, or return a field-keyed error. */
export function priceParams(
  form: PriceForm,
): { params: Record<string, string> } | { error: { field: string; message: string } } {
  if (form.kind === "dataset_upload") {
    if (!/^\d+$/.test(form.size.trim())) {
      return { error: { field: "size", message: "size must be a non-negative integer" } };
    }
    return { params: { ds_size: form.size.trim() } };
  }
  if (form.kind === "train_model") {
    if (!form.dataset) {
      return { error: { field: "dataset", message: "pick a dataset" } };
    }
    return {
      params: {
        raw_model: form.archetype,
        ds_name: form.dataset,
        hidden_dim: form.hiddenDim,
        num_hidden_layers: form.layers,
        training_lookback: form.lookback,
      },
    };
  }
  if (!form.model) {
    return { error: { field: "model", message: "pick a model" } };
  }
  return { params: { model_name: form.model } };
}

// ----------------------------------------------------------------------
// History view
// ----------------------------------------------------------------------

export interface HistoryRow {
  id: string;
  direction: "in" | "out" | "self";
  counterparty: string;
  amount: string;
  op: string;
  summary: string;
  timestamp: number;
}

export function historyRows(address: string, entries: HistoryEntry[]): HistoryRow[] {
  return entries.map((entry) => {
    const direction = entry.sender === address ? (entry.receiver === address ? "self" : "out") : "in";
    const counterparty = direction === "in" ? entry.sender : entry.receiver;
    let summary = "";
    if (entry.op && entry.args) {
      const interesting = Object.entries(entry.args)
        .filter(([key]) => !["req"].includes(key))
        .slice(0, 3)
        .map(([key, value]) => `${key}=${truncate(value, 24)}`);
      summary = interesting.join(" ");
    }
    return {
      id: entry.id,
      direction,
      counterparty,
      amount: formatMicroalgo(entry.amount),
      op: entry.op ?? "",
      summary,
      timestamp: entry.timestamp,
    };
  });
}

function truncate(value: string, max: number): string {
  return value.length > max ? value.slice(0, max - 1) + "…" : value;
}

// ----------------------------------------------------------------------
// Train / query form helpers
// ----------------------------------------------------------------------

export interface TrainForm {
  archetype: string;
  dataset: string;
  modelName: string;
  epochs: string;
  target: string;
  hiddenDim: string;
  layers: string;
  lag: string;
  lookback: string;
  subSplit: string;
}

export function defaultTrainForm(): TrainForm {
  return {
    archetype: "gru",
    dataset: "",
    modelName: "",
    epochs: TRAIN_DEFAULTS.num_epochs,
    target: TRAIN_DEFAULTS.target_attrib,
    hiddenDim: TRAIN_DEFAULTS.hidden_dim,
    layers: TRAIN_DEFAULTS.num_hidden_layers,
    lag: TRAIN_DEFAULTS.time_lag,
    lookback: TRAIN_DEFAULTS.training_lookback,
    subSplit: "",
  };
}

export function trainRequestArgs(
  form: TrainForm,
): { args: Record<string, string> } | { error: { field: string; message: string } } {
  if (!form.dataset) return { error: { field: "dataset", message: "pick a dataset" } };
  if (!form.modelName.trim()) {
    return { error: { field: "modelName", message: "name the new model" } };
  }
  const numeric: Array<[keyof TrainForm, string]> = [
    ["epochs", "num_epochs"],
    ["hiddenDim", "hidden_dim"],
    ["layers", "num_hidden_layers"],
    ["lag", "time_lag"],
    ["lookback", "training_lookback"],
  ];
  const args: Record<string, string> = {
    raw_model: form.archetype,
    ds_name: form.dataset,
    new_model_name: form.modelName.trim(),
    target_attrib: form.target.trim(),
  };
  for (const [field, wire] of numeric) {
    const raw = String(form[field]).trim();
    if (!/^\d+$/.test(raw)) {
      return { error: { field, message: "must be a non-negative integer" } };
    }
    args[wire] = raw;
  }
  if (form.subSplit.trim()) {
    if (!/^\d+$/.test(form.subSplit.trim())) {
      return { error: { field: "subSplit", message: "must be a non-negative integer" } };
    }
    args["sub_split_value"] = form.subSplit.trim();
  }
  return { args };
}
