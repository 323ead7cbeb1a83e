/** View-model behavior: feed ordering, pending resolution, form validation. */

import assert from "node:assert/strict";
import { test } from "node:test";

import type { Update } from "../src/api.js";
import {
  applyUpdates,
  defaultPriceForm,
  defaultTrainForm,
  describeUpdate,
  emptyFeedback,
  formatMicroalgo,
  historyRows,
  priceParams,
  trackSubmission,
  trainRequestArgs,
} from "../src/state.js";

function update(partial: Partial<Update> & { op: string }): Update {
  return {
    txn_id: partial.txn_id ?? "tx1",
    op: partial.op,
    args: partial.args ?? {},
    amount: partial.amount ?? 0,
    sender: partial.sender ?? "oracle",
    timestamp: partial.timestamp ?? 1,
  };
}

test("feed preserves the exact delivery order", () => {
  let state = emptyFeedback();
  const batch1 = [
    update({ op: "<DATASET_UP>", txn_id: "a", args: { ds_name: "d", status: "ok" } }),
    update({ op: "<REWARD>", txn_id: "b", args: { reason: "dataset_usage", ref_name: "d" } }),
  ];
  const batch2 = [update({ op: "<MODEL_TRAINED>", txn_id: "c", args: { model_name: "m", loss: "0.1", accuracy: "0.9" } })];
  state = applyUpdates(state, batch1);
  state = applyUpdates(state, batch2);
  assert.deepEqual(
    state.feed.map((u) => u.txn_id),
    ["a", "b", "c"],
  );
});

test("pending rows resolve when a response names their request id", () => {
  let state = trackSubmission(emptyFeedback(), "req-7", "train m1", 0);
  assert.equal(state.pending[0]!.status, "pending");
  state = applyUpdates(state, [
    update({ op: "<MODEL_TRAINED>", args: { model_name: "m1", loss: "0.2", accuracy: "0.8", req: "req-7" } }),
  ]);
  assert.equal(state.pending[0]!.status, "done");
  assert.match(state.pending[0]!.detail!, /m1/);
});

test("error responses mark the pending row as failed", () => {
  let state = trackSubmission(emptyFeedback(), "req-9", "upload d", 0);
  state = applyUpdates(state, [
    update({ op: "<DATASET_UP>", args: { ds_name: "d", status: "error: duplicate", req: "req-9" } }),
  ]);
  assert.equal(state.pending[0]!.status, "error");
});

test("reward notices do not resolve pending rows", () => {
  let state = trackSubmission(emptyFeedback(), "req-1", "train", 0);
  state = applyUpdates(state, [
    update({ op: "<REWARD>", args: { reason: "dataset_usage", ref_name: "d", req: "req-1" }, amount: 5 }),
  ]);
  assert.equal(state.pending[0]!.status, "pending");
});

test("describeUpdate covers each opcode", () => {
  assert.match(describeUpdate(update({ op: "<DATASET_UP>", args: { ds_name: "d", status: "ok" } })), /dataset d: ok/);
  assert.match(
    describeUpdate(update({ op: "<MODEL_TRAINED>", args: { model_name: "m", loss: "0.5", accuracy: "0.75" } })),
    /loss 0.5000, accuracy 0.7500/,
  );
  assert.match(
    describeUpdate(update({ op: "<QUERY_RESULT>", args: { model_name: "m", output: "[61.2]" } })),
    /\[61.2\]/,
  );
  assert.match(
    describeUpdate(update({ op: "<REWARD>", args: { reason: "model_training", ref_name: "m" }, amount: 9_000_000 })),
    /9 ALGO/,
  );
});

test("microalgo formatting switches units at one ALGO", () => {
  assert.equal(formatMicroalgo(999), "999 microALGO");
  assert.equal(formatMicroalgo(2_500_000), "2.5 ALGO");
});

test("price params: dataset_upload validates the size field", () => {
  const form = defaultPriceForm();
  form.size = "0";
  assert.deepEqual(priceParams(form), { params: { ds_size: "0" } });
  form.size = "-3";
  const bad = priceParams(form);
  assert.ok("error" in bad && bad.error.field === "size");
});

test("price params: train/query require a picked name (no free text)", () => {
  const form = defaultPriceForm();
  form.kind = "train_model";
  form.dataset = "";
  let out = priceParams(form);
  assert.ok("error" in out && out.error.field === "dataset");
  form.dataset = "dj";
  out = priceParams(form);
  assert.ok("params" in out && out.params["ds_name"] === "dj");
  form.kind = "query_model";
  form.model = "m1";
  out = priceParams(form);
  assert.ok("params" in out && out.params["model_name"] === "m1");
});

test("train form defaults match the canonical evaluation configuration", () => {
  const form = defaultTrainForm();
  assert.equal(form.epochs, "70");
  assert.equal(form.hiddenDim, "5");
  assert.equal(form.layers, "1");
  assert.equal(form.lag, "0");
  assert.equal(form.lookback, "10");
  assert.equal(form.target, "close");
});

test("train form validation names the offending field", () => {
  const form = defaultTrainForm();
  form.dataset = "dj";
  form.modelName = "m1";
  form.epochs = "seventy";
  const out = trainRequestArgs(form);
  assert.ok("error" in out && out.error.field === "epochs");
  form.epochs = "70";
  form.subSplit = "0";
  const ok = trainRequestArgs(form);
  assert.ok("args" in ok);
  assert.equal(ok.args["sub_split_value"], "0");
  assert.equal(ok.args["raw_model"], "gru");
});

test("history rows classify direction and summarize notes", () => {
  const rows = historyRows("alice", [
    {
      id: "t1", sender: "alice", receiver: "oracle", amount: 5_000_000,
      round: 1, timestamp: 10, note: "",
      op: "<UP_DATASET>", args: { ds_name: "dj", ds_link: "cas://abc", ds_size: "5000000" },
    },
    {
      id: "t2", sender: "oracle", receiver: "alice", amount: 0,
      round: 2, timestamp: 11, note: "",
      op: "<DATASET_UP>", args: { ds_name: "dj", status: "ok", req: "t1" },
    },
  ]);
  assert.equal(rows[0]!.direction, "out");
  assert.equal(rows[1]!.direction, "in");
  assert.match(rows[0]!.summary, /ds_name=dj/);
  assert.ok(!rows[1]!.summary.includes("req="));
});
