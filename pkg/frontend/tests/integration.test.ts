/**
 * Drives a live client node through the dashboard's own API layer: the
 * same code path the browser panels use, minus the DOM. Skipped unless
 * CHAINMARKET_NODE points at a running node (the Python test suite boots
 * one and runs this file under node --test).
 */

import assert from "node:assert/strict";
import { test } from "node:test";

import { MarketApi, type Update } from "../src/api.js";
import { applyUpdates, emptyFeedback, trackSubmission } from "../src/state.js";

const base = process.env["CHAINMARKET_NODE"] ?? "";

function sampleCsv(rows: number): string {
  const lines = ["stock,date,close"];
  for (let i = 0; i < rows; i++) {
    lines.push(`SYN,d${i},${(50 + 10 * Math.sin(i / 5)).toFixed(3)}`);
  }
  return lines.join("\n") + "\n";
}

test("dashboard flow against a live node", { skip: base === "" }, async () => {
  const api = new MarketApi(base);

  const funded = await api.faucet("webuser", 2_000_000_000);
  assert.ok(funded.address.length > 0);

  const csv = sampleCsv(40);
  const staged = await api.stage(Buffer.from(csv, "utf-8").toString("base64"));
  assert.equal(staged.ds_size, Buffer.byteLength(csv));

  const quote = await api.getPrice("dataset_upload", { ds_size: String(staged.ds_size) });
  assert.ok(quote.price_microalgo >= 1);

  const submitted = await api.submit(
    "webuser",
    "<UP_DATASET>",
    { ds_name: "webds", ds_link: staged.ds_link, ds_size: String(staged.ds_size) },
    quote.price_microalgo,
  );

  // poll exactly like the feedback panel does, and run its reducer
  let feedback = trackSubmission(emptyFeedback(), submitted.txn_id, "upload webds", Date.now());
  let updates: Update[] = [];
  for (let i = 0; i < 300 && updates.length === 0; i++) {
    await new Promise((resolve) => setTimeout(resolve, 100));
    updates = (await api.getUpdates("webuser")).updates;
  }
  assert.ok(updates.length > 0, "no update arrived");
  feedback = applyUpdates(feedback, updates);
  assert.equal(feedback.pending[0]!.status, "done");
  assert.equal(updates[0]!.op, "<DATASET_UP>");
  assert.equal(updates[0]!.args["req"], submitted.txn_id);

  // dropdowns get the new name without any free-text entry
  const names = await api.getNames("datasets");
  assert.ok(names.names.includes("webds"));

  // history view is consistent with the commit log
  const history = await api.getHistory(funded.address);
  const mine = history.transactions.find((t) => t.id === submitted.txn_id);
  assert.ok(mine && mine.op === "<UP_DATASET>");

  // bad submits surface the node's error, keyed for inline display
  await assert.rejects(
    () => api.submit("webuser", "<UP_DATASET>", { ds_link: "cas://x", ds_size: "5" }),
    /ds_name/,
  );
});
