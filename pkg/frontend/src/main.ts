/**
 * Dashboard wiring: panels, polling, and the little bit of glue between
 * the DOM and the pure state module.
 *
 * The page is served by (or pointed at) a client node; every interaction
 * goes through its HTTP API. The feedback panel polls for updates every
 * two seconds, so responses and reward notices appear without a reload.
 */

import { ApiError, MarketApi, type Update } from "./api.js";
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
  type FeedbackState,
  type PriceForm,
  type TrainForm,
} from "./state.js";
import { clear, fieldError, h, setOptions } from "./render.js";

const POLL_INTERVAL_MS = 2_000;

const api = new MarketApi("");
let currentUser = "";
let feedback: FeedbackState = emptyFeedback();

// ----------------------------------------------------------------------
// Panels
// ----------------------------------------------------------------------

function missionPanel(): HTMLElement {
  return h("section", { class: "panel" }, [
    h("h2", {}, ["A marketplace for predictive models"]),
    h("p", {}, [
      "Upload a dataset, pay to train one of the built-in model archetypes on it, " +
        "or query a model someone already trained. Every request, response, and " +
        "reward is a transaction on the ledger, so the whole history of who " +
        "contributed what, and how well it predicted, stays public and checkable.",
    ]),
    h("p", {}, [
      "Contributors earn: when your dataset trains a model, or a model you " +
        "trained answers a query that can be scored against reality, rewards are " +
        "paid out automatically by the oracle that hosts the compute.",
    ]),
    h("p", { class: "muted" }, [
      "Four archetypes are on offer: a feed-forward net (cheap, single-step) and " +
        "three recurrent families with growing capability and cost. Prices scale " +
        "with model complexity; check them live in the price explorer below.",
    ]),
  ]);
}

function userPanel(onUser: (user: string) => void): HTMLElement {
  const select = h("select", { id: "user-select" });
  const nameInput = h("input", { placeholder: "new user name", id: "user-name" });
  const amountInput = h("input", { value: "2000000000", size: "12", id: "faucet-amount" });
  const status = h("span", { class: "muted" });
  const panel = h("section", { class: "panel" }, [
    h("h2", {}, ["Who is acting"]),
    h("label", {}, ["User ", select]),
    h("span", { class: "spacer" }, [" or fund a new one: "]),
    nameInput,
    amountInput,
    h("button", { id: "faucet-btn" }, ["faucet"]),
    status,
  ]);

  async function refreshUsers(selected?: string): Promise<void> {
    const { users } = await api.getUsers();
    setOptions(select, Object.keys(users).sort(), "pick a user");
    if (selected) select.value = selected;
    if (select.value) onUser(select.value);
  }

  select.addEventListener("change", () => {
    if (select.value) onUser(select.value);
  });
  panel.querySelector("#faucet-btn")!.addEventListener("click", async () => {
    status.textContent = "";
    try {
      const funded = await api.faucet(nameInput.value.trim(), Number(amountInput.value));
      status.textContent = ` funded ${funded.address}`;
      await refreshUsers(nameInput.value.trim());
    } catch (err) {
      status.textContent = ` ${(err as Error).message}`;
    }
  });
  void refreshUsers();
  return panel;
}

function pricePanel(names: () => { datasets: string[]; models: string[] }): HTMLElement {
  const form: PriceForm = defaultPriceForm();
  const kind = h("select", { "data-field": "kind" });
  for (const value of ["dataset_upload", "train_model", "query_model"]) {
    kind.append(h("option", { value }, [value]));
  }
  const size = h("input", { value: form.size, "data-field": "size" });
  const archetype = h("select", { "data-field": "archetype" });
  for (const value of ["mlp", "rnn", "lstm", "gru"]) archetype.append(h("option", { value }, [value]));
  archetype.value = form.archetype;
  const dataset = h("select", { "data-field": "dataset" });
  const model = h("select", { "data-field": "model" });
  const quote = h("div", { class: "quote", id: "price-quote" }, ["—"]);
  const rows = h("div", {}, [
    h("label", {}, ["operation ", kind]),
    h("label", { class: "for-dataset_upload" }, ["size (bytes) ", size]),
    h("label", { class: "for-train_model hidden" }, ["archetype ", archetype]),
    h("label", { class: "for-train_model hidden" }, ["dataset ", dataset]),
    h("label", { class: "for-query_model hidden" }, ["model ", model]),
  ]);
  const panel = h("section", { class: "panel" }, [h("h2", {}, ["Price explorer"]), rows, quote]);

  async function refreshQuote(): Promise<void> {
    form.kind = kind.value as PriceForm["kind"];
    form.size = size.value;
    form.archetype = archetype.value;
    form.dataset = dataset.value;
    form.model = model.value;
    for (const el of rows.querySelectorAll("label[class*=for-]")) {
      el.classList.toggle("hidden", !el.classList.contains(`for-${form.kind}`));
    }
    const built = priceParams(form);
    fieldError(panel, "", null);
    if ("error" in built) {
      quote.textContent = "—";
      fieldError(panel, built.error.field, built.error.message);
      return;
    }
    try {
      const result = await api.getPrice(form.kind, built.params);
      quote.textContent = formatMicroalgo(result.price_microalgo);
    } catch (err) {
      quote.textContent = err instanceof ApiError ? err.message : "node unreachable";
    }
  }

  for (const el of [kind, size, archetype, dataset, model]) {
    el.addEventListener("input", () => void refreshQuote());
    el.addEventListener("change", () => void refreshQuote());
  }
  panel.addEventListener("names-refreshed", () => {
    setOptions(dataset, names().datasets, "pick a dataset");
    setOptions(model, names().models, "pick a model");
    void refreshQuote();
  });
  void refreshQuote();
  return panel;
}

function uploadPanel(onSubmitted: (txnId: string, label: string) => void): HTMLElement {
  const file = h("input", { type: "file", "data-field": "file" });
  const name = h("input", { placeholder: "dataset name", "data-field": "name" });
  const splitAttrib = h("input", { placeholder: "sub-split column (optional)", "data-field": "split" });
  const status = h("div", { class: "muted" });
  const button = h("button", {}, ["stage + submit upload"]);
  const panel = h("section", { class: "panel" }, [
    h("h2", {}, ["Upload a dataset"]),
    h("label", {}, ["CSV file ", file]),
    h("label", {}, ["name ", name]),
    h("label", {}, ["sub-split ", splitAttrib]),
    button,
    status,
  ]);
  button.addEventListener("click", async () => {
    fieldError(panel, "", null);
    const chosen = file.files?.[0];
    if (!chosen) return fieldError(panel, "file", "pick a CSV file");
    if (!name.value.trim()) return fieldError(panel, "name", "name the dataset");
    status.textContent = "staging…";
    try {
      const bytes = new Uint8Array(await chosen.arrayBuffer());
      let binary = "";
      bytes.forEach((b) => (binary += String.fromCharCode(b)));
      const staged = await api.stage(btoa(binary));
      const quote = await api.getPrice("dataset_upload", { ds_size: String(staged.ds_size) });
      const args: Record<string, string> = {
        ds_name: name.value.trim(),
        ds_link: staged.ds_link,
        ds_size: String(staged.ds_size),
      };
      if (splitAttrib.value.trim()) args["sub_split_attrib"] = splitAttrib.value.trim();
      const submitted = await api.submit(currentUser, "<UP_DATASET>", args, quote.price_microalgo);
      status.textContent = `submitted ${submitted.txn_id} (${formatMicroalgo(quote.price_microalgo)})`;
      onSubmitted(submitted.txn_id, `upload ${args["ds_name"]}`);
    } catch (err) {
      status.textContent = "";
      fieldError(panel, "", (err as Error).message);
    }
  });
  return panel;
}

function trainPanel(
  names: () => { datasets: string[]; models: string[] },
  onSubmitted: (txnId: string, label: string) => void,
): HTMLElement {
  const form: TrainForm = defaultTrainForm();
  const archetype = h("select", { "data-field": "archetype" });
  for (const value of ["mlp", "rnn", "lstm", "gru"]) archetype.append(h("option", { value }, [value]));
  archetype.value = form.archetype;
  const dataset = h("select", { "data-field": "dataset" });
  const modelName = h("input", { placeholder: "new model name", "data-field": "modelName" });
  const numericInputs: Partial<Record<keyof TrainForm, HTMLInputElement>> = {};
  const numericRows: HTMLElement[] = [];
  const numericFields: Array<[keyof TrainForm, string]> = [
    ["epochs", "epochs"],
    ["target", "target column"],
    ["hiddenDim", "hidden size"],
    ["layers", "layers"],
    ["lag", "lag"],
    ["lookback", "lookback"],
    ["subSplit", "sub-split id"],
  ];
  for (const [field, label] of numericFields) {
    const input = h("input", { value: String(form[field]), size: "6", "data-field": field });
    numericInputs[field] = input;
    numericRows.push(h("label", {}, [`${label} `, input]));
  }
  const status = h("div", { class: "muted" });
  const button = h("button", {}, ["submit training request"]);
  const panel = h("section", { class: "panel" }, [
    h("h2", {}, ["Train a model"]),
    h("label", {}, ["archetype ", archetype]),
    h("label", {}, ["dataset ", dataset]),
    h("label", {}, ["model name ", modelName]),
    h("div", { class: "grid" }, numericRows),
    button,
    status,
  ]);
  panel.addEventListener("names-refreshed", () => {
    setOptions(dataset, names().datasets, "pick a dataset");
  });
  button.addEventListener("click", async () => {
    fieldError(panel, "", null);
    form.archetype = archetype.value;
    form.dataset = dataset.value;
    form.modelName = modelName.value;
    for (const [field] of numericFields) {
      (form as unknown as Record<string, string>)[field] = numericInputs[field]!.value;
    }
    const built = trainRequestArgs(form);
    if ("error" in built) return fieldError(panel, built.error.field, built.error.message);
    status.textContent = "quoting…";
    try {
      const quote = await api.getPrice("train_model", {
        raw_model: built.args["raw_model"]!,
        ds_name: built.args["ds_name"]!,
        hidden_dim: built.args["hidden_dim"]!,
        num_hidden_layers: built.args["num_hidden_layers"]!,
        training_lookback: built.args["training_lookback"]!,
      });
      const submitted = await api.submit(currentUser, "<TRAIN_MODEL>", built.args, quote.price_microalgo);
      status.textContent = `submitted ${submitted.txn_id} (${formatMicroalgo(quote.price_microalgo)})`;
      onSubmitted(submitted.txn_id, `train ${built.args["new_model_name"]}`);
    } catch (err) {
      status.textContent = "";
      fieldError(panel, "", (err as Error).message);
    }
  });
  return panel;
}

function queryPanel(
  names: () => { datasets: string[]; models: string[] },
  onSubmitted: (txnId: string, label: string) => void,
): HTMLElement {
  const model = h("select", { "data-field": "model" });
  const input = h("input", {
    placeholder: 'input window JSON, or dataset:row like "dj:42"',
    size: "34",
    "data-field": "input",
  });
  const status = h("div", { class: "muted" });
  const button = h("button", {}, ["submit query"]);
  const panel = h("section", { class: "panel" }, [
    h("h2", {}, ["Query a model"]),
    h("label", {}, ["model ", model]),
    h("label", {}, ["input ", input]),
    button,
    status,
  ]);
  panel.addEventListener("names-refreshed", () => {
    setOptions(model, names().models, "pick a model");
  });
  button.addEventListener("click", async () => {
    fieldError(panel, "", null);
    if (!model.value) return fieldError(panel, "model", "pick a model");
    if (!input.value.trim()) return fieldError(panel, "input", "give an input window or row reference");
    try {
      const quote = await api.getPrice("query_model", { model_name: model.value });
      const submitted = await api.submit(
        currentUser,
        "<QUERY_MODEL>",
        { model_name: model.value, input: input.value.trim() },
        quote.price_microalgo,
      );
      status.textContent = `submitted ${submitted.txn_id} (${formatMicroalgo(quote.price_microalgo)})`;
      onSubmitted(submitted.txn_id, `query ${model.value}`);
    } catch (err) {
      status.textContent = "";
      fieldError(panel, "", (err as Error).message);
    }
  });
  return panel;
}

function feedbackPanel(): { panel: HTMLElement; render: () => void } {
  const pendingList = h("ul", { id: "pending-list" });
  const feedList = h("ul", { id: "feed-list" });
  const panel = h("section", { class: "panel" }, [
    h("h2", {}, ["Feedback"]),
    h("h3", {}, ["Pending requests"]),
    pendingList,
    h("h3", {}, ["Responses and rewards"]),
    feedList,
  ]);
  function render(): void {
    clear(pendingList);
    for (const row of feedback.pending) {
      pendingList.append(
        h("li", { class: `pending-${row.status}` }, [
          `${row.label} [${row.txnId}] — ${row.status}${row.detail ? ": " + row.detail : ""}`,
        ]),
      );
    }
    if (feedback.pending.length === 0) pendingList.append(h("li", { class: "muted" }, ["none"]));
    clear(feedList);
    for (const update of feedback.feed) {
      feedList.append(h("li", {}, [describeUpdate(update)]));
    }
    if (feedback.feed.length === 0) feedList.append(h("li", { class: "muted" }, ["nothing yet"]));
  }
  render();
  return { panel, render };
}

function historyPanel(): HTMLElement {
  const address = h("input", { placeholder: "ledger address", size: "28" });
  const button = h("button", {}, ["load"]);
  const table = h("table", { id: "history-table" });
  const panel = h("section", { class: "panel" }, [
    h("h2", {}, ["Transaction history"]),
    h("label", {}, ["address ", address, " ", button]),
    table,
  ]);
  button.addEventListener("click", async () => {
    clear(table);
    try {
      const { transactions } = await api.getHistory(address.value.trim());
      const rows = historyRows(address.value.trim(), transactions);
      table.append(
        h("tr", {}, ["id", "dir", "counterparty", "amount", "note"].map((c) => h("th", {}, [c]))),
      );
      for (const row of rows) {
        table.append(
          h("tr", {}, [
            h("td", {}, [row.id]),
            h("td", {}, [row.direction]),
            h("td", {}, [row.counterparty]),
            h("td", {}, [row.amount]),
            h("td", {}, [`${row.op} ${row.summary}`.trim()]),
          ]),
        );
      }
    } catch (err) {
      table.append(h("tr", {}, [h("td", {}, [(err as Error).message])]));
    }
  });
  return panel;
}

// ----------------------------------------------------------------------
// App wiring
// ----------------------------------------------------------------------

export function startApp(root: HTMLElement): void {
  let names = { datasets: [] as string[], models: [] as string[] };
  const namesGetter = () => names;

  const feedbackView = feedbackPanel();
  const panels: HTMLElement[] = [];

  async function refreshNames(): Promise<void> {
    try {
      const [datasets, models] = await Promise.all([api.getNames("datasets"), api.getNames("models")]);
      names = { datasets: datasets.names, models: models.names };
      for (const panel of panels) panel.dispatchEvent(new Event("names-refreshed"));
    } catch {
      // oracle or node momentarily unreachable: keep the stale lists
    }
  }

  function onSubmitted(txnId: string, label: string): void {
    feedback = trackSubmission(feedback, txnId, label, Date.now());
    feedbackView.render();
    void refreshNames();
  }

  function onUser(user: string): void {
    currentUser = user;
    feedback = emptyFeedback();
    feedbackView.render();
  }

  const price = pricePanel(namesGetter);
  const upload = uploadPanel(onSubmitted);
  const train = trainPanel(namesGetter, onSubmitted);
  const query = queryPanel(namesGetter, onSubmitted);
  panels.push(price, train, query);

  root.append(
    missionPanel(),
    userPanel(onUser),
    price,
    upload,
    train,
    query,
    feedbackView.panel,
    historyPanel(),
  );
  void refreshNames();

  setInterval(async () => {
    if (!currentUser) return;
    try {
      const { updates } = await api.getUpdates(currentUser);
      if (updates.length) {
        feedback = applyUpdates(feedback, updates as Update[]);
        feedbackView.render();
      }
    } catch {
      // transient; next poll retries
    }
  }, POLL_INTERVAL_MS);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  startApp(document.getElementById("app")!);
}
