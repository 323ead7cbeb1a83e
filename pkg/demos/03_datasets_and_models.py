#!/usr/bin/env python3
"""Walkthrough: the dataset handler and the archetype model zoo.

Saves the bundled sample series into a content-addressed store, splits it,
then trains each archetype briefly and compares losses, accuracies, and the
complexity scores that drive pricing.
"""

import tempfile

from chainmarket import models
from chainmarket.datastore import DatasetStore, split_by_attribute
from chainmarket.sampledata import market_series_csv

root = tempfile.mkdtemp(prefix="chainmarket-demo-")
store = DatasetStore(root)

raw = market_series_csv()
meta = store.save_dataset(raw, "sample", environment="cas", uploader="alice",
                          sub_split_attrib="stock")
print("stored", meta.ds_size, "bytes at", meta.ds_link[:28] + "...")
print("schema:", meta.schema)

frame = store.load_dataset(meta.ds_link)
frame = split_by_attribute(frame, "stock", 0)  # value 0 = first ticker
print("rows after sub-split:", frame.row_count)

# Short training runs for a quick look; the acceptance suite does the full
# 70-epoch comparison.
hp = models.Hyperparams(
    num_epochs=10, target_attrib="close", hidden_dim=5,
    num_hidden_layers=1, time_lag=0, training_lookback=10,
)
print(f"\n{'archetype':10s} {'params':>7s} {'complexity':>11s} {'val loss':>9s} {'accuracy':>9s}")
for archetype in models.ARCHETYPES:
    model = models.create_model(archetype, 2, hp, seed=0)
    model, report = models.train(model, frame)
    print(f"{archetype:10s} {models.parameter_count(archetype, 2, hp):7d} "
          f"{model.complexity:11.1f} {report.loss:9.5f} {report.accuracy:9.4f}")

# Query a trained model on a raw window and, for recurrent nets, per step.
model = models.create_model("gru", 2, hp, seed=0)
model, _ = models.train(model, frame)
window = frame.numeric_matrix(["close", "volume"])[100:110]
print("\nnext-value prediction:", round(models.query(model, window), 4))
print("per-step outputs:", [round(v, 2) for v in models.query_steps(model, window)])

# Models serialize to a canonical blob; loading reproduces bit-identical
# predictions.
blob = models.save_model_bytes(model)
again = models.load_model_bytes(blob)
print("\nblob size:", len(blob), "bytes;",
      "identical prediction after reload:",
      models.query(again, window) == models.query(model, window))
