"""Logit ensembling: blend two prediction tables and search the ratio.

Two encoders with different random weights make different mistakes, so a
weighted sum of their logits can beat either one alone. fuse() aligns the
tables by sample id, so the two runs may come from different processes or
machines as long as they scored the same samples.

Run from the repository root:  python3 demos/04_ensemble.py
"""

import tempfile
from pathlib import Path

import numpy as np

import pointview as pv


def centroid_classifier(manifest, provider, views, settings, dim):
    """One row per class: mean normalized view-average feature."""
    sums = np.zeros((len(manifest.class_names), dim))
    counts = np.zeros(len(manifest.class_names))
    for entry in manifest.entries:
        cloud = pv.normalize_unit_cube(pv.load_cloud(entry.path, id=entry.id))
        maps = pv.project_all(cloud, views, settings)
        feats = np.stack([provider.get(entry.id, v.name, d)
                          for v, d in zip(views, maps)])
        sums[entry.label] += pv.l2_normalize(feats.mean(axis=0))
        counts[entry.label] += 1
    return sums / counts[:, None]


work = Path(tempfile.mkdtemp(prefix="pv_ensemble_"))
train_m, test_m = pv.make_dataset(work, 12, 10, n_points=96, seed=2)
views = pv.view_set("zs6")
settings = pv.ProjectionSettings(distance=1.6, side=48, focal=20.0, target=224)

tables = []
for seed in (3, 8):
    provider = pv.ToyProvider(seed=seed, dim=24)
    classifier = centroid_classifier(train_m, provider, views, settings, 24)
    result = pv.evaluate(test_m, provider, classifier, views, settings)
    tables.append(result.table)
    print(f"encoder seed {seed}: {result.table.accuracy():.1%}")

a, b = tables
result = pv.search_ratio(a, b, step=0.05)
print(f"\nbest blend: r={result.best_ratio:.2f} "
      f"-> {result.best_accuracy:.1%}")
print("(r=1 keeps only the first table, r=0 only the second)")

print("\naccuracy across the sweep:")
for r, acc in result.curve:
    bar = "#" * round(40 * acc)
    print(f"  r={r:.2f}  {acc:6.1%}  {bar}")

# fuse() at the winning ratio reproduces the searched accuracy exactly.
fused = pv.fuse(a, b, result.best_ratio)
assert fused.accuracy() == result.best_accuracy
stats = pv.logit_stats(fused)
print(f"\nfused logit range: [{stats['min']:.2f}, {stats['max']:.2f}], "
      f"mean {stats['mean']:.2f}")
