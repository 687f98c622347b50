"""Shared fixtures: a small synthetic dataset and cheap projection settings.

The dataset and provider seeds are fixed so every test sees identical
bytes; tests that need different randomness draw their own generators.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import pointview as pv


# target stays 224: the toy encoder only accepts 224x224 maps
SMALL_SETTINGS = pv.ProjectionSettings(distance=1.6, side=48, focal=20.0, target=224)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """3 train / 2 test clouds per class, 96 points each."""
    root = tmp_path_factory.mktemp("smallset")
    train_m, test_m = pv.make_dataset(root, 3, 2, n_points=96, seed=5)
    return {"root": root, "train": train_m, "test": test_m}


@pytest.fixture(scope="session")
def toy_provider():
    return pv.ToyProvider(seed=3, dim=32)


@pytest.fixture(scope="session")
def centroid_classifier(small_dataset, toy_provider):
    """Classifier whose rows are per-class mean features of the test split.

    Evaluating the test split against it separates the four classes
    perfectly, which several tests rely on.
    """
    test_m = small_dataset["test"]
    views = pv.view_set("zs6")
    sums = np.zeros((len(test_m.class_names), toy_provider.dim))
    counts = np.zeros(len(test_m.class_names))
    for entry in test_m.entries:
        cloud = pv.normalize_unit_cube(pv.load_cloud(entry.path))
        maps = pv.project_all(cloud, views, SMALL_SETTINGS)
        feats = [toy_provider.get(entry.id, v.name, m) for v, m in zip(views, maps)]
        sums[entry.label] += pv.l2_normalize(np.mean(feats, axis=0))
        counts[entry.label] += 1
    return sums / counts[:, None]
