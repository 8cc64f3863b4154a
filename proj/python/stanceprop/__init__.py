"""Python bindings for the stance propagation library."""

import json
import os

from . import _core
from ._core import (
    DEFAULT_K_GRID,
    DEFAULT_SIGMA_GRID,
    DataError,
    ParameterError,
    benchmark_scores,
    compute_metrics,
    heuristic_sigma,
    knn_affinity,
    porter_stem,
    preprocess,
    propagate,
    rbf_affinity,
)

_packaged = os.path.join(os.path.dirname(__file__), "lexicons")
LEXICON_DIR = _packaged if os.path.isdir(_packaged) else os.path.join(_core.RESOURCE_DIR, "lexicons")

__all__ = [
    "DEFAULT_K_GRID",
    "DEFAULT_SIGMA_GRID",
    "DataError",
    "LEXICON_DIR",
    "ParameterError",
    "benchmark_scores",
    "classify",
    "compute_metrics",
    "heuristic_sigma",
    "knn_affinity",
    "porter_stem",
    "preprocess",
    "propagate",
    "rbf_affinity",
    "run_experiment",
]


def _path(p):
    return None if p is None else os.fspath(p)


def _lexicons(feature_space, lexicons, stem):
    if lexicons is not None:
        return os.fspath(lexicons)
    if stem or feature_space in ("ling", "brown_ling"):
        return LEXICON_DIR
    return None


def classify(data, seeds, *, rumour_id=None, clusters=None, lexicons=None,
             feature_space="brown", kernel="rbf", sigma=0.85, k=10,
             heuristic_sigma=False, algorithm="ls", alpha=1.0, tol=1e-3,
             max_iter=1000, stem_and_drop_stop_words=False):
    """Propagate seed stances through one rumour of a canonical JSONL file.

    `seeds` maps message ids to -1, 0 or 1. Returns one dict per message,
    the same records `stance classify` writes.
    """
    out = _core._classify(
        os.fspath(data), {str(k_): int(v) for k_, v in dict(seeds).items()}, rumour_id,
        _path(clusters), _lexicons(feature_space, lexicons, stem_and_drop_stop_words),
        feature_space, kernel, float(sigma), int(k), bool(heuristic_sigma), algorithm,
        float(alpha), float(tol), int(max_iter), bool(stem_and_drop_stop_words))
    return json.loads(out)


def run_experiment(data, *, clusters=None, lexicons=None, n_values=(10, 20, 30, 40, 50),
                   sigma_grid=None, k_grid=None, feature_space="brown", algorithm="ls",
                   kernel="rbf", sigma_mode="grid", sigma=0.85, k=10, alpha=1.0,
                   min_rumour_size=50, jobs=1):
    """Run the annotate-first-N protocol and return the report as a dict."""
    out = _core._experiment(
        os.fspath(data), _path(clusters), _lexicons(feature_space, lexicons, False),
        list(n_values), list(DEFAULT_SIGMA_GRID if sigma_grid is None else sigma_grid),
        list(DEFAULT_K_GRID if k_grid is None else k_grid), feature_space, algorithm,
        kernel, sigma_mode, float(sigma), int(k), float(alpha), int(min_rumour_size),
        int(jobs))
    return json.loads(out)
