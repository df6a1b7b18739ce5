"""Boolean state-action features for frontier transitions.

Layout of one vector (``L`` = number of base labels)::

    [event one-hot L][incoming labels L][controllable][marked s, s']
    [phases 3][child 3][uncontrollable 4][explored 2][last expanded 2]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .des import ControlProblem
from .kernel import LOSE, UNDECIDED, WIN

FIXED_BITS = 17


class SchemaMismatch(ValueError):
    pass


@dataclass(frozen=True)
class FeatureSchema:
    base_labels: tuple
    last_expanded_mode: str = "source"

    @property
    def n_labels(self) -> int:
        return len(self.base_labels)

    @property
    def dimension(self) -> int:
        return 2 * self.n_labels + FIXED_BITS

    def blocks(self) -> dict:
        """Block name -> ``slice`` into the vector."""
        L = self.n_labels
        sizes = [
            ("event", L), ("incoming", L), ("controllable", 1), ("marked", 2), ("phases", 3),
            ("child", 3), ("uncontrollable", 4), ("explored", 2), ("last_expanded", 2),
        ]
        out, pos = {}, 0
        for name, size in sizes:
            out[name] = slice(pos, pos + size)
            pos += size
        return out

    def to_dict(self) -> dict:
        return {"base_labels": list(self.base_labels), "last_expanded_mode": self.last_expanded_mode}

    @classmethod
    def from_dict(cls, d) -> "FeatureSchema":
        return cls(tuple(d["base_labels"]), d.get("last_expanded_mode", "source"))


def build_schema(p: ControlProblem, last_expanded_mode: str = "source") -> FeatureSchema:
    if last_expanded_mode not in ("source", "target"):
        raise ValueError("last_expanded_mode must be 'source' or 'target'")
    return FeatureSchema(tuple(p.base_labels()), last_expanded_mode)


def check_schema(es, schema: FeatureSchema) -> None:
    if tuple(es.base_labels) != schema.base_labels:
        raise SchemaMismatch(
            f"problem {es.problem.name!r} has base labels {es.base_labels}, schema expects {list(schema.base_labels)}"
        )


def _features_for(es, keys: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    L = schema.n_labels
    src = es.tr_src.data[keys]
    tgt = es.tr_tgt.data[keys]
    lab = es._label_base[es.tr_label.data[keys]]
    es.ensure_enabled(tgt)
    n = len(keys)
    X = np.zeros((n, schema.dimension), dtype=np.float64)
    rows = np.arange(n)
    X[rows, lab] = 1.0
    X[:, L : 2 * L] = es.incoming[src]
    p = 2 * L
    X[:, p] = es.label_controllable[es.tr_label.data[keys]]
    marked = es.marked.data
    X[:, p + 1] = marked[src]
    X[:, p + 2] = marked[tgt]
    X[:, p + 3 : p + 6] = np.asarray(es.phase_flags, dtype=np.float64)
    status = es.status.data[tgt]
    X[:, p + 6] = status == WIN
    X[:, p + 7] = status == LOSE
    X[:, p + 8] = es.discovered.data[tgt] & (status == UNDECIDED)
    ue, ux = es.unc_enabled.data, es.unc_expanded.data
    X[:, p + 9] = ue[src] > 0
    X[:, p + 10] = ux[src] >= ue[src]
    X[:, p + 11] = ue[tgt] > 0
    X[:, p + 12] = ux[tgt] >= ue[tgt]
    oe = es.out_expanded.data
    X[:, p + 13] = oe[src] > 0
    X[:, p + 14] = oe[tgt] > 0
    last = es.last_expanded
    if last is not None:
        probe = src if schema.last_expanded_mode == "source" else tgt
        X[:, p + 15] = probe == last.tgt_id
        X[:, p + 16] = probe == last.src_id
    return X


def frontier_features(es, schema: FeatureSchema) -> np.ndarray:
    """Feature matrix with one row per frontier transition, in frontier order."""
    check_schema(es, schema)
    keys = np.asarray(es.frontier_keys, dtype=np.int64)
    if len(keys) == 0:
        return np.zeros((0, schema.dimension))
    return _features_for(es, keys, schema)


def compute_features(es, t, schema: FeatureSchema) -> np.ndarray:
    """Feature vector of a single frontier transition ``t``."""
    from .engine import UsageError

    check_schema(es, schema)
    es.frontier_position(t.insertion_index)  # raises if not in the frontier
    if es.transitions[t.insertion_index] is not t and es.transitions[t.insertion_index].key() != t.key():
        raise UsageError("transition does not belong to this exploration")
    return _features_for(es, np.array([t.insertion_index]), schema)[0]


def describe(x: np.ndarray, schema: FeatureSchema) -> dict:
    """Split a vector into named blocks (for debug dumps)."""
    out = {}
    for name, sl in schema.blocks().items():
        out[name] = [int(v) for v in x[sl]]
    return out


__all__ = [
    "FeatureSchema", "SchemaMismatch", "build_schema", "compute_features", "describe", "frontier_features",
]
