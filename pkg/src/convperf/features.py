"""Per-conversation feature extraction and z-score standardization.

Every feature is a frequency or a median, never a raw count, so feature
vectors cannot indirectly encode conversation length: duplicating every
exchange of a conversation leaves its feature vector unchanged.  Two
feature sets are supported:

* ``independent``: utterance-level features computable for any dialogue
  system (median user words, SDA frequencies, MIDAS frequencies).
* ``dependent``: the independent set plus system-specific topic and
  response-generator frequencies and the per-topic dwell median.

``union`` is accepted as an alias of ``dependent`` (dependent is already
the superset).  Standardizers are fitted on training vectors only and
applied unchanged to dev/test.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from statistics import median

import numpy as np

from .corpus import Conversation

logger = logging.getLogger(__name__)

INDEPENDENT = "independent"
DEPENDENT = "dependent"
UNION = "union"
FEATURE_SETS = (INDEPENDENT, DEPENDENT, UNION)

DEFAULT_TOPICS = (
    "movies",
    "music",
    "animals",
    "video_games",
    "hobbies",
    "sports",
    "tv",
    "books",
    "food",
    "travel",
    "astronomy",
    "nutrition",
    "comics",
    "news",
    "harry_potter",
    "intro",
    "other",
)

DEFAULT_SDA_LABELS = (
    "sda_compliment",
    "sda_complaint",
    "sda_abuse",
    "sda_repeat",
    "sda_dev_command",
    "sda_red_topic",
)

DEFAULT_MIDAS_LABELS = (
    "user_init",
    "sys_init",
    "pos_answer",
    "neg_answer",
)

DEFAULT_RESPONSE_GENERATORS = (
    "intro",
    "menu",
    "fact",
    "opinion",
    "question",
    "other",
)

_warned_unknown: set[tuple[str, str]] = set()


def _catchall(kind: str, value: str, inventory: tuple[str, ...]) -> str:
    if value in inventory:
        return value
    key = (kind, value)
    if key not in _warned_unknown:
        _warned_unknown.add(key)
        logger.warning("unknown %s %r mapped to 'other'", kind, value)
    return "other"


def word_count(text: str) -> int:
    """Whitespace-delimited token count after trimming."""
    return len(text.split())


@dataclass(frozen=True)
class FeatureSchema:
    """Fixed, ordered feature inventory.

    The order of the name lists is part of the contract: model
    coefficients index into it, and the fingerprint guards mismatches.
    """

    topics: tuple[str, ...] = DEFAULT_TOPICS
    sda_labels: tuple[str, ...] = DEFAULT_SDA_LABELS
    midas_labels: tuple[str, ...] = DEFAULT_MIDAS_LABELS
    response_generators: tuple[str, ...] = DEFAULT_RESPONSE_GENERATORS

    def __post_init__(self):
        if "other" not in self.topics or "other" not in self.response_generators:
            raise ValueError("topic and rg inventories need an 'other' catch-all")
        names = self.names(DEPENDENT)
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")

    def independent_names(self) -> tuple[str, ...]:
        return (
            ("length_median",)
            + tuple(f"freq_{l}" for l in self.sda_labels)
            + tuple(f"freq_midas_{l}" for l in self.midas_labels)
        )

    def dependent_names(self) -> tuple[str, ...]:
        return (
            self.independent_names()
            + tuple(f"topic_freq_{t}" for t in self.topics)
            + tuple(f"rg_freq_{g}" for g in self.response_generators)
            + ("topic_dist_median",)
        )

    def names(self, feature_set: str) -> tuple[str, ...]:
        if feature_set == INDEPENDENT:
            return self.independent_names()
        if feature_set in (DEPENDENT, UNION):
            return self.dependent_names()
        raise ValueError(f"unknown feature set: {feature_set!r}")


@dataclass(frozen=True)
class FeatureVector:
    values: dict[str, float]
    feature_set: str
    prefix_k: int | None = None

    def names(self) -> tuple[str, ...]:
        return tuple(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(list(self.values.values()), dtype=float)


def extract_features(
    conv: Conversation,
    schema: FeatureSchema,
    feature_set: str = DEPENDENT,
    prefix_k: int | None = None,
) -> FeatureVector:
    """Compute the feature vector over the first ``prefix_k`` exchanges.

    With ``prefix_k=None`` the whole conversation is used; a prefix
    larger than the conversation clamps to its length, so the prefix
    vector then equals the full vector.
    """
    if feature_set not in FEATURE_SETS:
        raise ValueError(f"unknown feature set: {feature_set!r}")
    if prefix_k is not None and prefix_k < 1:
        raise ValueError(f"prefix_k must be >= 1, got {prefix_k}")
    end = conv.raw_length if prefix_k is None else min(prefix_k, conv.raw_length)
    window = conv.exchanges[:end]
    n = len(window)
    if n == 0:
        raise ValueError(f"conversation {conv.id!r}: empty feature window")

    user_words = [word_count(ex.user_text) for ex in window if ex.user_text.strip()]
    length_median = float(median(user_words)) if user_words else 0.0

    values: dict[str, float] = {"length_median": length_median}
    for label in schema.sda_labels:
        count = sum(1 for ex in window if label in ex.sda_tags)
        values[f"freq_{label}"] = count / n
    for label in schema.midas_labels:
        count = sum(1 for ex in window if label in ex.midas_tags)
        values[f"freq_midas_{label}"] = count / n

    if feature_set in (DEPENDENT, UNION):
        topic_counts: dict[str, int] = {}
        rg_counts: dict[str, int] = {}
        for ex in window:
            t = _catchall("topic", ex.topic, schema.topics)
            topic_counts[t] = topic_counts.get(t, 0) + 1
            g = _catchall("response generator", ex.response_generator,
                          schema.response_generators)
            rg_counts[g] = rg_counts.get(g, 0) + 1
        for t in schema.topics:
            values[f"topic_freq_{t}"] = topic_counts.get(t, 0) / n
        for g in schema.response_generators:
            values[f"rg_freq_{g}"] = rg_counts.get(g, 0) / n
        # Median share of the window per distinct topic.  Normalizing by the
        # window keeps the feature invariant under exchange duplication, like
        # every other feature here.
        values["topic_dist_median"] = float(median(topic_counts.values())) / n

    return FeatureVector(values=values, feature_set=feature_set, prefix_k=prefix_k)


def build_matrix(
    conversations,
    schema: FeatureSchema,
    feature_set: str = DEPENDENT,
    prefix_k: int | None = None,
) -> tuple[list[str], np.ndarray]:
    """Feature matrix for a sequence of conversations (ids, rows)."""
    names = schema.names(feature_set)
    ids = []
    rows = np.empty((len(conversations), len(names)), dtype=float)
    for i, conv in enumerate(conversations):
        vec = extract_features(conv, schema, feature_set, prefix_k)
        rows[i] = vec.as_array()
        ids.append(conv.id)
    return ids, rows


@dataclass(frozen=True)
class Standardizer:
    """Per-feature mean and population standard deviation, train-fitted."""

    feature_names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, feature_names: tuple[str, ...]) -> "Standardizer":
        if X.ndim != 2 or X.shape[0] < 2:
            raise ValueError("need at least 2 rows to fit a standardizer")
        if X.shape[1] != len(feature_names):
            raise ValueError("column count does not match feature names")
        return cls(
            feature_names=tuple(feature_names),
            mean=X.mean(axis=0),
            std=X.std(axis=0),  # population (divide by n)
        )

    def transform(self, X: np.ndarray) -> np.ndarray:
        if X.shape[-1] != len(self.feature_names):
            raise ValueError("column count does not match standardizer")
        safe = np.where(self.std == 0.0, 1.0, self.std)
        Z = (X - self.mean) / safe
        # Zero-variance features carry no information; map them to 0.
        return np.where(self.std == 0.0, 0.0, Z)


def fit_standardizer(train_vectors: list[FeatureVector]) -> Standardizer:
    if len(train_vectors) < 2:
        raise ValueError("need at least 2 vectors to fit a standardizer")
    names = train_vectors[0].names()
    for v in train_vectors[1:]:
        if v.names() != names:
            raise ValueError("feature vectors have mismatched schemas")
    X = np.stack([v.as_array() for v in train_vectors])
    return Standardizer.fit(X, names)


def apply_standardizer(s: Standardizer, v: FeatureVector) -> FeatureVector:
    if v.names() != s.feature_names:
        raise ValueError("feature vector does not match standardizer schema")
    z = s.transform(v.as_array())
    return FeatureVector(
        values=dict(zip(s.feature_names, z.tolist())),
        feature_set=v.feature_set,
        prefix_k=v.prefix_k,
    )


def write_feature_csv(fh, ids, names, X, ratings, capped_lengths, splits) -> None:
    """Interchange CSV: id, features..., rating, capped_length, split."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["id", *names, "rating", "capped_length", "split"])
    for i, cid in enumerate(ids):
        rating = "" if ratings[i] is None else str(ratings[i])
        writer.writerow(
            [cid]
            + [repr(float(x)) for x in X[i]]
            + [rating, str(int(capped_lengths[i])), splits[i]]
        )


def read_feature_csv(fh):
    """Inverse of :func:`write_feature_csv`.

    Returns (ids, names, X, ratings, capped_lengths, splits); missing
    ratings come back as None.
    """
    reader = csv.reader(fh)
    header = next(reader)
    if header[:1] != ["id"] or header[-3:] != ["rating", "capped_length", "split"]:
        raise ValueError("not a feature CSV (unexpected header)")
    names = tuple(header[1:-3])
    ids, rows, ratings, lengths, splits = [], [], [], [], []
    for rec in reader:
        ids.append(rec[0])
        rows.append([float(x) for x in rec[1 : 1 + len(names)]])
        ratings.append(int(rec[-3]) if rec[-3] else None)
        lengths.append(int(rec[-2]))
        splits.append(rec[-1])
    X = np.array(rows, dtype=float) if rows else np.empty((0, len(names)))
    return ids, names, X, ratings, lengths, splits
