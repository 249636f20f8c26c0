"""Seeded synthetic-corpus generator with planted structure.

Every conversation is driven by a latent engagement value e in [0, 1].
Engagement raises conversation length (log-normal body), per-utterance
verbosity, compliment rate, and initiative/answer tag rates; complaint
rate rises as engagement falls; the rating is a noisy, weakly coupled
readout of the same latent.  A configurable point mass at lengths 1-4
models accidental invocations.  Compliment and complaint phrases are
taken verbatim from the shipped lexicons and embedded in the user text,
so the tagger recovers exactly the planted acts, while filler words
never overlap lexicon vocabulary.

Randomness: one root seed spawns an independent substream per
conversation, so corpora are reproducible and generation order free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .corpus import Conversation, Corpus, Exchange
from .tagging import default_config

_SHORT_MAX = 4  # accidental-invocation lengths are 1.._SHORT_MAX
_BODY_MIN = 5

DEFAULT_TOPIC_APPEAL = (
    ("movies", 2.2),
    ("music", 2.0),
    ("animals", 1.6),
    ("video_games", 1.5),
    ("sports", 1.4),
    ("tv", 1.3),
    ("hobbies", 1.2),
    ("food", 1.1),
    ("books", 1.0),
    ("travel", 0.9),
    ("news", 0.8),
    ("astronomy", 0.7),
    ("nutrition", 0.6),
    ("comics", 0.6),
    ("harry_potter", 0.5),
    ("other", 0.9),
)

_RG_CHOICES = ("fact", "opinion", "question", "menu", "other")
_RG_PROBS = (0.35, 0.22, 0.2, 0.13, 0.1)

# Filler vocabulary, disjoint from every word used by the shipped
# lexicon phrases so no accidental tag can form.
_FILLER = (
    "meadow", "quartz", "lantern", "harbor", "pebble", "spruce", "violet",
    "ember", "ridge", "thimble", "walnut", "breeze", "copper", "fable",
    "garnet", "hollow", "ivory", "juniper", "kestrel", "lagoon", "marble",
    "nectar", "orchard", "plume", "quill", "russet", "saffron", "tundra",
    "umber", "velvet", "willow", "yonder", "zephyr", "basalt", "cinder",
    "drift", "eddy", "fjord", "glade", "heath",
)


class GeneratorError(ValueError):
    """Raised for invalid or infeasible generator configurations."""


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for the planted-structure generator.

    Rates are per exchange; every ``*_gain`` scales the engagement
    linkage of its rate (complaint and neg_answer couple to 1-e).
    ``target_r`` declares the intended rating/length correlation and is
    checked against what the rating noise permits.
    """

    n_conversations: int
    seed: int = 0
    # latent user model
    engagement_alpha: float = 2.0
    engagement_beta: float = 2.0
    # length model (log scale for the non-accidental body)
    short_mass: float = 0.15
    length_log_base: float = 2.2
    length_log_gain: float = 1.55
    length_log_noise: float = 0.10
    length_max: int = 200
    # rating linkage (defaults tuned numerically: full-corpus rating
    # mean ~3.72, median 4, rating/length r ~0.134 at large n)
    rating_base: float = 3.25
    rating_gain: float = 1.03
    rating_noise: float = 1.0
    target_r: float = 0.134
    # verbosity (filler words per user utterance)
    verbosity_base: float = 2.0
    verbosity_gain: float = 11.0
    # social dialogue act rates
    compliment_base: float = 0.02
    compliment_gain: float = 0.30
    complaint_base: float = 0.02
    complaint_gain: float = 0.25
    # midas tag rates
    user_init_base: float = 0.25
    user_init_gain: float = 0.45
    pos_answer_base: float = 0.15
    pos_answer_gain: float = 0.45
    neg_answer_base: float = 0.05
    neg_answer_gain: float = 0.35
    # topics
    topic_appeal: tuple[tuple[str, float], ...] = DEFAULT_TOPIC_APPEAL
    topic_concentration: float = 1.2


def engagement_sd(cfg: GeneratorConfig) -> float:
    a, b = cfg.engagement_alpha, cfg.engagement_beta
    return math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))


def attainable_correlation(cfg: GeneratorConfig) -> float:
    """Upper bound on rating/length r given the rating noise."""
    signal = cfg.rating_gain * engagement_sd(cfg)
    if signal <= 0.0:
        return 0.0
    if cfg.rating_noise == 0.0:
        return 1.0
    return signal / math.hypot(signal, cfg.rating_noise)


def _validate(cfg: GeneratorConfig) -> None:
    if cfg.n_conversations < 1:
        raise GeneratorError(f"n_conversations must be >= 1, got {cfg.n_conversations}")
    rates = {
        "short_mass": cfg.short_mass,
        "compliment_base": cfg.compliment_base,
        "complaint_base": cfg.complaint_base,
        "user_init_base": cfg.user_init_base,
        "pos_answer_base": cfg.pos_answer_base,
        "neg_answer_base": cfg.neg_answer_base,
    }
    for name, v in rates.items():
        if not 0.0 <= v <= 1.0:
            raise GeneratorError(f"{name} must be in [0, 1], got {v}")
    for name in ("length_log_noise", "rating_noise", "verbosity_base", "verbosity_gain"):
        if getattr(cfg, name) < 0.0:
            raise GeneratorError(f"{name} must be >= 0")
    if cfg.engagement_alpha <= 0 or cfg.engagement_beta <= 0:
        raise GeneratorError("engagement shape parameters must be positive")
    if cfg.length_max < _BODY_MIN:
        raise GeneratorError(f"length_max must be >= {_BODY_MIN}")
    if not cfg.topic_appeal:
        raise GeneratorError("topic inventory is empty")
    if any(w <= 0 for _, w in cfg.topic_appeal):
        raise GeneratorError("topic appeal weights must be positive")
    bound = attainable_correlation(cfg)
    if cfg.target_r > bound + 1e-12:
        raise GeneratorError(
            f"target rating/length correlation {cfg.target_r:.3f} exceeds the "
            f"attainable bound {bound:.3f} under rating_noise="
            f"{cfg.rating_noise:g}; lower the noise or raise rating_gain"
        )


def _lexicon_phrases() -> tuple[tuple[str, ...], tuple[str, ...]]:
    cfg = default_config()
    by_label = {l.label: l.patterns for l in cfg.lexicons}
    return by_label["sda_compliment"], by_label["sda_complaint"]


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _one_conversation(
    conv_id: str,
    rng: np.random.Generator,
    cfg: GeneratorConfig,
    compliments: tuple[str, ...],
    complaints: tuple[str, ...],
    topics: list[str],
    appeal: np.ndarray,
) -> Conversation:
    e = float(rng.beta(cfg.engagement_alpha, cfg.engagement_beta))

    if rng.random() < cfg.short_mass:
        length = int(rng.integers(1, _SHORT_MAX + 1))
    else:
        log_len = rng.normal(
            cfg.length_log_base + cfg.length_log_gain * e, cfg.length_log_noise
        )
        length = int(math.floor(math.exp(log_len) + 0.5))
        length = min(max(length, _BODY_MIN), cfg.length_max)

    r_cont = rng.normal(cfg.rating_base + cfg.rating_gain * e, cfg.rating_noise)
    rating = int(min(5, max(1, math.floor(r_cont + 0.5))))

    interest = rng.dirichlet(cfg.topic_concentration * appeal)
    topic_idx = rng.choice(len(topics), size=length, p=interest)
    rg_idx = rng.choice(len(_RG_CHOICES), size=length, p=_RG_PROBS)

    ui_rate = _clamp01(cfg.user_init_base + cfg.user_init_gain * e)
    pos_rate = _clamp01(cfg.pos_answer_base + cfg.pos_answer_gain * e)
    neg_rate = _clamp01(cfg.neg_answer_base + cfg.neg_answer_gain * (1.0 - e))
    comp_rate = _clamp01(cfg.compliment_base + cfg.compliment_gain * e)
    compl_rate = _clamp01(cfg.complaint_base + cfg.complaint_gain * (1.0 - e))

    init_draw = rng.random(length)
    answer_draw = rng.random(length)
    comp_flags = rng.random(length) < comp_rate
    compl_flags = rng.random(length) < compl_rate
    comp_pick = rng.integers(0, len(compliments), size=length)
    compl_pick = rng.integers(0, len(complaints), size=length)

    lam = cfg.verbosity_base + cfg.verbosity_gain * e
    word_counts = 1 + rng.poisson(lam, size=length)
    word_idx = rng.integers(0, len(_FILLER), size=int(word_counts.sum()))

    exchanges = []
    pos = 0
    for j in range(length):
        # Planted phrases consume the utterance's word budget rather than
        # extending it, so word counts read verbosity and nothing else.
        wc = int(word_counts[j])
        tail = []
        if comp_flags[j]:
            tail.append(compliments[comp_pick[j]])
        if compl_flags[j]:
            tail.append(complaints[compl_pick[j]])
        planted = sum(len(t.split()) for t in tail)
        n_fill = max(0, wc - planted)
        parts = [_FILLER[w] for w in word_idx[pos : pos + n_fill]] + tail
        pos += wc
        midas = ["user_init" if init_draw[j] < ui_rate else "sys_init"]
        if answer_draw[j] < pos_rate:
            midas.append("pos_answer")
        elif answer_draw[j] < pos_rate + neg_rate:
            midas.append("neg_answer")
        topic = "intro" if j == 0 else topics[topic_idx[j]]
        rg = "intro" if j == 0 else _RG_CHOICES[rg_idx[j]]
        exchanges.append(
            Exchange(
                index=j,
                topic=topic,
                response_generator=rg,
                user_text=" ".join(parts),
                system_text=f"let us talk about {topic}",
                midas_tags=frozenset(midas),
                sda_tags=frozenset(),
            )
        )
    return Conversation(id=conv_id, exchanges=tuple(exchanges), rating=rating)


def generate(cfg: GeneratorConfig) -> Corpus:
    """Generate a corpus; same config (seed included) → identical output."""
    _validate(cfg)
    compliments, complaints = _lexicon_phrases()
    topics = [t for t, _ in cfg.topic_appeal]
    appeal = np.array([w for _, w in cfg.topic_appeal], dtype=float)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_conversations)
    width = max(6, len(str(cfg.n_conversations - 1)))
    convs = [
        _one_conversation(
            f"syn-{i:0{width}d}",
            np.random.default_rng(child),
            cfg,
            compliments,
            complaints,
            topics,
            appeal,
        )
        for i, child in enumerate(children)
    ]
    return Corpus(tuple(convs))


def compliment_driven_config(n_conversations: int, seed: int = 0) -> GeneratorConfig:
    """Variant where compliment frequency is the dominant length signal.

    Verbosity and midas linkages are flattened, so a length tree's best
    first split is the compliment-frequency column.
    """
    return GeneratorConfig(
        n_conversations=n_conversations,
        seed=seed,
        verbosity_base=4.0,
        verbosity_gain=0.0,
        compliment_base=0.05,
        compliment_gain=0.75,
        complaint_base=0.05,
        complaint_gain=0.0,
        user_init_base=0.4,
        user_init_gain=0.0,
        pos_answer_base=0.3,
        pos_answer_gain=0.0,
        neg_answer_base=0.2,
        neg_answer_gain=0.0,
    )


def single_signal_config(n_conversations: int, seed: int = 0) -> GeneratorConfig:
    """Variant where only the compliment rate carries the latent signal.

    Everything else still varies (nonzero base rates) but is decoupled
    from engagement, giving ablation studies one planted signal feature
    and a bed of irrelevant ones.
    """
    return replace(
        compliment_driven_config(n_conversations, seed),
        length_log_noise=0.05,
    )


def deterministic_length_config(n_conversations: int, seed: int = 0) -> GeneratorConfig:
    """No-noise variant: length is a fixed function of the compliment rate.

    Both length and compliment rate are affine in engagement with zero
    conditional noise on the length side, and verbosity gives a second
    precise readout, so a forest should recover length almost exactly.
    """
    return GeneratorConfig(
        n_conversations=n_conversations,
        seed=seed,
        short_mass=0.0,
        length_log_noise=0.0,
        verbosity_base=2.0,
        verbosity_gain=28.0,
        compliment_base=0.05,
        compliment_gain=0.75,
        rating_noise=1.2,
        target_r=0.1,
    )
