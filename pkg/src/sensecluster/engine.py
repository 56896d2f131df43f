"""Coarse retrieval, confidence-weighted class scores, and sense selection.

Pipeline per instance: retrieve the top-K inventory candidates with the
coarse slot, build one equivalence class per retrieved candidate, grade every
class member once with each of the two side scorers, fold the member sums
into a class score through the confidence weights, and pick the arg-max class
(ties broken by inventory rank of the representative).
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import EmptyClass, NoCandidates, NotFound, SenseClusterError, ShapeMismatch
from .graph import (
    EquivalenceClass,
    PosTag,
    SemanticGraph,
    SenseId,
    SenseInventory,
    build_equivalence_classes,
)
from .scoring import (
    CombinedScore,
    GlossOverlapScorer,
    ScoreRequest,
    Scorer,
    SlotRole,
    combine,
    score_batch,
)

DEFAULT_TOP_K = 30

_DEFAULT_COARSE = GlossOverlapScorer()


@dataclass(frozen=True)
class Instance:
    """One disambiguation query: a sentence plus a marked target word."""

    id: str
    sentence: str
    target_start: int
    target_end: int
    lemma: str
    pos: PosTag
    dataset: str = ""

    def __post_init__(self) -> None:
        if not self.lemma:
            raise ValueError(f"instance {self.id}: empty lemma")
        if not (0 <= self.target_start < self.target_end <= len(self.sentence)):
            raise ValueError(
                f"instance {self.id}: bad target offsets "
                f"[{self.target_start}, {self.target_end})"
            )

    @property
    def target(self) -> str:
        return self.sentence[self.target_start : self.target_end]


@dataclass(frozen=True)
class ClassScore:
    """One scored equivalence class: member sums, their weights, the total."""

    cls: EquivalenceClass
    member_scores: tuple[CombinedScore, ...]
    deltas: tuple[float, ...]
    score: float

    def __post_init__(self) -> None:
        if len(self.deltas) != len(self.member_scores):
            raise ShapeMismatch(
                f"{len(self.deltas)} weights for {len(self.member_scores)} members"
            )
        if abs(sum(self.deltas) - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {sum(self.deltas)}, expected 1")
        if not all(0.0 < d <= 1.0 for d in self.deltas):
            raise ValueError("every weight must lie in (0, 1]")
        if not (0.0 <= self.score <= 2.0):
            raise ValueError(f"class score {self.score} outside [0, 2]")


@dataclass(frozen=True)
class SenseChoice:
    instance_id: str
    chosen: SenseId
    winning_score: float
    all_class_scores: tuple[ClassScore, ...]
    tie_broken: bool
    retrieved: tuple[SenseId, ...] = ()


@dataclass(frozen=True)
class Unattempted:
    """Placeholder emitted when an instance could not be disambiguated."""

    instance_id: str
    reason: str


def coarse_retrieve(
    instance: Instance,
    graph: SemanticGraph,
    inventory: SenseInventory,
    coarse_scorer: Scorer,
    k: int = DEFAULT_TOP_K,
) -> list[SenseId]:
    """Top-min(k, n) candidates by coarse score, descending; ties keep
    inventory rank order."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    candidates = inventory.candidates(instance.lemma, instance.pos)
    requests = [
        ScoreRequest(
            id=f"{instance.id}#coarse{rank}",
            context=instance.sentence,
            target_start=instance.target_start,
            target_end=instance.target_end,
            gloss=graph.gloss(candidate),
            instance_id=instance.id,
            sense=candidate,
        )
        for rank, candidate in enumerate(candidates)
    ]
    scored = score_batch(coarse_scorer, requests)
    by_rank = sorted(
        range(len(candidates)), key=lambda rank: (-scored[rank][1], rank)
    )
    return [candidates[rank] for rank in by_rank[: min(k, len(candidates))]]


def delta_weights(member_sums: Sequence[float]) -> list[float]:
    """Softmax over 2*|s - 1|: weight peaks on members scored confidently
    relevant or confidently irrelevant. Max-subtraction keeps the exp tame
    even though s in [0, 2] already bounds the exponent by 2."""
    if not member_sums:
        raise EmptyClass("cannot weight an empty member list")
    exponents = [2.0 * abs(s - 1.0) for s in member_sums]
    peak = max(exponents)
    weights = [math.exp(e - peak) for e in exponents]
    total = sum(weights)
    return [w / total for w in weights]


def class_score(
    cls: EquivalenceClass, member_scores: Sequence[CombinedScore]
) -> ClassScore:
    """Weight-averaged member sums for one class."""
    scored_senses = {m.sense for m in member_scores}
    if scored_senses != set(cls.members):
        raise ShapeMismatch(
            f"scores cover {sorted(scored_senses)} but class members are "
            f"{sorted(cls.members)}"
        )
    deltas = delta_weights([m.s for m in member_scores])
    total = sum(m.s * d for m, d in zip(member_scores, deltas))
    return ClassScore(
        cls=cls,
        member_scores=tuple(member_scores),
        deltas=tuple(deltas),
        score=total,
    )


def disambiguate(
    instance: Instance,
    graph: SemanticGraph,
    inventory: SenseInventory,
    slots: dict[SlotRole, Scorer],
    k: int = DEFAULT_TOP_K,
) -> SenseChoice:
    """Run the full pipeline for one instance."""
    if (instance.lemma, instance.pos) not in inventory:
        raise NoCandidates(
            f"no candidates for ({instance.lemma!r}, {instance.pos.value})"
        )
    coarse = slots.get(SlotRole.COARSE, _DEFAULT_COARSE)
    retrieved = coarse_retrieve(instance, graph, inventory, coarse, k=k)
    classes = build_equivalence_classes(
        graph, inventory, instance.lemma, instance.pos, retrieved
    )

    requests = []
    for ci, cls in enumerate(classes):
        for mi, member in enumerate(sorted(cls.members)):
            requests.append(
                ScoreRequest(
                    id=f"{instance.id}#c{ci}m{mi}",
                    context=instance.sentence,
                    target_start=instance.target_start,
                    target_end=instance.target_end,
                    gloss=graph.gloss(member),
                    instance_id=instance.id,
                    sense=member,
                )
            )
    e_v = dict(score_batch(slots[SlotRole.VERB_SIDE], requests))
    e_vbar = dict(score_batch(slots[SlotRole.NONVERB_SIDE], requests))

    combined: dict[str, CombinedScore] = {
        r.id: combine(r.sense, e_v[r.id], e_vbar[r.id]) for r in requests
    }
    class_scores = []
    cursor = 0
    for cls in classes:
        member_count = len(cls.members)
        members = [combined[r.id] for r in requests[cursor : cursor + member_count]]
        cursor += member_count
        class_scores.append(class_score(cls, members))

    winning = max(cs.score for cs in class_scores)
    tied = [cs for cs in class_scores if cs.score == winning]
    tie_broken = len(tied) > 1
    best = min(
        tied,
        key=lambda cs: inventory.rank(instance.lemma, instance.pos, cs.cls.representative),
    )
    return SenseChoice(
        instance_id=instance.id,
        chosen=best.cls.representative,
        winning_score=winning,
        all_class_scores=tuple(class_scores),
        tie_broken=tie_broken,
        retrieved=tuple(retrieved),
    )


@dataclass
class Engine:
    """A separated graph, its inventory, and the configured scorer slots."""

    graph: SemanticGraph
    inventory: SenseInventory
    slots: dict[SlotRole, Scorer]
    k: int = DEFAULT_TOP_K
    workers: int = 4

    def disambiguate(self, instance: Instance) -> SenseChoice:
        return disambiguate(instance, self.graph, self.inventory, self.slots, k=self.k)

    def disambiguate_batch(
        self, instances: Sequence[Instance]
    ) -> list[SenseChoice | Unattempted]:
        """Process instances in parallel; output order equals input order.
        Per-instance domain failures become Unattempted records."""

        def run_one(instance: Instance) -> SenseChoice | Unattempted:
            try:
                return self.disambiguate(instance)
            except (NoCandidates, NotFound) as exc:
                return Unattempted(instance.id, str(exc))
            except SenseClusterError as exc:
                return Unattempted(instance.id, f"{type(exc).__name__}: {exc}")

        if self.workers <= 1 or len(instances) <= 1:
            return [run_one(i) for i in instances]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(run_one, instances))

    def close(self) -> None:
        from .scoring import close_all

        close_all(self.slots.values())
