"""Gold-keyed corpus parsing, prediction judging, and F1 reporting.

Corpora come either as the usual benchmark XML (``<corpus><text><sentence>``
with ``<instance>``/``<wf>`` tokens) or as JSON-lines with explicit character
offsets. Judging optionally routes predictions through a key-mapping table
(scheme translation); a prediction is correct when its mapped set overlaps
the gold set. Reports slice counts by dataset, POS and polysemy bucket.
"""

from __future__ import annotations

import enum
import io
import json
import xml.etree.ElementTree as ET
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

from .engine import Instance
from .errors import NoCandidates, ParseError
from .graph import PosTag, SenseId, SenseInventory

POLYSEMY_BUCKETS = ("1", "2", "3-5", "6-10", "11-20", ">20")


@dataclass(frozen=True)
class GoldKey:
    instance_id: str
    gold_senses: frozenset[SenseId]

    def __post_init__(self) -> None:
        if not self.gold_senses:
            raise ValueError(f"instance {self.instance_id}: empty gold set")


class Judgment(enum.Enum):
    CORRECT = "CORRECT"
    INCORRECT = "INCORRECT"
    UNATTEMPTED = "UNATTEMPTED"


@dataclass(frozen=True)
class JudgedInstance:
    """One judged prediction with the tags report slicing needs."""

    instance_id: str
    dataset: str
    pos: PosTag
    candidate_count: int
    judgment: Judgment


@dataclass(frozen=True)
class SliceStats:
    slice_type: str  # ALL | dataset | pos | polysemy
    name: str
    total: int
    attempted: int
    correct: int

    def __post_init__(self) -> None:
        if not (0 <= self.correct <= self.attempted <= self.total):
            raise ValueError(
                f"inconsistent counts for slice {self.name}: "
                f"{self.correct}/{self.attempted}/{self.total}"
            )

    @property
    def precision(self) -> float:
        return self.correct / self.attempted if self.attempted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.total if self.total else 0.0

    # 2c/(attempted+total) is the harmonic mean of precision and recall
    # in a form that is exact when attempted == total.
    @property
    def f1(self) -> float:
        denominator = self.attempted + self.total
        return 2.0 * self.correct / denominator if denominator else 0.0


@dataclass(frozen=True)
class EvalReport:
    slices: tuple[SliceStats, ...]

    def find(self, slice_type: str, name: str) -> SliceStats:
        for s in self.slices:
            if s.slice_type == slice_type and s.name == name:
                return s
        raise KeyError(f"no slice ({slice_type}, {name})")

    @property
    def overall(self) -> SliceStats:
        return self.find("ALL", "ALL")


# -- corpus / gold / mapping parsing ---------------------------------------

_INSTANCE_KEYS = ("id", "sentence", "target_start", "target_end", "lemma", "pos", "dataset")


def dataset_label(instance_id: str) -> str:
    """Slice label for an instance: the id segment before the first dot."""
    return instance_id.split(".", 1)[0] if "." in instance_id else "corpus"


def parse_corpus_xml(path: str | Path) -> list[Instance]:
    path = Path(path)
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        raise ParseError(
            f"malformed XML: {exc.msg if hasattr(exc, 'msg') else exc}",
            path=str(path),
            line=exc.position[0] if getattr(exc, "position", None) else None,
        ) from exc
    instances: list[Instance] = []
    root = tree.getroot()
    corpora = [root] if root.tag == "corpus" else list(root.iter("corpus"))
    for corpus in corpora:
        source = corpus.get("source", "")
        for sentence_el in corpus.iter("sentence"):
            tokens = [el for el in sentence_el if el.tag in ("wf", "instance")]
            texts = [(el.text or "") for el in tokens]
            sentence = " ".join(texts)
            offset = 0
            for el, text in zip(tokens, texts):
                if el.tag == "instance":
                    iid = el.get("id", "")
                    lemma = el.get("lemma", "")
                    pos_token = el.get("pos", "")
                    if not iid or not lemma or not pos_token:
                        raise ParseError(
                            f"instance missing id/lemma/pos attrs: {iid!r}",
                            path=str(path),
                        )
                    try:
                        pos = PosTag.parse(pos_token)
                    except ValueError as exc:
                        raise ParseError(str(exc), path=str(path)) from exc
                    instances.append(
                        Instance(
                            id=iid,
                            sentence=sentence,
                            target_start=offset,
                            target_end=offset + len(text),
                            lemma=lemma,
                            pos=pos,
                            dataset=source or dataset_label(iid),
                        )
                    )
                offset += len(text) + 1
    return instances


def parse_corpus_jsonl(path: str | Path) -> list[Instance]:
    path = Path(path)
    instances: list[Instance] = []
    for lineno, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", path=str(path), line=lineno) from exc
        try:
            instances.append(
                Instance(
                    id=record["id"],
                    sentence=record["sentence"],
                    target_start=int(record["target_start"]),
                    target_end=int(record["target_end"]),
                    lemma=record["lemma"],
                    pos=PosTag.parse(record["pos"]),
                    dataset=record.get("dataset") or dataset_label(record["id"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(
                f"bad instance record: {exc}", path=str(path), line=lineno
            ) from exc
    return instances


def serialize_corpus_jsonl(instances: Iterable[Instance]) -> str:
    """Canonical JSON-lines form; parse -> serialize round-trips byte-identically."""
    buffer = io.StringIO()
    for inst in instances:
        record = {
            "id": inst.id,
            "sentence": inst.sentence,
            "target_start": inst.target_start,
            "target_end": inst.target_end,
            "lemma": inst.lemma,
            "pos": inst.pos.value,
            "dataset": inst.dataset,
        }
        buffer.write(json.dumps(record, ensure_ascii=False) + "\n")
    return buffer.getvalue()


def parse_corpus(data_path: str | Path) -> list[Instance]:
    path = Path(data_path)
    if path.suffix.lower() == ".xml":
        return parse_corpus_xml(path)
    return parse_corpus_jsonl(path)


def parse_corpus_and_gold(
    data_path: str | Path, gold_path: str | Path
) -> tuple[list[Instance], list["GoldKey"]]:
    """Corpus plus its gold keys in one call. Instances without a gold key
    are kept (the caller decides whether to warn or drop)."""
    return parse_corpus(data_path), load_gold(gold_path)


def load_gold(path: str | Path) -> list[GoldKey]:
    """Gold key file: ``instance_id key [key ...]`` per line."""
    path = Path(path)
    keys: list[GoldKey] = []
    seen: set[str] = set()
    for lineno, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ParseError(
                "expected 'instance_id key [key ...]'", path=str(path), line=lineno
            )
        iid = parts[0]
        if iid in seen:
            raise ParseError(f"duplicate gold line for {iid!r}", path=str(path), line=lineno)
        seen.add(iid)
        keys.append(GoldKey(instance_id=iid, gold_senses=frozenset(parts[1:])))
    return keys


class MappingTable:
    """External key -> set of sense ids (scheme translation for judging)."""

    def __init__(self, mapping: dict[str, set[SenseId]]):
        for key, image in mapping.items():
            if not image:
                raise ValueError(f"mapping for {key!r} has an empty image set")
        self.mapping = {k: frozenset(v) for k, v in mapping.items()}

    def __contains__(self, key: str) -> bool:
        return key in self.mapping

    def expand(self, key: str) -> frozenset[SenseId]:
        return self.mapping[key]

    @classmethod
    def load(cls, path: str | Path) -> "MappingTable":
        path = Path(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines or lines[0].split("\t") != ["external_key", "sense_id"]:
            raise ParseError(
                "expected header 'external_key\\tsense_id'", path=str(path), line=1
            )
        mapping: dict[str, set[SenseId]] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError("expected 2 columns", path=str(path), line=lineno)
            mapping.setdefault(cols[0], set()).add(cols[1])
        return cls(mapping)


# -- judging ----------------------------------------------------------------


def judge(
    prediction: str | None,
    gold: GoldKey,
    mapping: MappingTable | None = None,
    warnings: list[str] | None = None,
) -> Judgment:
    """Grade one prediction against its gold set.

    Without a mapping, correct means the prediction is in the gold set. With
    one, the prediction is first expanded and any overlap counts. Unmapped
    prediction keys are unattempted (a resource gap, not a model error) and
    surfaced as a warning.
    """
    if prediction is None:
        return Judgment.UNATTEMPTED
    if mapping is None:
        predicted = frozenset([prediction])
    elif prediction in mapping:
        predicted = mapping.expand(prediction)
    else:
        if warnings is not None:
            warnings.append(f"prediction key {prediction!r} missing from mapping table")
        return Judgment.UNATTEMPTED
    return Judgment.CORRECT if predicted & gold.gold_senses else Judgment.INCORRECT


def polysemy_bucket(candidate_count: int) -> str:
    if candidate_count <= 1:
        return "1"
    if candidate_count == 2:
        return "2"
    if candidate_count <= 5:
        return "3-5"
    if candidate_count <= 10:
        return "6-10"
    if candidate_count <= 20:
        return "11-20"
    return ">20"


def f1_report(judged: Sequence[JudgedInstance]) -> EvalReport:
    """Counts and P/R/F1 for ALL plus every dataset, POS and polysemy slice."""

    def stats(slice_type: str, name: str, rows: Sequence[JudgedInstance]) -> SliceStats:
        attempted = sum(1 for r in rows if r.judgment is not Judgment.UNATTEMPTED)
        correct = sum(1 for r in rows if r.judgment is Judgment.CORRECT)
        return SliceStats(slice_type, name, len(rows), attempted, correct)

    slices = [stats("ALL", "ALL", judged)]
    for dataset in sorted({r.dataset for r in judged}):
        slices.append(
            stats("dataset", dataset, [r for r in judged if r.dataset == dataset])
        )
    for pos in sorted({r.pos for r in judged}, key=lambda p: p.value):
        slices.append(stats("pos", pos.value, [r for r in judged if r.pos == pos]))
    for bucket in POLYSEMY_BUCKETS:
        rows = [r for r in judged if polysemy_bucket(r.candidate_count) == bucket]
        if rows:
            slices.append(stats("polysemy", bucket, rows))
    return EvalReport(slices=tuple(slices))


def mfs_baseline(
    train_counts: dict[tuple[str, PosTag, SenseId], int],
    inventory: SenseInventory,
):
    """Most-frequent-sense predictor from training counts.

    Picks the candidate with the highest count; ties and unseen entries fall
    back to inventory rank.
    """
    for count in train_counts.values():
        if count < 0:
            raise ValueError("sense counts must be non-negative")

    def predict(lemma: str, pos: PosTag) -> SenseId:
        if (lemma, pos) not in inventory:
            raise NoCandidates(f"no candidates for ({lemma!r}, {pos.value})")
        candidates = inventory.candidates(lemma, pos)
        return max(
            candidates,
            key=lambda sense: (
                train_counts.get((lemma.lower(), pos, sense), 0),
                -candidates.index(sense),
            ),
        )

    return predict


def count_senses(
    gold_keys: Sequence[GoldKey],
    instances: Sequence[Instance],
) -> dict[tuple[str, PosTag, SenseId], int]:
    """Tally gold senses per (lemma, pos) from a training corpus."""
    by_id = {i.id: i for i in instances}
    counts: dict[tuple[str, PosTag, SenseId], int] = {}
    for gk in gold_keys:
        instance = by_id.get(gk.instance_id)
        if instance is None:
            continue
        for sense in gk.gold_senses:
            key = (instance.lemma.lower(), instance.pos, sense)
            counts[key] = counts.get(key, 0) + 1
    return counts


def load_sense_counts(path: str | Path) -> dict[tuple[str, PosTag, SenseId], int]:
    """Counts file: TSV with header ``lemma pos sense count``."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split("\t") != ["lemma", "pos", "sense", "count"]:
        raise ParseError(
            "expected header 'lemma\\tpos\\tsense\\tcount'", path=str(path), line=1
        )
    counts: dict[tuple[str, PosTag, SenseId], int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise ParseError("expected 4 columns", path=str(path), line=lineno)
        try:
            key = (cols[0].lower(), PosTag.parse(cols[1]), cols[2])
            counts[key] = counts.get(key, 0) + int(cols[3])
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path), line=lineno) from exc
    return counts


def polysemy_breakdown(
    judged: Sequence[JudgedInstance],
) -> dict[str, dict[str, float | int]]:
    """Error rate per candidate-count bucket; bucket totals partition the
    instances. Anything not judged correct counts as an error."""
    out: dict[str, dict[str, float | int]] = {}
    for bucket in POLYSEMY_BUCKETS:
        rows = [r for r in judged if polysemy_bucket(r.candidate_count) == bucket]
        correct = sum(1 for r in rows if r.judgment is Judgment.CORRECT)
        total = len(rows)
        out[bucket] = {
            "total": total,
            "errors": total - correct,
            "error_rate": (total - correct) / total if total else 0.0,
        }
    return out


def recall_at_k(
    retrievals: dict[str, Sequence[SenseId]],
    gold_keys: Sequence[GoldKey],
) -> float:
    """Fraction of gold-keyed instances whose gold set intersects the
    retrieved candidates. Instances without a retrieval entry count as
    misses; gold-less retrievals are ignored."""
    gold_by_id = {g.instance_id: g.gold_senses for g in gold_keys}
    relevant = [iid for iid in retrievals if iid in gold_by_id]
    if not relevant:
        return 0.0
    hits = sum(
        1 for iid in relevant if gold_by_id[iid] & set(retrievals[iid])
    )
    return hits / len(relevant)


# -- report rendering -------------------------------------------------------

CSV_HEADER = "slice,type,total,attempted,correct,precision,recall,f1"


def render_report(report: EvalReport, fmt: str = "tty") -> str:
    if fmt == "json":
        return json.dumps(
            {
                "slices": [
                    {
                        "slice": s.name,
                        "type": s.slice_type,
                        "total": s.total,
                        "attempted": s.attempted,
                        "correct": s.correct,
                        "precision": s.precision,
                        "recall": s.recall,
                        "f1": s.f1,
                    }
                    for s in report.slices
                ]
            },
            indent=2,
        )
    if fmt == "csv":
        rows = [CSV_HEADER]
        for s in report.slices:
            rows.append(
                f"{s.name},{s.slice_type},{s.total},{s.attempted},{s.correct},"
                f"{s.precision:.4f},{s.recall:.4f},{s.f1:.4f}"
            )
        return "\n".join(rows)
    if fmt == "tty":
        lines = [
            f"{'slice':<16} {'type':<10} {'total':>7} {'attempt':>7} "
            f"{'correct':>7} {'prec':>7} {'recall':>7} {'f1':>7}"
        ]
        for s in report.slices:
            lines.append(
                f"{s.name:<16} {s.slice_type:<10} {s.total:>7} {s.attempted:>7} "
                f"{s.correct:>7} {s.precision:>7.4f} {s.recall:>7.4f} {s.f1:>7.4f}"
            )
        return "\n".join(lines)
    raise ValueError(f"unknown report format: {fmt!r}")
