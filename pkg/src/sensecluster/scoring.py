"""Definition-relevance scorers and the sandwich-scorer/1 wire client.

An engine carries one scorer per slot: the verb-side and nonverb-side models
that each grade every class member, plus an optional coarse slot used for
top-K retrieval. Backends are either the deterministic in-process gloss
overlap baseline or an external process/endpoint speaking sandwich-scorer/1
(newline-delimited JSON over stdio, or HTTP POST /score).
"""

from __future__ import annotations

import enum
import json
import logging
import math
import re
import shlex
import subprocess
import threading
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .errors import BackendUnavailable, ConfigError, ProtocolError

log = logging.getLogger(__name__)

PROTOCOL_NAME = "sandwich-scorer/1"
WIRE_BATCH_LIMIT = 64

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str, stopwords: frozenset[str] | None = None) -> frozenset[str]:
    """Lowercased maximal alphanumeric runs, as a set. No stemming."""
    tokens = frozenset(m.group(0) for m in _TOKEN_RE.finditer(text.lower()))
    if stopwords:
        tokens -= stopwords
    return tokens


def gloss_overlap_score(
    context: str, gloss: str, stopwords: frozenset[str] | None = None
) -> float:
    """Overlap coefficient between context and gloss token sets, in [0, 1]."""
    t_context = tokenize(context, stopwords)
    t_gloss = tokenize(gloss, stopwords)
    if not t_context or not t_gloss:
        return 0.0
    return len(t_context & t_gloss) / min(len(t_context), len(t_gloss))


def load_stopwords(path: str | Path) -> frozenset[str]:
    words = Path(path).read_text(encoding="utf-8").split()
    return frozenset(w.lower() for w in words)


class SlotRole(enum.Enum):
    VERB_SIDE = "VERB_SIDE"
    NONVERB_SIDE = "NONVERB_SIDE"
    COARSE = "COARSE"


@dataclass(frozen=True)
class ScoreRequest:
    """One sentence/definition pair to grade.

    ``instance_id`` and ``sense`` are engine-side bookkeeping used to join
    results and by the oracle backend; they are never serialized on the wire.
    """

    id: str
    context: str
    target_start: int
    target_end: int
    gloss: str
    instance_id: str = ""
    sense: str = ""

    def __post_init__(self) -> None:
        if not (0 <= self.target_start < self.target_end <= len(self.context)):
            raise ValueError(
                f"request {self.id}: bad target offsets "
                f"[{self.target_start}, {self.target_end}) for context of "
                f"length {len(self.context)}"
            )

    def wire_dict(self) -> dict:
        return {
            "id": self.id,
            "context": self.context,
            "target_start": self.target_start,
            "target_end": self.target_end,
            "gloss": self.gloss,
        }


@dataclass(frozen=True)
class CombinedScore:
    """Verb-side plus nonverb-side score for one class member."""

    sense: str
    e_v: float
    e_vbar: float
    s: float = field(init=False)

    def __post_init__(self) -> None:
        if not (0.0 <= self.e_v <= 1.0) or not (0.0 <= self.e_vbar <= 1.0):
            raise ValueError(
                f"component scores out of range: e_v={self.e_v}, e_vbar={self.e_vbar}"
            )
        object.__setattr__(self, "s", self.e_v + self.e_vbar)


def combine(sense: str, e_v: float, e_vbar: float) -> CombinedScore:
    """Sum the two slot scores for one member. Inputs must be pre-clamped."""
    return CombinedScore(sense=sense, e_v=e_v, e_vbar=e_vbar)


# -- backends ----------------------------------------------------------------


class Scorer:
    """Stateless batch scorer. Subclasses return raw scores keyed by request id;
    range clamping and the warning counter live in :func:`score_batch`."""

    name = "scorer"

    def raw_scores(self, requests: Sequence[ScoreRequest]) -> dict[str, float]:
        raise NotImplementedError

    def close(self) -> None:
        pass


class GlossOverlapScorer(Scorer):
    name = "gloss-overlap"

    def __init__(self, stopwords: frozenset[str] | None = None):
        self.stopwords = stopwords

    def raw_scores(self, requests: Sequence[ScoreRequest]) -> dict[str, float]:
        return {
            r.id: gloss_overlap_score(r.context, r.gloss, self.stopwords)
            for r in requests
        }


class ConstScorer(Scorer):
    """Fixed-value backend, mostly useful to exercise tie-breaking."""

    def __init__(self, value: float):
        self.value = value
        self.name = f"const:{value}"

    def raw_scores(self, requests: Sequence[ScoreRequest]) -> dict[str, float]:
        return {r.id: self.value for r in requests}


class OracleScorer(Scorer):
    """Scores 1.0 for members of the gold candidate's cluster, else 0.0.

    Needs the separated graph (cluster membership is the gold candidate's
    closed neighborhood there) and the gold keys. Requests must carry their
    engine-side ``instance_id`` and ``sense``.
    """

    name = "oracle"

    def __init__(self, graph, gold: dict[str, set[str]]):
        self.graph = graph
        self.gold = gold

    def raw_scores(self, requests: Sequence[ScoreRequest]) -> dict[str, float]:
        out: dict[str, float] = {}
        for r in requests:
            out[r.id] = 0.0
            for g in self.gold.get(r.instance_id, ()):
                if g in self.graph and r.sense in self.graph.closed_neighborhood(g):
                    out[r.id] = 1.0
                    break
        return out


class ExternalProcessScorer(Scorer):
    """sandwich-scorer/1 client over a subprocess's stdio.

    The server must emit its handshake line on start; one batch is in flight
    at a time per process.
    """

    def __init__(self, command: str):
        self.command = command
        self.name = f"cmd:{command}"
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is not None and self._proc.poll() is None:
            return self._proc
        try:
            self._proc = subprocess.Popen(
                shlex.split(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise BackendUnavailable(f"cannot start scorer {self.command!r}: {exc}") from exc
        handshake = self._read_line(self._proc)
        try:
            header = json.loads(handshake)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"bad handshake line: {handshake!r}") from exc
        if "error" in header:
            raise BackendUnavailable(f"scorer failed to start: {header['error']}")
        if header.get("protocol") != PROTOCOL_NAME:
            raise ProtocolError(
                f"unsupported protocol {header.get('protocol')!r}, "
                f"expected {PROTOCOL_NAME!r}"
            )
        self.name = str(header.get("name", self.name))
        return self._proc

    def _read_line(self, proc: subprocess.Popen) -> str:
        line = proc.stdout.readline()
        if not line:
            code = proc.poll()
            raise BackendUnavailable(
                f"scorer {self.command!r} closed its stream (exit={code})"
            )
        return line

    def raw_scores(self, requests: Sequence[ScoreRequest]) -> dict[str, float]:
        with self._lock:
            proc = self._ensure_started()
            payload = json.dumps({"batch": [r.wire_dict() for r in requests]})
            try:
                proc.stdin.write(payload + "\n")
                proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise BackendUnavailable(f"scorer {self.command!r} pipe broke") from exc
            return parse_score_response(self._read_line(proc))

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._proc = None


class ExternalHttpScorer(Scorer):
    """sandwich-scorer/1 client over HTTP POST /score."""

    def __init__(
        self,
        url: str,
        client: httpx.Client | None = None,
        in_flight_limit: int = 4,
        timeout: float = 60.0,
    ):
        self.url = url
        self.name = f"http:{url}"
        self._client = client or httpx.Client(timeout=timeout)
        self._slots = threading.Semaphore(in_flight_limit)

    def raw_scores(self, requests: Sequence[ScoreRequest]) -> dict[str, float]:
        payload = {"batch": [r.wire_dict() for r in requests]}
        with self._slots:
            try:
                response = self._client.post(self.url, json=payload)
            except httpx.HTTPError as exc:
                raise BackendUnavailable(f"scorer endpoint {self.url} unreachable: {exc}") from exc
        if response.status_code >= 500:
            raise BackendUnavailable(
                f"scorer endpoint {self.url} returned {response.status_code}"
            )
        if response.status_code >= 400:
            raise ProtocolError(
                f"scorer endpoint {self.url} rejected the batch "
                f"({response.status_code}): {response.text[:200]}"
            )
        return parse_score_response(response.text)

    def close(self) -> None:
        self._client.close()


def parse_score_response(text: str) -> dict[str, float]:
    """Decode one response message into {id: raw score}."""
    try:
        message = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed response: {text[:200]!r}") from exc
    if not isinstance(message, dict):
        raise ProtocolError(f"response is not an object: {text[:200]!r}")
    if "error" in message:
        raise ProtocolError(f"scorer error: {message['error']}")
    scores = message.get("scores")
    if not isinstance(scores, list):
        raise ProtocolError("response missing 'scores' list")
    out: dict[str, float] = {}
    for item in scores:
        if not isinstance(item, dict) or "id" not in item or "score" not in item:
            raise ProtocolError(f"bad score item: {item!r}")
        value = item["score"]
        if not isinstance(value, (int, float)) or isinstance(value, bool) or math.isnan(value):
            raise ProtocolError(f"non-numeric score for id {item['id']!r}: {value!r}")
        out[str(item["id"])] = float(value)
    return out


def score_batch(
    scorer: Scorer, requests: Sequence[ScoreRequest]
) -> list[tuple[str, float]]:
    """Score a batch, preserving request order in the output.

    Requests are chunked to the 64-per-message wire limit. Out-of-range
    scores are clamped to [0, 1]; each clamp increments the module-wide
    warning counter and logs once per batch.
    """
    if not requests:
        raise ValueError("score_batch requires a non-empty request list")
    ids = [r.id for r in requests]
    if len(set(ids)) != len(ids):
        raise ValueError("request ids must be unique within a batch")

    scores: dict[str, float] = {}
    for start in range(0, len(requests), WIRE_BATCH_LIMIT):
        chunk = requests[start : start + WIRE_BATCH_LIMIT]
        raw = scorer.raw_scores(chunk)
        missing = [r.id for r in chunk if r.id not in raw]
        if missing:
            raise ProtocolError(f"scorer {scorer.name} omitted ids: {missing[:5]}")
        unknown = set(raw) - {r.id for r in chunk}
        if unknown:
            raise ProtocolError(
                f"scorer {scorer.name} returned unknown ids: {sorted(unknown)[:5]}"
            )
        clamped_here = 0
        for rid, value in raw.items():
            if value < 0.0 or value > 1.0:
                clamped_here += 1
                value = min(1.0, max(0.0, value))
            scores[rid] = value
        if clamped_here:
            _note_clamped(scorer.name, clamped_here)
    return [(rid, scores[rid]) for rid in ids]


_clamp_lock = threading.Lock()
clamp_warnings = 0


def _note_clamped(name: str, count: int) -> None:
    global clamp_warnings
    with _clamp_lock:
        clamp_warnings += count
    log.warning("scorer %s returned %d out-of-range score(s); clamped", name, count)


def reset_clamp_warnings() -> int:
    """Return the counter's value and zero it (used by run summaries)."""
    global clamp_warnings
    with _clamp_lock:
        count, clamp_warnings = clamp_warnings, 0
    return count


# -- backend spec strings ------------------------------------------------


def parse_backend(
    spec: str,
    *,
    graph=None,
    gold: dict[str, set[str]] | None = None,
    stopwords: frozenset[str] | None = None,
    http_client: httpx.Client | None = None,
    in_flight_limit: int = 4,
) -> Scorer:
    """Build a scorer from its config string.

    Accepted forms: ``gloss`` (alias ``gloss-overlap``), ``const:VALUE``,
    ``oracle`` / ``oracle:GOLD_PATH``, ``cmd:COMMAND LINE``, and
    ``http://...`` / ``https://...``.
    """
    spec = spec.strip()
    if spec in ("gloss", "gloss-overlap"):
        return GlossOverlapScorer(stopwords=stopwords)
    if spec.startswith("const:"):
        try:
            return ConstScorer(float(spec.split(":", 1)[1]))
        except ValueError:
            raise ConfigError(f"bad const scorer spec: {spec!r}") from None
    if spec == "oracle" or spec.startswith("oracle:"):
        if graph is None:
            raise ConfigError("oracle scorer needs a loaded graph")
        if spec.startswith("oracle:"):
            from .evaluation import load_gold  # local import to avoid a cycle

            gold_keys = load_gold(spec.split(":", 1)[1])
            gold = {g.instance_id: set(g.gold_senses) for g in gold_keys}
        if gold is None:
            raise ConfigError(
                "oracle scorer needs gold keys (use oracle:PATH or pass --gold)"
            )
        return OracleScorer(graph, gold)
    if spec.startswith("cmd:"):
        command = spec.split(":", 1)[1].strip()
        if not command:
            raise ConfigError("cmd: scorer spec has an empty command")
        return ExternalProcessScorer(command)
    if spec.startswith(("http://", "https://")):
        return ExternalHttpScorer(spec, client=http_client, in_flight_limit=in_flight_limit)
    raise ConfigError(f"unknown scorer backend spec: {spec!r}")


def close_all(scorers: Iterable[Scorer]) -> None:
    seen: set[int] = set()
    for s in scorers:
        if id(s) not in seen:
            seen.add(id(s))
            s.close()
