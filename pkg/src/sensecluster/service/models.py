"""Request/response models for the engine service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..config import EngineConfig


class GraphPaths(BaseModel):
    graph_nodes: str
    graph_edges: str
    inventory: str


class ViolationModel(BaseModel):
    lemma: str
    pos: str
    sense_i: str
    sense_j: str
    witness: str


class CheckGraphResponse(BaseModel):
    violations: list[ViolationModel]
    violation_count: int


class SeparateGraphRequest(GraphPaths):
    out_edges_path: str | None = None


class SeparationReportModel(BaseModel):
    edges_removed_direct: int
    edges_removed_shared: int
    affected_entries: list[dict]


class SeparateGraphResponse(BaseModel):
    report: SeparationReportModel
    edges_before: int
    edges_after: int
    out_edges_path: str | None = None


class GraphStatsResponse(BaseModel):
    nodes: int
    edges: int
    nodes_by_pos: dict[str, int]
    inventory_entries: int
    ambiguous_entries: int
    max_candidates: int
    mean_candidates: float
    separability_violations: int


class InstanceModel(BaseModel):
    id: str
    sentence: str
    target_start: int
    target_end: int
    lemma: str
    pos: str
    dataset: str | None = None


class DisambiguateRequest(BaseModel):
    engine: EngineConfig
    corpus_path: str | None = None
    instances: list[InstanceModel] | None = None
    gold_path: str | None = None
    out_path: str | None = None


class DisambiguateResponse(BaseModel):
    choices: list[dict]
    attempted: int
    total: int
    clamp_warnings: int
    out_path: str | None = None


class EvaluateRequest(BaseModel):
    engine: EngineConfig
    corpus_path: str
    gold_path: str
    mapping_path: str | None = None
    mfs_counts_path: str | None = None


class EvaluateResponse(BaseModel):
    report: dict
    rendered: str
    polysemy: dict
    warnings: list[str]
    clamp_warnings: int
    recall_at_k: float | None = None


class GenTrainRequest(BaseModel):
    engine: EngineConfig
    corpus_path: str
    gold_path: str
    out_prefix: str
    max_negatives_per_positive: int = Field(default=3, ge=1)
    max_members_per_class: int = Field(default=16, ge=1)


class GenTrainResponse(BaseModel):
    files: dict[str, str]
    manifest: str
    pair_counts: dict[str, int]
    label_counts: dict[str, dict[str, int]]
    skipped: list[tuple[str, str]]


class WireScoreItem(BaseModel):
    id: str
    context: str
    target_start: int
    target_end: int
    gloss: str


class WireScoreRequest(BaseModel):
    batch: list[WireScoreItem]


class WireScoreResponse(BaseModel):
    scores: list[dict]
