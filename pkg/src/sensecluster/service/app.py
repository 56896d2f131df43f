"""FastAPI service wrapping the disambiguation engine.

Run it with ``uvicorn --factory sensecluster.service:create_app``. Paths in
request bodies are resolved on the service host. The /score endpoint makes
the service itself a valid sandwich-scorer/1 HTTP backend (gloss-overlap).
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, pipeline
from ..errors import InputError, SenseClusterError
from ..scoring import gloss_overlap_score
from . import models


def create_app() -> FastAPI:
    app = FastAPI(
        title="sensecluster",
        version=__version__,
        description="Word sense disambiguation over separable sense clusters",
    )

    @app.exception_handler(SenseClusterError)
    async def _domain_errors(request: Request, exc: SenseClusterError) -> JSONResponse:
        status = 400 if isinstance(exc, InputError) else 409
        return JSONResponse(
            status_code=status,
            content={
                "detail": {
                    "kind": type(exc).__name__,
                    "message": str(exc),
                    "retriable": bool(getattr(exc, "retriable", False)),
                }
            },
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/graph/check", response_model=models.CheckGraphResponse)
    def graph_check(body: models.GraphPaths) -> models.CheckGraphResponse:
        result = pipeline.check_graph(body.graph_nodes, body.graph_edges, body.inventory)
        return models.CheckGraphResponse(**result)

    @app.post("/graph/separate", response_model=models.SeparateGraphResponse)
    def graph_separate(body: models.SeparateGraphRequest) -> models.SeparateGraphResponse:
        result = pipeline.separate_graph(
            body.graph_nodes, body.graph_edges, body.inventory, body.out_edges_path
        )
        return models.SeparateGraphResponse(**result)

    @app.post("/graph/stats", response_model=models.GraphStatsResponse)
    def graph_stats(body: models.GraphPaths) -> models.GraphStatsResponse:
        result = pipeline.graph_stats(body.graph_nodes, body.graph_edges, body.inventory)
        return models.GraphStatsResponse(**result)

    @app.post("/disambiguate", response_model=models.DisambiguateResponse)
    def disambiguate(body: models.DisambiguateRequest) -> models.DisambiguateResponse:
        result = pipeline.run_disambiguate(
            body.engine,
            corpus_path=body.corpus_path,
            instances=(
                [i.model_dump() for i in body.instances] if body.instances else None
            ),
            gold_path=body.gold_path,
            out_path=body.out_path,
        )
        return models.DisambiguateResponse(**result)

    @app.post("/evaluate", response_model=models.EvaluateResponse)
    def evaluate(body: models.EvaluateRequest) -> models.EvaluateResponse:
        result = pipeline.run_evaluate(
            body.engine,
            corpus_path=body.corpus_path,
            gold_path=body.gold_path,
            mapping_path=body.mapping_path,
            mfs_counts_path=body.mfs_counts_path,
        )
        return models.EvaluateResponse(**result)

    @app.post("/gen-train", response_model=models.GenTrainResponse)
    def gen_train(body: models.GenTrainRequest) -> models.GenTrainResponse:
        result = pipeline.run_gen_train(
            body.engine,
            corpus_path=body.corpus_path,
            gold_path=body.gold_path,
            out_prefix=body.out_prefix,
            max_negatives_per_positive=body.max_negatives_per_positive,
            max_members_per_class=body.max_members_per_class,
        )
        return models.GenTrainResponse(**result)

    @app.post("/score", response_model=models.WireScoreResponse)
    def score(body: models.WireScoreRequest) -> models.WireScoreResponse:
        scores = [
            {"id": item.id, "score": gloss_overlap_score(item.context, item.gloss)}
            for item in body.batch
        ]
        return models.WireScoreResponse(scores=scores)

    return app


# Module-level app for `uvicorn sensecluster.service.app:app`.
app = create_app()
