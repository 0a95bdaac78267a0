"""JSON recommendation service.

POST /predict-command   {sequent, history, top_n} -> ranked command hypotheses
POST /retrieve-lemmas   {sequent, top_k, scorer}  -> ranked lemmas
GET  /health            loaded artifact fingerprints

Responses are deterministic for a fixed artifact bundle: inference only, no
sampling, no state mutation.
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from proofrec.artifacts import ServiceBundle
from proofrec.corpus import SequentState, TraceFormatError, term_from_obj
from proofrec.encoder.model import classify_command
from proofrec.featurize import featurize_for_command
from proofrec.retrieval import rank_lemmas


class TermModel(BaseModel):
    k: Literal["op", "var", "const", "int"]
    n: str | None = None
    t: str | None = None
    v: int | None = None
    c: list["TermModel"] | None = None


class SequentModel(BaseModel):
    ant: list[TermModel] = Field(default_factory=list)
    cons: list[TermModel] = Field(default_factory=list)
    hid: list[TermModel] = Field(default_factory=list)


class PredictRequest(BaseModel):
    sequent: SequentModel
    history: list[str] = Field(default_factory=list)
    top_n: int = Field(default=5, ge=1)


class Hypothesis(BaseModel):
    command: str
    probability: float


class PredictResponse(BaseModel):
    hypotheses: list[Hypothesis]
    model_fingerprint: str


class LemmaRequest(BaseModel):
    sequent: SequentModel
    top_k: int = Field(default=10, ge=1)
    scorer: str = "siamese"


class LemmaHit(BaseModel):
    lemma_id: str
    theory: str
    score: float


class LemmaResponse(BaseModel):
    results: list[LemmaHit]


def _to_sequent(model: SequentModel) -> SequentState:
    try:
        regions = {
            key: tuple(
                term_from_obj(t.model_dump(exclude_none=True), f"sequent.{key}")
                for t in getattr(model, key)
            )
            for key in ("ant", "cons", "hid")
        }
        return SequentState(regions["ant"], regions["cons"], regions["hid"])
    except (TraceFormatError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"sequent: {exc}") from exc


def build_app(bundle: ServiceBundle) -> FastAPI:
    app = FastAPI(title="proofrec", version="0.1.0")

    @app.get("/health")
    def health():
        return {"status": "ok", "fingerprints": bundle.fingerprints}

    @app.post("/predict-command", response_model=PredictResponse)
    def predict_command(req: PredictRequest):
        sequent = _to_sequent(req.sequent)
        stream = featurize_for_command(sequent, tuple(req.history),
                                       bundle.featurizer)
        ids = bundle.codec.encode(stream)
        ids = ids[: bundle.command_params.config.max_len]
        ranked = classify_command(ids, bundle.command_params, bundle.commands)
        return PredictResponse(
            hypotheses=[Hypothesis(command=c, probability=p)
                        for c, p in ranked[: req.top_n]],
            model_fingerprint=bundle.command_fp,
        )

    @app.post("/retrieve-lemmas", response_model=LemmaResponse)
    def retrieve_lemmas(req: LemmaRequest):
        if bundle.index is None:
            raise HTTPException(status_code=503,
                                detail="lemma index not loaded")
        if req.scorer not in bundle.index.scorers:
            raise HTTPException(
                status_code=400,
                detail=f"unknown scorer {req.scorer!r}; "
                       f"available: {bundle.index.scorers}")
        sequent = _to_sequent(req.sequent)
        result = rank_lemmas(sequent, bundle.index, req.scorer,
                             top_k=req.top_k)
        return LemmaResponse(results=[
            LemmaHit(lemma_id=lid, theory=bundle.index.by_id[lid].theory,
                     score=score)
            for lid, score in result.entries
        ])

    return app


def serve(workdir, host: str = "127.0.0.1", port: int = 8040) -> None:
    """Load artifacts (refusing mismatched fingerprints) and run the app."""
    import uvicorn

    from proofrec.artifacts import load_bundle

    bundle = load_bundle(workdir)
    uvicorn.run(build_app(bundle), host=host, port=port, log_level="warning")
