"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field, field_validator


class KnnSettings(BaseModel):
    k: int = 4
    lam: float = Field(default=0.4, alias="lambda")
    temperature: float = 5.0
    tau: float = 5.0

    model_config = {"populate_by_name": True}


class ProjectSettings(BaseModel):
    min_match_rate: float = 0.7
    engine: str = "plain"
    knn: KnnSettings = Field(default_factory=KnnSettings)
    beam: int = 4
    highlight_threshold: float = 0.6

    @field_validator("engine")
    @classmethod
    def _engine_known(cls, v: str) -> str:
        if v == "tm":
            v = "tm_conditioned"
        if v not in ("plain", "tm_conditioned", "knn"):
            raise ValueError("engine must be plain, tm_conditioned or knn")
        return v

    @field_validator("min_match_rate", "highlight_threshold")
    @classmethod
    def _fraction(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("must be a fraction in [0, 1]")
        return v

    @field_validator("beam")
    @classmethod
    def _beam_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("beam must be >= 1")
        return v


class CreateProjectRequest(BaseModel):
    name: str
    settings: ProjectSettings = Field(default_factory=ProjectSettings)


class ProjectOut(BaseModel):
    id: int
    name: str
    settings: ProjectSettings
    tm_entries: int
    term_entries: int


class UploadRequest(BaseModel):
    content: str


class UploadResponse(BaseModel):
    added: int
    warnings: list[str]


class DocumentRequest(BaseModel):
    text: str


class TmMatchOut(BaseModel):
    source: str
    target: str
    match_rate: float
    origin: str


class TermHitOut(BaseModel):
    source_term: str
    target_term: str
    offset: int


class SegmentOut(BaseModel):
    id: int
    project_id: int
    source: str
    mt_draft: str
    current_target: str
    status: str
    tm_match: TmMatchOut | None = None
    term_hits: list[TermHitOut] = Field(default_factory=list)


class CompleteRequest(BaseModel):
    locked_text: str = ""
    dangling: str | None = None
    seed: int | None = None


class HypothesisOut(BaseModel):
    tokens: list[int]
    detok: str
    probs: list[float]
    score: float


class SuggestionsOut(BaseModel):
    inline_preview: str
    alternates: list[str]
    lm_suggestion: str | None
    highlight_len: int


class GhostTokenOut(BaseModel):
    """One visible token of the pending completion, with its confidence."""

    text: str
    word_initial: bool
    prob: float


class CompleteResponse(BaseModel):
    segment_id: int
    revision: int
    engine: str
    nbest: list[HypothesisOut]
    completed_word: str | None
    ghost_text: str
    ghost_tokens: list[GhostTokenOut]
    highlight_len: int
    suggestions: SuggestionsOut
    tm_match: TmMatchOut | None
    term_hits: list[TermHitOut]


class ConfirmRequest(BaseModel):
    final_target: str


class ConfirmResponse(BaseModel):
    segment_id: int
    status: str
    tm_entry_id: int | None


class DecodeApiRequest(BaseModel):
    """Stateless decode wire format shared with the CLI batch path."""

    source: str
    locked: str = ""
    dangling: str | None = None
    engine: str = "plain"
    beam: int = 4
    seed: int = 0

    @field_validator("engine")
    @classmethod
    def _engine_known(cls, v: str) -> str:
        if v == "tm":
            v = "tm_conditioned"
        if v not in ("plain", "tm_conditioned", "knn"):
            raise ValueError("engine must be plain, tm or knn")
        return v


class DecodeApiResponse(BaseModel):
    nbest: list[HypothesisOut]
    completed_word: str | None = None


class ErrorBody(BaseModel):
    code: str
    message: str
