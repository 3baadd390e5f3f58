"""HTTP/JSON API for the post-editing workbench.

The service wraps the core engine: project lifecycle, TM/termbase upload,
document segmentation, per-segment interactive completion and confirmation
with real-time TM merge. Completion responses carry a monotonically
increasing revision echo so a client can drop answers that arrive late.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..engine import CompletionResult, TranslationEngine
from ..tokenizer import detokenize
from .schemas import (
    CompleteRequest,
    CompleteResponse,
    ConfirmRequest,
    ConfirmResponse,
    CreateProjectRequest,
    DecodeApiRequest,
    DecodeApiResponse,
    DocumentRequest,
    GhostTokenOut,
    HypothesisOut,
    ProjectOut,
    ProjectSettings,
    SegmentOut,
    SuggestionsOut,
    TermHitOut,
    TmMatchOut,
    UploadRequest,
    UploadResponse,
)
from .state import ModelBundle, Project, Segment, ServiceError, Workspace, settings_to_engine


def _project_out(project: Project) -> ProjectOut:
    return ProjectOut(
        id=project.id, name=project.name,
        settings=ProjectSettings.model_validate(project.settings),
        tm_entries=len(project.tm_store), term_entries=len(project.termbase),
    )


def _tm_match_out(match) -> TmMatchOut | None:
    if match is None:
        return None
    return TmMatchOut(source=match.entry.source, target=match.entry.target,
                      match_rate=match.match_rate, origin=match.entry.origin)


def _term_hits_out(hits) -> list[TermHitOut]:
    return [TermHitOut(source_term=t.source_term, target_term=t.target_term, offset=off)
            for t, off in hits]


def _segment_out(workspace: Workspace, project: Project, segment: Segment) -> SegmentOut:
    match = project.tm_store.best_match(
        segment.source, settings_to_engine(project.settings).min_match_rate)
    from ..termbase import find_terms

    return SegmentOut(
        id=segment.id, project_id=project.id, source=segment.source,
        mt_draft=segment.mt_draft, current_target=segment.current_target,
        status=segment.status, tm_match=_tm_match_out(match),
        term_hits=_term_hits_out(find_terms(project.termbase, segment.source)),
    )


def _hypotheses_out(result, vocab) -> list[HypothesisOut]:
    return [
        HypothesisOut(tokens=list(h.tokens.ids), detok=detokenize(h.tokens, vocab),
                      probs=list(h.per_token_prob), score=h.score)
        for h in result.nbest
    ]


def create_app(model_dir: str | Path, data_dir: str | Path,
               frontend_dist: str | Path | None = None) -> FastAPI:
    bundle = ModelBundle.load(model_dir)
    workspace = Workspace(bundle, data_dir)
    app = FastAPI(title="imtkit", version="0.1.0")
    app.state.workspace = workspace

    @app.exception_handler(ServiceError)
    async def service_error_handler(_: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(_: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(p) for p in first.get("loc", ()))
        return JSONResponse(status_code=422, content={
            "code": "validation_error",
            "message": f"{where}: {first.get('msg', 'invalid request')}",
        })

    @app.post("/projects", response_model=ProjectOut)
    def create_project(req: CreateProjectRequest):
        settings = req.settings.model_dump(by_alias=True)
        project = workspace.create_project(req.name, settings)
        return _project_out(project)

    @app.get("/projects", response_model=list[ProjectOut])
    def list_projects():
        return [_project_out(p) for p in workspace.projects.values()]

    @app.get("/projects/{project_id}", response_model=ProjectOut)
    def get_project(project_id: int):
        return _project_out(workspace.project(project_id))

    @app.get("/projects/{project_id}/settings", response_model=ProjectSettings)
    def get_settings(project_id: int):
        return ProjectSettings.model_validate(workspace.project(project_id).settings)

    @app.put("/projects/{project_id}/settings", response_model=ProjectSettings)
    def put_settings(project_id: int, settings: ProjectSettings):
        project = workspace.project(project_id)
        workspace.update_settings(project, settings.model_dump(by_alias=True))
        return settings

    @app.post("/projects/{project_id}/tm", response_model=UploadResponse)
    def upload_tm(project_id: int, req: UploadRequest):
        added, warnings = workspace.upload_tm(workspace.project(project_id), req.content)
        return UploadResponse(added=added, warnings=warnings)

    @app.post("/projects/{project_id}/termbase", response_model=UploadResponse)
    def upload_termbase(project_id: int, req: UploadRequest):
        added, warnings = workspace.upload_termbase(workspace.project(project_id), req.content)
        return UploadResponse(added=added, warnings=warnings)

    @app.post("/projects/{project_id}/document", response_model=list[SegmentOut])
    def ingest_document(project_id: int, req: DocumentRequest):
        project = workspace.project(project_id)
        segments = workspace.ingest_document(project, req.text)
        return [_segment_out(workspace, project, s) for s in segments]

    @app.get("/projects/{project_id}/segments", response_model=list[SegmentOut])
    def list_segments(project_id: int):
        project = workspace.project(project_id)
        return [_segment_out(workspace, project, s) for s in project.segments.values()]

    @app.get("/segments/{segment_id}", response_model=SegmentOut)
    def get_segment(segment_id: int):
        segment = workspace.segment(segment_id)
        project = workspace.project(segment.project_id)
        return _segment_out(workspace, project, segment)

    @app.post("/segments/{segment_id}/complete", response_model=CompleteResponse)
    def complete_segment(segment_id: int, req: CompleteRequest):
        segment = workspace.segment(segment_id)
        if segment.status == "confirmed":
            raise ServiceError(409, "segment_confirmed",
                               "confirmed segments are immutable")
        project = workspace.project(segment.project_id)
        engine = workspace.engine_for(project, seed=req.seed or 0)
        workspace.mark_editing(segment)
        result: CompletionResult = engine.complete(
            segment.source, req.locked_text, req.dangling, seed=req.seed)
        revision = workspace.bump_revision(segment)
        vocab = bundle.tgt_vocab
        inline = result.decode.nbest[0]
        ghost = detokenize(inline.tokens.ids[result.decode.completion_end:], vocab)
        ghost_tokens = [
            GhostTokenOut(text=vocab.surface(token_id),
                          word_initial=vocab.is_word_initial(token_id),
                          prob=inline.per_token_prob[idx])
            for idx, token_id in enumerate(inline.tokens.ids)
            if idx >= result.decode.completion_end and not vocab.is_special(token_id)
        ]
        # the highlighted run only ever covers visible tokens, never eos
        highlight_len = min(result.suggestions.highlight_len, len(ghost_tokens))
        return CompleteResponse(
            segment_id=segment.id,
            revision=revision,
            engine=result.engine,
            nbest=_hypotheses_out(result.decode, vocab),
            completed_word=result.decode.completed_word,
            ghost_text=ghost,
            ghost_tokens=ghost_tokens,
            highlight_len=highlight_len,
            suggestions=SuggestionsOut(
                inline_preview=result.suggestions.inline_preview,
                alternates=result.suggestions.alternates,
                lm_suggestion=result.suggestions.lm_suggestion,
                highlight_len=result.suggestions.highlight_len,
            ),
            tm_match=_tm_match_out(result.tm_match),
            term_hits=_term_hits_out(result.term_hits),
        )

    @app.post("/segments/{segment_id}/confirm", response_model=ConfirmResponse)
    def confirm_segment(segment_id: int, req: ConfirmRequest):
        segment = workspace.segment(segment_id)
        tm_entry_id = workspace.confirm_segment(segment, req.final_target)
        return ConfirmResponse(segment_id=segment.id, status=segment.status,
                               tm_entry_id=tm_entry_id)

    @app.post("/decode", response_model=DecodeApiResponse)
    def decode(req: DecodeApiRequest):
        settings = settings_to_engine({"engine": req.engine, "beam": req.beam,
                                       "min_match_rate": 0.0}, seed=req.seed)
        engine = TranslationEngine(bundle.model, bundle.lm, settings=settings)
        result, _ = engine.decode(req.source, req.locked, req.dangling, beam=req.beam)
        return DecodeApiResponse(nbest=_hypotheses_out(result, bundle.tgt_vocab),
                                 completed_word=result.completed_word)

    if frontend_dist is not None and Path(frontend_dist).is_dir():
        app.mount("/ui", StaticFiles(directory=str(frontend_dist), html=True), name="ui")

    return app
