"""Project registry with JSONL append-log persistence.

Everything that mutates state is an appended event: project creation,
settings updates, segment ingestion, confirmation. TM and termbase uploads
go to per-project logs owned by their stores. Replaying the logs after a
restart reproduces the registry exactly; completions are read-only and
leave no events behind.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from ..engine import EngineSettings, TranslationEngine
from ..knn_augment import KnnConfig
from ..model_core import BigramLM, LexiconModel, load_lexicon_model, load_toy_lm
from ..termbase import Termbase
from ..tm_index import TmStore, parse_pairs
from ..tokenizer import Vocabulary, normalize_ws

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?。！？])\s+")


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class ModelBundle:
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    model: LexiconModel
    lm: BigramLM | None

    @classmethod
    def load(cls, model_dir: str | Path) -> "ModelBundle":
        model_dir = Path(model_dir)
        src_vocab = Vocabulary.load(model_dir / "vocab_src.json")
        tgt_vocab = Vocabulary.load(model_dir / "vocab_tgt.json")
        model = load_lexicon_model(model_dir / "lexicon_model.json", src_vocab, tgt_vocab)
        lm_path = model_dir / "lm.json"
        lm = load_toy_lm(lm_path, tgt_vocab) if lm_path.exists() else None
        return cls(src_vocab, tgt_vocab, model, lm)


@dataclass
class Segment:
    id: int
    project_id: int
    source: str
    mt_draft: str
    current_target: str
    status: str = "drafted"  # drafted | editing | confirmed
    revision: int = 0

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "project_id": self.project_id,
            "source": self.source,
            "mt_draft": self.mt_draft,
            "current_target": self.current_target,
            "status": self.status,
        }


@dataclass
class Project:
    id: int
    name: str
    settings: dict
    tm_store: TmStore
    termbase: Termbase
    segments: dict[int, Segment] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


def split_segments(text: str) -> list[str]:
    """Sentence segmentation on terminators and newlines."""
    out: list[str] = []
    for line in text.splitlines():
        for part in _SENTENCE_SPLIT.split(line):
            part = normalize_ws(part)
            if part:
                out.append(part)
    return out


def settings_to_engine(settings: dict, seed: int = 0) -> EngineSettings:
    knn = settings.get("knn", {})
    return EngineSettings(
        engine=settings.get("engine", "plain"),
        min_match_rate=settings.get("min_match_rate", 0.7),
        beam=settings.get("beam", 4),
        highlight_threshold=settings.get("highlight_threshold", 0.6),
        knn=KnnConfig(
            k=knn.get("k", 4),
            lam=knn.get("lambda", knn.get("lam", 0.4)),
            temperature=knn.get("temperature", 5.0),
            tau=knn.get("tau", 5.0),
        ),
        seed=seed,
    )


class Workspace:
    """All projects plus the shared model bundle and the event logs."""

    def __init__(self, bundle: ModelBundle, data_dir: str | Path):
        self.bundle = bundle
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.projects: dict[int, Project] = {}
        self.segments: dict[int, Segment] = {}
        self._next_project_id = 0
        self._next_segment_id = 0
        self._lock = threading.Lock()
        self._replay()

    # -- persistence ----------------------------------------------------------

    def _projects_log(self) -> Path:
        return self.data_dir / "projects.jsonl"

    def _segments_log(self, project_id: int) -> Path:
        return self.data_dir / f"project_{project_id}_segments.jsonl"

    def _tm_log(self, project_id: int) -> Path:
        return self.data_dir / f"project_{project_id}_tm.jsonl"

    def _termbase_log(self, project_id: int) -> Path:
        return self.data_dir / f"project_{project_id}_termbase.jsonl"

    def _append(self, path: Path, event: dict) -> None:
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def _replay(self) -> None:
        log = self._projects_log()
        if log.exists():
            for line in log.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                event = json.loads(line)
                if event["event"] == "create":
                    self._restore_project(event["project"])
                elif event["event"] == "settings":
                    self.projects[event["project_id"]].settings = event["settings"]
        for project in self.projects.values():
            seg_log = self._segments_log(project.id)
            if not seg_log.exists():
                continue
            for line in seg_log.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                event = json.loads(line)
                if event["event"] == "ingest":
                    data = event["segment"]
                    segment = Segment(
                        id=data["id"], project_id=data["project_id"], source=data["source"],
                        mt_draft=data["mt_draft"], current_target=data["current_target"],
                        status=data["status"],
                    )
                    project.segments[segment.id] = segment
                    self.segments[segment.id] = segment
                    self._next_segment_id = max(self._next_segment_id, segment.id + 1)
                elif event["event"] == "status":
                    self.segments[event["segment_id"]].status = event["status"]
                elif event["event"] == "confirm":
                    segment = self.segments[event["segment_id"]]
                    segment.status = "confirmed"
                    segment.current_target = event["final_target"]

    def _restore_project(self, data: dict) -> None:
        project = Project(
            id=data["id"],
            name=data["name"],
            settings=data["settings"],
            tm_store=TmStore.load(self._tm_log(data["id"])),
            termbase=self._load_termbase(data["id"]),
        )
        self.projects[project.id] = project
        self._next_project_id = max(self._next_project_id, project.id + 1)

    def _load_termbase(self, project_id: int) -> Termbase:
        termbase = Termbase()
        log = self._termbase_log(project_id)
        if log.exists():
            pairs = []
            for line in log.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    rec = json.loads(line)
                    pairs.append((rec["source_term"], rec["target_term"]))
            termbase.add_terms(pairs)
        return termbase

    # -- lookups ---------------------------------------------------------------

    def project(self, project_id: int) -> Project:
        try:
            return self.projects[project_id]
        except KeyError:
            raise ServiceError(404, "project_not_found", f"no project with id {project_id}")

    def segment(self, segment_id: int) -> Segment:
        try:
            return self.segments[segment_id]
        except KeyError:
            raise ServiceError(404, "segment_not_found", f"no segment with id {segment_id}")

    def engine_for(self, project: Project, seed: int = 0) -> TranslationEngine:
        return TranslationEngine(self.bundle.model, self.bundle.lm, project.tm_store,
                                 project.termbase, settings_to_engine(project.settings, seed))

    # -- mutations ---------------------------------------------------------------

    def create_project(self, name: str, settings: dict) -> Project:
        with self._lock:
            if any(p.name == name for p in self.projects.values()):
                raise ServiceError(409, "duplicate_name", f"project {name!r} already exists")
            project = Project(
                id=self._next_project_id,
                name=name,
                settings=settings,
                tm_store=TmStore.load(self._tm_log(self._next_project_id)),
                termbase=Termbase(),
            )
            self._next_project_id += 1
            self.projects[project.id] = project
            self._append(self._projects_log(), {
                "event": "create",
                "project": {"id": project.id, "name": project.name, "settings": settings},
            })
            return project

    def update_settings(self, project: Project, settings: dict) -> None:
        with project.lock:
            project.settings = settings
            self._append(self._projects_log(), {
                "event": "settings", "project_id": project.id, "settings": settings,
            })

    def upload_tm(self, project: Project, content: str) -> tuple[int, list[str]]:
        pairs, warnings = parse_pairs(content)
        with project.lock:
            ids, skipped = project.tm_store.add_entries(pairs, origin="uploaded")
        warnings += [f"pair {i}: empty source or target" for i in skipped]
        return len(ids), warnings

    def upload_termbase(self, project: Project, content: str) -> tuple[int, list[str]]:
        pairs, warnings = parse_pairs(content)
        with project.lock:
            added_terms = []
            added, skipped = project.termbase.add_terms(pairs)
            for pos, pair in enumerate(pairs):
                if pos not in skipped:
                    added_terms.append(pair)
            for src, tgt in added_terms:
                self._append(self._termbase_log(project.id),
                             {"source_term": normalize_ws(src), "target_term": normalize_ws(tgt)})
        warnings += [f"pair {i}: empty or duplicate term" for i in skipped]
        return added, warnings

    def ingest_document(self, project: Project, text: str) -> list[Segment]:
        engine = self.engine_for(project)
        segments: list[Segment] = []
        with self._lock:
            for source in split_segments(text):
                draft = engine.draft(source)
                segment = Segment(
                    id=self._next_segment_id, project_id=project.id, source=source,
                    mt_draft=draft, current_target=draft,
                )
                self._next_segment_id += 1
                project.segments[segment.id] = segment
                self.segments[segment.id] = segment
                self._append(self._segments_log(project.id),
                             {"event": "ingest", "segment": segment.to_json()})
                segments.append(segment)
        return segments

    def confirm_segment(self, segment: Segment, final_target: str) -> int | None:
        project = self.project(segment.project_id)
        final_target = normalize_ws(final_target)
        if not final_target:
            raise ServiceError(422, "empty_target", "confirmed target must be non-empty")
        with project.lock:
            if segment.status == "confirmed":
                return None  # idempotent re-confirm
            ids, skipped = project.tm_store.add_entries(
                [(segment.source, final_target)], origin="online")
            if skipped:
                raise ServiceError(422, "empty_target", "confirmed target must be non-empty")
            segment.status = "confirmed"
            segment.current_target = final_target
            self._append(self._segments_log(project.id), {
                "event": "confirm", "segment_id": segment.id, "final_target": final_target,
            })
            return ids[0]

    def mark_editing(self, segment: Segment) -> None:
        """First completion moves a drafted segment to editing, durably."""
        if segment.status != "drafted":
            return
        with self._lock:
            if segment.status == "drafted":
                segment.status = "editing"
                self._append(self._segments_log(segment.project_id), {
                    "event": "status", "segment_id": segment.id, "status": "editing",
                })

    def bump_revision(self, segment: Segment) -> int:
        with self._lock:
            segment.revision += 1
            return segment.revision
