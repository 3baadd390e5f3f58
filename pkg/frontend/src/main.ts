// Browser wiring: project setup on the left, segment editor in the middle,
// TM / termbase panel on the right. All translation state lives in the pure
// editor state machine; this file only renders it and forwards events.

import { ApiClient } from "./apiClient.js";
import { CompletionController } from "./controller.js";
import {
  EditorViewState,
  StateEffect,
  applyCompletion,
  ghostText,
  initialState,
  insertResource,
  lockWords,
  pressTab,
  typeChar,
} from "./editorState.js";
import { renderSuggestions } from "./suggestionBox.js";
import type { Segment } from "./types.js";

const client = new ApiClient("");
const controller = new CompletionController(client);

let projectId: number | null = null;
let segments: Segment[] = [];
let editor: EditorViewState | null = null;

function el<K extends keyof HTMLElementTagNameMap>(tag: K, className?: string,
                                                   text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function setStatus(message: string): void {
  byId<HTMLElement>("status").textContent = message;
}

async function refreshSegments(): Promise<void> {
  if (projectId === null) return;
  segments = await client.listSegments(projectId);
  const tbody = byId<HTMLTableSectionElement>("segment-rows");
  tbody.replaceChildren();
  for (const segment of segments) {
    const row = el("tr", segment.status);
    row.append(
      el("td", "seg-id", String(segment.id)),
      el("td", "seg-source", segment.source),
      el("td", "seg-target", segment.current_target),
      el("td", "seg-status", segment.status),
    );
    row.addEventListener("click", () => openEditor(segment));
    tbody.append(row);
  }
}

function applyEffect(effect: StateEffect): void {
  editor = effect.state;
  renderEditor();
  if (effect.request) {
    controller.schedule(editor, (resp) => {
      if (editor && editor.segmentId === resp.segment_id) {
        editor = applyCompletion(editor, resp);
        renderEditor();
      }
    });
  }
}

function openEditor(segment: Segment): void {
  if (segment.status === "confirmed") {
    setStatus(`segment ${segment.id} is confirmed`);
    return;
  }
  editor = initialState(segment.id);
  byId<HTMLElement>("editor-source").textContent = segment.source;
  byId<HTMLElement>("editor-draft").textContent = segment.mt_draft;
  byId<HTMLElement>("editor-panel").hidden = false;
  renderEditor();
  applyEffect({ state: editor, request: true });
  byId<HTMLInputElement>("editor-input").focus();
}

function renderEditor(): void {
  if (!editor) return;
  const textEl = byId<HTMLElement>("editor-text");
  textEl.replaceChildren();
  const committedWords = editor.committed.split(/\s+/).filter((w) => w.length > 0);
  committedWords.forEach((word, index) => {
    const span = el("span", "committed-word", word + " ");
    span.addEventListener("click", () => {
      if (editor) applyEffect(lockWords(editor, index + 1));
    });
    textEl.append(span);
  });
  if (editor.dangling) {
    textEl.append(el("span", "dangling", editor.dangling));
  }
  const ghost = ghostText(editor);
  if (ghost) {
    // split the ghost into the highlighted run and the rest
    const highlightTokens = editor.ghostTokens.slice(0, editor.highlightLen);
    let highlightText = editor.completedWordSuffix;
    let rendered = 0;
    for (const token of highlightTokens) {
      highlightText += (token.word_initial && (highlightText || editor.dangling) ? " " : "") +
        token.text;
      rendered++;
    }
    if (rendered > 0 || highlightText) {
      textEl.append(el("span", "ghost highlight", highlightText));
      textEl.append(el("span", "ghost", ghost.slice(highlightText.length)));
    } else {
      textEl.append(el("span", "ghost", ghost));
    }
  }

  const box = renderSuggestions(editor.suggestions);
  const boxEl = byId<HTMLElement>("suggestion-box");
  boxEl.replaceChildren();
  boxEl.hidden = !box.visible;
  for (const row of box.rows) {
    boxEl.append(el("div", `suggestion ${row.kind}`,
      row.kind === "lm" ? `LM: ${row.text}` : row.text));
  }

  const tmEl = byId<HTMLElement>("tm-panel");
  tmEl.replaceChildren();
  if (editor.tmMatch) {
    const match = editor.tmMatch;
    const entry = el("div", "tm-entry");
    entry.append(
      el("div", "tm-rate", `${Math.round(match.match_rate * 100)}% (${match.origin})`),
      el("div", "tm-source", match.source),
      el("div", "tm-target", match.target),
    );
    entry.addEventListener("dblclick", () => {
      if (editor) applyEffect(insertResource(editor, match.target));
    });
    tmEl.append(entry);
  }
  const termEl = byId<HTMLElement>("term-panel");
  termEl.replaceChildren();
  for (const hit of editor.termHits) {
    const node = el("div", "term-entry", `${hit.source_term} -> ${hit.target_term}`);
    node.addEventListener("dblclick", () => {
      if (editor) applyEffect(insertResource(editor, hit.target_term));
    });
    termEl.append(node);
  }
}

function wireEditorInput(): void {
  const input = byId<HTMLInputElement>("editor-input");
  input.addEventListener("keydown", (event) => {
    if (!editor) return;
    if (event.key === "Tab") {
      event.preventDefault();
      applyEffect(pressTab(editor));
    } else if (event.key === " " || event.key.length === 1) {
      event.preventDefault();
      applyEffect(typeChar(editor, event.key));
    }
  });
  byId<HTMLButtonElement>("confirm-button").addEventListener("click", async () => {
    if (!editor) return;
    const finalTarget = (editor.committed + editor.dangling).trim();
    if (!finalTarget) {
      setStatus("type or accept a translation before confirming");
      return;
    }
    await client.confirm(editor.segmentId, finalTarget);
    controller.cancel(editor.segmentId);
    editor = null;
    byId<HTMLElement>("editor-panel").hidden = true;
    await refreshSegments();
    setStatus("segment confirmed and merged into the TM");
  });
}

function wireProjectControls(): void {
  byId<HTMLButtonElement>("create-project").addEventListener("click", async () => {
    const name = byId<HTMLInputElement>("project-name").value.trim();
    if (!name) return;
    const engine = byId<HTMLSelectElement>("engine-select").value;
    const minMatch = Number(byId<HTMLInputElement>("min-match-rate").value) || 0.7;
    try {
      const project = await client.createProject(name, {
        engine, min_match_rate: minMatch,
      } as never);
      projectId = project.id;
      setStatus(`project ${project.name} (#${project.id}) ready`);
      await refreshSegments();
    } catch (error) {
      setStatus(String(error));
    }
  });
  byId<HTMLButtonElement>("upload-tm").addEventListener("click", async () => {
    if (projectId === null) return;
    const content = byId<HTMLTextAreaElement>("tm-content").value;
    const result = await client.uploadTm(projectId, content);
    setStatus(`TM: added ${result.added}, ${result.warnings.length} warnings`);
  });
  byId<HTMLButtonElement>("upload-termbase").addEventListener("click", async () => {
    if (projectId === null) return;
    const content = byId<HTMLTextAreaElement>("termbase-content").value;
    const result = await client.uploadTermbase(projectId, content);
    setStatus(`termbase: added ${result.added}, ${result.warnings.length} warnings`);
  });
  byId<HTMLButtonElement>("ingest-document").addEventListener("click", async () => {
    if (projectId === null) return;
    const text = byId<HTMLTextAreaElement>("document-content").value;
    await client.ingestDocument(projectId, text);
    await refreshSegments();
  });
}

if (typeof document !== "undefined" && document.getElementById("editor-input")) {
  wireProjectControls();
  wireEditorInput();
}
