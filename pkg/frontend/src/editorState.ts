// Pure editor state machine. The DOM layer feeds keystrokes in and renders
// what comes out; every translation-text change flows either from a literal
// keystroke or from an applied completion response, never from both at once.

import type { CompleteResponse, GhostToken, Suggestions, TermHit, TmMatch } from "./types.js";

export interface EditorViewState {
  segmentId: number;
  /** Confirmed words; always empty or ending in a single space. */
  committed: string;
  /** Characters of the word currently being typed. */
  dangling: string;
  /** Model characters that finish the dangling word (from completed_word). */
  completedWordSuffix: string;
  /** Pending completion tokens beyond the current word. */
  ghostTokens: GhostToken[];
  /** Leading ghost tokens confident enough to accept with TAB. */
  highlightLen: number;
  suggestions: Suggestions | null;
  tmMatch: TmMatch | null;
  termHits: TermHit[];
  lastRevision: number;
}

export interface StateEffect {
  state: EditorViewState;
  /** True when the edit warrants a (debounced) completion request. */
  request: boolean;
}

export function initialState(segmentId: number): EditorViewState {
  return {
    segmentId,
    committed: "",
    dangling: "",
    completedWordSuffix: "",
    ghostTokens: [],
    highlightLen: 0,
    suggestions: null,
    tmMatch: null,
    termHits: [],
    lastRevision: 0,
  };
}

function clearGhost(state: EditorViewState): EditorViewState {
  return { ...state, completedWordSuffix: "", ghostTokens: [], highlightLen: 0 };
}

/** Ghost string relative to the caret (extends committed + dangling). */
export function ghostText(state: EditorViewState): string {
  let out = state.completedWordSuffix;
  for (const token of state.ghostTokens) {
    if (token.word_initial && (out.length > 0 || state.dangling.length > 0)) {
      out += " " + token.text;
    } else {
      out += token.text;
    }
  }
  return out;
}

export function visibleText(state: EditorViewState): string {
  return state.committed + state.dangling + ghostText(state);
}

/** A printable character or space typed by the user. */
export function typeChar(state: EditorViewState, ch: string): StateEffect {
  if (ch === " ") {
    if (!state.dangling) {
      return { state, request: false };
    }
    const next = clearGhost({
      ...state,
      committed: state.committed + state.dangling + " ",
      dangling: "",
    });
    return { state: next, request: true };
  }
  if (ch.length !== 1 || /\s/.test(ch)) {
    return { state, request: false };
  }
  let next: EditorViewState = { ...state, dangling: state.dangling + ch };
  if (state.completedWordSuffix.startsWith(ch)) {
    // the keystroke agrees with the pending completion; keep the ghost
    next = { ...next, completedWordSuffix: state.completedWordSuffix.slice(1) };
  } else {
    next = clearGhost(next);
  }
  return { state: next, request: true };
}

/** TAB accepts the highlighted run: exactly highlightLen ghost tokens. */
export function pressTab(state: EditorViewState): StateEffect {
  if (state.highlightLen === 0) {
    return { state, request: false };
  }
  let committed = state.committed;
  // materialize the current word first, if one is pending
  if (state.dangling || state.completedWordSuffix) {
    committed += state.dangling + state.completedWordSuffix + " ";
  }
  const accepted = state.ghostTokens.slice(0, state.highlightLen);
  const rest = state.ghostTokens.slice(state.highlightLen);
  const words: string[] = [];
  let current = "";
  for (const token of accepted) {
    if (token.word_initial && current) {
      words.push(current);
      current = token.text;
    } else {
      current += token.text;
    }
  }
  let dangling = "";
  if (current) {
    if (rest.length > 0 && !rest[0].word_initial) {
      dangling = current; // accepted run ends mid-word
    } else {
      words.push(current);
    }
  }
  if (words.length > 0) {
    committed += words.join(" ") + " ";
  }
  const next: EditorViewState = {
    ...state,
    committed,
    dangling,
    completedWordSuffix: "",
    ghostTokens: rest,
    highlightLen: 0,
  };
  return { state: next, request: true };
}

/** Clicking a word locks in everything up to and including it. */
export function lockWords(state: EditorViewState, wordCount: number): StateEffect {
  const words = visibleText(state).split(/\s+/).filter((w) => w.length > 0);
  const take = Math.max(0, Math.min(wordCount, words.length));
  const committed = take > 0 ? words.slice(0, take).join(" ") + " " : "";
  const next = clearGhost({ ...state, committed, dangling: "" });
  return { state: next, request: true };
}

/** Double-clicked TM/termbase text is included at the caret immediately. */
export function insertResource(state: EditorViewState, text: string): StateEffect {
  const cleaned = text.trim().replace(/\s+/g, " ");
  if (!cleaned) {
    return { state, request: false };
  }
  const prefix = state.dangling ? state.committed + state.dangling + " " : state.committed;
  const next = clearGhost({ ...state, committed: prefix + cleaned + " ", dangling: "" });
  return { state: next, request: true };
}

/**
 * Apply a completion response. Stale revisions and answers that no longer
 * extend what the user has typed are dropped unchanged.
 */
export function applyCompletion(state: EditorViewState, resp: CompleteResponse): EditorViewState {
  if (resp.segment_id !== state.segmentId || resp.revision <= state.lastRevision) {
    return state;
  }
  let suffix = "";
  if (state.dangling) {
    if (!resp.completed_word || !resp.completed_word.startsWith(state.dangling)) {
      return state; // answer to an outdated prefix
    }
    suffix = resp.completed_word.slice(state.dangling.length);
  }
  return {
    ...state,
    completedWordSuffix: suffix,
    ghostTokens: resp.ghost_tokens,
    highlightLen: Math.min(resp.highlight_len, resp.ghost_tokens.length),
    suggestions: resp.suggestions,
    tmMatch: resp.tm_match,
    termHits: resp.term_hits,
    lastRevision: resp.revision,
  };
}
