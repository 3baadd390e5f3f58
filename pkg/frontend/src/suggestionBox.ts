// Suggestion box view model: alternate rows plus the optional LM row. The
// server only sends lm_suggestion once the confirmed prefix is long enough,
// so the row's visibility follows the payload.

import type { Suggestions } from "./types.js";

export interface SuggestionRow {
  kind: "alternate" | "lm";
  text: string;
}

export interface SuggestionBoxModel {
  rows: SuggestionRow[];
  visible: boolean;
}

export function renderSuggestions(suggestions: Suggestions | null): SuggestionBoxModel {
  if (suggestions === null) {
    return { rows: [], visible: false };
  }
  const rows: SuggestionRow[] = suggestions.alternates
    .filter((text) => text.length > 0)
    .map((text) => ({ kind: "alternate" as const, text }));
  if (suggestions.lm_suggestion) {
    rows.push({ kind: "lm", text: suggestions.lm_suggestion });
  }
  return { rows, visible: rows.length > 0 };
}
