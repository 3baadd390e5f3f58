// Wire types mirroring the service's JSON schemas (snake_case as on the wire).

export interface KnnSettings {
  k: number;
  lambda: number;
  temperature: number;
  tau: number;
}

export interface ProjectSettings {
  min_match_rate: number;
  engine: string;
  knn: KnnSettings;
  beam: number;
  highlight_threshold: number;
}

export interface Project {
  id: number;
  name: string;
  settings: ProjectSettings;
  tm_entries: number;
  term_entries: number;
}

export interface TmMatch {
  source: string;
  target: string;
  match_rate: number;
  origin: string;
}

export interface TermHit {
  source_term: string;
  target_term: string;
  offset: number;
}

export interface Segment {
  id: number;
  project_id: number;
  source: string;
  mt_draft: string;
  current_target: string;
  status: string;
  tm_match: TmMatch | null;
  term_hits: TermHit[];
}

export interface GhostToken {
  text: string;
  word_initial: boolean;
  prob: number;
}

export interface Suggestions {
  inline_preview: string;
  alternates: string[];
  lm_suggestion: string | null;
  highlight_len: number;
}

export interface CompleteResponse {
  segment_id: number;
  revision: number;
  engine: string;
  completed_word: string | null;
  ghost_text: string;
  ghost_tokens: GhostToken[];
  highlight_len: number;
  suggestions: Suggestions;
  tm_match: TmMatch | null;
  term_hits: TermHit[];
}

export interface ConfirmResponse {
  segment_id: number;
  status: string;
  tm_entry_id: number | null;
}
