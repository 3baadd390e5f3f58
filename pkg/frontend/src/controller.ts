// Completion scheduling: per segment, keystrokes are debounced, at most one
// request is in flight, and only the answer to the newest request is applied.

import { Debouncer } from "./debounce.js";
import type { EditorViewState } from "./editorState.js";
import type { CompleteResponse } from "./types.js";

export const DEBOUNCE_MS = 150;

export interface CompletionClient {
  complete(segmentId: number, lockedText: string, dangling: string | null,
  ): Promise<CompleteResponse>;
}

interface SegmentChannel {
  debouncer: Debouncer;
  serial: number;
  inflight: boolean;
  queued: (() => void) | null;
}

export class CompletionController {
  private channels = new Map<number, SegmentChannel>();

  constructor(private readonly client: CompletionClient,
              private readonly debounceMs: number = DEBOUNCE_MS) {}

  private channel(segmentId: number): SegmentChannel {
    let ch = this.channels.get(segmentId);
    if (!ch) {
      ch = { debouncer: new Debouncer(this.debounceMs), serial: 0, inflight: false, queued: null };
      this.channels.set(segmentId, ch);
    }
    return ch;
  }

  /** Debounce a completion for the given editor state; latest snapshot wins. */
  schedule(state: EditorViewState, apply: (resp: CompleteResponse) => void): void {
    const ch = this.channel(state.segmentId);
    const locked = state.committed;
    const dangling = state.dangling || null;
    ch.debouncer.schedule(() => this.issue(ch, state.segmentId, locked, dangling, apply));
  }

  private issue(ch: SegmentChannel, segmentId: number, locked: string,
                dangling: string | null, apply: (resp: CompleteResponse) => void): void {
    if (ch.inflight) {
      // never two concurrent requests for a segment; the newest waits
      ch.queued = () => this.issue(ch, segmentId, locked, dangling, apply);
      return;
    }
    ch.inflight = true;
    const serial = ++ch.serial;
    this.client
      .complete(segmentId, locked, dangling)
      .then((resp) => {
        if (ch.serial === serial && ch.queued === null) {
          apply(resp);
        }
      })
      .catch(() => undefined)
      .finally(() => {
        ch.inflight = false;
        const queued = ch.queued;
        ch.queued = null;
        if (queued) {
          queued();
        }
      });
  }

  cancel(segmentId: number): void {
    const ch = this.channels.get(segmentId);
    if (ch) {
      ch.debouncer.cancel();
      ch.queued = null;
      ch.serial++;
    }
  }
}
