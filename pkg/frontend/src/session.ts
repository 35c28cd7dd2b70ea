import type { ApiClient } from './api';
import type {
  AnnotationDraft,
  DialoguePayload,
  MetricsReportPayload,
  SentencePayload,
} from './types';

export type Filter = 'all' | 'low-confidence' | 'metric-evidence';

export interface FlatSentence extends SentencePayload {
  messageId: string;
  speaker: string;
  ts: string;
}

/** One annotator's pass over one dialogue: a cursor over visible sentences,
 * a buffer of pending corrections that flushes atomically per POST, and the
 * cached taxonomy tree. A failed flush keeps the buffer for retry. */
export class AnnotationSession {
  dialogueRef: string;
  filter: Filter = 'all';
  cursor = 0; // index into visibleSentences()
  buffer: AnnotationDraft[] = [];
  annotator = 'analyst';
  lastFlushFailed = false;
  dialogue: DialoguePayload | null = null;
  metrics: MetricsReportPayload | null = null;

  constructor(private api: ApiClient, dialogueRef: string) {
    this.dialogueRef = dialogueRef;
  }

  async load(): Promise<void> {
    this.dialogue = await this.api.fetchDialogue(this.dialogueRef);
    this.metrics = await this.api.fetchMetrics(this.dialogueRef);
    this.clampCursor();
  }

  sentences(): FlatSentence[] {
    if (!this.dialogue) return [];
    const out: FlatSentence[] = [];
    for (const msg of this.dialogue.messages) {
      for (const s of msg.sentences) {
        out.push({ ...s, messageId: msg.id, speaker: msg.speaker, ts: msg.ts });
      }
    }
    return out;
  }

  /** Ids cited by any metric's evidence (sentences backing some number). */
  evidenceIds(): Set<string> {
    const ids = new Set<string>();
    if (!this.metrics) return ids;
    for (const metric of Object.values(this.metrics.metrics)) {
      for (const sid of metric.evidence.numerator_ids ?? []) ids.add(sid);
      for (const pair of metric.evidence.pairs ?? []) {
        ids.add(pair.initiator_sentence_id);
        if (pair.responder_sentence_id) ids.add(pair.responder_sentence_id);
      }
    }
    return ids;
  }

  visibleSentences(): FlatSentence[] {
    const all = this.sentences();
    if (this.filter === 'all') return all;
    if (this.filter === 'low-confidence') {
      // model output nobody has confirmed or corrected yet
      return all.filter((s) => s.gold_label === null && s.predicted_label !== null);
    }
    const evidence = this.evidenceIds();
    return all.filter((s) => evidence.has(s.id));
  }

  setFilter(filter: Filter): void {
    const current = this.visibleSentences()[this.cursor]?.id;
    this.filter = filter;
    const visible = this.visibleSentences();
    const idx = visible.findIndex((s) => s.id === current);
    this.cursor = idx >= 0 ? idx : 0;
    this.clampCursor();
  }

  clampCursor(): void {
    const n = this.visibleSentences().length;
    if (n === 0) {
      this.cursor = 0;
    } else {
      this.cursor = Math.min(Math.max(this.cursor, 0), n - 1);
    }
  }

  current(): FlatSentence | null {
    return this.visibleSentences()[this.cursor] ?? null;
  }

  move(delta: number): void {
    this.cursor += delta;
    this.clampCursor();
  }

  /** Stage a correction; replaces any pending draft for the same target. */
  stage(draft: AnnotationDraft): void {
    this.buffer = this.buffer.filter(
      (d) =>
        d.sentence_id !== draft.sentence_id ||
        d.char_start !== draft.char_start ||
        d.char_end !== draft.char_end,
    );
    this.buffer.push(draft);
  }

  /** POST the whole buffer as one request, then refetch dialogue+metrics.
   * On failure the buffer is untouched and lastFlushFailed flips on. */
  async flush(): Promise<boolean> {
    if (this.buffer.length === 0) return true;
    const pending = [...this.buffer];
    try {
      await this.api.postAnnotations(this.dialogueRef, pending);
    } catch {
      this.lastFlushFailed = true;
      return false;
    }
    this.lastFlushFailed = false;
    this.buffer = [];
    await this.load();
    return true;
  }
}
