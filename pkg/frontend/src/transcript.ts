import type { FlatSentence } from './session';
import { TaxonomyView, classColor } from './taxonomy';

export const ROW_HEIGHT = 44;
const OVERSCAN = 6;

interface Row {
  kind: 'header' | 'sentence';
  sentence?: FlatSentence;
  messageId: string;
  speaker?: string;
  ts?: string;
}

/** Virtualized transcript: messages grouped under speaker+timestamp
 * headers; only the rows near the viewport exist in the DOM, so a
 * 500-sentence dialogue stays light. */
export class TranscriptView {
  readonly element: HTMLElement;
  private spacerTop: HTMLElement;
  private spacerBottom: HTMLElement;
  private body: HTMLElement;
  private rows: Row[] = [];
  private taxonomy: TaxonomyView;
  private highlighted = new Set<string>();
  private activeId: string | null = null;
  onSelect: (sentenceId: string) => void = () => {};

  constructor(taxonomy: TaxonomyView, height = 560) {
    this.taxonomy = taxonomy;
    this.element = document.createElement('div');
    this.element.className = 'transcript';
    this.element.style.height = `${height}px`;
    this.element.style.overflowY = 'auto';
    this.spacerTop = document.createElement('div');
    this.spacerBottom = document.createElement('div');
    this.body = document.createElement('div');
    this.element.append(this.spacerTop, this.body, this.spacerBottom);
    this.element.addEventListener('scroll', () => this.renderWindow());
  }

  setSentences(sentences: FlatSentence[]): void {
    this.rows = [];
    let lastMessage: string | null = null;
    for (const s of sentences) {
      if (s.messageId !== lastMessage) {
        this.rows.push({
          kind: 'header',
          messageId: s.messageId,
          speaker: s.speaker,
          ts: s.ts,
        });
        lastMessage = s.messageId;
      }
      this.rows.push({ kind: 'sentence', sentence: s, messageId: s.messageId });
    }
    this.renderWindow();
  }

  setHighlights(ids: Iterable<string>): void {
    this.highlighted = new Set(ids);
    this.renderWindow();
  }

  setActive(id: string | null): void {
    this.activeId = id;
    this.renderWindow();
  }

  scrollToSentence(id: string): void {
    const index = this.rows.findIndex(
      (r) => r.kind === 'sentence' && r.sentence!.id === id,
    );
    if (index >= 0) {
      this.element.scrollTop = Math.max(0, index * ROW_HEIGHT - ROW_HEIGHT * 3);
      this.renderWindow();
    }
  }

  renderedSentenceIds(): string[] {
    return Array.from(this.body.querySelectorAll<HTMLElement>('[data-sentence-id]'))
      .map((el) => el.dataset.sentenceId!);
  }

  renderWindow(): void {
    const total = this.rows.length;
    if (total === 0) {
      this.spacerTop.style.height = '0px';
      this.spacerBottom.style.height = '0px';
      const empty = document.createElement('div');
      empty.className = 'empty-state';
      empty.textContent = 'nothing to show';
      this.body.replaceChildren(empty);
      return;
    }
    const viewRows = Math.ceil(this.element.clientHeight / ROW_HEIGHT) || 16;
    const first = Math.max(
      0,
      Math.floor(this.element.scrollTop / ROW_HEIGHT) - OVERSCAN,
    );
    const last = Math.min(total, first + viewRows + OVERSCAN * 2);
    this.spacerTop.style.height = `${first * ROW_HEIGHT}px`;
    this.spacerBottom.style.height = `${(total - last) * ROW_HEIGHT}px`;
    this.body.replaceChildren(
      ...this.rows.slice(first, last).map((row) => this.renderRow(row)),
    );
  }

  private renderRow(row: Row): HTMLElement {
    if (row.kind === 'header') {
      const el = document.createElement('div');
      el.className = 'msg-header';
      el.style.height = `${ROW_HEIGHT}px`;
      const speaker = document.createElement('strong');
      speaker.textContent = row.speaker ?? '';
      const ts = document.createElement('span');
      ts.className = 'ts';
      ts.textContent = row.ts ?? '';
      el.append(speaker, ts);
      return el;
    }
    const s = row.sentence!;
    const el = document.createElement('div');
    el.className = 'sentence-row';
    el.style.height = `${ROW_HEIGHT}px`;
    el.dataset.sentenceId = s.id;
    if (this.highlighted.has(s.id)) el.classList.add('evidence');
    if (this.activeId === s.id) el.classList.add('active');
    const text = document.createElement('span');
    text.className = s.is_code_block ? 'text code' : 'text';
    text.textContent = s.text; // emoticons stay in text form
    el.append(text);
    const label = s.effective_label;
    if (label !== null) {
      const chip = document.createElement('span');
      chip.className = 'chip';
      chip.textContent = label;
      chip.dataset.labelId = label;
      if (this.taxonomy.has(label)) {
        chip.style.backgroundColor = classColor(this.taxonomy, label);
      }
      if (s.gold_label === null && s.predicted_label !== null) {
        chip.classList.add('predicted');
        chip.title = 'model prediction, unreviewed';
      }
      el.append(chip);
    }
    el.addEventListener('click', () => this.onSelect(s.id));
    return el;
  }
}
