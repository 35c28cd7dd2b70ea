import { ApiClient } from './api';
import { MetricsPanel } from './metricsPanel';
import { LabelPicker } from './picker';
import { AnnotationSession, Filter } from './session';
import { TaxonomyView, priorityContext } from './taxonomy';
import { TranscriptView } from './transcript';
import './styles.css';

/** Wire the transcript, picker, and metrics panel together over one
 * session. Returns the pieces so integration tests can drive them. */
export async function mountApp(root: HTMLElement, api: ApiClient, dialogueRef: string) {
  const taxonomyPayload = await api.fetchTaxonomy();
  const taxonomy = new TaxonomyView(taxonomyPayload);
  const session = new AnnotationSession(api, dialogueRef);
  await session.load();

  root.replaceChildren();
  root.className = 'app';

  const left = document.createElement('div');
  left.className = 'pane transcript-pane';
  const right = document.createElement('div');
  right.className = 'pane side-pane';
  root.append(left, right);

  const toolbar = document.createElement('div');
  toolbar.className = 'toolbar';
  const filterSelect = document.createElement('select');
  filterSelect.id = 'filter';
  for (const f of ['all', 'low-confidence', 'metric-evidence']) {
    const opt = document.createElement('option');
    opt.value = f;
    opt.textContent = f;
    filterSelect.append(opt);
  }
  const reducedToggle = document.createElement('label');
  const reducedBox = document.createElement('input');
  reducedBox.type = 'checkbox';
  reducedBox.id = 'reduced-only';
  reducedToggle.append(reducedBox, document.createTextNode(' reduced set only'));
  const flushButton = document.createElement('button');
  flushButton.id = 'flush';
  flushButton.textContent = 'save corrections';
  const status = document.createElement('span');
  status.id = 'status';
  toolbar.append(filterSelect, reducedToggle, flushButton, status);
  left.append(toolbar);

  const transcript = new TranscriptView(taxonomy);
  left.append(transcript.element);

  const picker = new LabelPicker(taxonomy);
  const metricsPanel = new MetricsPanel();
  right.append(picker.element, metricsPanel.element);

  const refresh = () => {
    transcript.setSentences(session.visibleSentences());
    transcript.setActive(session.current()?.id ?? null);
    if (session.metrics) metricsPanel.setReport(session.metrics);
    const pending = session.buffer.length;
    status.textContent = session.lastFlushFailed
      ? `save failed, ${pending} pending - retry`
      : pending > 0
        ? `${pending} pending correction${pending === 1 ? '' : 's'}`
        : 'saved';
    status.classList.toggle('error', session.lastFlushFailed);
    const current = session.current();
    const all = session.sentences();
    const idx = all.findIndex((s) => s.id === current?.id);
    const prev = idx > 0 ? all[idx - 1].effective_label : null;
    picker.setContext(priorityContext(prev, taxonomy));
  };

  transcript.onSelect = (sentenceId) => {
    const visible = session.visibleSentences();
    const idx = visible.findIndex((s) => s.id === sentenceId);
    if (idx >= 0) {
      session.cursor = idx;
      refresh();
    }
  };

  picker.onCommit = (labelId) => {
    const current = session.current();
    if (!current) return;
    const draft: {
      sentence_id: string;
      label: string;
      annotator: string;
      source: 'corrected';
      char_start?: number;
      char_end?: number;
    } = {
      sentence_id: current.id,
      label: labelId,
      annotator: session.annotator,
      source: 'corrected',
    };
    const span = currentSpanSelection(current.text);
    if (span) {
      draft.char_start = span[0];
      draft.char_end = span[1];
    }
    session.stage(draft);
    refresh();
  };

  metricsPanel.onEvidence = (ids, firstId) => {
    transcript.setHighlights(ids);
    if (firstId) transcript.scrollToSentence(firstId);
  };

  filterSelect.addEventListener('change', () => {
    session.setFilter(filterSelect.value as Filter);
    refresh();
  });
  reducedBox.addEventListener('change', () => {
    picker.setReducedOnly(reducedBox.checked);
  });
  flushButton.addEventListener('click', async () => {
    await session.flush();
    refresh();
  });
  document.addEventListener('keydown', (event) => {
    if (event.target instanceof HTMLInputElement) return;
    if (event.key === 'ArrowDown' || event.key === 'j') {
      session.move(1);
      refresh();
    } else if (event.key === 'ArrowUp' || event.key === 'k') {
      session.move(-1);
      refresh();
    } else {
      picker.handleKey(event.key);
    }
  });

  refresh();
  return { session, taxonomy, transcript, picker, metricsPanel, refresh };
}

/** Character offsets of the user's text selection within the active
 * sentence, if the selection is inside it. */
function currentSpanSelection(sentenceText: string): [number, number] | null {
  const selection = window.getSelection?.();
  if (!selection || selection.isCollapsed) return null;
  const selected = selection.toString();
  const start = sentenceText.indexOf(selected);
  if (selected.length === 0 || start < 0) return null;
  return [start, start + selected.length];
}

async function boot() {
  const root = document.getElementById('app');
  if (!root) return;
  const api = new ApiClient(
    (import.meta as unknown as { env?: Record<string, string> }).env?.VITE_API_BASE ??
      'http://127.0.0.1:8057',
  );
  const listing = await api.fetchDialogues();
  const first = listing.dialogues[0];
  if (!first) {
    root.textContent = 'no dialogues in the store yet';
    return;
  }
  await mountApp(root, api, first.store_id);
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  void boot();
}
