import { afterEach, beforeEach, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api';
import { AnnotationSession } from '../src/session';
import { FakeServer, STORE_ID } from './fakeServer';

describe('annotation session', () => {
  let server: FakeServer;

  beforeEach(() => {
    server = new FakeServer();
    server.install();
  });

  afterEach(() => server.uninstall());

  async function load(): Promise<AnnotationSession> {
    const session = new AnnotationSession(new ApiClient(''), STORE_ID);
    await session.load();
    return session;
  }

  it('loads the dialogue and metrics', async () => {
    const session = await load();
    expect(session.sentences()).toHaveLength(20);
    expect(session.metrics).not.toBeNull();
  });

  it('staging twice for the same sentence keeps one draft', async () => {
    const session = await load();
    session.stage({ sentence_id: 'm00:s0', label: 'Inform',
                    annotator: 'a', source: 'corrected' });
    session.stage({ sentence_id: 'm00:s0', label: 'Query',
                    annotator: 'a', source: 'corrected' });
    expect(session.buffer).toHaveLength(1);
    expect(session.buffer[0].label).toBe('Query');
  });

  it('span-scoped drafts coexist with sentence-scoped drafts', async () => {
    const session = await load();
    session.stage({ sentence_id: 'm00:s0', label: 'Inform',
                    annotator: 'a', source: 'corrected' });
    session.stage({ sentence_id: 'm00:s0', label: 'Social-Appreciation',
                    annotator: 'a', source: 'corrected',
                    char_start: 0, char_end: 9 });
    expect(session.buffer).toHaveLength(2);
  });

  it('the whole buffer flushes in a single POST', async () => {
    const session = await load();
    session.stage({ sentence_id: 'm00:s0', label: 'Query',
                    annotator: 'a', source: 'corrected' });
    session.stage({ sentence_id: 'm01:s0', label: 'Inform',
                    annotator: 'a', source: 'corrected' });
    await session.flush();
    expect(server.posts).toHaveLength(1);
    expect(server.posts[0].body.records).toHaveLength(2);
    expect(session.buffer).toHaveLength(0);
  });

  it('cursor stays on a visible sentence when the filter changes', async () => {
    const session = await load();
    session.cursor = 5;
    session.setFilter('metric-evidence');
    const visible = session.visibleSentences();
    expect(visible.length).toBeGreaterThan(0);
    expect(session.cursor).toBeLessThan(visible.length);
    expect(session.current()).not.toBeNull();
    // every visible sentence under this filter is cited by some metric
    const evidence = session.evidenceIds();
    for (const s of visible) {
      expect(evidence.has(s.id)).toBe(true);
    }
  });

  it('low-confidence filter shows only unreviewed model output', async () => {
    const session = await load();
    // the fixture is fully gold-labeled: nothing is low-confidence
    session.setFilter('low-confidence');
    expect(session.visibleSentences()).toHaveLength(0);
    expect(session.current()).toBeNull();
  });

  it('move clamps at both ends', async () => {
    const session = await load();
    session.move(-5);
    expect(session.cursor).toBe(0);
    session.move(10_000);
    expect(session.cursor).toBe(session.visibleSentences().length - 1);
  });
});
