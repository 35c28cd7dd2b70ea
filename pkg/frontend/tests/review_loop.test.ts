/** The review loop: correct one sentence's label through the UI, flush,
 * and verify (a) exactly one annotation record was appended in one POST and
 * (b) after the panel refresh exactly the metrics whose evidence cites the
 * corrected sentence changed, all values rendered verbatim from the
 * service. */

import { afterEach, beforeEach, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api';
import { mountApp } from '../src/main';
import type { MetricPayload, MetricsReportPayload } from '../src/types';
import { FakeServer, STORE_ID } from './fakeServer';
import metricsBefore from './fixtures/metrics_before.json';
import metricsAfter from './fixtures/metrics_after.json';

const TARGET = 'm13:s0';

function evidenceIds(metric: MetricPayload): Set<string> {
  const ids = new Set<string>();
  for (const sid of metric.evidence.numerator_ids ?? []) ids.add(sid);
  for (const sid of metric.evidence.denominator_ids ?? []) ids.add(sid);
  for (const pair of metric.evidence.pairs ?? []) {
    ids.add(pair.initiator_sentence_id);
    if (pair.responder_sentence_id) ids.add(pair.responder_sentence_id);
  }
  return ids;
}

describe('review loop', () => {
  let server: FakeServer;
  let root: HTMLElement;

  beforeEach(() => {
    server = new FakeServer();
    server.install();
    root = document.createElement('div');
    document.body.append(root);
  });

  afterEach(() => {
    server.uninstall();
    root.remove();
  });

  it('one correction appends one record and moves exactly the metrics whose evidence cites it', async () => {
    const app = await mountApp(root, new ApiClient(''), STORE_ID);

    const before = metricsBefore as unknown as MetricsReportPayload;
    const after = metricsAfter as unknown as MetricsReportPayload;
    const names = Object.keys(before.metrics);

    const displayedBefore = new Map(
      names.map((n) => [n, app.metricsPanel.displayedValue(n)]),
    );

    // select the frustration sentence and correct it to Acknowledge
    app.transcript.onSelect(TARGET);
    expect(app.session.current()?.id).toBe(TARGET);
    app.picker.choose('Acknowledge');
    expect(app.session.buffer).toHaveLength(1);
    expect(app.session.buffer[0]).toMatchObject({
      sentence_id: TARGET,
      label: 'Acknowledge',
      source: 'corrected',
    });

    const ok = await app.session.flush();
    expect(ok).toBe(true);
    app.refresh();

    // exactly one POST carrying exactly one record
    expect(server.posts).toHaveLength(1);
    expect(server.posts[0].body.records).toHaveLength(1);
    expect(server.posts[0].body.records[0]).toMatchObject({
      sentence_id: TARGET,
      label: 'Acknowledge',
    });

    // the panel shows the refetched report verbatim
    const changed: string[] = [];
    for (const name of names) {
      const now = app.metricsPanel.displayedValue(name);
      expect(now).not.toBeNull();
      if (now !== displayedBefore.get(name)) changed.push(name);
    }
    const expectedChanged = names.filter(
      (n) => before.metrics[n].value !== after.metrics[n].value,
    );
    expect(changed.sort()).toEqual(expectedChanged.sort());

    // every changed metric cites the corrected sentence in its evidence
    for (const name of changed) {
      const cited =
        evidenceIds(before.metrics[name]).has(TARGET) ||
        evidenceIds(after.metrics[name]).has(TARGET);
      expect(cited, `${name} changed without citing ${TARGET}`).toBe(true);
    }
    // and the loop actually moved something
    expect(changed).toContain('loop_closure_rate');
    expect(changed).toContain('frustration_rate');

    // the transcript now shows the corrected label on the target sentence
    const updated = app.session
      .sentences()
      .find((s) => s.id === TARGET);
    expect(updated?.gold_label).toBe('Acknowledge');
  });

  it('a failed flush keeps the buffer and surfaces a retry affordance', async () => {
    const app = await mountApp(root, new ApiClient(''), STORE_ID);
    app.transcript.onSelect(TARGET);
    app.picker.choose('Acknowledge');
    expect(app.session.buffer).toHaveLength(1);

    server.failNextPost = true;
    const ok = await app.session.flush();
    app.refresh();
    expect(ok).toBe(false);
    expect(app.session.buffer).toHaveLength(1); // intact
    expect(app.session.lastFlushFailed).toBe(true);
    const status = root.querySelector('#status');
    expect(status?.textContent).toContain('retry');

    // retrying succeeds and clears the buffer
    const retried = await app.session.flush();
    expect(retried).toBe(true);
    expect(app.session.buffer).toHaveLength(0);
    expect(server.posts).toHaveLength(1);
  });

  it('metric evidence click highlights its sentences in the transcript', async () => {
    const app = await mountApp(root, new ApiClient(''), STORE_ID);
    const ids = app.metricsPanel.evidenceFor('loop_closure_rate');
    expect(ids.length).toBeGreaterThan(0);
    app.metricsPanel.onEvidence(ids, ids[0]);
    app.transcript.setHighlights(ids);
    app.transcript.renderWindow();
    const highlighted = root.querySelectorAll('.sentence-row.evidence');
    expect(highlighted.length).toBeGreaterThan(0);
  });
});
