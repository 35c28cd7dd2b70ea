/** Stateful fetch stub implementing the review API contract, backed by
 * payloads captured from the real service. Serving the "after" fixtures is
 * keyed on the correction the integration test performs, so the UI's
 * refetch-after-flush behavior is observable. */

import taxonomyFixture from './fixtures/taxonomy.json';
import dialogueBefore from './fixtures/dialogue.json';
import dialogueAfter from './fixtures/dialogue_after.json';
import metricsBefore from './fixtures/metrics_before.json';
import metricsAfter from './fixtures/metrics_after.json';

export interface RecordedPost {
  url: string;
  body: { records: Record<string, unknown>[] };
}

export const STORE_ID: string = (dialogueBefore as { store_id: string }).store_id;

export class FakeServer {
  posts: RecordedPost[] = [];
  corrected = false;
  failNextPost = false;
  private original: typeof fetch | null = null;

  install(): void {
    this.original = globalThis.fetch;
    globalThis.fetch = ((input: RequestInfo | URL, init?: RequestInit) =>
      this.handle(String(input), init)) as typeof fetch;
  }

  uninstall(): void {
    if (this.original) globalThis.fetch = this.original;
  }

  private json(data: unknown, status = 200): Response {
    return new Response(JSON.stringify(data), {
      status,
      headers: { 'Content-Type': 'application/json' },
    });
  }

  private async handle(url: string, init?: RequestInit): Promise<Response> {
    const method = init?.method ?? 'GET';
    if (method === 'POST' && url.endsWith('/annotations')) {
      if (this.failNextPost) {
        this.failNextPost = false;
        return this.json({ error: 'injected failure' }, 500);
      }
      const body = JSON.parse(String(init?.body ?? '{}'));
      this.posts.push({ url, body });
      for (const record of body.records ?? []) {
        if (record.sentence_id === 'm13:s0' && record.label === 'Acknowledge') {
          this.corrected = true;
        }
      }
      return this.json({ appended: (body.records ?? []).length });
    }
    if (url.endsWith('/taxonomy')) {
      return this.json(taxonomyFixture);
    }
    if (url.endsWith('/dialogues')) {
      return this.json({
        dialogues: [
          {
            store_id: STORE_ID,
            dialogue_id: 'fixture',
            n_messages: 20,
            n_sentences: 20,
          },
        ],
      });
    }
    if (url.endsWith('/metrics')) {
      return this.json(this.corrected ? metricsAfter : metricsBefore);
    }
    if (url.includes('/dialogues/')) {
      return this.json(this.corrected ? dialogueAfter : dialogueBefore);
    }
    return this.json({ error: `no fake route for ${method} ${url}` }, 404);
  }
}
