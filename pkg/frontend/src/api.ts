import type {
  AnnotationDraft,
  DialogueListing,
  DialoguePayload,
  MetricsReportPayload,
  TaxonomyPayload,
} from './types';

/** Thin typed client over the review service. All label and metric data the
 * UI ever shows originates from these calls; nothing is synthesized
 * client-side. */
export class ApiClient {
  constructor(private baseUrl: string = '') {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) {
      throw new Error(`GET ${path} failed: ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  fetchTaxonomy(): Promise<TaxonomyPayload> {
    return this.get('/taxonomy');
  }

  fetchDialogues(): Promise<DialogueListing> {
    return this.get('/dialogues');
  }

  fetchDialogue(ref: string): Promise<DialoguePayload> {
    return this.get(`/dialogues/${encodeURIComponent(ref)}`);
  }

  fetchMetrics(ref: string): Promise<MetricsReportPayload> {
    return this.get(`/dialogues/${encodeURIComponent(ref)}/metrics`);
  }

  async postAnnotations(ref: string, records: AnnotationDraft[]): Promise<number> {
    const resp = await fetch(
      `${this.baseUrl}/dialogues/${encodeURIComponent(ref)}/annotations`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ records }),
      },
    );
    if (!resp.ok) {
      throw new Error(`POST annotations failed: ${resp.status}`);
    }
    const body = (await resp.json()) as { appended: number };
    return body.appended;
  }
}
