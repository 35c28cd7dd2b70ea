import type { MetricPayload, MetricsReportPayload } from './types';

function formatValue(name: string, metric: MetricPayload): string {
  if (metric.value === null) return 'n/a';
  if (name === 'median_response_latency') return `${metric.value}s`;
  // shown exactly as served: no client-side recomputation or rounding away
  return String(metric.value);
}

/** Metrics grouped under the team-dynamics principles. Values are rendered
 * verbatim from the service JSON; clicking a metric exposes its evidence
 * sentence ids for the transcript to highlight. */
export class MetricsPanel {
  readonly element: HTMLElement;
  private report: MetricsReportPayload | null = null;
  onEvidence: (sentenceIds: string[], firstId: string | null) => void = () => {};

  constructor() {
    this.element = document.createElement('div');
    this.element.className = 'metrics-panel';
  }

  setReport(report: MetricsReportPayload): void {
    this.report = report;
    this.render();
  }

  evidenceFor(name: string): string[] {
    const metric = this.report?.metrics[name];
    if (!metric) return [];
    const ids: string[] = [];
    const seen = new Set<string>();
    const push = (id: string | null) => {
      if (id && !seen.has(id)) {
        seen.add(id);
        ids.push(id);
      }
    };
    for (const sid of metric.evidence.numerator_ids ?? []) push(sid);
    for (const pair of metric.evidence.pairs ?? []) {
      push(pair.initiator_sentence_id);
      push(pair.responder_sentence_id);
    }
    for (const sid of metric.evidence.denominator_ids ?? []) push(sid);
    return ids;
  }

  displayedValue(name: string): string | null {
    const el = this.element.querySelector<HTMLElement>(
      `[data-metric="${name}"] .value`,
    );
    return el ? el.textContent : null;
  }

  render(): void {
    this.element.replaceChildren();
    if (!this.report) return;
    const report = this.report;

    if (report.flags.length > 0) {
      const flags = document.createElement('div');
      flags.className = 'flags';
      for (const flag of report.flags) {
        const badge = document.createElement('span');
        badge.className = 'badge';
        badge.dataset.flag = flag;
        badge.textContent = flag;
        flags.append(badge);
      }
      this.element.append(flags);
    }

    const note = document.createElement('p');
    note.className = 'principles-note';
    note.textContent = report.principles_note;
    this.element.append(note);

    const grouped = new Set<string>();
    for (const [principle, metricNames] of Object.entries(report.principles)) {
      const section = document.createElement('section');
      section.dataset.principle = principle;
      const heading = document.createElement('h3');
      heading.textContent = principle.replace(/_/g, ' ');
      section.append(heading);
      for (const name of metricNames) {
        const metric = report.metrics[name];
        if (!metric) continue;
        grouped.add(name);
        section.append(this.renderMetric(name, metric));
      }
      this.element.append(section);
    }
    const rest = Object.keys(report.metrics).filter((n) => !grouped.has(n));
    if (rest.length > 0) {
      const section = document.createElement('section');
      section.dataset.principle = 'other';
      for (const name of rest) {
        section.append(this.renderMetric(name, report.metrics[name]));
      }
      this.element.append(section);
    }
  }

  private renderMetric(name: string, metric: MetricPayload): HTMLElement {
    const row = document.createElement('div');
    row.className = 'metric';
    row.dataset.metric = name;
    row.dataset.polarity = metric.polarity;
    const label = document.createElement('span');
    label.className = 'name';
    label.textContent = name.replace(/_/g, ' ');
    const value = document.createElement('span');
    value.className = 'value';
    value.textContent = formatValue(name, metric);
    const polarity = document.createElement('span');
    polarity.className = `polarity polarity-${metric.polarity}`;
    polarity.textContent = metric.polarity;
    row.append(label, value, polarity);
    row.addEventListener('click', () => {
      const ids = this.evidenceFor(name);
      this.onEvidence(ids, ids[0] ?? null);
    });
    return row;
  }
}
