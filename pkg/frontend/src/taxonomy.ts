import type { PriorityRule, TaxonomyLabel, TaxonomyPayload } from './types';

/** Client-side view over the fetched taxonomy: tree navigation, collapse,
 * fuzzy search, and priority-rule hints. Labels only ever come from the
 * payload; this module never invents ids. */
export class TaxonomyView {
  readonly byId = new Map<string, TaxonomyLabel>();
  readonly children = new Map<string | null, string[]>();
  readonly reduced: string[];
  readonly rules: PriorityRule[];
  readonly hash: string;

  constructor(payload: TaxonomyPayload) {
    this.hash = payload.hash;
    this.reduced = payload.reduced_set;
    this.rules = payload.priority_rules;
    for (const label of payload.labels) {
      this.byId.set(label.id, label);
    }
    for (const label of payload.labels) {
      const key = label.parent;
      if (!this.children.has(key)) this.children.set(key, []);
      this.children.get(key)!.push(label.id);
    }
    for (const ids of this.children.values()) ids.sort();
  }

  roots(): string[] {
    return this.children.get(null) ?? [];
  }

  childrenOf(id: string | null): string[] {
    return this.children.get(id) ?? [];
  }

  has(id: string): boolean {
    return this.byId.has(id);
  }

  ancestors(id: string): string[] {
    const chain: string[] = [];
    let cur: string | null = id;
    while (cur !== null) {
      chain.unshift(cur);
      cur = this.byId.get(cur)?.parent ?? null;
    }
    return chain;
  }

  topLevel(id: string): string {
    return this.ancestors(id)[0];
  }

  /** Deepest ancestor-or-self present in the reduced set. */
  collapse(id: string): string {
    const reduced = new Set(this.reduced);
    const chain = this.ancestors(id);
    for (let i = chain.length - 1; i >= 0; i--) {
      if (reduced.has(chain[i])) return chain[i];
    }
    return chain[0];
  }

  /** Subsequence fuzzy match over label ids, best-first. */
  search(query: string, limit = 12): string[] {
    const q = query.toLowerCase();
    if (!q) return [];
    const scored: { id: string; score: number }[] = [];
    for (const id of this.byId.keys()) {
      const score = fuzzyScore(q, id.toLowerCase());
      if (score !== null) scored.push({ id, score });
    }
    scored.sort((a, b) => a.score - b.score || a.id.localeCompare(b.id));
    return scored.slice(0, limit).map((s) => s.id);
  }

  /** Rules whose deprioritized side is the chosen label. `context` is the
   * UI's description of the local dialogue situation; a rule whose regex
   * matches it is flagged as applying. */
  hintsFor(chosen: string, context: string): { rule: PriorityRule; applies: boolean }[] {
    const hints: { rule: PriorityRule; applies: boolean }[] = [];
    for (const rule of this.rules) {
      if (rule.over !== chosen) continue;
      let applies = false;
      try {
        applies = new RegExp(rule.context, 'i').test(context);
      } catch {
        applies = false;
      }
      hints.push({ rule, applies });
    }
    return hints;
  }
}

/** Lower is better; null means no subsequence match. Prefers early, dense
 * matches. */
export function fuzzyScore(query: string, target: string): number | null {
  let score = 0;
  let pos = 0;
  for (const ch of query) {
    const found = target.indexOf(ch, pos);
    if (found === -1) return null;
    score += found - pos;
    pos = found + 1;
  }
  return score + target.length * 0.01;
}

/** Context string handed to priority-rule matching: derived from the
 * surrounding dialogue so annotation-guide cues like "acceptance" fire when
 * the previous utterance hands this speaker a task or request. */
export function priorityContext(
  previousEffectiveLabel: string | null,
  taxonomy: TaxonomyView,
): string {
  if (!previousEffectiveLabel || !taxonomy.has(previousEffectiveLabel)) {
    return 'start of context';
  }
  const top = taxonomy.topLevel(previousEffectiveLabel);
  const parts = [`follows ${previousEffectiveLabel}`];
  if (top === 'Assign' || top === 'Request' || top === 'Propose') {
    parts.push('possible acceptance of an assignment, request, or offer');
  }
  if (top === 'Query') {
    parts.push('possible answer to a question');
  }
  return parts.join('; ');
}

const CLASS_PALETTE: Record<string, string> = {
  Inform: '#2563eb',
  Query: '#9333ea',
  Request: '#c2410c',
  Assign: '#b91c1c',
  Propose: '#0d9488',
  Acknowledge: '#15803d',
  Reject: '#a21caf',
  Code: '#475569',
  Social: '#ca8a04',
};

export function classColor(taxonomy: TaxonomyView, labelId: string): string {
  return CLASS_PALETTE[taxonomy.topLevel(labelId)] ?? '#334155';
}
