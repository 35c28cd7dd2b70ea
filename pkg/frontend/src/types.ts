/** Wire types mirroring the review service's JSON. */

export interface TaxonomyLabel {
  id: string;
  parent: string | null;
  description: string;
  example: string | null;
  synthesized: boolean;
}

export interface PriorityRule {
  prefer: string;
  over: string;
  context: string;
  note: string;
}

export interface TaxonomyPayload {
  hash: string;
  labels: TaxonomyLabel[];
  reduced_set: string[];
  priority_rules: PriorityRule[];
}

export interface SentencePayload {
  id: string;
  index_in_message: number;
  index_in_dialogue: number;
  text: string;
  is_code_block: boolean;
  gold_label: string | null;
  predicted_label: string | null;
  effective_label: string | null;
}

export interface MessagePayload {
  id: string;
  speaker: string;
  ts: string;
  text: string;
  sentences: SentencePayload[];
}

export interface DialoguePayload {
  store_id: string;
  dialogue_id: string;
  messages: MessagePayload[];
}

export interface DialogueListing {
  dialogues: {
    store_id: string;
    dialogue_id: string;
    n_messages: number;
    n_sentences: number;
  }[];
}

export interface PairPayload {
  initiator_sentence_id: string;
  initiator_kind: string;
  initiator_speaker: string;
  responder_sentence_id: string | null;
  responder_speaker: string | null;
  response_kind: string | null;
  latency: number | null;
  closed: boolean;
}

export interface MetricPayload {
  value: number | null;
  undefined: boolean;
  polarity: string;
  numerator?: number;
  denominator?: number;
  scale?: number;
  declines?: number;
  decline_rate?: number | null;
  evidence: {
    numerator_ids?: string[];
    denominator_ids?: string[];
    pairs?: PairPayload[];
  };
}

export interface MetricsReportPayload {
  scope: string;
  window_of_analysis: { start: string | null; end: string | null };
  metrics: Record<string, MetricPayload>;
  label_frequencies: {
    team: Record<string, { count: number; rate_per_100: number | null; sentence_ids: string[] }>;
    speakers: Record<string, Record<string, { count: number; rate_per_100: number | null; sentence_ids: string[] }>>;
  };
  pairs: PairPayload[];
  principles: Record<string, string[]>;
  principles_note: string;
  flags: string[];
  label_sources: Record<string, number>;
  unlabeled_count: number;
}

export interface AnnotationDraft {
  sentence_id: string;
  label: string;
  annotator: string;
  source: 'human' | 'corrected';
  char_start?: number;
  char_end?: number;
}
