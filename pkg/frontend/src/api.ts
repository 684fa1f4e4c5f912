// Payload types for the analysis service. Field names mirror the wire
// format exactly; every response carries schema_version and run_id.

export type ErrorKind = 'Relation' | 'Branch' | 'Missing';
export type ExpandMode = 'AlongErrorSet' | 'AlongReferenceSet';

export const ERROR_KINDS: ErrorKind[] = ['Relation', 'Branch', 'Missing'];

export interface Envelope {
  schema_version: number;
  run_id: string;
}

export interface EntityRoles {
  ref_path_occurrences: number;
  observed_error_occurrences: number;
  observed_nonerror_occurrences: number;
  total_occurrences: number;
}

export interface OverviewResponse extends Envelope {
  kind: ErrorKind | null;
  summary: {
    total_cases: number;
    correct_cases: number;
    incorrect_cases: number;
    accuracy: number | null;
    totals: Record<ErrorKind, number>;
    per_entity_intensity: Record<string, Partial<Record<ErrorKind, number>>>;
    per_entity_roles: Record<string, EntityRoles>;
  };
}

export interface ProjectionResponse extends Envelope {
  kind: ErrorKind | null;
  entities: string[];
  names: string[];
  entity_kinds: string[];
  x: number[];
  y: number[];
  grid: {
    width: number;
    height: number;
    bandwidth: number;
    values: number[]; // row-major, length width*height
  };
  top: { entity_id: string; count: number }[];
}

export interface PathViewNode {
  entity_id: string;
  name: string;
  entity_kind: string;
  x: number;
  y: number;
  reference_occurrences: number;
  observed_error_occurrences: number;
  observed_nonerror_occurrences: number;
  total_occurrences: number;
  intensity: Record<ErrorKind, number>;
  total_intensity: number;
}

export interface PathViewEdge {
  source: string;
  target: string;
  observed_case_count: number;
  reference_case_count: number;
  error_kinds: ErrorKind[];
}

export interface PathViewResponse extends Envelope {
  min_error_intensity: number;
  nodes: PathViewNode[];
  edges: PathViewEdge[];
}

export interface NodeLink {
  source: string;
  target: string;
  family: 'reference' | 'observed';
  case_count: number;
  case_ids: string[];
  error_kinds: ErrorKind[];
}

export interface NodeLinksResponse extends Envelope {
  entity_id: string;
  outgoing: NodeLink[];
  incoming: NodeLink[];
}

export interface ExpansionPair {
  source: string;
  target: string;
  case_ids: string[];
}

export interface ExpandResponse extends Envelope {
  expansion: {
    anchor: string;
    kind: ErrorKind;
    mode: ExpandMode;
    error_targets: string[];
    reference_targets: string[];
    related_error_pairs: ExpansionPair[];
    related_reference_pairs: ExpansionPair[];
  };
  summary: {
    categories_err: Record<string, string>;
    categories_ref: Record<string, string>;
    summary_text: string;
  } | null;
}

export interface CaseEntry {
  case_id: string;
  question_entity_ids: string[];
  n_rel: number;
  n_br: number;
  n_miss: number;
  total_errors: number;
  predicted_answer: string;
  correct_answer: string;
  correct: boolean;
}

export interface CasesResponse extends Envelope {
  total: number;
  offset: number;
  limit: number;
  cases: CaseEntry[];
}

export interface InstanceStep {
  entity: string;
  relation_label: string; // labels the arc toward the next step; '' on the last
  mentioned: boolean;
  incoming_error_kinds: ErrorKind[];
}

export interface InstanceResponse extends Envelope {
  instance: {
    case_id: string;
    question: string;
    options: string[];
    correct_answer: string;
    predicted_answer: string;
    correct_entity: string;
    predicted_entity: string;
    correct: boolean;
    question_entities: {
      text: string;
      origin: string;
      entity: string | null;
      method: string;
      similarity: number | null;
    }[];
    missing_entities: string[];
    model_paths: { steps: InstanceStep[]; dropped_steps: number }[];
    reference_paths: { nodes: string[]; relations: string[]; mentioned: boolean[] }[];
  };
}

export type CaseSort = 'TotalErrorsDesc' | 'CaseIdAsc';

export interface CasesQuery {
  entity?: string;
  kind?: ErrorKind;
  text?: string;
  sort?: CaseSort;
  offset?: number;
  limit?: number;
}
