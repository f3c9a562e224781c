/** Wire types mirroring the review service's JSON payloads. */

export interface SchemaEntityType {
  name: string;
  parent: string | null;
}

export interface SchemaConstraint {
  relation: string;
  allowed_head_types: string[];
  allowed_tail_types: string[];
}

export interface SchemaDoc {
  schema_version: string;
  entity_types: SchemaEntityType[];
  relation_types: string[];
  constraints: SchemaConstraint[];
  entity_aliases: Record<string, string>;
  relation_aliases: Record<string, string>;
}

export interface ParagraphSummary {
  doi: string;
  paragraph_index: number;
  review_status: string;
  updated_at: string;
  n_spans: number;
  n_relations: number;
  preview: string;
}

export interface QueuePage {
  paragraphs: ParagraphSummary[];
  total: number;
}

export interface SpanDto {
  id: string;
  start: number;
  end: number;
  surface: string;
  label: string;
  confidence: number;
  provenance: string;
}

export interface RelationDto {
  id: string;
  head: string;
  tail: string;
  type: string;
  provenance: string;
}

export interface AnnotatedParagraphDto {
  doi: string;
  paragraph_index: number;
  text: string;
  spans: SpanDto[];
  relations: RelationDto[];
  review_status: string;
  annotator: string | null;
  updated_at: string;
  record?: unknown;
}

export interface ReviewSpan {
  id: string;
  start: number;
  end: number;
  label: string;
}

export interface ReviewRelation {
  id: string;
  head: string;
  tail: string;
  type: string;
}

export interface ReviewSubmission {
  spans: ReviewSpan[];
  relations: ReviewRelation[];
  decision: "reviewed" | "rejected";
  annotator: string;
}
