/**
 * Edit buffer for one paragraph: the mutable working copy of spans and
 * relation edges behind the page, with the invariants the UI relies on
 * (no overlapping spans, no dangling or self-loop edges, schema-valid
 * type pairs). All offsets are Unicode code points.
 */
import type {
  AnnotatedParagraphDto,
  ReviewRelation,
  ReviewSpan,
  ReviewSubmission,
} from "./types.js";
import { SchemaValidator } from "./validator.js";
import { codePointLength, slicePoints } from "./offsets.js";

export interface EditResult<T> {
  ok: boolean;
  value?: T;
  error?: string;
}

export class EditBuffer {
  readonly text: string;
  readonly loadedUpdatedAt: string;
  spans: ReviewSpan[] = [];
  relations: ReviewRelation[] = [];
  dirty = false;
  selectedSpanId: string | null = null;
  private nextSpan = 0;
  private nextEdge = 0;

  constructor(
    private readonly validator: SchemaValidator,
    paragraph: AnnotatedParagraphDto,
  ) {
    this.text = paragraph.text;
    this.loadedUpdatedAt = paragraph.updated_at;
    for (const s of paragraph.spans) {
      this.spans.push({ id: s.id, start: s.start, end: s.end, label: s.label });
    }
    for (const r of paragraph.relations) {
      this.relations.push({ id: r.id, head: r.head, tail: r.tail, type: r.type });
    }
    this.nextSpan = this.spans.length;
    this.nextEdge = this.relations.length;
  }

  surfaceOf(span: ReviewSpan): string {
    return slicePoints(this.text, span.start, span.end);
  }

  spanById(id: string): ReviewSpan | undefined {
    return this.spans.find((s) => s.id === id);
  }

  /** Add a span over [start, end) code points; overlap is blocked. */
  addSpan(start: number, end: number, label: string): EditResult<ReviewSpan> {
    const length = codePointLength(this.text);
    if (!(start >= 0 && start < end && end <= length)) {
      return { ok: false, error: `selection [${start},${end}) is out of bounds` };
    }
    const canonical = this.validator.resolveEntityLabel(label);
    if (canonical === null) {
      return { ok: false, error: `unknown entity type: ${label}` };
    }
    const clash = this.spans.find((s) => start < s.end && s.start < end);
    if (clash) {
      return {
        ok: false,
        error: `selection overlaps existing ${clash.label} span "${this.surfaceOf(clash)}"`,
      };
    }
    const span: ReviewSpan = { id: `n${this.nextSpan++}`, start, end, label: canonical };
    this.spans.push(span);
    this.spans.sort((a, b) => a.start - b.start);
    this.dirty = true;
    return { ok: true, value: span };
  }

  /** Change the type of an existing span. */
  relabelSpan(id: string, label: string): EditResult<ReviewSpan> {
    const span = this.spanById(id);
    if (!span) return { ok: false, error: `no span ${id}` };
    const canonical = this.validator.resolveEntityLabel(label);
    if (canonical === null) return { ok: false, error: `unknown entity type: ${label}` };
    span.label = canonical;
    // edges whose type pair the relabel broke are dropped, reported by count
    const broken = this.relations.filter((e) => this.edgeProblem(e) !== null);
    this.relations = this.relations.filter((e) => this.edgeProblem(e) === null);
    this.dirty = true;
    if (broken.length > 0) {
      return { ok: true, value: span, error: `${broken.length} relation(s) removed` };
    }
    return { ok: true, value: span };
  }

  /** Delete a span and every edge attached to it; returns removed edge count. */
  deleteSpan(id: string): EditResult<number> {
    const before = this.spans.length;
    this.spans = this.spans.filter((s) => s.id !== id);
    if (this.spans.length === before) {
      return { ok: false, error: `no span ${id}` };
    }
    const edgesBefore = this.relations.length;
    this.relations = this.relations.filter((e) => e.head !== id && e.tail !== id);
    if (this.selectedSpanId === id) this.selectedSpanId = null;
    this.dirty = true;
    return { ok: true, value: edgesBefore - this.relations.length };
  }

  addRelation(headId: string, tailId: string, type: string): EditResult<ReviewRelation> {
    const head = this.spanById(headId);
    const tail = this.spanById(tailId);
    if (!head || !tail) return { ok: false, error: "relation endpoints must be existing spans" };
    if (headId === tailId) return { ok: false, error: "a relation cannot loop onto one span" };
    const canonical = this.validator.resolveRelationLabel(type);
    if (canonical === null) return { ok: false, error: `unknown relation type: ${type}` };
    const problem = this.validator.checkTypePair(canonical, head.label, tail.label);
    if (problem !== null) return { ok: false, error: problem };
    const edge: ReviewRelation = { id: `r${this.nextEdge++}`, head: headId, tail: tailId, type: canonical };
    this.relations.push(edge);
    this.dirty = true;
    return { ok: true, value: edge };
  }

  deleteRelation(id: string): EditResult<null> {
    const before = this.relations.length;
    this.relations = this.relations.filter((e) => e.id !== id);
    if (this.relations.length === before) return { ok: false, error: `no relation ${id}` };
    this.dirty = true;
    return { ok: true, value: null };
  }

  private edgeProblem(edge: ReviewRelation): string | null {
    const head = this.spanById(edge.head);
    const tail = this.spanById(edge.tail);
    if (!head || !tail) return "dangling";
    return this.validator.checkTypePair(edge.type, head.label, tail.label);
  }

  /** All current validation problems; submission is blocked while non-empty. */
  problems(): string[] {
    return this.validator.validateSubmission(this.text, this.spans, this.relations);
  }

  toSubmission(decision: "reviewed" | "rejected", annotator: string): ReviewSubmission {
    return {
      spans: this.spans.map((s) => ({ ...s })),
      relations: this.relations.map((e) => ({ ...e })),
      decision,
      annotator,
    };
  }
}
