/**
 * Client-side validation against the live /schema document.
 *
 * The palette, label resolution and relation type-pair rules are all
 * derived from the fetched schema, never hard-coded, so a local accept
 * implies a server accept for taxonomy reasons.
 */
import type { ReviewRelation, ReviewSpan, SchemaDoc } from "./types.js";
import { codePointLength } from "./offsets.js";

function normalizeLabel(label: string): string {
  return label.trim().toLowerCase().replace(/[\s_-]+/g, " ");
}

function spaceCamelCase(name: string): string {
  return name.replace(/(?<!^)(?=[A-Z])/g, " ").toLowerCase();
}

export class SchemaValidator {
  readonly entityTypes: string[];
  readonly relationTypes: string[];
  private readonly entityLookup = new Map<string, string>();
  private readonly relationLookup = new Map<string, string>();
  private readonly allowedHeads = new Map<string, Set<string>>();
  private readonly allowedTails = new Map<string, Set<string>>();

  constructor(doc: SchemaDoc) {
    this.entityTypes = doc.entity_types.map((e) => e.name);
    this.relationTypes = [...doc.relation_types];
    for (const name of this.entityTypes) {
      this.entityLookup.set(normalizeLabel(name), name);
      this.entityLookup.set(spaceCamelCase(name), name);
    }
    for (const [alias, target] of Object.entries(doc.entity_aliases)) {
      this.entityLookup.set(normalizeLabel(alias), target);
    }
    for (const name of this.relationTypes) {
      this.relationLookup.set(normalizeLabel(name), name);
      this.relationLookup.set(spaceCamelCase(name), name);
    }
    for (const [alias, target] of Object.entries(doc.relation_aliases)) {
      this.relationLookup.set(normalizeLabel(alias), target);
    }
    for (const row of doc.constraints) {
      this.allowedHeads.set(row.relation, new Set(row.allowed_head_types));
      this.allowedTails.set(row.relation, new Set(row.allowed_tail_types));
    }
  }

  resolveEntityLabel(label: string): string | null {
    return this.entityLookup.get(normalizeLabel(label)) ?? null;
  }

  resolveRelationLabel(label: string): string | null {
    return this.relationLookup.get(normalizeLabel(label)) ?? null;
  }

  /** null when the type pair is allowed, otherwise a message. */
  checkTypePair(relationLabel: string, headLabel: string, tailLabel: string): string | null {
    const relation = this.resolveRelationLabel(relationLabel);
    if (relation === null) return `unknown relation type: ${relationLabel}`;
    const head = this.resolveEntityLabel(headLabel);
    if (head === null) return `unknown entity type: ${headLabel}`;
    const tail = this.resolveEntityLabel(tailLabel);
    if (tail === null) return `unknown entity type: ${tailLabel}`;
    if (!this.allowedHeads.get(relation)?.has(head)) {
      return `${relation} may not start at a ${head}`;
    }
    if (!this.allowedTails.get(relation)?.has(tail)) {
      return `${relation} may not point to a ${tail}`;
    }
    return null;
  }

  /** Validate a full edit buffer; [] means submittable. */
  validateSubmission(text: string, spans: ReviewSpan[], relations: ReviewRelation[]): string[] {
    const problems: string[] = [];
    const length = codePointLength(text);
    const byId = new Map<string, ReviewSpan>();
    const ordered = [...spans].sort((a, b) => a.start - b.start || a.end - b.end);
    let prevEnd = -1;
    for (const span of ordered) {
      if (byId.has(span.id)) problems.push(`duplicate span id ${span.id}`);
      byId.set(span.id, span);
      if (!(span.start >= 0 && span.start < span.end && span.end <= length)) {
        problems.push(`span ${span.id}: offsets [${span.start},${span.end}) out of bounds`);
      } else if (span.start < prevEnd) {
        problems.push(`span ${span.id}: overlaps another span`);
      }
      prevEnd = Math.max(prevEnd, span.end);
      if (this.resolveEntityLabel(span.label) === null) {
        problems.push(`span ${span.id}: unknown label ${span.label}`);
      }
    }
    for (const edge of relations) {
      const head = byId.get(edge.head);
      const tail = byId.get(edge.tail);
      if (!head || !tail) {
        problems.push(`relation ${edge.id}: references a missing span`);
        continue;
      }
      if (edge.head === edge.tail) {
        problems.push(`relation ${edge.id}: head and tail are the same span`);
        continue;
      }
      const typeProblem = this.checkTypePair(edge.type, head.label, tail.label);
      if (typeProblem !== null) problems.push(`relation ${edge.id}: ${typeProblem}`);
    }
    return problems;
  }
}
