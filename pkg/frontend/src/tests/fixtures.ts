import type { AnnotatedParagraphDto, SchemaDoc } from "../types.js";

/** Mirror of the service's schema document, for offline unit tests.
 * The integration test replays against the live /schema to catch drift. */
export const SCHEMA_DOC: SchemaDoc = {
  schema_version: "1.0.0",
  entity_types: [
    { name: "Precursor", parent: null },
    { name: "MetalPrecursor", parent: "Precursor" },
    { name: "OrganicPrecursor", parent: "Precursor" },
    { name: "SolventPrecursor", parent: "Precursor" },
    { name: "SynthesisAction", parent: null },
    { name: "Acid", parent: null },
    { name: "Vessel", parent: null },
    { name: "Descriptor", parent: null },
    { name: "MofComposition", parent: null },
  ],
  relation_types: ["HasValue", "AssociatedWith"],
  constraints: [
    {
      relation: "HasValue",
      allowed_head_types: [
        "Acid", "MetalPrecursor", "MofComposition", "OrganicPrecursor",
        "Precursor", "SolventPrecursor", "SynthesisAction", "Vessel",
      ],
      allowed_tail_types: ["Descriptor"],
    },
    {
      relation: "AssociatedWith",
      allowed_head_types: [
        "Acid", "MetalPrecursor", "MofComposition", "OrganicPrecursor",
        "Precursor", "SolventPrecursor", "SynthesisAction", "Vessel",
      ],
      allowed_tail_types: [
        "Acid", "Descriptor", "MetalPrecursor", "MofComposition",
        "OrganicPrecursor", "Precursor", "SolventPrecursor",
        "SynthesisAction", "Vessel",
      ],
    },
  ],
  entity_aliases: {
    "numeric descriptor": "Descriptor",
    "synthesis action": "SynthesisAction",
    "mof structure": "MofComposition",
  },
  relation_aliases: {
    "has value": "HasValue",
    "associated with": "AssociatedWith",
  },
};

export function paragraphFixture(): AnnotatedParagraphDto {
  const text = "The mixture was heated at 120 °C in a vial.";
  return {
    doi: "10.5555/ui-test",
    paragraph_index: 0,
    text,
    spans: [
      {
        id: "s0",
        start: text.indexOf("heated"),
        end: text.indexOf("heated") + 6,
        surface: "heated",
        label: "SynthesisAction",
        confidence: 1.0,
        provenance: "rule",
      },
      {
        id: "s1",
        start: text.indexOf("120"),
        end: text.indexOf("120") + 6,
        surface: "120 °C",
        label: "Descriptor",
        confidence: 1.0,
        provenance: "rule",
      },
    ],
    relations: [
      { id: "e0", head: "s0", tail: "s1", type: "has_value", provenance: "rule" },
    ],
    review_status: "pending",
    annotator: null,
    updated_at: "2026-01-01T00:00:00.000000Z",
  };
}
