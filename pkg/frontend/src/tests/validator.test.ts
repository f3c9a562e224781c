import assert from "node:assert/strict";
import { test } from "node:test";

import { SchemaValidator } from "../validator.js";
import { SCHEMA_DOC } from "./fixtures.js";

const validator = new SchemaValidator(SCHEMA_DOC);

test("labels resolve case-insensitively with aliases", () => {
  assert.equal(validator.resolveEntityLabel("vessel"), "Vessel");
  assert.equal(validator.resolveEntityLabel("METALPRECURSOR"), "MetalPrecursor");
  assert.equal(validator.resolveEntityLabel("metal precursor"), "MetalPrecursor");
  assert.equal(validator.resolveEntityLabel("numeric descriptor"), "Descriptor");
  assert.equal(validator.resolveEntityLabel("pressure cooker"), null);
  assert.equal(validator.resolveRelationLabel("has_value"), "HasValue");
  assert.equal(validator.resolveRelationLabel("Associated With"), "AssociatedWith");
});

test("type pairs follow the constraint rows", () => {
  assert.equal(validator.checkTypePair("has_value", "SynthesisAction", "Descriptor"), null);
  assert.notEqual(validator.checkTypePair("has_value", "SynthesisAction", "Vessel"), null);
  assert.notEqual(validator.checkTypePair("has_value", "Descriptor", "Descriptor"), null);
  assert.equal(validator.checkTypePair("associated_with", "Vessel", "SynthesisAction"), null);
  assert.notEqual(validator.checkTypePair("associated_with", "Descriptor", "Vessel"), null);
});

test("submission validation finds bounds, overlap and dangling problems", () => {
  const text = "heated at 120 °C";
  const ok = validator.validateSubmission(
    text,
    [
      { id: "a", start: 0, end: 6, label: "SynthesisAction" },
      { id: "b", start: 10, end: 16, label: "Descriptor" },
    ],
    [{ id: "r", head: "a", tail: "b", type: "has_value" }],
  );
  assert.deepEqual(ok, []);

  const bad = validator.validateSubmission(
    text,
    [
      { id: "a", start: 0, end: 99, label: "SynthesisAction" },
      { id: "b", start: 0, end: 4, label: "Vessel" },
    ],
    [
      { id: "r1", head: "a", tail: "zz", type: "has_value" },
      { id: "r2", head: "a", tail: "a", type: "associated_with" },
      { id: "r3", head: "a", tail: "b", type: "has_value" },
    ],
  );
  assert.ok(bad.some((p) => p.includes("out of bounds")));
  assert.ok(bad.some((p) => p.includes("missing span")));
  assert.ok(bad.some((p) => p.includes("same span")));
  assert.ok(bad.some((p) => p.includes("may not point to")));
});
