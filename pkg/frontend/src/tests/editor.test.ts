import assert from "node:assert/strict";
import { test } from "node:test";

import { EditBuffer } from "../editor.js";
import { SchemaValidator } from "../validator.js";
import { SCHEMA_DOC, paragraphFixture } from "./fixtures.js";

const validator = new SchemaValidator(SCHEMA_DOC);

function buffer(): EditBuffer {
  return new EditBuffer(validator, paragraphFixture());
}

test("buffer loads spans and relations from the service payload", () => {
  const b = buffer();
  assert.equal(b.spans.length, 2);
  assert.equal(b.relations.length, 1);
  assert.equal(b.dirty, false);
  assert.equal(b.surfaceOf(b.spans[0]!), "heated");
});

test("adding a span from a selection", () => {
  const b = buffer();
  const vial = b.text.indexOf("vial");
  const result = b.addSpan(vial, vial + 4, "vessel");
  assert.ok(result.ok);
  assert.equal(result.value?.label, "Vessel");
  assert.equal(b.dirty, true);
  assert.equal(b.spans.length, 3);
  // spans stay sorted by start offset
  const starts = b.spans.map((s) => s.start);
  assert.deepEqual(starts, [...starts].sort((x, y) => x - y));
});

test("overlapping span is blocked with a message", () => {
  const b = buffer();
  const heated = b.text.indexOf("heated");
  const result = b.addSpan(heated + 2, heated + 9, "Vessel");
  assert.equal(result.ok, false);
  assert.match(result.error ?? "", /overlaps existing/);
  assert.equal(b.spans.length, 2);
});

test("unknown label and bad bounds are blocked", () => {
  const b = buffer();
  assert.equal(b.addSpan(0, 3, "pressure cooker").ok, false);
  assert.equal(b.addSpan(5, 5, "Vessel").ok, false);
  assert.equal(b.addSpan(0, 10_000, "Vessel").ok, false);
});

test("deleting a span cascades its relations", () => {
  const b = buffer();
  const result = b.deleteSpan("s1");
  assert.ok(result.ok);
  assert.equal(result.value, 1); // the has_value edge went with it
  assert.equal(b.relations.length, 0);
});

test("relation endpoints and type pairs are validated", () => {
  const b = buffer();
  const vial = b.text.indexOf("vial");
  const added = b.addSpan(vial, vial + 4, "Vessel");
  assert.ok(added.ok && added.value);
  const vesselId = added.value.id;

  const good = b.addRelation(vesselId, "s0", "associated_with");
  assert.ok(good.ok);

  const selfLoop = b.addRelation("s0", "s0", "associated_with");
  assert.equal(selfLoop.ok, false);

  const badType = b.addRelation("s0", vesselId, "has_value");
  assert.equal(badType.ok, false);
  assert.match(badType.error ?? "", /may not point to/);

  const dangling = b.addRelation("zz", "s0", "associated_with");
  assert.equal(dangling.ok, false);
});

test("a clean buffer has no problems and serializes for submission", () => {
  const b = buffer();
  const vial = b.text.indexOf("vial");
  const added = b.addSpan(vial, vial + 4, "Vessel");
  assert.ok(added.ok && added.value);
  assert.ok(b.addRelation(added.value.id, "s0", "associated_with").ok);
  assert.deepEqual(b.problems(), []);
  const submission = b.toSubmission("reviewed", "expert-1");
  assert.equal(submission.decision, "reviewed");
  assert.equal(submission.spans.length, 3);
  assert.equal(submission.relations.length, 2);
});

test("relabeling a span drops relations the new type breaks", () => {
  const b = buffer();
  const result = b.relabelSpan("s1", "Vessel"); // has_value tail must be Descriptor
  assert.ok(result.ok);
  assert.match(result.error ?? "", /1 relation\(s\) removed/);
  assert.equal(b.relations.length, 0);
});
