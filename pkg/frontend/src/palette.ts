/** Deterministic highlight color per entity type, derived from the
 * schema's taxonomy order so the palette follows the live schema. */
import type { SchemaDoc } from "./types.js";

const COLOR_WHEEL = [
  "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3",
  "#fdb462", "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd",
];

export function buildPalette(doc: SchemaDoc): Map<string, string> {
  const palette = new Map<string, string>();
  doc.entity_types.forEach((et, i) => {
    palette.set(et.name, COLOR_WHEEL[i % COLOR_WHEEL.length] ?? "#cccccc");
  });
  return palette;
}
