/**
 * Offset conversions between JavaScript UTF-16 string indices and the
 * Unicode code-point offsets the service speaks.
 *
 * Chemistry text regularly contains non-ASCII ("·", "°", "–"); those are
 * single UTF-16 units, but astral characters are not, so a correct
 * conversion is required for the submitted offsets to equal the rendered
 * ones on any text.
 */

/** Code-point offset of the given UTF-16 index. */
export function utf16ToCodePoint(text: string, utf16Index: number): number {
  if (utf16Index < 0 || utf16Index > text.length) {
    throw new RangeError(`utf16 index ${utf16Index} out of range 0..${text.length}`);
  }
  let points = 0;
  let i = 0;
  while (i < utf16Index) {
    const code = text.codePointAt(i);
    if (code === undefined) break;
    i += code > 0xffff ? 2 : 1;
    points += 1;
  }
  return points;
}

/** UTF-16 index of the given code-point offset. */
export function codePointToUtf16(text: string, pointOffset: number): number {
  if (pointOffset < 0) throw new RangeError(`negative code-point offset ${pointOffset}`);
  let points = 0;
  let i = 0;
  while (points < pointOffset) {
    if (i >= text.length) {
      throw new RangeError(`code-point offset ${pointOffset} beyond end of text`);
    }
    const code = text.codePointAt(i);
    if (code === undefined) break;
    i += code > 0xffff ? 2 : 1;
    points += 1;
  }
  return i;
}

/** Number of code points in the string. */
export function codePointLength(text: string): number {
  let n = 0;
  for (const _ of text) n += 1;
  return n;
}

/** Slice by code-point offsets (service semantics). */
export function slicePoints(text: string, start: number, end: number): string {
  return text.slice(codePointToUtf16(text, start), codePointToUtf16(text, end));
}
