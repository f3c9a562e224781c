/** DOM rendering for the review page: queue list, highlighted paragraph,
 * relation list. Pure builders; event wiring stays in main.ts. */
import type { ParagraphSummary, ReviewRelation, ReviewSpan } from "./types.js";
import { EditBuffer } from "./editor.js";
import { codePointToUtf16 } from "./offsets.js";

export function renderQueue(
  container: HTMLElement,
  items: ParagraphSummary[],
  activeKey: string | null,
  onSelect: (item: ParagraphSummary) => void,
): void {
  container.replaceChildren();
  if (items.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No pending paragraphs. The review queue is clear.";
    container.appendChild(empty);
    return;
  }
  for (const item of items) {
    const key = `${item.doi}#${item.paragraph_index}`;
    const entry = document.createElement("button");
    entry.className = "queue-item" + (key === activeKey ? " active" : "");
    entry.type = "button";
    const title = document.createElement("div");
    title.className = "queue-key";
    title.textContent = key;
    const badge = document.createElement("span");
    badge.className = `badge badge-${item.review_status}`;
    badge.textContent = item.review_status;
    title.appendChild(badge);
    const preview = document.createElement("div");
    preview.className = "queue-preview";
    preview.textContent = item.preview;
    entry.append(title, preview);
    entry.addEventListener("click", () => onSelect(item));
    container.appendChild(entry);
  }
}

export function renderParagraph(
  container: HTMLElement,
  buffer: EditBuffer,
  palette: Map<string, string>,
  onSpanClick: (span: ReviewSpan) => void,
): void {
  container.replaceChildren();
  const text = buffer.text;
  let cursorUtf16 = 0;
  for (const span of buffer.spans) {
    const startU = codePointToUtf16(text, span.start);
    const endU = codePointToUtf16(text, span.end);
    if (startU > cursorUtf16) {
      container.appendChild(document.createTextNode(text.slice(cursorUtf16, startU)));
    }
    const mark = document.createElement("mark");
    mark.className = "entity-span" + (span.id === buffer.selectedSpanId ? " selected" : "");
    mark.style.backgroundColor = palette.get(span.label) ?? "#dddddd";
    mark.dataset.spanId = span.id;
    mark.textContent = text.slice(startU, endU);
    const tag = document.createElement("sup");
    tag.className = "entity-tag";
    tag.textContent = span.label;
    mark.appendChild(tag);
    mark.addEventListener("click", (event) => {
      event.stopPropagation();
      onSpanClick(span);
    });
    container.appendChild(mark);
    cursorUtf16 = endU;
  }
  if (cursorUtf16 < text.length) {
    container.appendChild(document.createTextNode(text.slice(cursorUtf16)));
  }
}

export function renderRelations(
  container: HTMLElement,
  buffer: EditBuffer,
  onDelete: (edge: ReviewRelation) => void,
): void {
  container.replaceChildren();
  if (buffer.relations.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No relations.";
    container.appendChild(empty);
    return;
  }
  for (const edge of buffer.relations) {
    const head = buffer.spanById(edge.head);
    const tail = buffer.spanById(edge.tail);
    const row = document.createElement("div");
    row.className = "relation-row";
    const label = document.createElement("span");
    label.textContent = head && tail
      ? `${buffer.surfaceOf(head)} —${edge.type}→ ${buffer.surfaceOf(tail)}`
      : `${edge.id} (dangling)`;
    const remove = document.createElement("button");
    remove.type = "button";
    remove.className = "link-button";
    remove.textContent = "delete";
    remove.addEventListener("click", () => onDelete(edge));
    row.append(label, remove);
    container.appendChild(row);
  }
}

export function renderBanner(container: HTMLElement, kind: "" | "info" | "error" | "conflict",
                             message: string, action?: { label: string; onClick: () => void }): void {
  container.replaceChildren();
  container.className = kind ? `banner banner-${kind}` : "banner hidden";
  if (!kind) return;
  container.appendChild(document.createTextNode(message));
  if (action) {
    const button = document.createElement("button");
    button.type = "button";
    button.className = "link-button";
    button.textContent = action.label;
    button.addEventListener("click", action.onClick);
    container.appendChild(button);
  }
}

export function renderProblems(container: HTMLElement, problems: string[]): void {
  container.replaceChildren();
  for (const problem of problems) {
    const li = document.createElement("li");
    li.textContent = problem;
    container.appendChild(li);
  }
  container.parentElement?.classList.toggle("hidden", problems.length === 0);
}

/** Code-point offsets of the current text selection inside the paragraph
 * container, or null when the selection is empty or outside it. */
export function selectionOffsets(container: HTMLElement): { startU16: number; endU16: number } | null {
  const selection = window.getSelection();
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) return null;
  const range = selection.getRangeAt(0);
  if (!container.contains(range.startContainer) || !container.contains(range.endContainer)) {
    return null;
  }
  const startU16 = utf16OffsetWithin(container, range.startContainer, range.startOffset);
  const endU16 = utf16OffsetWithin(container, range.endContainer, range.endOffset);
  if (startU16 === null || endU16 === null || startU16 === endU16) return null;
  return { startU16: Math.min(startU16, endU16), endU16: Math.max(startU16, endU16) };
}

function utf16OffsetWithin(container: HTMLElement, node: Node, offset: number): number | null {
  // walk the rendered text in document order, skipping the label tags
  let total = 0;
  const walker = document.createTreeWalker(container, NodeFilter.SHOW_TEXT, {
    acceptNode: (candidate) =>
      (candidate.parentElement?.classList.contains("entity-tag") ?? false)
        ? NodeFilter.FILTER_REJECT
        : NodeFilter.FILTER_ACCEPT,
  });
  let current = walker.nextNode();
  while (current) {
    if (current === node) return total + offset;
    total += current.textContent?.length ?? 0;
    current = walker.nextNode();
  }
  // selection anchored on an element node: resolve to its text start
  if (node instanceof HTMLElement && container.contains(node)) return total;
  return null;
}
