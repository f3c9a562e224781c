/** Page wiring: load schema and queue, edit spans/relations on the
 * selected paragraph, submit decisions, advance to the next pending one. */
import { ApiClient, ApiError } from "./api.js";
import { EditBuffer } from "./editor.js";
import { utf16ToCodePoint } from "./offsets.js";
import { buildPalette } from "./palette.js";
import {
  renderBanner,
  renderParagraph,
  renderProblems,
  renderQueue,
  renderRelations,
  selectionOffsets,
} from "./render.js";
import type { ParagraphSummary } from "./types.js";
import { SchemaValidator } from "./validator.js";

const api = new ApiClient("");

interface PageState {
  validator: SchemaValidator;
  palette: Map<string, string>;
  queue: ParagraphSummary[];
  active: ParagraphSummary | null;
  buffer: EditBuffer | null;
  relationHead: string | null; // click-head-then-click-tail flow
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const banner = el<HTMLDivElement>("banner");
  try {
    const doc = await api.getSchema();
    const state: PageState = {
      validator: new SchemaValidator(doc),
      palette: buildPalette(doc),
      queue: [],
      active: null,
      buffer: null,
      relationHead: null,
    };
    populatePickers(state);
    wireControls(state);
    await reloadQueue(state);
  } catch (error) {
    renderBanner(banner, "error", `Cannot reach the review service (${String(error)}).`, {
      label: "retry",
      onClick: () => void boot(),
    });
  }
}

function populatePickers(state: PageState): void {
  const typePicker = el<HTMLSelectElement>("span-type");
  typePicker.replaceChildren(
    ...state.validator.entityTypes.map((name) => new Option(name, name)),
  );
  const relationPicker = el<HTMLSelectElement>("relation-type");
  relationPicker.replaceChildren(
    ...state.validator.relationTypes.map((name) => new Option(name, name)),
  );
}

async function reloadQueue(state: PageState): Promise<void> {
  const banner = el<HTMLDivElement>("banner");
  try {
    const page = await api.loadQueue("pending", 100);
    state.queue = page.paragraphs;
    renderBanner(banner, "", "");
    renderQueue(el("queue"), state.queue, activeKey(state), (item) => {
      void openParagraph(state, item);
    });
    if (!state.active && state.queue.length > 0) {
      await openParagraph(state, state.queue[0]!);
    }
  } catch (error) {
    renderBanner(banner, "error", `Queue load failed (${String(error)}).`, {
      label: "retry",
      onClick: () => void reloadQueue(state),
    });
  }
}

function activeKey(state: PageState): string | null {
  return state.active ? `${state.active.doi}#${state.active.paragraph_index}` : null;
}

async function openParagraph(state: PageState, item: ParagraphSummary): Promise<void> {
  const paragraph = await api.getParagraph(item.doi, item.paragraph_index);
  state.active = item;
  state.buffer = new EditBuffer(state.validator, paragraph);
  state.relationHead = null;
  el<HTMLInputElement>("annotator").value ||= "";
  refresh(state);
}

function refresh(state: PageState): void {
  const buffer = state.buffer;
  renderQueue(el("queue"), state.queue, activeKey(state), (item) => void openParagraph(state, item));
  if (!buffer) return;
  renderParagraph(el("paragraph"), buffer, state.palette, (span) => {
    if (state.relationHead !== null && state.relationHead !== span.id) {
      const type = el<HTMLSelectElement>("relation-type").value;
      const result = buffer.addRelation(state.relationHead, span.id, type);
      state.relationHead = null;
      if (!result.ok) {
        renderBanner(el("banner"), "error", result.error ?? "relation rejected");
      } else {
        renderBanner(el("banner"), "", "");
      }
    } else {
      buffer.selectedSpanId = buffer.selectedSpanId === span.id ? null : span.id;
    }
    refresh(state);
  });
  renderRelations(el("relations"), buffer, (edge) => {
    buffer.deleteRelation(edge.id);
    refresh(state);
  });
  renderProblems(el("problems"), buffer.problems());
  const submittable = buffer.problems().length === 0;
  el<HTMLButtonElement>("submit-reviewed").disabled = !submittable;
  el<HTMLButtonElement>("submit-rejected").disabled = !submittable;
  el<HTMLSpanElement>("dirty-flag").textContent = buffer.dirty ? "unsaved edits" : "";
}

function wireControls(state: PageState): void {
  el<HTMLButtonElement>("add-span").addEventListener("click", () => {
    const buffer = state.buffer;
    if (!buffer) return;
    const offsets = selectionOffsets(el("paragraph"));
    if (!offsets) {
      renderBanner(el("banner"), "info", "Select text inside the paragraph first.");
      return;
    }
    const start = utf16ToCodePoint(buffer.text, offsets.startU16);
    const end = utf16ToCodePoint(buffer.text, offsets.endU16);
    const result = buffer.addSpan(start, end, el<HTMLSelectElement>("span-type").value);
    renderBanner(el("banner"), result.ok ? "" : "error", result.error ?? "");
    refresh(state);
  });

  el<HTMLButtonElement>("delete-span").addEventListener("click", () => {
    const buffer = state.buffer;
    if (!buffer || !buffer.selectedSpanId) return;
    const span = buffer.spanById(buffer.selectedSpanId);
    const attached = buffer.relations.filter(
      (e) => e.head === buffer.selectedSpanId || e.tail === buffer.selectedSpanId,
    ).length;
    const prompt = attached > 0
      ? `Delete span "${span ? buffer.surfaceOf(span) : "?"}" and its ${attached} relation(s)?`
      : `Delete span "${span ? buffer.surfaceOf(span) : "?"}"?`;
    if (!window.confirm(prompt)) return;
    buffer.deleteSpan(buffer.selectedSpanId);
    refresh(state);
  });

  el<HTMLButtonElement>("start-relation").addEventListener("click", () => {
    const buffer = state.buffer;
    if (!buffer || !buffer.selectedSpanId) {
      renderBanner(el("banner"), "info", "Select the head span first, then click the tail span.");
      return;
    }
    state.relationHead = buffer.selectedSpanId;
    renderBanner(el("banner"), "info", "Now click the tail span.");
  });

  el<HTMLButtonElement>("submit-reviewed").addEventListener("click", () => void submit(state, "reviewed"));
  el<HTMLButtonElement>("submit-rejected").addEventListener("click", () => void submit(state, "rejected"));
  el<HTMLButtonElement>("reload-queue").addEventListener("click", () => void reloadQueue(state));
}

async function submit(state: PageState, decision: "reviewed" | "rejected"): Promise<void> {
  const buffer = state.buffer;
  const active = state.active;
  if (!buffer || !active) return;
  const problems = buffer.problems();
  if (problems.length > 0) {
    renderProblems(el("problems"), problems);
    return;
  }
  const annotator = el<HTMLInputElement>("annotator").value || "anonymous";
  try {
    await api.submitReview(
      active.doi,
      active.paragraph_index,
      buffer.toSubmission(decision, annotator),
      buffer.loadedUpdatedAt,
    );
    state.active = null;
    state.buffer = null;
    renderBanner(el("banner"), "info", `Saved ${decision}: ${active.doi}#${active.paragraph_index}`);
    await reloadQueue(state); // advances to the next pending paragraph
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      renderBanner(el("banner"), "conflict", "This paragraph changed since you loaded it.", {
        label: "reload",
        onClick: () => void openParagraph(state, active),
      });
    } else if (error instanceof ApiError && error.status === 422) {
      const body = error.body as { errors?: string[]; detail?: string } | null;
      renderProblems(el("problems"), body?.errors ?? [body?.detail ?? "validation failed"]);
    } else {
      renderBanner(el("banner"), "error", `Submit failed (${String(error)}).`);
    }
  }
}

document.addEventListener("DOMContentLoaded", () => void boot());
