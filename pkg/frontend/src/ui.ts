// DOM rendering for the decision-maker console. Every displayed number comes
// verbatim from an API payload: formatting trims to 4 significant digits for
// the label while the title attribute carries full precision.

import type { QueryPayload, StateDoc } from "./api.js";

export function formatValue(v: number): string {
  if (!Number.isFinite(v)) return String(v);
  return Number(v.toPrecision(4)).toString();
}

function valueSpan(doc: Document, v: number): HTMLElement {
  const span = doc.createElement("span");
  span.className = "value";
  span.textContent = formatValue(v);
  span.title = String(v);
  return span;
}

export function validateQuery(payload: unknown): string | null {
  if (typeof payload !== "object" || payload === null) return "query payload is not an object";
  const q = payload as Record<string, unknown>;
  if (typeof q.id !== "string") return "query id missing";
  if (q.kind !== "pc" && q.kind !== "ir") return `unknown query kind ${String(q.kind)}`;
  const isVector = (v: unknown) =>
    Array.isArray(v) && v.length > 0 && v.every((x) => typeof x === "number" && Number.isFinite(x));
  if (!isVector(q.f)) return "objective vector f is malformed";
  if (q.kind === "pc") {
    if (!isVector(q.f_other)) return "objective vector f_other is malformed";
    if ((q.f_other as number[]).length !== (q.f as number[]).length) {
      return "paired vectors disagree on dimension";
    }
  }
  return null;
}

export type AnswerHandler = (answer: { preferred?: "first" | "second"; dim?: number }) => Promise<void>;

function banner(doc: Document, container: HTMLElement, message: string): void {
  const div = doc.createElement("div");
  div.className = "banner error";
  div.textContent = message;
  container.appendChild(div);
}

function objectiveColumn(doc: Document, label: string, values: number[]): HTMLElement {
  const col = doc.createElement("div");
  col.className = "objective-column";
  const head = doc.createElement("h3");
  head.textContent = label;
  col.appendChild(head);
  const list = doc.createElement("ul");
  values.forEach((v, i) => {
    const li = doc.createElement("li");
    const dim = doc.createElement("span");
    dim.className = "dim-label";
    dim.textContent = `f${i + 1}`;
    li.appendChild(dim);
    li.appendChild(valueSpan(doc, v));
    list.appendChild(li);
  });
  col.appendChild(list);
  return col;
}

/** Render the pending query with its answer controls.
 *
 * Buttons disable themselves on the first click and stay disabled until the
 * handler resolves, so a double-click produces exactly one submission.
 */
export function renderQuery(
  container: HTMLElement,
  payload: unknown,
  onAnswer: AnswerHandler,
): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  const problem = validateQuery(payload);
  if (problem !== null) {
    banner(doc, container, `Cannot display query: ${problem}`);
    return;
  }
  const query = payload as QueryPayload;
  const buttons: HTMLButtonElement[] = [];

  const guard = (run: () => Promise<void>) => {
    if (buttons.some((b) => b.disabled)) return;
    buttons.forEach((b) => (b.disabled = true));
    void run().catch(() => {
      buttons.forEach((b) => (b.disabled = false));
    });
  };

  if (query.kind === "pc") {
    const pair = doc.createElement("div");
    pair.className = "pc-pair";
    pair.appendChild(objectiveColumn(doc, "Option A", query.f));
    pair.appendChild(objectiveColumn(doc, "Option B", query.f_other));
    container.appendChild(pair);
    const controls = doc.createElement("div");
    controls.className = "answer-controls";
    (["first", "second"] as const).forEach((which, i) => {
      const btn = doc.createElement("button");
      btn.className = "answer-btn";
      btn.dataset.answer = which;
      btn.textContent = i === 0 ? "Prefer A" : "Prefer B";
      btn.addEventListener("click", () => guard(() => onAnswer({ preferred: which })));
      buttons.push(btn);
      controls.appendChild(btn);
    });
    container.appendChild(controls);
  } else {
    container.appendChild(objectiveColumn(doc, "Current point", query.f));
    const prompt = doc.createElement("p");
    prompt.textContent = "Which objective needs improvement most?";
    container.appendChild(prompt);
    const controls = doc.createElement("div");
    controls.className = "answer-controls";
    query.f.forEach((_, dim) => {
      const btn = doc.createElement("button");
      btn.className = "answer-btn";
      btn.dataset.answer = String(dim);
      btn.textContent = `Improve f${dim + 1}`;
      btn.addEventListener("click", () => guard(() => onAnswer({ dim })));
      buttons.push(btn);
      controls.appendChild(btn);
    });
    container.appendChild(controls);
  }
}

export function renderWeightBars(container: HTMLElement, state: StateDoc): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  const w = state.posterior_mean_w;
  if (!w) {
    container.textContent = "No preference estimate yet.";
    return;
  }
  w.forEach((mean, i) => {
    const row = doc.createElement("div");
    row.className = "bar-row";
    const label = doc.createElement("span");
    label.className = "dim-label";
    label.textContent = `w${i + 1}`;
    row.appendChild(label);
    const track = doc.createElement("div");
    track.className = "bar-track";
    const fill = doc.createElement("div");
    fill.className = "bar-fill";
    fill.style.width = `${Math.round(mean * 100)}%`;
    track.appendChild(fill);
    row.appendChild(track);
    row.appendChild(valueSpan(doc, mean));
    container.appendChild(row);
  });
}

export function renderHistory(container: HTMLElement, state: StateDoc): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  const log = state.query_log as Array<{ query: { kind: string; id: string }; answer: unknown }>;
  if (!log.length) {
    container.textContent = "No answers yet.";
    return;
  }
  const list = doc.createElement("ol");
  list.className = "history";
  for (const entry of log) {
    const li = doc.createElement("li");
    const ans =
      entry.query.kind === "pc"
        ? Number(entry.answer) === 1
          ? "preferred A"
          : "preferred B"
        : `improve f${Number(entry.answer) + 1}`;
    li.textContent = `${entry.query.id} (${entry.query.kind}): ${ans}`;
    list.appendChild(li);
  }
  container.appendChild(list);
}

export function renderCounts(container: HTMLElement, state: StateDoc): void {
  container.textContent =
    `${state.counts.observations} observations · ` +
    `${state.counts.pc} comparisons · ${state.counts.ir} improvement requests`;
}

export function renderIncumbent(container: HTMLElement, state: StateDoc): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  if (!state.incumbent) {
    container.textContent = "No observations yet.";
    return;
  }
  const inc = state.incumbent;
  const head = doc.createElement("div");
  head.textContent = `Best so far (observation #${inc.observation + 1})`;
  container.appendChild(head);
  const list = doc.createElement("ul");
  inc.y.forEach((v, i) => {
    const li = doc.createElement("li");
    li.textContent = `f${i + 1} = `;
    li.appendChild(valueSpan(doc, v));
    list.appendChild(li);
  });
  container.appendChild(list);
}

export function renderSparkline(canvas: HTMLCanvasElement, values: number[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx || values.length === 0) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  ctx.strokeStyle = "#2b8a3e";
  ctx.beginPath();
  values.forEach((v, i) => {
    const x = (i / Math.max(1, values.length - 1)) * canvas.width;
    const y = canvas.height - ((v - lo) / span) * canvas.height * 0.9 - canvas.height * 0.05;
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
}
