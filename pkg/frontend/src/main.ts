// Application shell: session setup, 2-second state polling, one in-flight
// mutation at a time, optimistic rollback on conflicts.

import { ApiClient, ApiError, type StateDoc } from "./api.js";
import {
  renderCounts,
  renderHistory,
  renderIncumbent,
  renderQuery,
  renderSparkline,
  renderWeightBars,
} from "./ui.js";

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get("api") ?? "http://127.0.0.1:8080");

const el = (id: string) => document.getElementById(id) as HTMLElement;

let sessionId: string | null = params.get("session");
let busy = false;
let utilityTrail: number[] = [];

function notice(text: string, isError = false): void {
  const box = el("notice");
  box.textContent = text;
  box.className = isError ? "banner error" : "banner";
}

async function refresh(): Promise<void> {
  if (!sessionId) return;
  let state: StateDoc;
  try {
    state = await api.getState(sessionId);
  } catch (err) {
    notice(`Cannot reach session: ${(err as Error).message}`, true);
    return;
  }
  el("session-label").textContent = `session ${state.id}`;
  renderCounts(el("counts"), state);
  renderWeightBars(el("weight-bars"), state);
  renderHistory(el("history"), state);
  renderIncumbent(el("incumbent"), state);
  if (state.incumbent) {
    const last = utilityTrail[utilityTrail.length - 1];
    if (last !== state.incumbent.utility_estimate) {
      utilityTrail.push(state.incumbent.utility_estimate);
    }
    renderSparkline(el("trail") as HTMLCanvasElement, utilityTrail);
  }
  if (state.pending) {
    renderQuery(el("query-box"), state.pending, (answer) =>
      submitAnswer(state.pending!.id, answer),
    );
  } else {
    el("query-box").textContent = "No pending query. Ask for one below.";
  }
}

async function submitAnswer(
  queryId: string,
  answer: { preferred?: "first" | "second"; dim?: number },
): Promise<void> {
  if (!sessionId || busy) return;
  busy = true;
  try {
    const body =
      answer.preferred !== undefined
        ? { preferred: answer.preferred }
        : { dim: answer.dim as number };
    await api.submitAnswer(sessionId, queryId, body as never);
    notice("Answer recorded.");
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      notice("That query is no longer pending; view refreshed.", true);
    } else {
      notice(`Submission failed: ${(err as Error).message}. Try again.`, true);
      throw err; // renderQuery re-enables the buttons
    }
  } finally {
    busy = false;
    await refresh();
  }
}

async function askQuery(kind: "pc" | "ir"): Promise<void> {
  if (!sessionId || busy) return;
  busy = true;
  try {
    await api.nextQuery(sessionId, kind);
    notice(`New ${kind.toUpperCase()} query ready.`);
  } catch (err) {
    if (err instanceof ApiError && err.code === "pending_query") {
      notice("Answer the pending query first.", true);
    } else {
      notice(`Query failed: ${(err as Error).message}`, true);
    }
  } finally {
    busy = false;
    await refresh();
  }
}

async function suggestPoint(): Promise<void> {
  if (!sessionId || busy) return;
  busy = true;
  try {
    const doc = await api.suggest(sessionId);
    el("suggestion").textContent =
      `Evaluate x = [${doc.x.map((v) => v.toPrecision(6)).join(", ")}]` +
      (doc.initial ? " (space-filling start)" : ` (EI ${doc.ei?.toExponential(3)})`);
  } catch (err) {
    notice(`Suggestion failed: ${(err as Error).message}`, true);
  } finally {
    busy = false;
  }
}

async function createSession(): Promise<void> {
  const benchmark = (el("benchmark-input") as HTMLInputElement).value.trim();
  const seed = Number((el("seed-input") as HTMLInputElement).value || "0");
  try {
    const doc = await api.createSession({ benchmark, seed });
    sessionId = doc.id;
    utilityTrail = [];
    const url = new URL(window.location.href);
    url.searchParams.set("session", doc.id);
    window.history.replaceState(null, "", url.toString());
    notice(`Created session ${doc.id} (${benchmark}).`);
    await refresh();
  } catch (err) {
    notice(`Create failed: ${(err as Error).message}`, true);
  }
}

export function boot(): void {
  el("create-btn").addEventListener("click", () => void createSession());
  el("pc-btn").addEventListener("click", () => void askQuery("pc"));
  el("ir-btn").addEventListener("click", () => void askQuery("ir"));
  el("suggest-btn").addEventListener("click", () => void suggestPoint());
  void refresh();
  setInterval(() => void refresh(), 2000);
}

boot();
