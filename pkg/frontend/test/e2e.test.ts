// Full-loop check against a live service: the UI components drive
// create -> 10 query/answer rounds -> 5 suggest/observe rounds with a
// simulated decision maker clicking the buttons, then a headless engine
// replay of the recorded operations must land in the same final state.

// @vitest-environment happy-dom

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, type QueryPayload } from "../src/api.js";
import { renderQuery } from "../src/ui.js";

const PORT = 8123 + Math.floor(Math.random() * 500);
const BASE = `http://127.0.0.1:${PORT}`;
const REPO_ROOT = join(__dirname, "..", "..");

const SESSION_CONFIG = {
  benchmark: "schaffer2",
  seed: 42,
  n_posterior_samples: 200,
  mcmc_burn_in: 400,
  mcmc_refresh_burn_in: 200,
  pool_size: 48,
  ei_weight_samples: 24,
};

let service: ChildProcess;
let workDir: string;

// deterministic PRNG so the simulated decision maker is reproducible
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

class SimulatedDm {
  private rand = mulberry32(777);
  // fixed hidden preference over the two (negated) objectives
  private w = [0.7, 0.3];

  private gauss(): number {
    const u = Math.max(this.rand(), 1e-12);
    const v = this.rand();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  }

  private utility(yRaw: number[]): number {
    // maximization view of minimization objectives
    return Math.min(...yRaw.map((y, l) => -y / this.w[l]));
  }

  answerPc(f: number[], fOther: number[]): "first" | "second" {
    const du = this.utility(f) - this.utility(fOther) + 0.05 * this.gauss();
    return du > 0 ? "first" : "second";
  }

  answerIr(f: number[]): number {
    // the dimension whose value lags most, with a little indecision
    const scores = f.map((y, l) => y / this.w[l] + 0.05 * this.gauss());
    let best = 0;
    scores.forEach((s, l) => {
      if (s > scores[best]) best = l;
    });
    return best;
  }
}

async function waitForService(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const resp = await fetch(`${BASE}/sessions/warmup-probe`);
      if (resp.status === 404) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("service did not come up");
}

function schaffer2(x: number): number[] {
  let f1: number;
  if (x <= 1) f1 = -x;
  else if (x <= 3) f1 = x - 2;
  else if (x <= 4) f1 = 4 - x;
  else f1 = x - 4;
  return [f1, (x - 5) ** 2];
}

/** Render the query into the DOM and click the button the DM chooses. */
function clickAnswer(
  payload: QueryPayload,
  dm: SimulatedDm,
  submit: (answer: { preferred?: "first" | "second"; dim?: number }) => Promise<void>,
): { preferred?: "first" | "second"; dim?: number } {
  const box = document.createElement("div");
  document.body.appendChild(box);
  let chosen: { preferred?: "first" | "second"; dim?: number } | null = null;
  renderQuery(box, payload, async (answer) => {
    chosen = answer;
    await submit(answer);
  });
  const buttons = [...box.querySelectorAll("button.answer-btn")] as HTMLButtonElement[];
  let target: HTMLButtonElement;
  if (payload.kind === "pc") {
    const pick = dm.answerPc(payload.f, payload.f_other);
    target = buttons.find((b) => b.dataset.answer === pick)!;
  } else {
    const pick = dm.answerIr(payload.f);
    target = buttons.find((b) => b.dataset.answer === String(pick))!;
  }
  target.click();
  document.body.removeChild(box);
  if (chosen === null) throw new Error("no answer was submitted");
  return chosen;
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "prefmoo-e2e-"));
  service = spawn(
    "python3",
    ["-m", "prefmoo.cli", "serve", "--listen", `127.0.0.1:${PORT}`,
     "--data-dir", join(workDir, "sessions")],
    { cwd: REPO_ROOT, stdio: "ignore" },
  );
  await waitForService();
}, 60_000);

afterAll(() => {
  service?.kill();
});

describe("interactive session end to end", () => {
  it("matches a headless engine replay with the same seeds", async () => {
    const api = new ApiClient(BASE);
    const dm = new SimulatedDm();
    const ops: unknown[] = [];

    const created = await api.createSession(SESSION_CONFIG);
    expect(created.L).toBe(2);
    const sid = created.id;

    for (let round = 0; round < 10; round++) {
      const kind = round % 2 === 0 ? "pc" : "ir";
      const payload = await api.nextQuery(sid, kind);
      ops.push({ op: "query", kind, payload });
      let submitted: Promise<unknown> = Promise.resolve();
      const answer = clickAnswer(payload, dm, async (a) => {
        submitted = api.submitAnswer(
          sid,
          payload.id,
          a.preferred !== undefined ? { preferred: a.preferred } : { dim: a.dim! },
        );
        await submitted;
      });
      await submitted;
      ops.push({
        op: "answer",
        query_id: payload.id,
        value: answer.preferred !== undefined ? (answer.preferred === "first" ? 1 : 0) : answer.dim,
      });
    }

    for (let step = 0; step < 5; step++) {
      const doc = await api.suggest(sid);
      ops.push({ op: "suggest", index: doc.index });
      const y = schaffer2(doc.x[0]);
      await api.observe(sid, doc.x, y);
      ops.push({ op: "observe", x: doc.x, y });
    }

    const finalState = await api.getState(sid);
    expect(finalState.counts).toEqual({ observations: 5, pc: 5, ir: 5 });

    const recording = join(workDir, "recording.json");
    writeFileSync(recording, JSON.stringify({ config: SESSION_CONFIG, ops }));
    const replay = spawnSync(
      "python3",
      [join(REPO_ROOT, "scripts", "replay_session.py"), recording],
      { cwd: REPO_ROOT, encoding: "utf-8" },
    );
    expect(replay.status, replay.stderr).toBe(0);
    const headless = JSON.parse(replay.stdout);

    expect(headless.counts).toEqual(finalState.counts);
    expect(headless.posterior_mean_w).toEqual(finalState.posterior_mean_w);
    expect(headless.pending).toBeNull();
    expect(headless.incumbent.observation).toBe(finalState.incumbent!.observation);
    expect(headless.incumbent.y).toEqual(finalState.incumbent!.y);
  }, 180_000);
});
