import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import type { RoundResult, SessionView, SharingCard } from "../src/types.js";

/** In-memory service double with the same surface as ApiClient. */
class FakeApi extends ApiClient {
  log: string[] = [];
  failQuery = false;
  private seq = 0;
  private cardsBySeq = new Map<number, SharingCard>();
  private sharingDelay = 1; // polls to wait before a card shows up
  private stage = 1;

  constructor() {
    super("", async () => new Response("{}"));
  }

  override async stages() {
    this.log.push("stages");
    return {
      title: "T", stage_count: 5,
      stages: [1, 2, 3, 4, 5].map((i) => ({
        index: i, title: `S${i}`, clip_reference: null, duration_seconds: 1,
      })),
      characters: [{ name: "Mara", portrait: "", persona: "" },
                   { name: "Pip", portrait: "", persona: "" }],
    };
  }

  override async openSession(stage: number): Promise<SessionView> {
    this.log.push(`open:${stage}`);
    this.stage = stage;
    return { session_id: "sess-1", stage, roster: ["Mara", "Pip"], memory_length: 0 };
  }

  override async switchStage(sessionId: string, stage: number): Promise<SessionView> {
    this.log.push(`switch:${stage}`);
    this.stage = stage;
    return { session_id: sessionId, stage, roster: ["Mara", "Pip"], memory_length: this.seq };
  }

  override async query(_sessionId: string, text: string): Promise<RoundResult> {
    this.log.push(`query:${text}`);
    if (this.failQuery) throw new Error("backend down");
    this.seq += 1;
    const card: SharingCard = {
      sharer: "Pip", text: `about ${text}`, image_prompt: "p", image_ref: "img-1",
      focus_topics: [], mood: "neutral", confidence: 0.5, stage: this.stage,
      trigger_seq: this.seq, flags: [],
    };
    this.cardsBySeq.set(this.seq, card);
    this.sharingDelay = 1;
    return {
      seq: this.seq, stage: this.stage, sharing_job: `share-${this.seq}`,
      responses: ["Mara", "Pip"].map((c) => ({
        character: c, text: `${c}:${text}`, stage: this.stage, round_id: this.seq,
        context_digest: "d", context_absent: false, failed: false, error: "",
      })),
    };
  }

  override async sharing(_sessionId: string, after: number) {
    this.log.push(`sharing:${after}`);
    if (this.sharingDelay > 0) {
      this.sharingDelay -= 1;
      return { cards: [] };
    }
    return { cards: [...this.cardsBySeq.values()].filter((c) => c.trigger_seq > after) };
  }

  override async scene(_sessionId: string, mode: "plot_extension" | "shift_perspective" | "character_biography") {
    this.log.push(`scene:${mode}`);
    return {
      mode, title: "t", narrative: "n", viewpoint: "user", image_prompt: "p",
      provenance: { chunk_ids: [], entry_seqs: [1], image_ref: "img-s" },
      stage: this.stage, non_canonical: false, flags: [],
    };
  }

  override async memory(_sessionId: string) {
    this.log.push("memory");
    return {
      session: { session_id: "sess-1", stage: this.stage, roster: ["Mara", "Pip"],
                 memory_length: this.seq },
      entries: [], markers: [], cards: [], scenes: [], chain: [],
    };
  }
}

function makeApp() {
  const api = new FakeApi();
  const app = new App(api, async () => {}); // no real sleeping in tests
  return { api, app };
}

describe("app flow", () => {
  it("first stage selection opens a session; the next one switches", async () => {
    const { api, app } = makeApp();
    await app.start();
    await app.selectStage(1);
    await app.selectStage(5);
    expect(api.log.filter((l) => l.startsWith("open:"))).toEqual(["open:1"]);
    expect(api.log.filter((l) => l.startsWith("switch:"))).toEqual(["switch:5"]);
  });

  it("a round appends to the transcript, polls sharing, refreshes memory", async () => {
    const { api, app } = makeApp();
    await app.start();
    await app.selectStage(1);
    await app.sendQuery("hello");
    const state = app.store.get();
    expect(state.transcript).toHaveLength(1);
    expect(state.cards).toHaveLength(1);
    expect(api.log.filter((l) => l.startsWith("sharing:")).length).toBeGreaterThan(1);
    expect(api.log.at(-1)).toBe("memory");
  });

  it("transcript persists across a stage switch, new rounds tag the new stage", async () => {
    const { app } = makeApp();
    await app.start();
    await app.selectStage(1);
    await app.sendQuery("first");
    await app.selectStage(5);
    await app.sendQuery("second");
    expect(app.store.get().transcript.map((r) => r.stage)).toEqual([1, 5]);
  });

  it("query failure surfaces a retryable error; retry completes the round", async () => {
    const { api, app } = makeApp();
    await app.start();
    await app.selectStage(1);
    api.failQuery = true;
    await app.sendQuery("doomed");
    expect(app.store.get().error?.retry).toBe("send query");
    expect(app.store.get().transcript).toHaveLength(0);
    api.failQuery = false;
    await app.retry();
    expect(app.store.get().error).toBeNull();
    expect(app.store.get().transcript).toHaveLength(1);
  });

  it("scene request is refused before any round", async () => {
    const { api, app } = makeApp();
    await app.start();
    await app.selectStage(1);
    await app.requestScene("plot_extension");
    expect(api.log.some((l) => l.startsWith("scene:"))).toBe(false);
    await app.sendQuery("warm up");
    await app.requestScene("plot_extension");
    expect(api.log.some((l) => l.startsWith("scene:"))).toBe(true);
    expect(app.store.get().scene?.mode).toBe("plot_extension");
  });
});
