import { describe, expect, it } from "vitest";

import { UiStore } from "../src/state.js";
import type { RoundResult, SessionView, SharingCard } from "../src/types.js";

function session(stage: number): SessionView {
  return { session_id: "sess-1", stage, roster: ["Mara", "Pip"], memory_length: 0 };
}

function round(seq: number, stage: number): RoundResult {
  return {
    seq,
    stage,
    sharing_job: `share-sess-1-${seq}`,
    responses: [
      { character: "Mara", text: `m${seq}`, stage, round_id: seq, context_digest: "d",
        context_absent: false, failed: false, error: "" },
      { character: "Pip", text: `p${seq}`, stage, round_id: seq, context_digest: "d",
        context_absent: false, failed: false, error: "" },
    ],
  };
}

function card(triggerSeq: number): SharingCard {
  return {
    sharer: "Pip", text: `share ${triggerSeq}`, image_prompt: "p", image_ref: "img-x",
    focus_topics: ["t"], mood: "neutral", confidence: 0.5, stage: 1,
    trigger_seq: triggerSeq, flags: [],
  };
}

describe("transcript persistence", () => {
  it("keeps rounds, with their stage tags, across stage switches", () => {
    const store = new UiStore();
    store.sessionOpened(session(1));
    store.roundCompleted("q1", round(1, 1));
    store.stageSwitched(session(5));
    expect(store.get().transcript).toHaveLength(1);
    expect(store.get().transcript[0].stage).toBe(1);
    store.roundCompleted("q2", round(2, 5));
    expect(store.get().transcript.map((r) => r.stage)).toEqual([1, 5]);
  });

  it("a brand-new session starts clean", () => {
    const store = new UiStore();
    store.sessionOpened(session(1));
    store.roundCompleted("q1", round(1, 1));
    store.sessionOpened(session(2));
    expect(store.get().transcript).toHaveLength(0);
  });
});

describe("in-flight gating", () => {
  it("blocks concurrent queries and scene requests during a round", () => {
    const store = new UiStore();
    store.sessionOpened(session(1));
    store.roundCompleted("warmup", round(1, 1));
    expect(store.canSendQuery).toBe(true);
    expect(store.canRequestScene).toBe(true);
    store.queryStarted();
    expect(store.canSendQuery).toBe(false);
    expect(store.canRequestScene).toBe(false);
    store.roundCompleted("q", round(2, 1));
    expect(store.canSendQuery).toBe(true);
  });

  it("scene requests need at least one round", () => {
    const store = new UiStore();
    store.sessionOpened(session(1));
    expect(store.canRequestScene).toBe(false);
  });

  it("no queries without a session", () => {
    expect(new UiStore().canSendQuery).toBe(false);
  });
});

describe("sharing cards", () => {
  it("appends new cards and dedupes by trigger seq", () => {
    const store = new UiStore();
    store.sessionOpened(session(1));
    store.cardsArrived([card(1)]);
    store.cardsArrived([card(1), card(2)]);
    expect(store.get().cards.map((c) => c.trigger_seq)).toEqual([1, 2]);
    expect(store.lastCardSeq).toBe(2);
  });
});

describe("errors", () => {
  it("stores a retryable error and clears it", () => {
    const store = new UiStore();
    store.failed("send query: boom", "send query");
    expect(store.get().error).toEqual({ message: "send query: boom", retry: "send query" });
    store.errorCleared();
    expect(store.get().error).toBeNull();
  });

  it("state survives a failure without loss", () => {
    const store = new UiStore();
    store.sessionOpened(session(1));
    store.roundCompleted("q1", round(1, 1));
    store.queryStarted();
    store.queryFailed();
    store.failed("send query: 502", "send query");
    expect(store.get().transcript).toHaveLength(1);
    expect(store.canSendQuery).toBe(true);
  });
});
