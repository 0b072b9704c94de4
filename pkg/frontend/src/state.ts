/**
 * UI state store: plain data plus transitions, no DOM and no network.
 *
 * Invariants the tests hold us to:
 *  - the chat transcript persists across stage switches (replies stay tagged
 *    with the stage they were answered at, enabling cross-stage comparison);
 *  - at most one query is in flight, and scene requests are disabled while
 *    one is;
 *  - sharing cards are deduplicated by their triggering entry seq.
 */

import type {
  MemoryView,
  RoundResult,
  SceneRecord,
  SessionView,
  SharingCard,
  StagesView,
} from "./types.js";

export interface ChatRound {
  seq: number;
  stage: number;
  query: string;
  responses: RoundResult["responses"];
}

export interface UiState {
  story: StagesView | null;
  session: SessionView | null;
  transcript: ChatRound[];
  cards: SharingCard[];
  scene: SceneRecord | null;
  memory: MemoryView | null;
  queryInFlight: boolean;
  sceneInFlight: boolean;
  error: { message: string; retry: string } | null;
}

export type Listener = (state: UiState) => void;

export function initialState(): UiState {
  return {
    story: null,
    session: null,
    transcript: [],
    cards: [],
    scene: null,
    memory: null,
    queryInFlight: false,
    sceneInFlight: false,
    error: null,
  };
}

export class UiStore {
  private state: UiState = initialState();
  private listeners: Listener[] = [];

  get(): UiState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private set(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  storyLoaded(story: StagesView): void {
    this.set({ story, error: null });
  }

  sessionOpened(session: SessionView): void {
    // A fresh session keeps an empty transcript; switching stages later
    // reuses stageSwitched and keeps history.
    this.set({ session, transcript: [], cards: [], scene: null, memory: null, error: null });
  }

  stageSwitched(session: SessionView): void {
    this.set({ session, error: null }); // transcript deliberately untouched
  }

  get canSendQuery(): boolean {
    return this.state.session !== null && !this.state.queryInFlight;
  }

  get canRequestScene(): boolean {
    return (
      this.state.session !== null &&
      !this.state.queryInFlight &&
      !this.state.sceneInFlight &&
      this.state.transcript.length > 0
    );
  }

  queryStarted(): void {
    this.set({ queryInFlight: true, error: null });
  }

  roundCompleted(query: string, result: RoundResult): void {
    const round: ChatRound = {
      seq: result.seq,
      stage: result.stage,
      query,
      responses: result.responses,
    };
    this.set({ transcript: [...this.state.transcript, round], queryInFlight: false });
  }

  queryFailed(): void {
    this.set({ queryInFlight: false });
  }

  cardsArrived(cards: SharingCard[]): void {
    const seen = new Set(this.state.cards.map((c) => c.trigger_seq));
    const fresh = cards.filter((c) => !seen.has(c.trigger_seq));
    if (fresh.length > 0) this.set({ cards: [...this.state.cards, ...fresh] });
  }

  get lastCardSeq(): number {
    return this.state.cards.reduce((max, c) => Math.max(max, c.trigger_seq), 0);
  }

  sceneStarted(): void {
    this.set({ sceneInFlight: true, error: null });
  }

  sceneArrived(scene: SceneRecord): void {
    this.set({ scene, sceneInFlight: false });
  }

  sceneFailed(): void {
    this.set({ sceneInFlight: false });
  }

  memoryArrived(memory: MemoryView): void {
    this.set({ memory });
  }

  failed(message: string, retry: string): void {
    this.set({ error: { message, retry } });
  }

  errorCleared(): void {
    this.set({ error: null });
  }
}
