/**
 * App wiring: zone handlers call their ApiClient methods, push results into
 * the store, and the store re-renders. Sharing is pulled by short polling
 * after each completed round.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderAll, type Handlers } from "./render.js";
import { UiStore } from "./state.js";
import type { SceneMode } from "./types.js";

const SHARING_POLL_MS = 400;
const SHARING_POLL_TRIES = 25;

export class App {
  readonly store = new UiStore();
  private lastAction: (() => Promise<void>) | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly sleep: (ms: number) => Promise<void> = (ms) =>
      new Promise((resolve) => setTimeout(resolve, ms)),
  ) {}

  handlers(): Handlers {
    return {
      onSelectStage: (stage) => void this.selectStage(stage),
      onSendQuery: (text) => void this.sendQuery(text),
      onRequestScene: (mode) => void this.requestScene(mode),
      onRetry: () => void this.retry(),
    };
  }

  async start(): Promise<void> {
    await this.guarded("load story", async () => {
      this.store.storyLoaded(await this.api.stages());
    });
  }

  async selectStage(stage: number): Promise<void> {
    await this.guarded(`select stage ${stage}`, async () => {
      const session = this.store.get().session;
      if (session === null) {
        this.store.sessionOpened(await this.api.openSession(stage));
      } else {
        // Same session, new space: the transcript must survive for
        // cross-stage comparison.
        this.store.stageSwitched(await this.api.switchStage(session.session_id, stage));
      }
      await this.refreshMemory();
    });
  }

  async sendQuery(text: string): Promise<void> {
    if (!this.store.canSendQuery) return;
    const session = this.store.get().session;
    if (!session) return;
    this.store.queryStarted();
    try {
      const result = await this.api.query(session.session_id, text);
      this.store.roundCompleted(text, result);
    } catch (err) {
      this.store.queryFailed();
      this.report(`send query`, err);
      this.lastAction = () => this.sendQuery(text);
      return;
    }
    await this.pollSharing(session.session_id);
    await this.refreshMemory();
  }

  async requestScene(mode: SceneMode): Promise<void> {
    if (!this.store.canRequestScene) return;
    const session = this.store.get().session;
    if (!session) return;
    this.store.sceneStarted();
    try {
      this.store.sceneArrived(await this.api.scene(session.session_id, mode));
    } catch (err) {
      this.store.sceneFailed();
      this.report(`customize scene`, err);
      this.lastAction = () => this.requestScene(mode);
      return;
    }
    await this.refreshMemory();
  }

  async pollSharing(sessionId: string): Promise<void> {
    const after = this.store.lastCardSeq;
    for (let attempt = 0; attempt < SHARING_POLL_TRIES; attempt++) {
      try {
        const { cards } = await this.api.sharing(sessionId, after);
        if (cards.length > 0) {
          this.store.cardsArrived(cards);
          return;
        }
      } catch (err) {
        this.report("fetch sharing", err);
        this.lastAction = () => this.pollSharing(sessionId);
        return;
      }
      await this.sleep(SHARING_POLL_MS);
    }
  }

  async refreshMemory(): Promise<void> {
    const session = this.store.get().session;
    if (!session) return;
    try {
      this.store.memoryArrived(await this.api.memory(session.session_id));
    } catch (err) {
      this.report("fetch memory", err);
      this.lastAction = () => this.refreshMemory();
    }
  }

  async retry(): Promise<void> {
    const action = this.lastAction;
    this.store.errorCleared();
    if (action) await action();
  }

  private async guarded(label: string, body: () => Promise<void>): Promise<void> {
    try {
      await body();
    } catch (err) {
      this.report(label, err);
      this.lastAction = body;
    }
  }

  private report(label: string, err: unknown): void {
    const detail = err instanceof ApiError ? err.message : String(err);
    this.store.failed(`${label}: ${detail}`, label);
  }
}

export function mount(doc: Document, baseUrl = ""): App {
  const app = new App(new ApiClient(baseUrl));
  const handlers = app.handlers();
  app.store.subscribe((state) => renderAll(doc, state, handlers));
  void app.start();
  return app;
}
