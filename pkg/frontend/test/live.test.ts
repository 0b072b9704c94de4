// @vitest-environment happy-dom
//
// Full round trip against a live service. Skipped unless STORYSPACE_URL is
// set (e.g. STORYSPACE_URL=http://127.0.0.1:8195 npm test). Exercises all
// five zones: select a stage, post a query, receive the two replies and a
// sharing card, request each scene mode, then switch to stage 5 and check
// the stage-1 transcript is still rendered.

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import { renderAll } from "../src/render.js";
import { SCENE_MODES } from "../src/types.js";

const BASE = process.env.STORYSPACE_URL;

const SKELETON = `
  <div id="error-bar" hidden></div>
  <section id="zone-stages"></section>
  <section id="zone-chat"></section>
  <section id="zone-sharing"></section>
  <section id="zone-scene"></section>
  <section id="zone-memory"></section>
`;

describe.skipIf(!BASE)("live UI round trip", () => {
  beforeEach(() => {
    document.body.innerHTML = SKELETON;
  });

  it("drives the five zones against the service", { timeout: 60_000 }, async () => {
    const app = new App(new ApiClient(BASE!));
    const handlers = app.handlers();
    app.store.subscribe((state) => renderAll(document, state, handlers));

    await app.start();
    expect(document.querySelectorAll(".stage-button").length).toBeGreaterThan(0);

    await app.selectStage(1);
    await app.sendQuery("Mara, who taught you to light the lamps?");
    let replies = document.querySelectorAll(".reply");
    expect(replies).toHaveLength(2);
    expect(document.querySelectorAll(".sharing-card").length).toBe(1);

    for (const mode of SCENE_MODES) {
      await app.requestScene(mode);
      const card = document.querySelector<HTMLElement>(".scene-card");
      expect(card?.dataset.mode).toBe(mode);
      expect(card?.querySelector(".narrative")?.textContent).toBeTruthy();
    }
    expect(
      document.querySelector('.scene-card[data-mode="character_biography"] .badge.non-canonical')
      ?? document.querySelector(".scene-card .badge.non-canonical"),
    ).toBeTruthy();

    await app.selectStage(5);
    await app.sendQuery("Do you remember the first lamp?");
    replies = document.querySelectorAll(".reply");
    expect(replies).toHaveLength(4); // stage-1 replies still visible
    const stages = [...document.querySelectorAll<HTMLElement>(".reply")].map(
      (el) => el.dataset.stage,
    );
    expect(stages).toEqual(["1", "1", "5", "5"]);
    const markers = [...document.querySelectorAll<HTMLElement>(".chain-event")]
      .filter((el) => el.dataset.kind === "switch");
    expect(markers.length).toBe(1);
  });
});
