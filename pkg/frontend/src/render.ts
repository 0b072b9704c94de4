/**
 * DOM rendering for the five zones. Pure functions of (container, state,
 * handlers); every render wipes and rebuilds its zone.
 *
 * Zone 1  #zone-stages   story stage selection
 * Zone 2  #zone-chat     trans-temporal chat (side-by-side replies)
 * Zone 3  #zone-sharing  character sharing feed
 * Zone 4  #zone-scene    scene customization
 * Zone 5  #zone-memory   memory chain (rounds, switches, cards, scenes)
 */

import type { UiState } from "./state.js";
import { SCENE_MODES, SCENE_MODE_LABELS, type SceneMode } from "./types.js";

export interface Handlers {
  onSelectStage: (stage: number) => void;
  onSendQuery: (text: string) => void;
  onRequestScene: (mode: SceneMode) => void;
  onRetry: () => void;
}

export function renderAll(root: Document, state: UiState, handlers: Handlers): void {
  renderError(expect(root, "error-bar"), state, handlers);
  renderStages(expect(root, "zone-stages"), state, handlers);
  renderChat(expect(root, "zone-chat"), state, handlers);
  renderSharing(expect(root, "zone-sharing"), state);
  renderScene(expect(root, "zone-scene"), state, handlers);
  renderMemory(expect(root, "zone-memory"), state);
}

function expect(root: Document, id: string): HTMLElement {
  const el = root.getElementById(id);
  if (!el) throw new Error(`missing container #${id}`);
  return el;
}

export function renderError(el: HTMLElement, state: UiState, handlers: Handlers): void {
  el.innerHTML = "";
  if (!state.error) {
    el.hidden = true;
    return;
  }
  el.hidden = false;
  const message = document.createElement("span");
  message.className = "error-message";
  message.textContent = state.error.message;
  const retry = document.createElement("button");
  retry.className = "retry";
  retry.textContent = `Retry ${state.error.retry}`;
  retry.addEventListener("click", () => handlers.onRetry());
  el.append(message, retry);
}

export function renderStages(el: HTMLElement, state: UiState, handlers: Handlers): void {
  el.innerHTML = "";
  const heading = document.createElement("h2");
  heading.textContent = state.story ? state.story.title : "Loading story...";
  el.append(heading);
  if (!state.story) return;
  const list = document.createElement("div");
  list.className = "stage-list";
  for (const stage of state.story.stages) {
    const button = document.createElement("button");
    button.className = "stage-button";
    button.dataset.stage = String(stage.index);
    if (state.session?.stage === stage.index) button.classList.add("active");
    button.textContent = `${stage.index}. ${stage.title}`;
    button.addEventListener("click", () => handlers.onSelectStage(stage.index));
    list.append(button);
  }
  el.append(list);
  if (state.session) {
    const roster = document.createElement("p");
    roster.className = "roster";
    roster.textContent = `In the room: ${state.session.roster.join(", ")}`;
    el.append(roster);
  }
}

export function renderChat(el: HTMLElement, state: UiState, handlers: Handlers): void {
  el.innerHTML = "";
  const log = document.createElement("div");
  log.className = "chat-log";
  for (const round of state.transcript) {
    const block = document.createElement("div");
    block.className = "round";
    block.dataset.seq = String(round.seq);
    block.dataset.stage = String(round.stage);
    const q = document.createElement("p");
    q.className = "query";
    q.textContent = `you (stage ${round.stage}): ${round.query}`;
    block.append(q);
    const replies = document.createElement("div");
    replies.className = "replies"; // side by side via CSS
    for (const r of round.responses) {
      const reply = document.createElement("div");
      reply.className = "reply";
      reply.dataset.character = r.character;
      reply.dataset.stage = String(r.stage);
      if (r.failed) reply.classList.add("failed");
      const who = document.createElement("strong");
      who.textContent = `${r.character} @ stage ${r.stage}`;
      const text = document.createElement("p");
      text.textContent = r.failed ? `(no answer: ${r.error})` : r.text;
      reply.append(who, text);
      replies.append(reply);
    }
    block.append(replies);
    log.append(block);
  }
  el.append(log);

  const form = document.createElement("form");
  form.className = "chat-form";
  const input = document.createElement("input");
  input.type = "text";
  input.id = "query-input";
  input.placeholder = state.session ? "Ask the characters..." : "Select a stage first";
  input.disabled = !state.session || state.queryInFlight;
  const send = document.createElement("button");
  send.type = "submit";
  send.id = "send-query";
  send.textContent = state.queryInFlight ? "Waiting..." : "Send";
  send.disabled = !state.session || state.queryInFlight;
  form.append(input, send);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (text) handlers.onSendQuery(text);
  });
  el.append(form);
}

export function renderSharing(el: HTMLElement, state: UiState): void {
  el.innerHTML = "";
  const heading = document.createElement("h2");
  heading.textContent = "Shared with you";
  el.append(heading);
  for (const card of [...state.cards].reverse()) {
    const div = document.createElement("div");
    div.className = "card sharing-card";
    div.dataset.triggerSeq = String(card.trigger_seq);
    const head = document.createElement("strong");
    head.textContent = `${card.sharer} shares (mood: ${card.mood})`;
    const body = document.createElement("p");
    body.textContent = card.text;
    const image = document.createElement("p");
    image.className = "image-token";
    image.textContent = `[${card.image_ref}] ${card.image_prompt}`;
    div.append(head, body, image);
    el.append(div);
  }
}

export function renderScene(el: HTMLElement, state: UiState, handlers: Handlers): void {
  el.innerHTML = "";
  const heading = document.createElement("h2");
  heading.textContent = "Customize a scene";
  el.append(heading);
  const buttons = document.createElement("div");
  buttons.className = "scene-modes";
  for (const mode of SCENE_MODES) {
    const button = document.createElement("button");
    button.className = "scene-mode";
    button.dataset.mode = mode;
    button.textContent = SCENE_MODE_LABELS[mode];
    button.disabled = state.queryInFlight || state.sceneInFlight || state.transcript.length === 0;
    button.addEventListener("click", () => handlers.onRequestScene(mode));
    buttons.append(button);
  }
  el.append(buttons);
  if (state.scene) {
    const card = document.createElement("div");
    card.className = "card scene-card";
    card.dataset.mode = state.scene.mode;
    const title = document.createElement("h3");
    title.textContent = state.scene.title;
    card.append(title);
    if (state.scene.non_canonical) {
      const badge = document.createElement("span");
      badge.className = "badge non-canonical";
      badge.textContent = "not canon";
      card.append(badge);
    }
    const viewpoint = document.createElement("p");
    viewpoint.className = "viewpoint";
    viewpoint.textContent = `viewpoint: ${state.scene.viewpoint}`;
    const narrative = document.createElement("p");
    narrative.className = "narrative";
    narrative.textContent = state.scene.narrative;
    const image = document.createElement("p");
    image.className = "image-token";
    image.textContent = `[${state.scene.provenance.image_ref}] ${state.scene.image_prompt}`;
    card.append(viewpoint, narrative, image);
    el.append(card);
  }
}

export function renderMemory(el: HTMLElement, state: UiState): void {
  el.innerHTML = "";
  const heading = document.createElement("h2");
  heading.textContent = "Memory chain";
  el.append(heading);
  if (!state.memory) return;
  const list = document.createElement("ol");
  list.className = "chain";
  const entriesBySeq = new Map(state.memory.entries.map((e) => [e.seq, e]));
  for (const event of state.memory.chain) {
    const item = document.createElement("li");
    item.className = `chain-event chain-${event.kind}`;
    item.dataset.kind = event.kind;
    if (event.kind === "round") {
      const entry = entriesBySeq.get(event["seq"] as number);
      item.textContent = entry
        ? `round ${entry.seq} @ stage ${entry.stage}: ${entry.query}`
        : `round ${String(event["seq"])}`;
    } else if (event.kind === "switch") {
      item.textContent = `switched stage ${String(event["from_stage"])} -> ${String(event["to_stage"])}`;
    } else if (event.kind === "card") {
      item.textContent = `${String(event["sharer"])} shared after round ${String(event["trigger_seq"])}`;
    } else {
      item.textContent = `scene: ${String(event["mode"])}`;
    }
    list.append(item);
  }
  el.append(list);
}
