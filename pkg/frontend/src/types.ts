/** Wire types mirroring the storyspace service's documented JSON schemas. */

export interface StageInfo {
  index: number;
  title: string;
  clip_reference: string | null;
  duration_seconds: number;
}

export interface CharacterInfo {
  name: string;
  portrait: string;
  persona: string;
}

export interface StagesView {
  title: string;
  stage_count: number;
  stages: StageInfo[];
  characters: CharacterInfo[];
}

export interface SessionView {
  session_id: string;
  stage: number;
  roster: string[];
  memory_length: number;
}

export interface ResponseView {
  character: string;
  text: string;
  stage: number;
  round_id: number;
  context_digest: string;
  context_absent: boolean;
  failed: boolean;
  error: string;
}

export interface RoundResult {
  seq: number;
  stage: number;
  responses: ResponseView[];
  sharing_job: string;
}

export interface SharingCard {
  sharer: string;
  text: string;
  image_prompt: string;
  image_ref: string;
  focus_topics: string[];
  mood: string;
  confidence: number;
  stage: number;
  trigger_seq: number;
  flags: string[];
}

export type SceneMode = "plot_extension" | "shift_perspective" | "character_biography";

export const SCENE_MODES: SceneMode[] = [
  "plot_extension",
  "shift_perspective",
  "character_biography",
];

export const SCENE_MODE_LABELS: Record<SceneMode, string> = {
  plot_extension: "Plot Extension",
  shift_perspective: "Shift Perspective",
  character_biography: "Character Biography",
};

export interface SceneRecord {
  mode: SceneMode;
  title: string;
  narrative: string;
  viewpoint: string;
  image_prompt: string;
  provenance: { chunk_ids: number[]; entry_seqs: number[]; image_ref: string };
  stage: number;
  non_canonical: boolean;
  flags: string[];
}

export interface MemoryEntryView {
  seq: number;
  stage: number;
  query: string;
  responses: ResponseView[];
}

export interface SwitchMarkerView {
  after_seq: number;
  from_stage: number;
  to_stage: number;
}

export interface ChainEvent {
  pos: number;
  kind: "round" | "switch" | "card" | "scene";
  [key: string]: unknown;
}

export interface MemoryView {
  session: SessionView;
  entries: MemoryEntryView[];
  markers: SwitchMarkerView[];
  cards: SharingCard[];
  scenes: SceneRecord[];
  chain: ChainEvent[];
}
