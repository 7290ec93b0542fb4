/** Session state and its pure transitions; no scoring happens here. */

import type {
  Feature, RankResponse, RankedItem, ShotsResponse, ShotScore, Weights,
} from "./api.js";
import { FEATURES } from "./api.js";

export interface UiSessionState {
  sessionId: string | null;
  queryImageId: string | null;
  /** Raw slider positions; the service normalizes, we only display. */
  sliders: Weights;
  /** Normalized weights echoed by the last rank response. */
  weightsEcho: Weights | null;
  gallery: RankedItem[];
  preferred: Set<string>;
  ignored: Set<string>;
  shotScores: ShotScore[];
  favorite: string | null;
  poseShot: string | null;
  banner: string | null;
}

export function initialState(): UiSessionState {
  return {
    sessionId: null,
    queryImageId: null,
    sliders: { vgg: 50, iod: 0, cade: 50, arpose: 0, stat: 0, gender: 0 },
    weightsEcho: null,
    gallery: [],
    preferred: new Set(),
    ignored: new Set(),
    shotScores: [],
    favorite: null,
    poseShot: null,
    banner: null,
  };
}

/**
 * Integer percentages of the slider positions summing to exactly 100
 * (largest-remainder rounding); an all-zero board splits evenly.
 */
export function sliderPercents(sliders: Weights): Record<Feature, number> {
  const values = FEATURES.map((name) => Math.max(sliders[name], 0));
  let total = values.reduce((acc, v) => acc + v, 0);
  const shares = total > 0 ? values.map((v) => (100 * v) / total)
    : FEATURES.map(() => 100 / FEATURES.length);
  const floors = shares.map(Math.floor);
  let remainder = 100 - floors.reduce((acc, v) => acc + v, 0);
  const order = shares
    .map((share, idx) => ({ idx, frac: share - Math.floor(share) }))
    .sort((a, b) => b.frac - a.frac || a.idx - b.idx);
  for (const { idx } of order) {
    if (remainder <= 0) break;
    floors[idx] += 1;
    remainder -= 1;
  }
  const out = {} as Record<Feature, number>;
  FEATURES.forEach((name, idx) => {
    out[name] = floors[idx];
  });
  return out;
}

export function setSlider(state: UiSessionState, name: Feature, value: number): void {
  state.sliders = { ...state.sliders, [name]: value };
}

export function applySession(state: UiSessionState, sessionId: string, imageId: string): void {
  state.sessionId = sessionId;
  state.queryImageId = imageId;
  state.gallery = [];
  state.preferred = new Set();
  state.ignored = new Set();
  state.shotScores = [];
  state.favorite = null;
  state.poseShot = null;
  state.banner = null;
}

/** Replace the gallery verbatim; selections outside the page are dropped. */
export function applyRankResponse(state: UiSessionState, response: RankResponse): void {
  state.gallery = response.results;
  state.weightsEcho = response.weights;
  const visible = new Set(response.results.map((item) => item.image_id));
  state.preferred = new Set([...state.preferred].filter((id) => visible.has(id)));
  state.ignored = new Set([...state.ignored].filter((id) => visible.has(id)));
  state.banner = null;
}

/** Preferred/ignored are mutually exclusive per item. */
export function togglePreferred(state: UiSessionState, imageId: string): void {
  if (state.preferred.has(imageId)) {
    state.preferred.delete(imageId);
  } else {
    state.ignored.delete(imageId);
    state.preferred.add(imageId);
  }
}

export function toggleIgnored(state: UiSessionState, imageId: string): void {
  if (state.ignored.has(imageId)) {
    state.ignored.delete(imageId);
  } else {
    state.preferred.delete(imageId);
    state.ignored.add(imageId);
  }
}

export function canSubmitMatch(state: UiSessionState, pendingShots: number): boolean {
  return state.sessionId !== null && state.preferred.size > 0 && pendingShots > 0;
}

export function applyShotsResponse(state: UiSessionState, response: ShotsResponse): void {
  state.shotScores = response.scores;
  state.favorite = response.favorite;
  state.poseShot = response.pose_shot?.shot_id ?? null;
  state.banner = null;
}

export function setBanner(state: UiSessionState, message: string): void {
  state.banner = message;
}
