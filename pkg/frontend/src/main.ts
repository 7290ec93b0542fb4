/** DOM wiring for the studio page. */

import { ApiClient, FEATURES, ServiceError } from "./api.js";
import type { Feature } from "./api.js";
import {
  applyRankResponse, applySession, applyShotsResponse, canSubmitMatch,
  initialState, setBanner, setSlider, toggleIgnored, togglePreferred,
} from "./state.js";
import {
  renderBanner, renderGallery, renderShots, renderSliders, renderSummary,
} from "./render.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("service") ?? "http://127.0.0.1:8420";
const api = new ApiClient(baseUrl);
const state = initialState();

let lastSummary: Parameters<typeof renderSummary>[0] = null;
let pendingShots: unknown[] = [];

const el = (id: string) => document.getElementById(id)!;

function redraw(): void {
  el("banner").innerHTML = renderBanner(state.banner);
  el("sliders").innerHTML = renderSliders(state.sliders, state.weightsEcho);
  el("summary").innerHTML = renderSummary(lastSummary);
  el("gallery").innerHTML = renderGallery(state, (id) => api.imageUrl(id));
  el("shots").innerHTML = renderShots(state.shotScores, state.favorite, state.poseShot);
  const submit = el("submit-match") as HTMLButtonElement;
  submit.disabled = !canSubmitMatch(state, pendingShots.length);
  el("shot-count").textContent = `${pendingShots.length} shot(s) staged`;
  el("session-label").textContent = state.sessionId
    ? `session ${state.sessionId} · query ${state.queryImageId}`
    : "no session";
}

function showError(error: unknown): void {
  if (error instanceof DOMException && error.name === "AbortError") return;
  if (error instanceof ServiceError) {
    setBanner(state, `${error.code}: ${error.message}`);
  } else {
    setBanner(state, String(error));
  }
  redraw();
}

async function rerank(): Promise<void> {
  if (!state.sessionId) return;
  try {
    const weights: Partial<Record<Feature, number>> = {};
    for (const name of FEATURES) {
      if (state.sliders[name] > 0) weights[name] = state.sliders[name];
    }
    const response = await api.rank(state.sessionId, weights, 24);
    applyRankResponse(state, response);
    redraw();
  } catch (error) {
    showError(error);
  }
}

async function openSession(): Promise<void> {
  const input = el("query-input") as HTMLInputElement;
  const files = (el("query-file") as HTMLInputElement).files;
  try {
    let payload: { image_id?: string; bundle?: unknown };
    if (files && files.length > 0) {
      payload = { bundle: JSON.parse(await files[0].text()) };
    } else if (input.value.trim()) {
      payload = { image_id: input.value.trim() };
    } else {
      setBanner(state, "enter a corpus image id or choose a bundle manifest");
      redraw();
      return;
    }
    const created = await api.createSession(payload);
    applySession(state, created.session_id, created.image_id);
    lastSummary = created.summary;
    pendingShots = [];
    redraw();
    await rerank();
  } catch (error) {
    showError(error);
  }
}

async function submitMatch(): Promise<void> {
  if (!state.sessionId) return;
  try {
    await api.setStyleSet(state.sessionId, [...state.preferred], [...state.ignored]);
    const response = await api.submitShots(state.sessionId, pendingShots);
    applyShotsResponse(state, response);
    redraw();
  } catch (error) {
    showError(error);
  }
}

function wire(): void {
  el("open-session").addEventListener("click", () => void openSession());
  el("submit-match").addEventListener("click", () => void submitMatch());

  el("sliders").addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement;
    const name = target.dataset.slider as Feature | undefined;
    if (!name) return;
    setSlider(state, name, Number(target.value));
    void rerank();
  });

  el("gallery").addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest("button");
    if (!target) return;
    const imageId = target.dataset.imageId;
    if (!imageId) return;
    if (target.dataset.action === "prefer") togglePreferred(state, imageId);
    if (target.dataset.action === "ignore") toggleIgnored(state, imageId);
    redraw();
  });

  (el("shot-files") as HTMLInputElement).addEventListener("change", async (event) => {
    const files = (event.target as HTMLInputElement).files;
    if (!files) return;
    pendingShots = [];
    for (const file of Array.from(files)) {
      try {
        pendingShots.push(JSON.parse(await file.text()));
      } catch {
        setBanner(state, `file ${file.name} is not valid JSON`);
      }
    }
    redraw();
  });

  redraw();
}

wire();
