/** HTML-string renderers; numbers come verbatim from service responses. */

import type { RankedItem, ShotScore, Weights } from "./api.js";
import { FEATURES } from "./api.js";
import type { UiSessionState } from "./state.js";
import { sliderPercents } from "./state.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBanner(message: string | null): string {
  if (!message) return "";
  return `<div class="banner" role="alert">${escapeHtml(message)}</div>`;
}

export function renderSliders(sliders: Weights, echo: Weights | null): string {
  const percents = sliderPercents(sliders);
  const rows = FEATURES.map((name) => {
    const echoText = echo ? ` · server ${(echo[name] * 100).toFixed(1)}%` : "";
    return `<label class="slider-row" data-feature="${name}">
      <span class="slider-name">${name}</span>
      <input type="range" min="0" max="100" step="1" value="${sliders[name]}"
             data-slider="${name}">
      <span class="slider-pct">${percents[name]}%${echoText}</span>
    </label>`;
  });
  return `<div class="sliders">${rows.join("")}</div>`;
}

function breakdownBars(item: RankedItem): string {
  const values = FEATURES.map((name) => item.breakdown[name] ?? 0);
  const peak = Math.max(...values, 0);
  const bars = FEATURES.map((name, idx) => {
    const width = peak > 0 ? (100 * values[idx]) / peak : 0;
    return `<div class="bar" data-feature="${name}" title="${name}: ${values[idx]}">
      <i style="width:${width.toFixed(2)}%"></i>
    </div>`;
  });
  return `<div class="bars">${bars.join("")}</div>`;
}

/** Gallery in exactly the response order; scores carried verbatim. */
export function renderGallery(state: UiSessionState, imageUrl: (id: string) => string): string {
  if (state.gallery.length === 0) {
    return `<p class="empty">No results yet. Pick a query shot and rank.</p>`;
  }
  const cards = state.gallery.map((item, position) => {
    const id = escapeHtml(item.image_id);
    const preferred = state.preferred.has(item.image_id);
    const ignored = state.ignored.has(item.image_id);
    return `<figure class="card${preferred ? " preferred" : ""}${ignored ? " ignored" : ""}"
        data-image-id="${id}" data-score="${item.score}" data-position="${position}">
      <img src="${imageUrl(item.image_id)}" alt="${id}" loading="lazy">
      <figcaption>
        <span class="rank-pos">#${position + 1}</span>
        <span class="image-id">${id}</span>
        <span class="score">${item.score}</span>
      </figcaption>
      ${breakdownBars(item)}
      <div class="actions">
        <button data-action="prefer" data-image-id="${id}"
                aria-pressed="${preferred}">prefer</button>
        <button data-action="ignore" data-image-id="${id}"
                aria-pressed="${ignored}">ignore</button>
      </div>
    </figure>`;
  });
  return `<div class="gallery">${cards.join("")}</div>`;
}

export function renderShots(scores: ShotScore[], favorite: string | null,
                            poseShot: string | null): string {
  if (scores.length === 0) {
    return `<p class="empty">No shots submitted.</p>`;
  }
  const rows = scores.map((shot) => {
    const id = escapeHtml(shot.shot_id);
    const isFavorite = shot.shot_id === favorite;
    const isPose = shot.shot_id === poseShot;
    return `<li class="shot${isFavorite ? " favorite" : ""}" data-shot-id="${id}"
        data-score="${shot.score}">
      <span class="shot-id">${id}</span>
      <span class="score">${shot.score}</span>
      ${isFavorite ? `<span class="badge favorite-badge">favorite</span>` : ""}
      ${isPose ? `<span class="badge pose-badge">pose pick</span>` : ""}
    </li>`;
  });
  return `<ul class="shots">${rows.join("")}</ul>`;
}

export function renderSummary(summary: {
  genre: string;
  category: string | null;
  top_objects: { name: string; weight: number }[];
} | null): string {
  if (!summary) return "";
  const objects = summary.top_objects
    .map((o) => `${escapeHtml(o.name)} (${(o.weight * 100).toFixed(1)}%)`)
    .join(", ");
  const category = summary.category ? ` · ${escapeHtml(summary.category)}` : "";
  return `<div class="summary">
    <strong>${escapeHtml(summary.genre)}</strong>${category}
    ${objects ? `<span class="objects">${objects}</span>` : ""}
  </div>`;
}

export function galleryOrder(html: string): string[] {
  const ids: string[] = [];
  const pattern = /data-image-id="([^"]*)" data-score=/g;
  let match;
  while ((match = pattern.exec(html)) !== null) ids.push(match[1]);
  return ids;
}
