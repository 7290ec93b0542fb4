import { describe, expect, it } from "vitest";

import type { RankResponse } from "../src/api.js";
import {
  galleryOrder, renderBanner, renderGallery, renderShots, renderSliders,
} from "../src/render.js";
import { applyRankResponse, initialState, togglePreferred } from "../src/state.js";

const response: RankResponse = {
  session_id: "s1",
  weights: { vgg: 0.5, iod: 0.5, cade: 0, arpose: 0, stat: 0, gender: 0 },
  results: [
    { image_id: "c", score: 0.9,
      breakdown: { vgg: 0.4, iod: 0.3, cade: 0.1, arpose: 0.1, stat: 0.05, gender: 0.05 } },
    { image_id: "a", score: 0.5,
      breakdown: { vgg: 0.2, iod: 0.1, cade: 0.1, arpose: 0.05, stat: 0.03, gender: 0.02 } },
    { image_id: "b", score: 0.1,
      breakdown: { vgg: 0.05, iod: 0.02, cade: 0.01, arpose: 0.01, stat: 0.005, gender: 0.005 } },
  ],
};

describe("gallery rendering", () => {
  it("keeps exactly the response order", () => {
    const state = initialState();
    applyRankResponse(state, response);
    const html = renderGallery(state, (id) => `/images/${id}`);
    expect(galleryOrder(html)).toEqual(["c", "a", "b"]);
  });

  it("carries scores without rounding", () => {
    const state = initialState();
    applyRankResponse(state, response);
    const html = renderGallery(state, (id) => `/images/${id}`);
    expect(html).toContain('data-score="0.9"');
    expect(html).toContain('data-score="0.5"');
  });

  it("marks preferred cards and pressed buttons", () => {
    const state = initialState();
    applyRankResponse(state, response);
    togglePreferred(state, "a");
    const html = renderGallery(state, (id) => `/images/${id}`);
    expect(html).toMatch(/class="card preferred"[^>]*data-image-id="a"/);
    expect(html).toMatch(
      /data-action="prefer" data-image-id="a"\s+aria-pressed="true"/);
  });

  it("scales breakdown bars against the row maximum", () => {
    const state = initialState();
    applyRankResponse(state, response);
    const html = renderGallery(state, (id) => `/images/${id}`);
    // The first card's vgg entry (0.4) is its maximum: full width.
    expect(html).toContain('data-feature="vgg" title="vgg: 0.4">\n      <i style="width:100.00%"');
  });

  it("escapes markup in ids", () => {
    const state = initialState();
    applyRankResponse(state, {
      ...response,
      results: [{ image_id: "<img>", score: 1, breakdown: response.results[0].breakdown }],
    });
    const html = renderGallery(state, () => "x");
    expect(html).not.toContain('data-image-id="<img>"');
    expect(html).toContain("&lt;img&gt;");
  });
});

describe("banner and shots", () => {
  it("renders nothing without a message", () => {
    expect(renderBanner(null)).toBe("");
  });

  it("renders an alert with the message", () => {
    expect(renderBanner("409: no style set")).toContain('role="alert"');
  });

  it("badges the favorite and pose shot", () => {
    const html = renderShots(
      [{ shot_id: "s0", score: 0.3 }, { shot_id: "s1", score: 0.7 }],
      "s1", "s0");
    expect(html).toMatch(/data-shot-id="s1"[\s\S]*favorite-badge/);
    expect(html).toMatch(/data-shot-id="s0"[\s\S]*pose-badge/);
  });
});

describe("slider rendering", () => {
  it("shows integer percentages and the server echo", () => {
    const html = renderSliders(
      { vgg: 50, iod: 50, cade: 0, arpose: 0, stat: 0, gender: 0 },
      { vgg: 0.5, iod: 0.5, cade: 0, arpose: 0, stat: 0, gender: 0 });
    expect(html).toContain("50%");
    expect(html).toContain("server 50.0%");
  });
});
