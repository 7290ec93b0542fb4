import { describe, expect, it } from "vitest";

import { FEATURES } from "../src/api.js";
import type { RankResponse, ShotsResponse } from "../src/api.js";
import {
  applyRankResponse, applyShotsResponse, canSubmitMatch, initialState,
  setSlider, sliderPercents, toggleIgnored, togglePreferred,
} from "../src/state.js";

function rankResponse(ids: string[]): RankResponse {
  return {
    session_id: "s1",
    weights: { vgg: 1, iod: 0, cade: 0, arpose: 0, stat: 0, gender: 0 },
    results: ids.map((id, i) => ({
      image_id: id,
      score: 1 - i / 10,
      breakdown: { vgg: 0.5, iod: 0.1, cade: 0, arpose: 0.2, stat: 0.1, gender: 0.1 },
    })),
  };
}

describe("slider percentages", () => {
  it("sum to exactly 100", () => {
    const state = initialState();
    setSlider(state, "vgg", 33);
    setSlider(state, "iod", 33);
    setSlider(state, "cade", 33);
    const percents = sliderPercents(state.sliders);
    const total = FEATURES.reduce((acc, name) => acc + percents[name], 0);
    expect(total).toBe(100);
  });

  it("split evenly when every slider is zero", () => {
    const percents = sliderPercents({
      vgg: 0, iod: 0, cade: 0, arpose: 0, stat: 0, gender: 0,
    });
    const values = FEATURES.map((name) => percents[name]);
    expect(values.reduce((a, b) => a + b, 0)).toBe(100);
    expect(Math.max(...values) - Math.min(...values)).toBeLessThanOrEqual(1);
  });

  it("follow proportions", () => {
    const percents = sliderPercents({
      vgg: 75, iod: 25, cade: 0, arpose: 0, stat: 0, gender: 0,
    });
    expect(percents.vgg).toBe(75);
    expect(percents.iod).toBe(25);
  });
});

describe("selection toggles", () => {
  it("preferred and ignored are mutually exclusive", () => {
    const state = initialState();
    applyRankResponse(state, rankResponse(["a", "b"]));
    togglePreferred(state, "a");
    expect(state.preferred.has("a")).toBe(true);
    toggleIgnored(state, "a");
    expect(state.preferred.has("a")).toBe(false);
    expect(state.ignored.has("a")).toBe(true);
    togglePreferred(state, "a");
    expect(state.ignored.has("a")).toBe(false);
    expect(state.preferred.has("a")).toBe(true);
  });

  it("toggling twice clears the mark", () => {
    const state = initialState();
    togglePreferred(state, "x");
    togglePreferred(state, "x");
    expect(state.preferred.size).toBe(0);
  });

  it("re-ranking drops selections that left the page", () => {
    const state = initialState();
    applyRankResponse(state, rankResponse(["a", "b", "c"]));
    togglePreferred(state, "a");
    toggleIgnored(state, "c");
    applyRankResponse(state, rankResponse(["b", "c"]));
    expect(state.preferred.size).toBe(0);
    expect(state.ignored.has("c")).toBe(true);
  });
});

describe("match submission gate", () => {
  it("requires a session, a preferred pick, and staged shots", () => {
    const state = initialState();
    expect(canSubmitMatch(state, 1)).toBe(false);
    state.sessionId = "s1";
    expect(canSubmitMatch(state, 1)).toBe(false);
    togglePreferred(state, "a");
    expect(canSubmitMatch(state, 0)).toBe(false);
    expect(canSubmitMatch(state, 2)).toBe(true);
  });
});

describe("shots response", () => {
  it("stores favorite and pose pick verbatim", () => {
    const state = initialState();
    const response: ShotsResponse = {
      session_id: "s1",
      favorite: "shot2",
      favorite_index: 2,
      scores: [
        { shot_id: "shot0", score: 0.1 },
        { shot_id: "shot1", score: 0.2 },
        { shot_id: "shot2", score: 0.9 },
      ],
      pose_shot: { index: 1, shot_id: "shot1" },
    };
    applyShotsResponse(state, response);
    expect(state.favorite).toBe("shot2");
    expect(state.poseShot).toBe("shot1");
    expect(state.shotScores.map((s) => s.shot_id)).toEqual(["shot0", "shot1", "shot2"]);
  });
});
