import { describe, expect, it } from "vitest";

import type { ModelInfo } from "../src/api";
import {
  PIN_LIMIT,
  UiSession,
  clamp,
  defaultPlotVars,
  resolveVariable,
} from "../src/session";

const baseline: ModelInfo = {
  id: "pharma-baseline",
  description: "baseline",
  sliders: [
    { name: "A", default: 0, min: 0, max: 1, step: 1 },
    { name: "HIRING DELAY", default: 2, min: 0.5, max: 8, step: 0.5 },
  ],
  variables: [
    { name: "Trainee Testers", kind: "stock" },
    { name: "Trained Testers", kind: "stock" },
    { name: "quality perceived by customers", kind: "auxiliary" },
    { name: "order rate", kind: "auxiliary" },
    { name: "production rate", kind: "auxiliary" },
    { name: "A", kind: "constant" },
    { name: "HIRING DELAY", kind: "constant" },
    { name: "PRODUCTION DELAY", kind: "constant" },
  ],
};

const improved: ModelInfo = {
  ...baseline,
  id: "pharma-improved",
  variables: baseline.variables.map((v) =>
    v.name === "Trainee Testers" ? { ...v, name: "Trainees Testers" } : v,
  ),
};

describe("variable resolution", () => {
  it("matches exactly, case/whitespace-insensitively", () => {
    expect(resolveVariable(baseline, "ORDER   RATE")).toBe("order rate");
  });

  it("bridges the Trainee/Trainees spelling drift", () => {
    expect(resolveVariable(improved, "Trainee Testers")).toBe("Trainees Testers");
    expect(resolveVariable(baseline, "Trainees Testers")).toBe("Trainee Testers");
  });

  it("returns null for unknown names", () => {
    expect(resolveVariable(baseline, "flux capacitor")).toBeNull();
  });
});

describe("default plots", () => {
  it("uses the classic four when present", () => {
    expect(defaultPlotVars(baseline)).toEqual([
      "Trainee Testers",
      "quality perceived by customers",
      "order rate",
      "production rate",
    ]);
  });

  it("resolves spelling drift for the improved model", () => {
    expect(defaultPlotVars(improved)[0]).toBe("Trainees Testers");
  });
});

describe("UiSession", () => {
  it("starts from slider defaults with empty overrides", () => {
    const s = new UiSession(baseline);
    expect(s.overrides()).toEqual({});
    expect(s.currentRequest()).toEqual({
      model: "pharma-baseline",
      overrides: {},
      seed: 0,
    });
  });

  it("clamps slider values into range", () => {
    const s = new UiSession(baseline);
    expect(s.sliderChange("HIRING DELAY", 99)).toBe(8);
    expect(s.sliderChange("HIRING DELAY", -3)).toBe(0.5);
    expect(clamp(5, 0.5, 8)).toBe(5);
  });

  it("only sends overrides that differ from defaults", () => {
    const s = new UiSession(baseline);
    s.sliderChange("HIRING DELAY", 4);
    expect(s.overrides()).toEqual({ "HIRING DELAY": 4 });
    s.sliderChange("HIRING DELAY", 2);
    expect(s.overrides()).toEqual({});
  });

  it("shows the seed only on the stochastic path", () => {
    const s = new UiSession(baseline);
    s.seed = 958;
    expect(s.stochastic()).toBe(false);
    expect(s.currentRequest().seed).toBe(0);
    s.sliderChange("A", 1);
    expect(s.stochastic()).toBe(true);
    expect(s.currentRequest().seed).toBe(958);
  });

  it("labels the current settings with active overrides", () => {
    const s = new UiSession(baseline);
    expect(s.currentLabel()).toBe("pharma-baseline");
    s.sliderChange("HIRING DELAY", 4);
    expect(s.currentLabel()).toBe("pharma-baseline (HIRING DELAY=4)");
  });

  it("refuses to pin without a run and enforces the pin limit", () => {
    const s = new UiSession(baseline);
    expect(s.pin()).toMatch(/before pinning/);
    s.current = { time: [0], series: {}, warnings: [] };
    for (let i = 0; i < PIN_LIMIT; i++) expect(s.pin()).toBeNull();
    expect(s.pin()).toMatch(/pin limit/);
    expect(s.pinned).toHaveLength(PIN_LIMIT);
  });

  it("keeps pinned runs across a model switch", () => {
    const s = new UiSession(baseline);
    s.current = { time: [0], series: {}, warnings: [] };
    s.pin("base");
    s.reset(improved);
    expect(s.pinned).toHaveLength(1);
    expect(s.model.id).toBe("pharma-improved");
    expect(s.current).toBeNull();
  });

  it("records the request snapshot with the pin", () => {
    const s = new UiSession(baseline);
    s.sliderChange("HIRING DELAY", 4);
    s.current = { time: [0], series: {}, warnings: [] };
    s.pin("hd4");
    expect(s.pinned[0].request.overrides).toEqual({ "HIRING DELAY": 4 });
    // later slider moves must not mutate the snapshot
    s.sliderChange("HIRING DELAY", 6);
    expect(s.pinned[0].request.overrides).toEqual({ "HIRING DELAY": 4 });
  });
});
