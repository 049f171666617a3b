// UI session state, kept free of DOM concerns so the interaction rules
// (clamping, pin limits, override assembly) are directly testable.

import type { ModelInfo, SimulateRequest, SimulateResponse } from "./api";

export const PIN_LIMIT = 8;

// Preferred startup plots; resolved against each model's variable list.
const DEFAULT_PLOT_VARS = [
  "Trainee Testers",
  "quality perceived by customers",
  "order rate",
  "production rate",
];

export interface PinnedRun {
  label: string;
  request: SimulateRequest;
  time: number[];
  series: Record<string, number[]>;
}

const normKey = (name: string) => name.toLowerCase().split(/\s+/).join(" ");
const depluralize = (key: string) =>
  key
    .split(" ")
    .map((w) => (w.endsWith("s") ? w.slice(0, -1) : w))
    .join(" ");

/** Exact key match first, then unique match ignoring trailing 's' per word
 * (bridges "Trainee Testers" vs "Trainees Testers" across the two bundled
 * models). Returns the model's canonical spelling or null. */
export function resolveVariable(model: ModelInfo, requested: string): string | null {
  const key = normKey(requested);
  for (const v of model.variables) {
    if (normKey(v.name) === key) return v.name;
  }
  const target = depluralize(key);
  const hits = model.variables.filter((v) => depluralize(normKey(v.name)) === target);
  return hits.length === 1 ? hits[0].name : null;
}

export function defaultPlotVars(model: ModelInfo): string[] {
  const resolved = DEFAULT_PLOT_VARS.map((v) => resolveVariable(model, v)).filter(
    (v): v is string => v !== null,
  );
  if (resolved.length > 0) return resolved;
  return model.variables.filter((v) => v.kind === "stock").map((v) => v.name);
}

export function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}

export class UiSession {
  model: ModelInfo;
  sliderValues = new Map<string, number>();
  constantValues = new Map<string, number>(); // constants without sliders
  seed = 0;
  plotVars: string[] = [];
  window: [number, number] = [5, 120];
  pinned: PinnedRun[] = [];
  current: SimulateResponse | null = null;
  private runCounter = 0;

  constructor(model: ModelInfo) {
    this.model = model;
    this.reset(model);
  }

  reset(model: ModelInfo): void {
    this.model = model;
    this.sliderValues = new Map(model.sliders.map((s) => [s.name, s.default]));
    this.constantValues = new Map();
    this.plotVars = defaultPlotVars(model);
    this.current = null;
    // Pinned runs survive a model switch: that is how the two policies get
    // overlaid on one plot.
  }

  /** Clamp into the slider's range and store; returns the applied value. */
  sliderChange(name: string, value: number): number {
    const meta = this.model.sliders.find((s) => s.name === name);
    if (!meta) throw new Error(`no slider named '${name}'`);
    const applied = clamp(value, meta.min, meta.max);
    this.sliderValues.set(name, applied);
    return applied;
  }

  setConstant(name: string, value: number): void {
    this.constantValues.set(name, value);
  }

  /** Overrides are only the values that differ from the model's defaults,
   * so a slider parked on its default yields the untouched baseline. */
  overrides(): Record<string, number> {
    const out: Record<string, number> = {};
    for (const s of this.model.sliders) {
      const v = this.sliderValues.get(s.name);
      if (v !== undefined && v !== s.default) out[s.name] = v;
    }
    for (const [name, v] of this.constantValues) out[name] = v;
    return out;
  }

  /** The stochastic path is active only when A is nonzero; the seed field
   * (and the seed sent with requests) follows that. */
  stochastic(): boolean {
    for (const [name, v] of this.sliderValues) {
      if (normKey(name) === "a" && v !== 0) return true;
    }
    const a = this.constantValues.get("A");
    return a !== undefined && a !== 0;
  }

  currentRequest(): SimulateRequest {
    return {
      model: this.model.id,
      overrides: this.overrides(),
      seed: this.stochastic() ? this.seed : 0,
    };
  }

  /** Human label for the current settings, e.g. "pharma-baseline (HIRING DELAY=4)". */
  currentLabel(): string {
    const parts = Object.entries(this.overrides()).map(([k, v]) => `${k}=${v}`);
    return parts.length ? `${this.model.id} (${parts.join(", ")})` : this.model.id;
  }

  /** Snapshot the current run as an overlay. Returns an error message when
   * it cannot pin, null on success. */
  pin(label?: string): string | null {
    if (!this.current) return "run something before pinning";
    if (this.pinned.length >= PIN_LIMIT) {
      return `pin limit reached (${PIN_LIMIT}); remove one first`;
    }
    this.runCounter += 1;
    this.pinned.push({
      label: label || `#${this.runCounter} ${this.currentLabel()}`,
      request: { ...this.currentRequest(), label: label || `#${this.runCounter}` },
      time: this.current.time,
      series: this.current.series,
    });
    return null;
  }

  unpin(index: number): void {
    this.pinned.splice(index, 1);
  }
}
