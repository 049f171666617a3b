// Wires the session state, API client and charts into the page.
// Exported as a class so the interaction tests can drive a real DOM.

import { ApiClient, ApiError, ModelInfo, SimulateResponse } from "./api";
import { Chart, CURRENT_COLOR, PIN_COLORS, SeriesSpec, formatMetric } from "./chart";
import { LatestWins } from "./debounce";
import { PinnedRun, UiSession } from "./session";

export const DEBOUNCE_MS = 150;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Series lookup tolerant of the Trainee/Trainees spelling drift. */
export function seriesFor(
  series: Record<string, number[]>,
  requested: string,
): number[] | null {
  const norm = (s: string) => s.toLowerCase().split(/\s+/).join(" ");
  const deplural = (s: string) =>
    norm(s)
      .split(" ")
      .map((w) => (w.endsWith("s") ? w.slice(0, -1) : w))
      .join(" ");
  for (const key of Object.keys(series)) {
    if (norm(key) === norm(requested)) return series[key];
  }
  const hits = Object.keys(series).filter((k) => deplural(k) === deplural(requested));
  return hits.length === 1 ? series[hits[0]] : null;
}

export class App {
  session!: UiSession;
  models: ModelInfo[] = [];
  simulateCalls = 0; // instrumentation used by tests
  charts = new Map<string, Chart>();
  private scheduler: LatestWins<SimulateResponse>;

  private modelSelect!: HTMLSelectElement;
  private sliderBox!: HTMLElement;
  private seedBox!: HTMLElement;
  private seedInput!: HTMLInputElement;
  private varBox!: HTMLElement;
  private plotBox!: HTMLElement;
  private pinnedBox!: HTMLElement;
  private statusBox!: HTMLElement;

  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
    debounceMs: number = DEBOUNCE_MS,
  ) {
    this.scheduler = new LatestWins<SimulateResponse>(
      debounceMs,
      (resp) => this.onSimulated(resp),
      (err) => this.showError(err),
    );
    this.buildSkeleton();
  }

  async start(): Promise<void> {
    this.models = await this.api.listModels();
    this.modelSelect.replaceChildren(
      ...this.models.map((m) => el("option", { value: m.id }, m.id)),
    );
    this.session = new UiSession(this.models[0]);
    this.renderControls();
    await this.resimulateNow();
  }

  private buildSkeleton(): void {
    const header = el("header");
    this.modelSelect = el("select", { id: "model-select" });
    this.modelSelect.addEventListener("change", () => {
      void this.switchModel(this.modelSelect.value);
    });
    header.append(el("h1", {}, "stockflow explorer"), this.modelSelect);

    const aside = el("aside");
    this.sliderBox = el("div", { id: "sliders" });
    this.seedBox = el("div", { id: "seed-field", hidden: "" });
    this.seedInput = el("input", {
      id: "seed-input",
      type: "number",
      value: "0",
      step: "1",
    });
    this.seedInput.addEventListener("change", () => {
      this.session.seed = Number(this.seedInput.value) || 0;
      this.scheduleResimulate();
    });
    this.seedBox.append(el("label", { for: "seed-input" }, "noise seed"), this.seedInput);
    this.varBox = el("div", { id: "var-picker" });
    const pinButton = el("button", { id: "pin-button" }, "pin current run");
    pinButton.addEventListener("click", () => this.pinCurrent());
    this.pinnedBox = el("div", { id: "pinned-list" });
    aside.append(
      el("h2", {}, "parameters"),
      this.sliderBox,
      this.seedBox,
      el("h2", {}, "plots"),
      this.varBox,
      pinButton,
      this.pinnedBox,
    );

    const main = el("main");
    this.statusBox = el("div", { id: "status", role: "status" });
    this.plotBox = el("div", { id: "plots" });
    main.append(this.statusBox, this.plotBox);

    this.root.append(header, aside, main);
  }

  private renderControls(): void {
    const model = this.session.model;
    this.modelSelect.value = model.id;

    this.sliderBox.replaceChildren();
    for (const s of model.sliders) {
      const row = el("div", { class: "slider-row" });
      const slider = el("input", {
        type: "range",
        min: String(s.min),
        max: String(s.max),
        step: String(s.step),
        value: String(this.session.sliderValues.get(s.name) ?? s.default),
        "data-slider": s.name,
      });
      const num = el("input", {
        type: "number",
        min: String(s.min),
        max: String(s.max),
        step: String(s.step),
        value: String(this.session.sliderValues.get(s.name) ?? s.default),
        "data-slider-num": s.name,
      });
      const apply = (raw: string) => {
        const applied = this.session.sliderChange(s.name, Number(raw));
        slider.value = String(applied);
        num.value = String(applied);
        this.seedBox.hidden = !this.session.stochastic();
        this.scheduleResimulate();
      };
      slider.addEventListener("input", () => apply(slider.value));
      num.addEventListener("change", () => apply(num.value));
      row.append(el("label", {}, s.name), slider, num);
      this.sliderBox.appendChild(row);
    }

    // Constants without sliders are editable as plain numeric fields.
    const sliderNames = new Set(model.sliders.map((s) => s.name));
    for (const v of model.variables) {
      if (v.kind !== "constant" || sliderNames.has(v.name)) continue;
      const row = el("div", { class: "slider-row" });
      const num = el("input", { type: "number", "data-constant": v.name });
      num.addEventListener("change", () => {
        this.session.setConstant(v.name, Number(num.value));
        this.scheduleResimulate();
      });
      row.append(el("label", {}, v.name), num);
      this.sliderBox.appendChild(row);
    }

    this.seedBox.hidden = !this.session.stochastic();
    this.seedInput.value = String(this.session.seed);

    this.varBox.replaceChildren();
    for (const v of model.variables) {
      if (v.kind === "constant" || v.kind === "control") continue;
      const id = `var-${v.name.replace(/\s+/g, "-")}`;
      const box = el("input", { type: "checkbox", id, "data-var": v.name });
      box.checked = this.session.plotVars.includes(v.name);
      box.addEventListener("change", () => {
        const order = model.variables.map((mv) => mv.name);
        const chosen = new Set(this.session.plotVars);
        if (box.checked) chosen.add(v.name);
        else chosen.delete(v.name);
        this.session.plotVars = order.filter((n) => chosen.has(n));
        this.renderPlots();
        void this.refreshChips();
      });
      const wrap = el("span", { class: "var-choice" });
      wrap.append(box, el("label", { for: id }, v.name));
      this.varBox.appendChild(wrap);
    }
  }

  private async switchModel(id: string): Promise<void> {
    const model = this.models.find((m) => m.id === id);
    if (!model) return;
    this.session.reset(model);
    this.renderControls();
    await this.resimulateNow();
  }

  scheduleResimulate(): void {
    this.scheduler.schedule(this.simulateJob());
  }

  async resimulateNow(): Promise<void> {
    this.scheduler.flush(this.simulateJob());
    await this.settle();
  }

  private simulateJob(): () => Promise<SimulateResponse> {
    const req = this.session.currentRequest();
    return () => {
      this.simulateCalls += 1;
      return this.api.simulate(req);
    };
  }

  private onSimulated(resp: SimulateResponse): void {
    this.session.current = resp;
    this.statusBox.textContent = resp.warnings.length
      ? `warnings: ${resp.warnings.join("; ")}`
      : "";
    this.renderPlots();
    void this.refreshChips();
  }

  /** Wait until no simulate request is pending or in flight. */
  async settle(): Promise<void> {
    while (this.scheduler.busy) {
      await new Promise((resolve) => setTimeout(resolve, 5));
    }
  }

  renderPlots(): void {
    const current = this.session.current;
    this.plotBox.replaceChildren();
    this.charts.clear();
    for (const variable of this.session.plotVars) {
      const chart = new Chart(variable);
      const series: SeriesSpec[] = [];
      this.session.pinned.forEach((pin, i) => {
        const values = seriesFor(pin.series, variable);
        if (values) {
          series.push({
            label: pin.label,
            time: pin.time,
            values,
            color: PIN_COLORS[i % PIN_COLORS.length],
            dashed: true,
          });
        }
      });
      if (current) {
        const values = seriesFor(current.series, variable);
        if (values) {
          series.push({
            label: this.session.currentLabel(),
            time: current.time,
            values,
            color: CURRENT_COLOR,
          });
        }
      }
      chart.render(series);
      this.charts.set(variable, chart);
      this.plotBox.appendChild(chart.root);
    }
  }

  pinCurrent(): void {
    const err = this.session.pin();
    if (err) {
      this.statusBox.textContent = err;
      return;
    }
    this.renderPins();
    this.renderPlots();
    void this.refreshChips();
  }

  private renderPins(): void {
    this.pinnedBox.replaceChildren();
    this.session.pinned.forEach((pin, i) => {
      const chip = el("div", { class: "pin-chip", "data-pin": pin.label });
      const remove = el("button", { class: "unpin" }, "x");
      remove.addEventListener("click", () => {
        this.session.unpin(i);
        this.renderPins();
        this.renderPlots();
        void this.refreshChips();
      });
      chip.append(
        el("span", { class: "swatch", style: `background:${PIN_COLORS[i % PIN_COLORS.length]}` }),
        el("span", { class: "pin-label" }, pin.label),
        remove,
        el("div", { class: "pin-metrics" }),
      );
      this.pinnedBox.appendChild(chip);
    });
  }

  /** Metric chips per pinned run (mean/min/max/final over the window),
   * fetched from /api/compare so they match the CLI exactly. */
  async refreshChips(): Promise<void> {
    if (this.session.pinned.length === 0 || !this.session.current) return;
    const runs = [
      ...this.session.pinned.map((p: PinnedRun) => p.request),
      { ...this.session.currentRequest(), label: "current" },
    ];
    const vars = this.session.plotVars.filter((v) =>
      this.session.pinned.every((p) => seriesFor(p.series, v) !== null),
    );
    if (vars.length === 0) return;
    try {
      const report = await this.api.compare(runs, vars, this.session.window);
      for (const pin of this.session.pinned) {
        const chip = this.pinnedBox.querySelector(`[data-pin="${pin.label}"] .pin-metrics`);
        if (!chip) continue;
        const lines = report.metrics
          .filter((m) => m.label === pin.request.label)
          .map(
            (m) =>
              `${m.variable}: mean ${formatMetric(m.mean)} min ${formatMetric(m.min)} ` +
              `max ${formatMetric(m.max)} final ${formatMetric(m.final)}`,
          );
        chip.textContent = lines.join("\n");
      }
    } catch (err) {
      this.showError(err); // pins stay; only the status line reports it
    }
  }

  private showError(err: unknown): void {
    if (err instanceof ApiError) {
      this.statusBox.textContent = `API error ${err.status}: ${JSON.stringify(err.detail)}`;
    } else {
      this.statusBox.textContent = String(err);
    }
  }
}

export async function boot(): Promise<App> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const app = new App(root, new ApiClient(""));
  await app.start();
  return app;
}

declare global {
  interface Window {
    __STOCKFLOW_NO_BOOT?: boolean;
  }
}

if (
  typeof window !== "undefined" &&
  !window.__STOCKFLOW_NO_BOOT &&
  document.getElementById("app") !== null
) {
  boot().catch((err) => console.error("stockflow ui failed to start:", err));
}
