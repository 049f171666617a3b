// Minimal SVG time-series chart with overlay support and a hover readout.
// Scaling helpers are exported for tests; the chart draws data exactly as
// given (the API is the only source of numbers).

const SVG_NS = "http://www.w3.org/2000/svg";

export interface Viewport {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_VIEWPORT: Viewport = {
  width: 560,
  height: 190,
  margin: { top: 10, right: 12, bottom: 22, left: 56 },
};

export function scaleLinear(
  d0: number,
  d1: number,
  r0: number,
  r1: number,
): (v: number) => number {
  const span = d1 - d0;
  if (span === 0) return () => (r0 + r1) / 2;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === Infinity) return [0, 1];
  if (lo === hi) return [lo - 1, hi + 1];
  return [lo, hi];
}

export function buildPath(
  time: number[],
  values: number[],
  x: (v: number) => number,
  y: (v: number) => number,
): string {
  const parts: string[] = [];
  for (let i = 0; i < time.length; i++) {
    parts.push(`${i === 0 ? "M" : "L"}${x(time[i]).toFixed(2)},${y(values[i]).toFixed(2)}`);
  }
  return parts.join("");
}

export function ticks(lo: number, hi: number, count: number): number[] {
  const span = hi - lo;
  if (span <= 0) return [lo];
  const raw = span / count;
  const mag = 10 ** Math.floor(Math.log10(raw));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= count) ?? mag * 10;
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12; v += step) {
    out.push(Math.abs(v) < step / 1e6 ? 0 : v);
  }
  return out;
}

export interface SeriesSpec {
  label: string;
  time: number[];
  values: number[];
  color: string;
  dashed?: boolean;
}

export const PIN_COLORS = [
  "#d4622a",
  "#2a7fd4",
  "#2aa05a",
  "#9450c8",
  "#c8a22a",
  "#c82a6e",
  "#2ab4b4",
  "#777777",
];
export const CURRENT_COLOR = "#111111";

export class Chart {
  readonly root: HTMLElement;
  private svg: SVGSVGElement;
  private readout: HTMLElement;
  private series: SeriesSpec[] = [];

  constructor(
    readonly variable: string,
    private readonly viewport: Viewport = DEFAULT_VIEWPORT,
  ) {
    this.root = document.createElement("figure");
    this.root.className = "chart";
    const caption = document.createElement("figcaption");
    caption.textContent = variable;
    this.svg = document.createElementNS(SVG_NS, "svg");
    this.svg.setAttribute("viewBox", `0 0 ${viewport.width} ${viewport.height}`);
    this.svg.setAttribute("width", String(viewport.width));
    this.readout = document.createElement("div");
    this.readout.className = "readout";
    this.readout.textContent = " ";
    this.root.append(caption, this.svg, this.readout);
    this.svg.addEventListener("mousemove", (ev) => this.hover(ev));
    this.svg.addEventListener("mouseleave", () => {
      this.readout.textContent = " ";
    });
  }

  render(series: SeriesSpec[]): void {
    this.series = series;
    const { width, height, margin } = this.viewport;
    while (this.svg.firstChild) this.svg.removeChild(this.svg.firstChild);
    if (series.length === 0) return;

    const tAll = series.flatMap((s) => [s.time[0], s.time[s.time.length - 1]]);
    const [t0, t1] = [Math.min(...tAll), Math.max(...tAll)];
    let [v0, v1] = [Infinity, -Infinity];
    for (const s of series) {
      const [lo, hi] = extent(s.values);
      v0 = Math.min(v0, lo);
      v1 = Math.max(v1, hi);
    }
    if (v0 === v1) {
      v0 -= 1;
      v1 += 1;
    }
    const x = scaleLinear(t0, t1, margin.left, width - margin.right);
    const y = scaleLinear(v0, v1, height - margin.bottom, margin.top);

    for (const tick of ticks(v0, v1, 4)) {
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(margin.left));
      line.setAttribute("x2", String(width - margin.right));
      line.setAttribute("y1", y(tick).toFixed(2));
      line.setAttribute("y2", y(tick).toFixed(2));
      line.setAttribute("class", "grid");
      this.svg.appendChild(line);
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(margin.left - 6));
      label.setAttribute("y", y(tick).toFixed(2));
      label.setAttribute("class", "tick-label");
      label.textContent = formatTick(tick);
      this.svg.appendChild(label);
    }
    for (const tick of ticks(t0, t1, 6)) {
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", x(tick).toFixed(2));
      label.setAttribute("y", String(height - 6));
      label.setAttribute("class", "tick-label x");
      label.textContent = formatTick(tick);
      this.svg.appendChild(label);
    }

    for (const s of series) {
      const path = document.createElementNS(SVG_NS, "path");
      path.setAttribute("d", buildPath(s.time, s.values, x, y));
      path.setAttribute("fill", "none");
      path.setAttribute("stroke", s.color);
      path.setAttribute("stroke-width", "1.5");
      if (s.dashed) path.setAttribute("stroke-dasharray", "5 3");
      path.setAttribute("class", "series");
      path.setAttribute("data-label", s.label);
      this.svg.appendChild(path);
    }
  }

  paths(): SVGPathElement[] {
    return Array.from(this.svg.querySelectorAll("path.series"));
  }

  private hover(ev: MouseEvent): void {
    if (this.series.length === 0) return;
    const { width, margin } = this.viewport;
    const rect = this.svg.getBoundingClientRect();
    const frac = (ev.clientX - rect.left - margin.left) / (width - margin.left - margin.right);
    const base = this.series[0];
    const i = Math.round(clampUnit(frac) * (base.time.length - 1));
    const t = base.time[i];
    const parts = this.series.map((s) => `${s.label}: ${s.values[i]}`);
    this.readout.textContent = `t=${t}  ${parts.join("   ")}`;
  }
}

function clampUnit(v: number): number {
  return Math.min(1, Math.max(0, v));
}

export function formatTick(v: number): string {
  if (Math.abs(v) >= 10000) return v.toExponential(1).replace("e+", "e");
  return String(Math.round(v * 1000) / 1000);
}

export function formatMetric(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 100000 || a < 0.001) return v.toExponential(3);
  return String(Math.round(v * 10000) / 10000);
}
