/** Forecast fan chart: mean line with the service's 2.5–97.5% band.
 *
 * Band endpoints and hover numbers are the service's quantile arrays
 * verbatim; SVG geometry is presentation only.
 */

import type { ForecastResponse } from "../types";

const CHART_W = 560;
const CHART_H = 220;
const PAD = 12;

export function renderForecastFan(doc: Document, resp: ForecastResponse): HTMLElement {
  const lo = resp.quantiles["2.5"];
  const hi = resp.quantiles["97.5"];
  const root = doc.createElement("div");
  root.className = "forecast-fan";

  const all = [...resp.mean, ...lo, ...hi];
  const vMin = Math.min(...all);
  const vMax = Math.max(...all);
  const span = vMax - vMin || 1;
  const x = (i: number) =>
    PAD + (resp.horizon === 1 ? 0 : (i / (resp.horizon - 1)) * (CHART_W - 2 * PAD));
  const y = (v: number) => CHART_H - PAD - ((v - vMin) / span) * (CHART_H - 2 * PAD);

  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${CHART_W} ${CHART_H}`);
  svg.setAttribute("class", "fan-chart");

  const band = doc.createElementNS("http://www.w3.org/2000/svg", "polygon");
  const upper = hi.map((v, i) => `${x(i)},${y(v)}`);
  const lower = lo.map((v, i) => `${x(i)},${y(v)}`).reverse();
  band.setAttribute("points", [...upper, ...lower].join(" "));
  band.setAttribute("class", "band");
  svg.appendChild(band);

  const line = doc.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", resp.mean.map((v, i) => `${x(i)},${y(v)}`).join(" "));
  line.setAttribute("class", "mean-line");
  line.setAttribute("fill", "none");
  svg.appendChild(line);
  root.appendChild(svg);

  // per-week hover/readout rows carrying the exact service numbers
  const weeks = doc.createElement("ol");
  weeks.className = "fan-weeks";
  for (let i = 0; i < resp.horizon; i++) {
    const li = doc.createElement("li");
    li.className = "fan-week";
    li.dataset.week = String(i + 1);
    const mean = doc.createElement("span");
    mean.className = "mean";
    mean.textContent = String(resp.mean[i]);
    const lower2 = doc.createElement("span");
    lower2.className = "lo";
    lower2.textContent = String(lo[i]);
    const upper2 = doc.createElement("span");
    upper2.className = "hi";
    upper2.textContent = String(hi[i]);
    li.title = `week ${i + 1}`;
    li.append(lower2, mean, upper2);
    weeks.appendChild(li);
  }
  root.appendChild(weeks);
  return root;
}

/** Horizon vs future-spend row count check used before requesting. */
export function missingFutureWeeks(horizon: number, futureRows: number): number {
  return Math.max(0, horizon - futureRows);
}
