/** Risk–return frontier view.
 *
 * Renders the service's frontier points in the order the service returned
 * them (the service guarantees variance-ascending order; the client never
 * re-sorts or recomputes). Every displayed number is the verbatim
 * `String(...)` of a service response field. Geometry (SVG coordinates,
 * bar widths) is presentation only and never shown as a number.
 */

import type { AllocateSweepResponse, ApiErrorBody, FrontierPoint } from "../types";
import type { PlannerSession } from "../session";

const CHART_W = 480;
const CHART_H = 240;
const PAD = 16;

function scale(values: number[], lo: number, hi: number): number[] {
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min || 1;
  return values.map((v) => lo + ((v - min) / span) * (hi - lo));
}

export function renderInfeasibleBanner(doc: Document, error: ApiErrorBody): HTMLElement {
  const banner = doc.createElement("div");
  banner.className = "banner infeasible";
  banner.setAttribute("role", "alert");
  banner.textContent = error.message;
  return banner;
}

export function renderFrontier(
  doc: Document,
  resp: AllocateSweepResponse,
  session: PlannerSession,
  onSelect?: (index: number) => void,
): HTMLElement {
  const root = doc.createElement("div");
  root.className = "frontier";

  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${CHART_W} ${CHART_H}`);
  svg.setAttribute("class", "frontier-chart");
  const xs = scale(resp.points.map((p) => p.variance), PAD, CHART_W - PAD);
  const ys = scale(resp.points.map((p) => p.expected_sales), CHART_H - PAD, PAD);
  resp.points.forEach((p, i) => {
    const c = doc.createElementNS("http://www.w3.org/2000/svg", "circle");
    c.setAttribute("cx", String(xs[i]));
    c.setAttribute("cy", String(ys[i]));
    c.setAttribute("r", i === session.selectedIndex ? "7" : "5");
    c.setAttribute("class", i === session.selectedIndex ? "point selected" : "point");
    c.setAttribute("data-index", String(i));
    c.addEventListener("click", () => onSelect?.(i));
    svg.appendChild(c);
  });
  root.appendChild(svg);

  const list = doc.createElement("ol");
  list.className = "point-list";
  resp.points.forEach((p, i) => {
    const li = doc.createElement("li");
    li.className = i === session.selectedIndex ? "point-row selected" : "point-row";
    li.dataset.index = String(i);
    li.dataset.variance = String(p.variance);
    li.dataset.expectedSales = String(p.expected_sales);
    const label = doc.createElement("span");
    label.className = "risk-label";
    label.textContent = resp.mode === "penalty" ? "λ=" : "σ²=";
    const risk = doc.createElement("span");
    risk.className = "risk-value";
    risk.textContent = String(p.risk);
    li.append(label, risk);
    li.addEventListener("click", () => onSelect?.(i));
    list.appendChild(li);
  });
  root.appendChild(list);

  if (session.selectedIndex !== null && resp.points[session.selectedIndex]) {
    root.appendChild(
      renderPointDetail(doc, resp.points[session.selectedIndex], resp.channel_names, session),
    );
  }
  return root;
}

/** Allocation bars + readout for one service-returned point. */
export function renderPointDetail(
  doc: Document,
  point: FrontierPoint,
  channelNames: string[],
  session: PlannerSession,
): HTMLElement {
  const detail = doc.createElement("div");
  detail.className = "point-detail";

  const bars = doc.createElement("div");
  bars.className = "allocation-bars";
  const maxU = Math.max(...point.u.map(Math.abs), 1e-300);
  point.u.forEach((value, j) => {
    const row = doc.createElement("div");
    row.className = "bar-row";
    const name = doc.createElement("span");
    name.className = "channel-name";
    name.textContent = channelNames[j % channelNames.length];
    const bar = doc.createElement("div");
    bar.className = "bar";
    bar.style.width = `${(Math.abs(value) / maxU) * 100}%`;
    const amount = doc.createElement("span");
    amount.className = "bar-value";
    amount.textContent = String(value); // verbatim service u*
    row.append(name, bar, amount);
    bars.appendChild(row);
  });
  detail.appendChild(bars);

  const readout = doc.createElement("dl");
  readout.className = "readout";
  for (const [label, value, cls] of [
    ["expected sales", point.expected_sales, "expected-sales"],
    ["variance", point.variance, "variance"],
  ] as const) {
    const dt = doc.createElement("dt");
    dt.textContent = label;
    const dd = doc.createElement("dd");
    dd.className = cls;
    dd.textContent = String(value);
    readout.append(dt, dd);
  }
  detail.appendChild(readout);
  void session;
  return detail;
}
