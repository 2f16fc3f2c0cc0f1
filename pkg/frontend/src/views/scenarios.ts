/** Scenario comparison table.
 *
 * Strategies are evaluated by the service; the table shows the returned
 * mean/variance verbatim and strikes through exactly the rows the service
 * flagged as dominated. Client-side checks are limited to *input*
 * validation before submission (negative spends never reach the service).
 */

import type { StrategyRow } from "../types";
import type { Scenario } from "../session";

/** Pre-submission input validation; returns an error message or null. */
export function validateSpends(spends: number[]): string | null {
  if (spends.length === 0) {
    return "enter at least one channel spend";
  }
  for (const v of spends) {
    if (!Number.isFinite(v)) {
      return "spends must be numbers";
    }
    if (v < 0) {
      return "spends must be nonnegative";
    }
  }
  return null;
}

export function renderScenarioTable(
  doc: Document,
  rows: StrategyRow[],
  channelNames: string[],
  scenarios: Scenario[],
): HTMLTableElement {
  const table = doc.createElement("table");
  table.className = "scenario-table";

  const thead = doc.createElement("thead");
  const hr = doc.createElement("tr");
  for (const h of ["scenario", ...channelNames, "expected sales", "variance", ""]) {
    const th = doc.createElement("th");
    th.textContent = h;
    hr.appendChild(th);
  }
  thead.appendChild(hr);
  table.appendChild(thead);

  const tbody = doc.createElement("tbody");
  rows.forEach((row, i) => {
    const tr = doc.createElement("tr");
    tr.className = row.dominated ? "scenario-row dominated" : "scenario-row";
    tr.dataset.dominated = String(row.dominated);

    const scenario = scenarios[i];
    const nameCell = doc.createElement("td");
    nameCell.className = "scenario-name";
    nameCell.textContent = scenario ? scenario.name : `#${i + 1}`;
    if (scenario?.dirty) {
      const flag = doc.createElement("span");
      flag.className = "unsaved";
      flag.textContent = " (edited — not yet evaluated)";
      nameCell.appendChild(flag);
    }
    tr.appendChild(nameCell);

    const wrap = (text: string): Node =>
      row.dominated ? Object.assign(doc.createElement("s"), { textContent: text }) : doc.createTextNode(text);

    for (const u of row.u) {
      const td = doc.createElement("td");
      td.className = "spend";
      td.appendChild(wrap(String(u)));
      tr.appendChild(td);
    }
    for (const [cls, value] of [
      ["expected-sales", row.expected_sales],
      ["variance", row.variance],
    ] as const) {
      const td = doc.createElement("td");
      td.className = cls;
      td.appendChild(wrap(String(value)));
      tr.appendChild(td);
    }
    const mark = doc.createElement("td");
    mark.className = "dominated-mark";
    mark.textContent = row.dominated ? "dominated" : "";
    tr.appendChild(mark);
    tbody.appendChild(tr);
  });
  table.appendChild(tbody);
  return table;
}

/** The compare action is unavailable without scenarios to send. */
export function renderCompareButton(doc: Document, scenarios: Scenario[]): HTMLButtonElement {
  const btn = doc.createElement("button");
  btn.className = "compare";
  btn.textContent = "Compare scenarios";
  btn.disabled = scenarios.length === 0;
  return btn;
}
