/** Browser entry point: wires the views to the live service.
 *
 * All numbers rendered anywhere in the planner come from service responses;
 * this module only moves payloads between the client and the views and
 * applies the stale-response guard on slider-driven re-solves.
 */

import { ApiClient, ApiError, fetchTransport } from "./api";
import { PlannerSession } from "./session";
import { renderFrontier, renderInfeasibleBanner } from "./views/frontier";
import { renderForecastFan } from "./views/fan";
import {
  renderCompareButton,
  renderScenarioTable,
  validateSpends,
} from "./views/scenarios";
import type { AllocateRequest } from "./types";

export function mountPlanner(doc: Document, root: HTMLElement, client: ApiClient): PlannerSession {
  const session = new PlannerSession();

  const frontierHost = doc.createElement("section");
  frontierHost.className = "frontier-host";
  const fanHost = doc.createElement("section");
  fanHost.className = "fan-host";
  const scenarioHost = doc.createElement("section");
  scenarioHost.className = "scenario-host";
  root.append(frontierHost, fanHost, scenarioHost);

  function drawFrontier(): void {
    frontierHost.replaceChildren();
    if (session.frontier) {
      frontierHost.appendChild(
        renderFrontier(doc, session.frontier, session, (i) => {
          session.selectedIndex = i;
          drawFrontier();
        }),
      );
    }
  }

  async function resolveFrontier(body: AllocateRequest): Promise<void> {
    if (!session.modelId) {
      return;
    }
    try {
      const res = await client.allocateSweep(session.modelId, body);
      if (session.acceptFrontier(res.seq, res.body)) {
        drawFrontier();
      }
    } catch (err) {
      if (err instanceof ApiError && session.accept("frontier", client.log.length)) {
        frontierHost.replaceChildren(renderInfeasibleBanner(doc, err.payload));
      } else if (!(err instanceof ApiError)) {
        throw err;
      }
    }
  }

  async function resolveForecast(h: number): Promise<void> {
    if (!session.modelId) {
      return;
    }
    const res = await client.forecast(session.modelId, { h });
    if (session.acceptForecast(res.seq, res.body)) {
      fanHost.replaceChildren(renderForecastFan(doc, res.body));
    }
  }

  async function compareScenarios(body: AllocateRequest): Promise<void> {
    if (!session.modelId || session.scenarios.length === 0) {
      return;
    }
    for (const s of session.scenarios) {
      const problem = validateSpends(s.spends);
      if (problem !== null) {
        const warn = doc.createElement("p");
        warn.className = "input-error";
        warn.textContent = `${s.name}: ${problem}`;
        scenarioHost.replaceChildren(warn);
        return; // invalid input never reaches the service
      }
    }
    const res = await client.allocateSweep(session.modelId, {
      ...body,
      strategies: session.scenarios.map((s) => s.spends),
    });
    if (!session.accept("scenarios", res.seq)) {
      return;
    }
    session.markEvaluated();
    scenarioHost.replaceChildren(
      renderScenarioTable(doc, res.body.strategies ?? [], res.body.channel_names, session.scenarios),
      renderCompareButton(doc, session.scenarios),
    );
  }

  Object.assign(session as unknown as Record<string, unknown>, {
    resolveFrontier,
    resolveForecast,
    compareScenarios,
  });
  return session;
}

/* istanbul ignore next -- browser bootstrap */
if (typeof window !== "undefined" && typeof document !== "undefined") {
  const rootEl = document.getElementById("planner");
  if (rootEl) {
    mountPlanner(document, rootEl, new ApiClient(fetchTransport()));
  }
}
