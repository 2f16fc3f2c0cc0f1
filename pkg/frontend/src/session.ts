/** Planner session state.
 *
 * Holds the manager's current inputs (budget, bounds, risk slider, saved
 * scenarios) plus the last *accepted* service responses. Responses are
 * accepted through `accept`, which drops any response whose sequence number
 * is older than one already applied for the same view — the guard that keeps
 * the UI consistent with the newest completed request when slider input
 * outruns the service.
 */

import type {
  AllocateSweepResponse,
  ForecastResponse,
  ModelSummary,
} from "./types";

export type RiskMode = "sigma2" | "lambda";

export interface Scenario {
  name: string;
  spends: number[];
  /** True when edited since the last evaluation round-trip. */
  dirty: boolean;
}

export type ViewKey = "frontier" | "forecast" | "scenarios" | "model";

export class PlannerSession {
  modelId: string | null = null;
  model: ModelSummary | null = null;

  horizon = 1;
  budget = 1;
  lo: number[] = [];
  hi: number[] = [];

  riskMode: RiskMode = "sigma2";
  riskGridSize = 20;
  riskPenalty = 0;

  /** Index into the last accepted frontier's points, or null. */
  selectedIndex: number | null = null;

  scenarios: Scenario[] = [];

  frontier: AllocateSweepResponse | null = null;
  forecast: ForecastResponse | null = null;

  private applied: Partial<Record<ViewKey, number>> = {};

  /** Returns true (and records seq) if this response is newer than any
   * previously accepted one for the view; false means: discard it. */
  accept(view: ViewKey, seq: number): boolean {
    const last = this.applied[view] ?? -1;
    if (seq <= last) {
      return false;
    }
    this.applied[view] = seq;
    return true;
  }

  acceptFrontier(seq: number, body: AllocateSweepResponse): boolean {
    if (!this.accept("frontier", seq)) {
      return false;
    }
    this.frontier = body;
    // keep the selection valid: it must always be a service-returned point
    if (this.selectedIndex !== null && this.selectedIndex >= body.points.length) {
      this.selectedIndex = body.points.length ? 0 : null;
    }
    if (this.selectedIndex === null && body.points.length === 1) {
      this.selectedIndex = 0; // degenerate single-point frontier: preselect
    }
    return true;
  }

  acceptForecast(seq: number, body: ForecastResponse): boolean {
    if (!this.accept("forecast", seq)) {
      return false;
    }
    this.forecast = body;
    return true;
  }

  addScenario(name: string, spends: number[]): Scenario {
    const s: Scenario = { name, spends: [...spends], dirty: true };
    this.scenarios.push(s);
    return s;
  }

  markEvaluated(): void {
    for (const s of this.scenarios) {
      s.dirty = false;
    }
  }

  editScenario(index: number, spends: number[]): void {
    const s = this.scenarios[index];
    s.spends = [...spends];
    s.dirty = true;
  }
}
