/** Recorded service payloads + transport stubs shared by the tests.
 *
 * The numbers deliberately include values with non-trivial float reprs
 * (0.30000000000000004, long mantissas) so "rendered text === String(service
 * value)" catches any client-side rounding or recomputation.
 */

import type { ApiRequest, ApiResponse, Transport } from "../src/api";
import type {
  AllocateSweepResponse,
  ApiErrorBody,
  ForecastResponse,
  StrategyRow,
} from "../src/types";

export const FRONTIER: AllocateSweepResponse = {
  channel_names: ["tv", "web"],
  horizon: 1,
  moment_model: { m_c: 0.5, sigma_cc: 0.25, m_q: [1.25, 2.5], omega: 0.1 },
  mode: "risk",
  points: [
    {
      risk: 0.1,
      u: [0.223606797749979, 0.44721359549995787],
      expected_sales: 1.118033988749895,
      variance: 0.1,
    },
    {
      risk: 0.2,
      u: [0.30000000000000004, 0.6],
      expected_sales: 1.5,
      variance: 0.2,
    },
    {
      risk: 0.30000000000000004,
      u: [0.35, 0.7],
      expected_sales: 1.7500000000000002,
      variance: 0.30000000000000004,
    },
  ],
};

export const SINGLE_POINT_FRONTIER: AllocateSweepResponse = {
  ...FRONTIER,
  points: [FRONTIER.points[0]],
};

export const STRATEGIES: StrategyRow[] = [
  { u: [1.0, 0.0], expected_sales: 1.25, variance: 0.25, dominated: true },
  { u: [0.5, 0.5], expected_sales: 1.875, variance: 0.15625, dominated: false },
  { u: [0.25, 0.75], expected_sales: 2.1875, variance: 0.203125, dominated: false },
];

export const FORECAST: ForecastResponse = {
  horizon: 3,
  mean: [10.1, 10.5, 11.000000000000002],
  quantiles: {
    "2.5": [8.3, 8.05, 7.9],
    "50": [10.05, 10.45, 10.95],
    "97.5": [12.2, 13.1, 14.299999999999999],
  },
};

export const INFEASIBLE: ApiErrorBody = {
  code: "InfeasibleBudget",
  message: "risk cap 0.01 is below the minimum attainable variance 0.05",
  detail: null,
};

/** Transport whose responses are chosen by a route function; records calls. */
export function stubTransport(
  route: (req: ApiRequest) => ApiResponse,
): { transport: Transport; calls: ApiRequest[] } {
  const calls: ApiRequest[] = [];
  const transport: Transport = async (req) => {
    calls.push(req);
    return route(req);
  };
  return { transport, calls };
}

/** Every number in a payload, as the exact strings String() would produce. */
export function payloadNumberStrings(payload: unknown): Set<string> {
  const out = new Set<string>();
  const walk = (v: unknown): void => {
    if (typeof v === "number") {
      out.add(String(v));
    } else if (Array.isArray(v)) {
      v.forEach(walk);
    } else if (v && typeof v === "object") {
      Object.values(v).forEach(walk);
    }
  };
  walk(payload);
  return out;
}
