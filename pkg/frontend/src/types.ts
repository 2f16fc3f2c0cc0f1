/** Response shapes mirrored 1:1 from the HTTP service.
 *
 * The UI never recomputes any of these numbers; it renders them verbatim.
 */

export interface ApiErrorBody {
  code: string;
  message: string;
  detail: null;
}

export interface DatasetSummary {
  dataset_id: string;
  n_weeks: number;
  channels: string[];
  regressors: string[];
}

export interface ModelSummary {
  model_id: string;
  status: "queued" | "running" | "done" | "failed";
  error?: string;
  job: Record<string, unknown>;
  channel_names?: string[];
  regressor_names?: string[];
  n_kept_per_chain?: number;
  coefficients?: CoefficientRow[];
  inclusion_probabilities?: Record<string, { probability: number; sign: string }>;
}

export interface CoefficientRow {
  name: string;
  mean: number;
  sd: number;
  inclusion: number;
  significant: boolean;
}

export interface FrontierPoint {
  risk: number;
  u: number[];
  expected_sales: number;
  variance: number;
}

export interface MomentModelSummary {
  m_c: number;
  sigma_cc: number;
  m_q: number[];
  omega: number;
}

export interface StrategyRow {
  u: number[];
  expected_sales: number;
  variance: number;
  dominated: boolean;
}

interface AllocateBase {
  channel_names: string[];
  horizon: number;
  moment_model: MomentModelSummary;
  strategies?: StrategyRow[];
}

/** Frontier sweep response (risk_grid / grid requests). */
export interface AllocateSweepResponse extends AllocateBase {
  mode: "risk" | "penalty";
  points: FrontierPoint[];
}

/** Single sigma^2-capped solve. */
export interface AllocateSingleResponse extends AllocateBase {
  u: number[];
  expected_sales: number;
  variance: number;
}

export interface ForecastResponse {
  horizon: number;
  mean: number[];
  quantiles: Record<string, number[]>;
}

export interface AllocateRequest {
  budget: number | number[];
  horizon?: number;
  lo?: number | number[];
  hi?: number | number[];
  risk_cap?: number;
  risk_penalty?: number;
  risk_grid?: number;
  grid?: number[];
  mode?: "risk" | "penalty";
  equality?: boolean;
  x_future?: Record<string, number[]>;
  strategies?: number[][];
}

export interface ForecastRequest {
  h: number;
  seed?: number;
  thin?: number;
  u_future?: Record<string, number[]>;
  x_future?: Record<string, number[]>;
}
