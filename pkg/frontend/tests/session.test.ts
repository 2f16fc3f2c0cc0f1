import { describe, expect, it } from "vitest";
import type { ApiResponse, Transport } from "../src/api";
import { ApiClient } from "../src/api";
import { mountPlanner } from "../src/main";
import { PlannerSession } from "../src/session";
import type { AllocateRequest, ForecastRequest } from "../src/types";
import { FORECAST, FRONTIER, stubTransport } from "./fixtures";

type Hooks = {
  resolveFrontier(body: AllocateRequest): Promise<void>;
  resolveForecast(h: number): Promise<void>;
};

describe("stale-response guard", () => {
  it("keeps the newest request's frontier when responses resolve out of order", async () => {
    const pending: Array<(res: ApiResponse) => void> = [];
    const transport: Transport = () => new Promise((resolve) => pending.push(resolve));
    const client = new ApiClient(transport);
    const root = document.createElement("div");
    const session = mountPlanner(document, root, client);
    session.modelId = "m1";
    const hooks = session as unknown as Hooks;

    const newer = { ...FRONTIER, points: FRONTIER.points.slice(0, 2) };
    const p1 = hooks.resolveFrontier({ budget: 1, risk_grid: 3 }); // seq 1
    const p2 = hooks.resolveFrontier({ budget: 2, risk_grid: 3 }); // seq 2

    pending[1]({ status: 200, body: newer }); // newest finishes first
    await p2;
    pending[0]({ status: 200, body: FRONTIER }); // stale response arrives late
    await p1;

    expect(session.frontier).toBe(newer); // the stale body was discarded
    const rows = root.querySelectorAll("li.point-row");
    expect(rows.length).toBe(2);
  });

  it("accept() is monotone per view and independent across views", () => {
    const session = new PlannerSession();
    expect(session.accept("frontier", 3)).toBe(true);
    expect(session.accept("frontier", 2)).toBe(false);
    expect(session.accept("frontier", 3)).toBe(false);
    expect(session.accept("forecast", 1)).toBe(true); // other view unaffected
    expect(session.accept("frontier", 4)).toBe(true);
  });
});

describe("session replay from the request log", () => {
  it("re-issuing the logged requests reproduces the identical DOM", async () => {
    const route = (req: { path: string }) =>
      req.path.endsWith("/forecast")
        ? { status: 200, body: FORECAST }
        : { status: 200, body: FRONTIER };

    // live session: user-driven sequence of calls
    const live = stubTransport(route);
    const liveClient = new ApiClient(live.transport);
    const liveRoot = document.createElement("div");
    const liveSession = mountPlanner(document, liveRoot, liveClient);
    liveSession.modelId = "m1";
    const liveHooks = liveSession as unknown as Hooks;
    await liveHooks.resolveFrontier({ budget: 2, risk_grid: 3 });
    await liveHooks.resolveForecast(3);

    // replay: drive a fresh mount purely from the recorded request log
    const replay = stubTransport(route);
    const replayClient = new ApiClient(replay.transport);
    const replayRoot = document.createElement("div");
    const replaySession = mountPlanner(document, replayRoot, replayClient);
    replaySession.modelId = "m1";
    const replayHooks = replaySession as unknown as Hooks;
    for (const req of liveClient.log) {
      if (req.path.endsWith("/forecast")) {
        await replayHooks.resolveForecast((req.body as ForecastRequest).h);
      } else {
        await replayHooks.resolveFrontier(req.body as AllocateRequest);
      }
    }

    expect(replayClient.log).toEqual(liveClient.log);
    expect(replayRoot.innerHTML).toBe(liveRoot.innerHTML);
    expect(replayRoot.innerHTML.length).toBeGreaterThan(100);
  });
});
