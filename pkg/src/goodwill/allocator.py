"""Risk-constrained budget allocation over the posterior predictive.

The posterior draws are reduced to exact sample moments of the per-draw
linear map from next-period spend to sales:

    mean(u) = m_c + m_q'u
    var(u)  = sigma_cc + 2 sigma_cq'u + u' Sigma_qq u + omega

where omega collects draw-averaged process and observation noise.  The
optimizers are projected-gradient ascent with backtracking plus a
bisection on the variance-cap multiplier; instances are small (a few
channels, a few weeks) so no heavier machinery is warranted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .blocks import StudentTObs, compile_horizon
from .errors import InfeasibleError, NumericalError, ValidationError
from .mcmc import McmcDraws

MIN_DRAWS = 30
PG_TOL = 1e-9
KKT_TOL = 1e-6


@dataclass
class MomentModel:
    horizon: int
    n_channels: int
    channel_names: list[str]
    m_c: float
    sigma_cc: float
    m_q: np.ndarray          # (d,), d = horizon * n_channels
    Sigma_qq: np.ndarray     # (d, d)
    sigma_cq: np.ndarray     # (d,)
    omega: float

    @property
    def d(self) -> int:
        return len(self.m_q)

    def mean(self, u) -> float:
        u = np.asarray(u, float)
        return float(self.m_c + self.m_q @ u)

    def variance(self, u) -> float:
        u = np.asarray(u, float)
        return float(self.sigma_cc + 2.0 * self.sigma_cq @ u + u @ self.Sigma_qq @ u + self.omega)


@dataclass
class AllocationProblem:
    budget: float | np.ndarray          # total, or per-week array for horizon > 1
    lo: np.ndarray
    hi: np.ndarray
    risk_cap: float | None = None       # sigma^2 bound
    risk_penalty: float | None = None   # lambda
    horizon: int = 1
    equality: bool = False

    def __post_init__(self):
        self.lo = np.atleast_1d(np.asarray(self.lo, float))
        self.hi = np.atleast_1d(np.asarray(self.hi, float))
        if np.any(self.lo < 0):
            raise ValidationError("lower bounds must be nonnegative")
        if np.any(self.lo > self.hi):
            raise ValidationError("lower bounds exceed upper bounds")
        b = np.atleast_1d(np.asarray(self.budget, float))
        if np.any(b < 0):
            raise ValidationError("budget must be nonnegative")
        d = len(self.lo)
        if len(b) == 1:
            if self.lo.sum() > b[0] + 1e-12:
                raise ValidationError("sum of lower bounds exceeds the budget")
        else:
            if len(b) * (d // len(b)) != d:
                raise ValidationError("per-week budget length incompatible with bounds")
            per = self.lo.reshape(len(b), -1).sum(axis=1)
            if np.any(per > b + 1e-12):
                raise ValidationError("weekly lower bounds exceed a weekly budget")
        if self.risk_penalty is not None and self.risk_penalty < 0:
            raise ValidationError("risk penalty must be >= 0")
        if self.risk_cap is not None and self.risk_cap <= 0:
            raise ValidationError("risk cap must be positive")


@dataclass
class FrontierPoint:
    risk: float              # grid value (sigma^2 or lambda)
    u: np.ndarray
    expected_sales: float
    variance: float

    def to_dict(self) -> dict:
        return {"risk": self.risk, "u": self.u.tolist(),
                "expected_sales": self.expected_sales, "variance": self.variance}


@dataclass
class ParetoFrontier:
    mode: str                # "risk" or "penalty"
    points: list[FrontierPoint]

    def to_json(self) -> str:
        return json.dumps({"mode": self.mode,
                           "points": [p.to_dict() for p in self.points]}, indent=2)


# ---------------------------------------------------------------- moments

def _seasonal_rotate(s: np.ndarray, steps: int) -> np.ndarray:
    s = s.copy()
    for _ in range(steps):
        s = np.concatenate([[-s.sum()], s[:-1]])
    return s


def reduce_moments(draws: McmcDraws, x_future: dict | None = None, horizon: int = 1,
                   scaling=None) -> MomentModel:
    """Exact sample moments of the per-draw affine prediction in the spend
    decisions for weeks t+1..t+horizon.

    Spend decided for week t+j feeds the goodwill of that week, so the
    coefficient of u_{j,c} on sales at week t+l is (1-delta)^(l-j) q_c.
    With `scaling`, spends are in original units and outputs are on the
    original sales scale.
    """
    n = draws.n
    if n < MIN_DRAWS:
        raise ValidationError(f"need at least {MIN_DRAWS} draws for stable moments, got {n}")
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    k = len(draws.channel_names)
    p = len(draws.regressor_names)
    layout = draws.layout
    X = np.zeros((horizon, p))
    if p:
        if x_future is None:
            raise ValidationError(f"future regressor rows required for {draws.regressor_names}")
        for j, name in enumerate(draws.regressor_names):
            if name not in x_future:
                raise ValidationError(f"future regressor series {name!r} missing")
            col = np.asarray(x_future[name], float)
            if len(col) < horizon:
                raise ValidationError(f"future regressor {name!r} covers {len(col)} steps, need {horizon}")
            X[:, j] = col[:horizon]
            if scaling is not None:
                X[:, j] = scaling.apply(f"x_{name}", X[:, j])

    student = isinstance(draws.spec.observation, StudentTObs)
    nuv = draws.spec.observation.nu if student else None

    d = horizon * k
    C = np.zeros(n)
    a = np.zeros((n, d))
    omega_i = np.zeros(n)
    term = draws.terminal_state
    A_idx = layout["goodwill"].start

    for i in range(n):
        delta = draws.delta[i]
        q = draws.q[i] * draws.gamma_channels[i] if k else np.zeros(0)
        decay = (1.0 - delta) ** np.arange(horizon + 1)
        A_T = term[i, A_idx]
        const = 0.0
        for l in range(1, horizon + 1):
            c_l = decay[l] * A_T
            if "trend" in layout:
                lvl = term[i, layout["trend"].start]
                if layout["trend"].stop - layout["trend"].start == 2:
                    lvl = lvl + l * term[i, layout["trend"].start + 1]
                c_l += lvl
            if "seasonal" in layout:
                s = _seasonal_rotate(term[i, layout["seasonal"]], l)
                c_l += s[0]
            if p:
                c_l += X[l - 1] @ draws.beta[i]
            const += c_l
            for j in range(1, l + 1):
                a[i, (j - 1) * k:(j - 1) * k + k] += decay[l - j] * q
        C[i] = const

        # accumulated process + observation noise variance of the total
        params = draws.params_at(i)
        if student:
            v_eff = params.obs_var * (nuv / (nuv - 2.0)) if nuv > 2 else 3.0 * params.obs_var
            params.obs_var = v_eff
        sys = compile_horizon(draws.spec, _LayoutSource(draws), params,
                              np.zeros((horizon, k)), None, None, include_regression=False)
        m = sys.m
        P = np.zeros((m, m))
        cv = np.zeros(m)
        s_tot = 0.0
        HWH = sys.state_noise_cov()
        for t in range(horizon):
            Gc = sys.G[t] @ cv
            P = sys.G[t] @ P @ sys.G[t].T + HWH[t]
            f = sys.F[t]
            var_y = f @ P @ f + sys.V[t]
            s_tot += var_y + 2.0 * (f @ Gc)
            cv = Gc + P @ f
        omega_i[i] = s_tot

    if scaling is not None:
        sy = scaling.scale["sales"]
        ly = scaling.location["sales"]
        su = np.array([scaling.scale[f"u_{c}"] for c in draws.channel_names])
        lu = np.array([scaling.location[f"u_{c}"] for c in draws.channel_names])
        su_full = np.tile(su, horizon)
        lu_full = np.tile(lu, horizon)
        C = horizon * ly + sy * (C - a @ (lu_full / su_full))
        a = sy * a / su_full
        omega_i = omega_i * sy ** 2

    Sigma = np.cov(a, rowvar=False, ddof=1).reshape(d, d) if d else np.zeros((0, 0))
    sigma_cq = np.array([np.cov(C, a[:, j], ddof=1)[0, 1] for j in range(d)])
    return MomentModel(
        horizon=horizon, n_channels=k, channel_names=list(draws.channel_names),
        m_c=float(C.mean()), sigma_cc=float(C.var(ddof=1)),
        m_q=a.mean(axis=0), Sigma_qq=Sigma, sigma_cq=sigma_cq,
        omega=float(omega_i.mean()))


class _LayoutSource:
    """Adapter exposing just enough of a Dataset for state_layout lookups."""

    def __init__(self, draws: McmcDraws):
        self.channel_names = list(draws.channel_names)
        self.regressor_names = list(draws.regressor_names)
        self.channels = {c: None for c in draws.channel_names}
        self.regressors = {r: None for r in draws.regressor_names}
        self.n_weeks = 0


def multi_step_moments(draws: McmcDraws, x_future: dict | None, k: int,
                       scaling=None) -> MomentModel:
    """Moments of total sales over t+1..t+k as a function of stacked spends."""
    if k < 2:
        raise ValidationError("multi-step horizon must be >= 2")
    return reduce_moments(draws, x_future, horizon=k, scaling=scaling)


# ---------------------------------------------------------------- solvers

def _project(u: np.ndarray, prob: AllocationProblem) -> np.ndarray:
    """Euclidean projection onto {lo <= u <= hi, budget constraint}."""
    b = np.atleast_1d(np.asarray(prob.budget, float))
    d = len(prob.lo)
    if len(b) == 1:
        return _project_halfspace(u, prob.lo, prob.hi, float(b[0]), prob.equality)
    out = np.empty_like(u)
    per = d // len(b)
    for w in range(len(b)):
        sl = slice(w * per, (w + 1) * per)
        out[sl] = _project_halfspace(u[sl], prob.lo[sl], prob.hi[sl], float(b[w]), prob.equality)
    return out


def _project_halfspace(u, lo, hi, b, equality):
    v = np.clip(u, lo, hi)
    if not equality and v.sum() <= b + 1e-15:
        return v
    # f(nu) = sum(clip(u - nu, lo, hi)) is piecewise linear and nonincreasing;
    # solve f(nu) = b exactly on the breakpoint grid
    if b >= hi.sum():
        return hi.copy()
    if b <= lo.sum():
        return lo.copy()
    bps = np.unique(np.concatenate([u - hi, u - lo]))
    vals = np.clip(u[None, :] - bps[:, None], lo, hi).sum(axis=1)
    j = int(np.searchsorted(-vals, -b, side="left"))
    j = min(max(j, 1), len(bps) - 1)
    f0, f1 = vals[j - 1], vals[j]
    if f0 == f1:
        nu = bps[j - 1]
    else:
        nu = bps[j - 1] + (b - f0) * (bps[j] - bps[j - 1]) / (f1 - f0)
    return np.clip(u - nu, lo, hi)


def _pgd_maximize(grad, value, u0, prob, iters=4000, step0=None):
    """Projected-gradient ascent with backtracking; objective concave."""
    u = _project(np.asarray(u0, float), prob)
    step = step0 if step0 is not None else 1.0
    for _ in range(iters):
        g = grad(u)
        t = step
        f0 = value(u)
        for _ in range(60):
            un = _project(u + t * g, prob)
            if value(un) >= f0 - 1e-18 or np.allclose(un, u):
                break
            t *= 0.5
        if np.max(np.abs(un - u)) < 1e-14:
            u = un
            break
        u = un
    return u


def _pg_residual(grad, u, prob) -> float:
    """Scaled projected-gradient stationarity measure.

    Normalizing by the gradient magnitude keeps the certificate meaningful
    when the multiplier (and hence the gradient) is very large."""
    g = grad(u)
    res = float(np.max(np.abs(_project(u + 1e-3 * g, prob) - u))) / 1e-3
    return res / max(1.0, float(np.max(np.abs(g))))


def _slsqp_polish(value, grad, u0, prob):
    """Sharpen a near-optimal point; PGD crawls when curvature is tiny."""
    from scipy import optimize

    b = np.atleast_1d(np.asarray(prob.budget, float))
    d = len(prob.lo)
    per = d // len(b)
    kind = "eq" if prob.equality else "ineq"
    cons = [{"type": kind,
             "fun": (lambda u, w=w: float(b[w] - u[w * per:(w + 1) * per].sum())),
             "jac": (lambda u, w=w: -np.eye(d)[w * per:(w + 1) * per].sum(axis=0))}
            for w in range(len(b))]
    res = optimize.minimize(lambda u: -value(u), u0, jac=lambda u: -grad(u),
                            method="SLSQP", bounds=list(zip(prob.lo, prob.hi)),
                            constraints=cons, options={"maxiter": 500, "ftol": 1e-16})
    u = _project(res.x, prob)
    return u if value(u) >= value(u0) else u0


def solve_penalized(mm: MomentModel, prob: AllocationProblem) -> np.ndarray:
    """Maximize m_q'u - lambda * sqrt(var(u)) over the budget polytope."""
    lam = prob.risk_penalty if prob.risk_penalty is not None else 0.0

    def value(u):
        return mm.mean(u) - lam * np.sqrt(max(mm.variance(u), 0.0))

    def grad(u):
        if lam == 0.0:
            return mm.m_q
        v = max(mm.variance(u), 1e-18)
        return mm.m_q - lam * (mm.sigma_cq + mm.Sigma_qq @ u) / np.sqrt(v)

    scale = 1.0 / max(np.max(np.abs(mm.m_q)), np.linalg.norm(mm.Sigma_qq, 2), 1e-12)
    u = _pgd_maximize(grad, value, prob.lo, prob, step0=scale)
    res = _pg_residual(grad, u, prob)
    if res > KKT_TOL:
        u = _slsqp_polish(value, grad, u, prob)
        res = _pg_residual(grad, u, prob)
        if res > KKT_TOL:
            raise NumericalError(f"penalized solver stalled: projected-gradient residual {res:.2e}")
    return u


def _solve_quad(mm: MomentModel, prob: AllocationProblem, mu: float) -> np.ndarray:
    """argmax m_q'u - mu * var(u) over the polytope (concave quadratic)."""
    def value(u):
        return mm.mean(u) - mu * mm.variance(u)

    def grad(u):
        return mm.m_q - mu * 2.0 * (mm.sigma_cq + mm.Sigma_qq @ u)

    L = max(2.0 * mu * np.linalg.norm(mm.Sigma_qq, 2), np.max(np.abs(mm.m_q)), 1e-12)
    u = _pgd_maximize(grad, value, prob.lo, prob, iters=40, step0=1.0 / L)
    return _slsqp_polish(value, grad, u, prob)


def min_variance_point(mm: MomentModel, prob: AllocationProblem) -> np.ndarray:
    def value(u):
        return -mm.variance(u)

    def grad(u):
        return -2.0 * (mm.sigma_cq + mm.Sigma_qq @ u)

    L = max(2.0 * np.linalg.norm(mm.Sigma_qq, 2), 1e-12)
    u = _pgd_maximize(grad, value, prob.lo, prob, iters=300, step0=1.0 / L)
    return _slsqp_polish(value, grad, u, prob)


def solve_risk_constrained(mm: MomentModel, prob: AllocationProblem) -> np.ndarray:
    """Maximize expected sales subject to budget, bounds and var(u) <= cap."""
    if prob.risk_cap is None:
        raise ValidationError("risk_cap required")
    cap = prob.risk_cap
    u_free = _solve_quad(mm, prob, 0.0)
    if mm.variance(u_free) <= cap + 1e-12:
        return u_free
    u_min = min_variance_point(mm, prob)
    v_min = mm.variance(u_min)
    if v_min > cap * (1 + 1e-9) + 1e-12:
        raise InfeasibleError(
            f"variance cap {cap:.6g} below minimum attainable variance "
            f"{v_min:.6g}", binding="risk")
    if cap <= v_min * (1 + 1e-9) + 1e-12:
        return u_min  # cap sits on the feasibility boundary
    # bisect the variance multiplier; var(u(mu)) decreases in mu
    mu_lo, mu_hi = 0.0, 1.0
    for _ in range(120):
        if mm.variance(_solve_quad(mm, prob, mu_hi)) <= cap:
            break
        mu_hi *= 4.0
    else:
        raise NumericalError("variance-cap multiplier search failed to bracket")
    for _ in range(60):
        mu = 0.5 * (mu_lo + mu_hi)
        if mm.variance(_solve_quad(mm, prob, mu)) > cap:
            mu_lo = mu
        else:
            mu_hi = mu
    u = _solve_quad(mm, prob, mu_hi)

    def lagrangian_value(v):
        return mm.mean(v) - mu_hi * mm.variance(v)

    def lagrangian_grad(v):
        return mm.m_q - mu_hi * 2.0 * (mm.sigma_cq + mm.Sigma_qq @ v)

    res = _pg_residual(lagrangian_grad, u, prob)
    if res > KKT_TOL:
        u = _slsqp_polish(lagrangian_value, lagrangian_grad, u, prob)
        res = _pg_residual(lagrangian_grad, u, prob)
        if res > KKT_TOL:
            raise NumericalError(f"capped solver stalled: projected-gradient residual {res:.2e}")
    return u


def filter_dominated(strategies: list[tuple]) -> list[tuple]:
    """Keep the (mean up, variance down) non-dominated subset, stable order.

    Each strategy is (u, expected_sales, variance); ties survive unless
    strictly beaten on one axis and matched on the other.
    """
    if not strategies:
        raise ValidationError("need at least one strategy")
    n = len(strategies)
    means = np.array([s[1] for s in strategies], float)
    varis = np.array([s[2] for s in strategies], float)
    order = np.lexsort((-means, varis))  # variance ascending, mean descending
    dominated = np.zeros(n, bool)
    best_mean_lower = -np.inf   # best mean among strictly lower variance
    i = 0
    while i < n:
        j = i
        v = varis[order[i]]
        group_best = -np.inf
        while j < n and varis[order[j]] == v:
            idx = order[j]
            if means[idx] < best_mean_lower:
                dominated[idx] = True          # strictly lower var, >= mean
            elif means[idx] == best_mean_lower:
                dominated[idx] = True          # lower var, equal mean
            elif means[idx] < group_best:
                dominated[idx] = True          # equal var, strictly higher mean exists
            group_best = max(group_best, means[idx])
            j += 1
        best_mean_lower = max(best_mean_lower, group_best)
        i = j
    return [s for s, d in zip(strategies, dominated) if not d]


def pareto_sweep(mm: MomentModel, base: AllocationProblem, grid,
                 mode: str = "risk") -> ParetoFrontier:
    """Solve along a sorted sigma^2 (or lambda) grid and prune dominated points."""
    grid = list(grid)
    if not grid:
        raise ValidationError("empty grid")
    if sorted(grid) != grid:
        raise ValidationError("grid must be sorted ascending")
    points = []
    for g in grid:
        try:
            if mode == "risk":
                prob = _with(base, risk_cap=float(g), risk_penalty=None)
                u = solve_risk_constrained(mm, prob)
            elif mode == "penalty":
                prob = _with(base, risk_penalty=float(g), risk_cap=None)
                u = solve_penalized(mm, prob)
            else:
                raise ValidationError(f"unknown sweep mode {mode!r}")
        except InfeasibleError:
            continue
        points.append(FrontierPoint(float(g), u, mm.mean(u), mm.variance(u)))
    if not points:
        raise InfeasibleError("every grid point is infeasible: empty frontier", binding="risk")
    kept = filter_dominated([(p.u, p.expected_sales, p.variance) for p in points])
    kept_ids = {id(t[0]) for t in kept}
    points = [p for p in points if id(p.u) in kept_ids]
    points.sort(key=lambda p: p.variance)
    return ParetoFrontier(mode, points)


def default_risk_grid(mm: MomentModel, prob: AllocationProblem, n: int = 20) -> np.ndarray:
    """Log-spaced sigma^2 grid between the min-variance point and the
    unconstrained expected-sales maximizer."""
    v_lo = mm.variance(min_variance_point(mm, prob))
    v_hi = mm.variance(_solve_quad(mm, prob, 0.0))
    if v_hi <= v_lo * (1 + 1e-12):
        return np.array([v_hi])
    return np.geomspace(max(v_lo, 1e-12), v_hi, n)


def evaluate_strategies(mm: MomentModel, us: list) -> list[tuple]:
    return [(np.asarray(u, float), mm.mean(u), mm.variance(u)) for u in us]


def _with(prob: AllocationProblem, **kw) -> AllocationProblem:
    d = dict(budget=prob.budget, lo=prob.lo, hi=prob.hi, risk_cap=prob.risk_cap,
             risk_penalty=prob.risk_penalty, horizon=prob.horizon, equality=prob.equality)
    d.update(kw)
    return AllocationProblem(**d)
