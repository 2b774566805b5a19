"""Sampled verification of the structural hypotheses of an operator.

Every check evaluates its inequality on a deterministic, seeded sample
cloud plus a structured batch (xi = 0, axis vectors, and vectors of the
large asymptotic radius -- the inequalities are tightest at zero and at
infinity).  Reductions are order-independent, so reports are bit-identical
for any worker-thread count.

Margin convention: margin = (right-hand side) - (left-hand side) of the
bound, minimized over samples; an entry fails iff the worst margin drops
below -tolerance.  Checks that *fit* a constant (the paper only asserts
existence of constants, never values) report the fitted value and encode
a stability criterion into the margin, as documented per check.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidExponents
from .operators import OperatorSpec, RegularizedOperator, regularize
from .report import AssumptionReport, CheckEntry, nonstrict_entry

#: Fixed evaluation chunk -- independent of thread count, so reductions
#: are reproducible for any parallelism.
CHUNK = 4096

#: |u|^(beta-1) with beta < 1 blows up at u = 0; the growth-u check keeps
#: that addendum only where |u| >= U_FLOOR (dropping a nonnegative term
#: only tightens the bound).
U_FLOOR = 1e-6


@dataclass(frozen=True)
class SampleConfig:
    """Deterministic sampling plan for the structure checks."""

    seed: int = 0
    count: int = 1000
    xi_radius: float = 10.0
    u_radius: float = 10.0
    large_xi_radius: float = 1e3
    tolerance: float = 1e-10
    threads: int = 1

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if min(self.xi_radius, self.u_radius, self.large_xi_radius) <= 0:
            raise ValueError("radii must be positive")


@dataclass
class Samples:
    x: np.ndarray      # (N, dim)
    u: np.ndarray      # (N,)
    xi: np.ndarray     # (N, dim)
    eta: np.ndarray | None = None
    lam: np.ndarray | None = None

    def __len__(self):
        return self.u.shape[0]


def _unit_vectors(rng, n, dim):
    v = rng.standard_normal((n, dim))
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    norms[norms < 1e-12] = 1.0
    return v / norms


def _structured_block(dim, xi_radius, large_radius):
    """Deterministic (xi, eta, lam) rows; xi = 0 comes first so argmin
    ties resolve to the origin witness."""
    xis, etas, lams = [], [], []
    axes = np.eye(dim)
    for s in range(dim):
        xis.append(np.zeros(dim))
        etas.append(xi_radius * axes[s])
        lams.append(axes[s])
    for radius in (xi_radius, large_radius):
        for s in range(dim):
            for lam in (axes[s], axes[(s + 1) % dim]):
                xis.append(radius * axes[s])
                etas.append(-radius * axes[s])
                lams.append(lam)
    diag = np.ones(dim) / np.sqrt(dim)
    xis.append(large_radius * diag)
    etas.append(np.zeros(dim))
    lams.append(axes[0])
    return np.asarray(xis), np.asarray(etas), np.asarray(lams)


def draw_samples(op: OperatorSpec, cfg: SampleConfig, *, box=None,
                 u_cap: float | None = None, xi_radius: float | None = None,
                 structured: bool = True, xi_low_frac: float = 0.0) -> Samples:
    """Seeded sample cloud over the operator's domain.

    x is uniform in the box (or a given sub-box); u uniform in
    [-u_cap, u_cap]; xi, eta and lambda are random directions with
    |N(0,1)|-scaled magnitudes.  ``xi_low_frac > 0`` lifts magnitudes away
    from zero (used by the derivative-consistency check, where degenerate
    built-ins are not twice differentiable at xi = 0).
    """
    dim = op.dim
    box = box or op.domain
    radius = cfg.xi_radius if xi_radius is None else xi_radius
    u_cap = cfg.u_radius if u_cap is None else u_cap
    rng = np.random.default_rng(cfg.seed)

    n = cfg.count
    lo = np.asarray(box.lo)
    wid = np.asarray(box.hi) - lo
    x = lo + rng.random((n, dim)) * wid
    u = rng.uniform(-u_cap, u_cap, size=n)
    mag = np.abs(rng.standard_normal(n)) * radius
    if xi_low_frac > 0.0:
        mag = xi_low_frac * radius + rng.random(n) * (1.0 - xi_low_frac) * radius
    xi = _unit_vectors(rng, n, dim) * mag[:, None]
    mag_eta = np.abs(rng.standard_normal(n)) * radius
    eta = _unit_vectors(rng, n, dim) * mag_eta[:, None]
    lam = _unit_vectors(rng, n, dim)

    if structured:
        xs, es, ls = _structured_block(dim, radius, cfg.large_xi_radius)
        k = xs.shape[0]
        x = np.vstack([np.broadcast_to(box.center, (k, dim)), x])
        u = np.concatenate([np.zeros(k), u])
        xi = np.vstack([xs, xi])
        eta = np.vstack([es, eta])
        lam = np.vstack([ls, lam])
    return Samples(x=x, u=u, xi=xi, eta=eta, lam=lam)


# ---------------------------------------------------------------------------
# chunked, thread-count-independent reduction

def _chunked_margins(margin_fn, samples: Samples, threads: int):
    """Evaluate margins chunk by chunk; returns the full margin vector.

    Chunk boundaries are fixed by CHUNK, not by the worker count, so the
    result is identical for any ``threads``.
    """
    n = len(samples)
    spans = [(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)]

    def run(span):
        i0, i1 = span
        sub = Samples(
            x=samples.x[i0:i1], u=samples.u[i0:i1], xi=samples.xi[i0:i1],
            eta=None if samples.eta is None else samples.eta[i0:i1],
            lam=None if samples.lam is None else samples.lam[i0:i1])
        return np.asarray(margin_fn(sub), float)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, spans))
    else:
        parts = [run(s) for s in spans]
    return np.concatenate(parts)


def _worst(margins):
    idx = int(np.argmin(margins))
    return float(margins[idx]), idx


def _witness(samples: Samples, idx: int, *, eta=False, lam=False, extra=None):
    w = {"x": samples.x[idx].tolist(), "u": float(samples.u[idx]),
         "xi": samples.xi[idx].tolist()}
    if eta and samples.eta is not None:
        w["eta"] = samples.eta[idx].tolist()
    if lam and samples.lam is not None:
        w["lambda"] = samples.lam[idx].tolist()
    if extra:
        w.update(extra)
    return w


# ---------------------------------------------------------------------------
# margin kernels (vectorized; also used to re-evaluate witnesses)

def ellipticity_margin(op, x, u, xi, lam):
    J = op.dflux_dxi(np.asarray(x, float), np.asarray(u, float),
                     np.asarray(xi, float))
    lam = np.asarray(lam, float)
    t = np.sum(np.asarray(xi, float) ** 2, axis=-1)
    quad = np.einsum("...i,...ij,...j->...", lam, J, lam)
    return quad - op.m * (1.0 + t) ** ((op.p - 2.0) / 2.0)


def growth_xi_margin(op, x, u, xi):
    J = op.dflux_dxi(np.asarray(x, float), np.asarray(u, float),
                     np.asarray(xi, float))
    t = np.sum(np.asarray(xi, float) ** 2, axis=-1)
    u = np.asarray(u, float)
    bound = op.M * (1.0 + t) ** ((op.q - 2.0) / 2.0)
    if op.growth_alpha > 0.0:
        bound = bound + op.M * np.abs(u) ** op.growth_alpha
    worst_entry = np.max(np.abs(J), axis=(-2, -1))
    return bound - worst_entry


def growth_u_margin(op, x, u, xi, u_floor=U_FLOOR):
    """Margin of the u-derivative growth bound.

    For beta < 1 both sides may blow up as u -> 0; the bound is a growth
    condition meaningful away from u = 0, so the check restricts itself to
    |u| >= u_floor (this kernel clips |u| at the floor; the check never
    selects samples below it).
    """
    au = op.dflux_du(np.asarray(x, float), np.asarray(u, float),
                     np.asarray(xi, float))
    t = np.sum(np.asarray(xi, float) ** 2, axis=-1)
    u_abs = np.abs(np.asarray(u, float))
    if op.beta < 1.0:
        u_abs = np.maximum(u_abs, u_floor)
    bound = (op.M * (1.0 + t) ** ((op.p + op.q - 4.0) / 4.0)
             + op.M * u_abs ** (op.beta - 1.0))
    return bound - np.max(np.abs(au), axis=-1)


def local_condition_ratios(op, x, u, xi):
    """(antisymmetry ratio, x-derivative ratio): lhs over its weight."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    xi = np.asarray(xi, float)
    J = op.dflux_dxi(x, u, xi)
    t = np.sum(xi * xi, axis=-1)
    d1 = (1.0 + t) ** ((op.p + op.q - 4.0) / 4.0)
    d2 = (1.0 + t) ** ((op.p + op.q - 2.0) / 4.0)
    antis = np.max(np.abs(J - np.swapaxes(J, -1, -2)), axis=(-2, -1))
    ax = np.stack([np.abs(op.dflux_dx(x, u, xi, s)).max(axis=-1)
                   for s in range(op.dim)], axis=-1).max(axis=-1)
    return antis / d1, ax / d2


def monotonicity_margin(op, x, u, xi, eta):
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    diff = xi - eta
    lhs = np.sum((op.flux(x, u, xi) - op.flux(x, u, eta)) * diff, axis=-1)
    mid = 0.5 * (xi + eta)
    rhs = (op.m * (1.0 + np.sum(mid * mid, axis=-1)) ** ((op.p - 2.0) / 2.0)
           * np.sum(diff * diff, axis=-1))
    return lhs - rhs


def coercivity_margin(op, x, u, xi, c1, c2, theta):
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    xi = np.asarray(xi, float)
    dot = np.sum(op.flux(x, u, xi) * xi, axis=-1)
    norm = np.sqrt(np.sum(xi * xi, axis=-1))
    return dot - c1 * norm ** op.p + c2 * np.abs(u) ** theta + b1_values(op, x)


def b1_values(op, x):
    """b1(x) = 1 + |a(x, 0, 0)|^(p/(p-1))."""
    x = np.asarray(x, float)
    zeros_xi = np.zeros(x.shape[:-1] + (op.dim,))
    zeros_u = np.zeros(x.shape[:-1])
    a0 = op.flux(x, zeros_u, zeros_xi)
    return 1.0 + np.linalg.norm(a0, axis=-1) ** (op.p / (op.p - 1.0))


def lemma_lower_ratio(op, x, u, xi):
    """-(a, xi) over the lemma's bracket |xi|^q + |u|^q + |a0|^(q') + 1."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    xi = np.asarray(xi, float)
    dot = np.sum(op.flux(x, u, xi) * xi, axis=-1)
    zeros_xi = np.zeros(x.shape[:-1] + (op.dim,))
    zeros_u = np.zeros(x.shape[:-1])
    a0 = np.linalg.norm(op.flux(x, zeros_u, zeros_xi), axis=-1)
    norm = np.sqrt(np.sum(xi * xi, axis=-1))
    denom = (norm ** op.q + np.abs(u) ** op.q
             + a0 ** (op.q / (op.q - 1.0)) + 1.0)
    return -dot / denom


def regularized_growth_ratio(rop: RegularizedOperator, x, u, xi):
    """|a_eps| over M-bracket |xi|^(q+eps-1) + |u|^(q+eps-1) + b1(x)."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    xi = np.asarray(xi, float)
    qe = rop.base.q + rop.eps
    mag = np.linalg.norm(rop.flux(x, u, xi), axis=-1)
    norm = np.sqrt(np.sum(xi * xi, axis=-1))
    denom = norm ** (qe - 1.0) + np.abs(u) ** (qe - 1.0) + b1_values(rop.base, x)
    return mag / denom


def theta_exponent(p: float, q: float, beta: float) -> float:
    """theta = max{2p/(p-q+2), beta p/(p-1)} -- as printed; the remark
    q/p < 1+2/n <=> 2p/(p-q+2) < p* confirms the denominator."""
    return max(2.0 * p / (p - q + 2.0), beta * p / (p - 1.0))


# ---------------------------------------------------------------------------
# coercivity constants

@dataclass
class CoercivityConstants:
    c1: float
    c2: float
    theta: float
    b1_form: object  # callable x -> b1(x)


# ---------------------------------------------------------------------------
# the checks

def check_ellipticity(op: OperatorSpec, cfg: SampleConfig) -> CheckEntry:
    """lambda^T (da/dxi) lambda >= m (1+|xi|^2)^((p-2)/2) |lambda|^2."""
    S = draw_samples(op, cfg)
    margins = _chunked_margins(
        lambda s: ellipticity_margin(op, s.x, s.u, s.xi, s.lam),
        S, cfg.threads)
    worst, idx = _worst(margins)
    return nonstrict_entry("ellipticity", worst, cfg.tolerance,
                           _witness(S, idx, lam=True))


def check_growth_xi(op: OperatorSpec, cfg: SampleConfig) -> CheckEntry:
    """|da^i/dxi_j| <= M (1+|xi|^2)^((q-2)/2) [+ M |u|^alpha if alpha > 0]."""
    S = draw_samples(op, cfg)
    margins = _chunked_margins(
        lambda s: growth_xi_margin(op, s.x, s.u, s.xi), S, cfg.threads)
    worst, idx = _worst(margins)
    return nonstrict_entry("growth-xi", worst, cfg.tolerance, _witness(S, idx))


def check_growth_u(op: OperatorSpec, cfg: SampleConfig) -> CheckEntry:
    """|da^i/du| <= M (1+|xi|^2)^((p+q-4)/4) + M |u|^(beta-1).

    For beta < 1 the inequality is evaluated only at |u| >= U_FLOOR, where
    it is meaningful as a growth condition; behavior below the floor is an
    open-question outcome, not a failure.
    """
    S = draw_samples(op, cfg)
    notes = ""
    if op.beta < 1.0:
        keep = np.abs(S.u) >= U_FLOOR
        S = Samples(x=S.x[keep], u=S.u[keep], xi=S.xi[keep])
        notes = f"beta<1: restricted to |u| >= {U_FLOOR:g}"
    margins = _chunked_margins(
        lambda s: growth_u_margin(op, s.x, s.u, s.xi), S, cfg.threads)
    worst, idx = _worst(margins)
    return nonstrict_entry("growth-u", worst, cfg.tolerance, _witness(S, idx),
                           notes=notes)


def check_local_conditions(op: OperatorSpec, L: float, subdomain,
                           cfg: SampleConfig,
                           declared_ML: float | None = None) -> CheckEntry:
    """Antisymmetry and x-derivative bounds on a compact subdomain.

    Fits the smallest M(L) covering both inequalities over the samples;
    when a declared M(L) is provided the margin is measured against it,
    otherwise the fitted constant is reported and the entry passes.
    """
    subdomain = subdomain or op.domain.shrink(0.25)
    S = draw_samples(op, cfg, box=subdomain, u_cap=L)

    def ratios(s):
        r1, r2 = local_condition_ratios(op, s.x, s.u, s.xi)
        return np.maximum(r1, r2)

    fit = _chunked_margins(ratios, S, cfg.threads)
    idx = int(np.argmax(fit))
    fitted = float(fit[idx])
    if declared_ML is None:
        worst = 0.0
        notes = "no declared M(L); fitted constant reported"
    else:
        # margin in the bound's units: min over samples of (declared - ratio)
        # times the weight is equivalent in sign to declared - max ratio.
        worst = float(declared_ML - fitted)
        notes = "margin against declared M(L)"
    return nonstrict_entry(
        "local-conditions", worst, cfg.tolerance,
        _witness(S, idx), fitted={"M_L": fitted, "L": float(L)}, notes=notes)


def check_monotonicity(op: OperatorSpec, cfg: SampleConfig) -> CheckEntry:
    """(a(x,u,xi)-a(x,u,eta), xi-eta) >= m (1+|mid|^2)^((p-2)/2) |xi-eta|^2."""
    S = draw_samples(op, cfg)
    keep = np.any(S.xi != S.eta, axis=-1)
    S = Samples(x=S.x[keep], u=S.u[keep], xi=S.xi[keep], eta=S.eta[keep])
    margins = _chunked_margins(
        lambda s: monotonicity_margin(op, s.x, s.u, s.xi, s.eta),
        S, cfg.threads)
    worst, idx = _worst(margins)
    return nonstrict_entry("monotonicity", worst, cfg.tolerance,
                           _witness(S, idx, eta=True))


def _coercivity_feasible(op, S, c1, theta, tol):
    """Feasibility of (a,xi) >= c1|xi|^p - c2|u|^theta - b1 on the samples.

    Returns (feasible, needed c2): samples with |u| below the floor must
    satisfy the bound with c2 = 0 outright.
    """
    dot = np.sum(op.flux(S.x, S.u, S.xi) * S.xi, axis=-1)
    norm = np.sqrt(np.sum(S.xi * S.xi, axis=-1))
    residual = c1 * norm ** op.p - dot - b1_values(op, S.x)
    small_u = np.abs(S.u) < U_FLOOR
    if np.any(residual[small_u] > tol):
        return False, np.inf
    pos = residual > tol
    big = pos & ~small_u
    if not np.any(big):
        return True, 0.0
    c2 = np.max(residual[big] / np.abs(S.u[big]) ** theta)
    return bool(np.isfinite(c2)), float(c2)


def check_coercivity_lower(op: OperatorSpec, cfg: SampleConfig,
                           c1_floor: float = 1e-6):
    """Fit constants for (a,xi) >= c1 |xi|^p - c2 |u|^theta - b1(x).

    c1 is found by bisection on (0, m] (40 iterations) with c2 fitted as the
    worst residual ratio; a dedicated large-|xi| batch is appended.  Returns
    (CoercivityConstants, CheckEntry); the entry fails if no c1 >= c1_floor
    admits finite constants.
    """
    theta = theta_exponent(op.p, op.q, op.beta)
    S = draw_samples(op, cfg)
    big_cfg = replace(cfg, seed=cfg.seed + 1, count=max(cfg.count // 4, 16))
    B = draw_samples(op, big_cfg, xi_radius=cfg.large_xi_radius,
                     structured=False)
    S = Samples(x=np.vstack([S.x, B.x]), u=np.concatenate([S.u, B.u]),
                xi=np.vstack([S.xi, B.xi]))

    feasible_m, c2_m = _coercivity_feasible(op, S, op.m, theta, cfg.tolerance)
    if feasible_m:
        c1, c2 = op.m, c2_m
    else:
        lo, hi = c1_floor, op.m
        ok_lo, c2_lo = _coercivity_feasible(op, S, lo, theta, cfg.tolerance)
        if not ok_lo:
            consts = CoercivityConstants(0.0, np.inf, theta,
                                         lambda x: b1_values(op, x))
            entry = nonstrict_entry(
                "coercivity-lower", -np.inf, cfg.tolerance, None,
                fitted={"c1": 0.0, "c2": np.inf, "theta": theta},
                notes=f"no feasible c1 >= {c1_floor:g}")
            return consts, entry
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            ok, c2_mid = _coercivity_feasible(op, S, mid, theta, cfg.tolerance)
            if ok:
                lo, c2_lo = mid, c2_mid
            else:
                hi = mid
        c1, c2 = lo, c2_lo

    margins = coercivity_margin(op, S.x, S.u, S.xi, c1, c2, theta)
    worst, idx = _worst(margins)
    consts = CoercivityConstants(float(c1), float(c2), float(theta),
                                 lambda x: b1_values(op, x))
    entry = nonstrict_entry(
        "coercivity-lower", worst, cfg.tolerance, _witness(S, idx),
        fitted={"c1": float(c1), "c2": float(c2), "theta": float(theta)})
    return consts, entry


def _stable_fit(ratio_fn, op, cfg, condition_id, constant_name):
    """Fit c = max ratio; pass iff the fit is finite and stable under
    doubling the sample count (within factor 2).

    The entry margin is min(sample slack, 2*c - c_doubled): a fit that
    doubles less than 2x keeps the margin nonnegative.
    """
    S = draw_samples(op, cfg)
    ratios = _chunked_margins(lambda s: ratio_fn(op, s.x, s.u, s.xi),
                              S, cfg.threads)
    idx = int(np.argmax(ratios))
    c = max(float(ratios[idx]), 0.0)

    cfg2 = replace(cfg, count=2 * cfg.count)
    S2 = draw_samples(op, cfg2)
    ratios2 = _chunked_margins(lambda s: ratio_fn(op, s.x, s.u, s.xi),
                               S2, cfg.threads)
    c2 = max(float(np.max(ratios2)), 0.0)

    stability = 2.0 * c - c2 if c2 > cfg.tolerance else 0.0
    worst = min(0.0, stability)
    return nonstrict_entry(
        condition_id, worst, cfg.tolerance, _witness(S, idx),
        fitted={constant_name: c, constant_name + "_doubled": c2},
        notes="margin includes 2x-stability under sample doubling")


def check_lemma_lower_bound(op: OperatorSpec, cfg: SampleConfig) -> CheckEntry:
    """(a,xi) >= -c (|xi|^q + |u|^q + |a(x,0,0)|^(q/(q-1)) + 1) for a
    finite, sample-stable c."""
    if not 0.0 <= op.beta <= op.p - 1.0:
        raise InvalidExponents("lemma lower bound needs 0 <= beta <= p-1")
    return _stable_fit(lemma_lower_ratio, op, cfg, "lemma-lower-bound", "c")


def check_regularized_growth(rop: RegularizedOperator,
                             cfg: SampleConfig) -> CheckEntry:
    """|a_eps| <= M (|xi|^(q+eps-1) + |u|^(q+eps-1) + b1(x)) for a finite,
    sample-stable M."""
    return _stable_fit(regularized_growth_ratio, rop, cfg,
                       "regularized-growth", "M")


def check_derivative_consistency(op: OperatorSpec, cfg: SampleConfig,
                                 rel_tol: float = 1e-6) -> CheckEntry:
    """Analytic derivatives vs centered finite differences of the flux.

    Relative error is measured entrywise against max(1, the larger of the
    two blocks).  Sample magnitudes are kept away from zero, where the
    degenerate built-ins are not twice differentiable.
    """
    from .operators import fd_dflux_du, fd_dflux_dx, fd_dflux_dxi

    S = draw_samples(op, cfg, structured=False, xi_low_frac=0.05)

    def rel_err(a, f):
        scale = np.maximum(1.0, np.maximum(
            np.max(np.abs(a), axis=tuple(range(1, a.ndim))),
            np.max(np.abs(f), axis=tuple(range(1, f.ndim)))))
        return np.max(np.abs(a - f), axis=tuple(range(1, a.ndim))) / scale

    def margins(s):
        errs = [rel_err(op.dflux_dxi(s.x, s.u, s.xi),
                        fd_dflux_dxi(op.flux, s.x, s.u, s.xi)),
                rel_err(op.dflux_du(s.x, s.u, s.xi),
                        fd_dflux_du(op.flux, s.x, s.u, s.xi))]
        for axis in range(op.dim):
            errs.append(rel_err(op.dflux_dx(s.x, s.u, s.xi, axis),
                                fd_dflux_dx(op.flux, s.x, s.u, s.xi, axis)))
        return rel_tol - np.max(np.stack(errs), axis=0)

    vals = _chunked_margins(margins, S, cfg.threads)
    worst, idx = _worst(vals)
    return nonstrict_entry("derivative-consistency", worst, 0.0,
                           _witness(S, idx),
                           fitted={"rel_tol": rel_tol})


def run_structure_checks(op: OperatorSpec, cfg: SampleConfig,
                         L: float | None = None, subdomain=None,
                         declared_ML: float | None = None) -> AssumptionReport:
    """All structural checks on one operator, in a fixed order."""
    L = cfg.u_radius if L is None else L
    rep = AssumptionReport(meta={"family": op.family_tag, "p": op.p,
                                 "q": op.q, "m": op.m, "M": op.M,
                                 "seed": cfg.seed, "count": cfg.count})
    rep.add(check_derivative_consistency(op, cfg))
    rep.add(check_ellipticity(op, cfg))
    rep.add(check_growth_xi(op, cfg))
    rep.add(check_growth_u(op, cfg))
    rep.add(check_local_conditions(op, L, subdomain, cfg, declared_ML))
    rep.add(check_monotonicity(op, cfg))
    _, entry = check_coercivity_lower(op, cfg)
    rep.add(entry)
    rep.add(check_lemma_lower_bound(op, cfg))
    return rep


def reevaluate_witness(op: OperatorSpec, entry: CheckEntry) -> float:
    """Recompute the margin at an entry's witness point.

    Valid for the pointwise checks (ellipticity, growth, monotonicity,
    coercivity with its fitted constants); fitted-ratio entries re-evaluate
    the ratio's slack against the fitted constant.
    """
    w = entry.witness
    x = np.asarray(w["x"])
    u = float(w["u"])
    xi = np.asarray(w["xi"])
    cid = entry.condition_id
    if cid == "ellipticity":
        return float(ellipticity_margin(op, x, u, xi, np.asarray(w["lambda"])))
    if cid == "growth-xi":
        return float(growth_xi_margin(op, x, u, xi))
    if cid == "growth-u":
        return float(growth_u_margin(op, x, u, xi))
    if cid == "monotonicity":
        return float(monotonicity_margin(op, x, u, xi, np.asarray(w["eta"])))
    if cid == "coercivity-lower":
        f = entry.fitted_constants
        return float(coercivity_margin(op, x, u, xi, f["c1"], f["c2"],
                                       f["theta"]))
    if cid == "local-conditions":
        r1, r2 = local_condition_ratios(op, x, u, xi)
        return float(entry.fitted_constants["M_L"] - max(float(r1), float(r2)))
    if cid == "lemma-lower-bound":
        c = entry.fitted_constants["c"]
        return float(c - lemma_lower_ratio(op, x, u, xi))
    if cid == "regularized-growth":
        M = entry.fitted_constants["M"]
        return float(M - regularized_growth_ratio(op, x, u, xi))
    raise KeyError(f"no witness kernel for {cid!r}")


def monotone_composition_holds(op: OperatorSpec, eps: float,
                               cfg: SampleConfig) -> bool:
    """regularize(op, eps) passes monotonicity with the same m whenever op
    does (the eps-term contributes a positive quantity)."""
    rop = regularize(op, eps)
    return check_monotonicity(rop, cfg).passed
