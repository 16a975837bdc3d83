"""Block successive upper-bound minimization for Laplacian learning under
spectral similarity constraints.

The solver minimizes, over a Laplacian ``S = materialize(s)``, an orthonormal
``V`` and eigenvalues ``lam``::

    tr(C S) + alpha |S|_1 - sum_free log lam + beta/2 |S - V diag(lam) V^T|_F^2
        + gamma * sum_f sign_f * c_f(lam)

subject to one half of the similarity interval per test function (``>=`` for
concave, ``<=`` for convex, both for affine). The ``q`` smallest eigenvalues are
pinned at zero and excluded from the log-determinant.

Each iteration runs three block updates: a projected-gradient step on the edge
weights, eigenvectors of the new ``S``, and the separable eigenvalue problem
with the concave/convex term replaced by its tangent upper bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import adjoint, gram_apply, materialize, operator_norm_sq, weights_of
from .spectral import SpectralTarget, c_g, eig_sym, get_test_function, majorizer_coeffs

MODES = ("mgl", "unconstrained", "fixed_trace")


class InfeasibleTargets(ValueError):
    """The similarity constraints cannot be met by any positive eigenvalues."""


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 0.0
    beta: float = 10.0
    gamma: float = 0.0
    targets: tuple = ()
    mode: str = "mgl"
    fixed_trace_value: float | None = None  # defaults to n
    max_iters: int = 500
    rel_tol: float = 1e-6
    zero_eigs: int = 1
    step1_repeats: int = 1
    sqrt_form: str = "taylor"

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.alpha < 0 or self.gamma < 0:
            raise ValueError("alpha and gamma must be nonnegative")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.max_iters < 0 or self.zero_eigs < 0 or self.step1_repeats < 1:
            raise ValueError("max_iters, zero_eigs must be >= 0 and step1_repeats >= 1")
        if self.mode == "mgl" and not self.targets:
            raise ValueError("mode 'mgl' needs at least one spectral target")

    def effective(self, n: int) -> "SolverConfig":
        """Equivalent config in which the mode is expressed through targets."""
        if self.mode == "unconstrained":
            return replace(self, targets=(), gamma=0.0)
        if self.mode == "fixed_trace":
            value = n if self.fixed_trace_value is None else self.fixed_trace_value
            tgt = SpectralTarget(get_test_function("tr"), value / n, 0.0, "explicit")
            return replace(self, targets=(tgt,), gamma=0.0)
        return self


@dataclass
class SolverState:
    s: np.ndarray
    S: np.ndarray
    V: np.ndarray
    lam: np.ndarray
    iter: int = 0
    objective_trace: list = field(default_factory=list)
    rel_change: float = math.inf
    converged: bool = False


# --------------------------------------------------------------------------
# constraints

@dataclass(frozen=True)
class _Constraint:
    fn: object
    sense: int  # +1 for c_g >= bound, -1 for c_g <= bound
    bound: float

    def residual(self, lam_full) -> float:
        """Nonnegative when satisfied."""
        return self.sense * (c_g(lam_full, self.fn) - self.bound)


def constraints_of(targets) -> list:
    """Most restrictive enforced bound per test function and sense."""
    lower, upper, fns = {}, {}, {}
    for t in targets:
        f = t.test_fn
        fns[f.name] = f
        if f.sign >= 0:
            lower[f.name] = max(lower.get(f.name, -math.inf), t.lower)
        if f.sign <= 0:
            upper[f.name] = min(upper.get(f.name, math.inf), t.upper)
    for name in set(lower) & set(upper):
        if lower[name] > upper[name]:
            raise InfeasibleTargets(
                f"{name}: reference intervals do not intersect "
                f"({lower[name]:.6g} > {upper[name]:.6g})"
            )
    out = [_Constraint(fns[k], 1, v) for k, v in lower.items()]
    out += [_Constraint(fns[k], -1, v) for k, v in upper.items()]
    return out


# --------------------------------------------------------------------------
# eigenvalue block

def _quadratic_root(A, B):
    """Positive root of ``A x^2 + B x - 1 = 0`` for ``A > 0``."""
    disc = np.sqrt(B * B + 4.0 * A)
    # both branches are evaluated; the unused one may divide by zero
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(B > 0, 2.0 / (B + disc), (disc - B) / (2.0 * A))


def _coordinate_roots(b, beta, fn, w, x0=None):
    """Solve ``-1/x + beta x + b - w g'(x) = 0`` for every coordinate.

    The left side is increasing in ``x`` whenever ``w g'' <= 0``, which holds for
    every constraint orientation used here.
    """
    if fn is None or w == 0.0:
        return _quadratic_root(beta, b)
    if fn.linear_derivative is not None:
        a1, a0 = fn.linear_derivative
        return _quadratic_root(beta - w * a1, b - w * a0)

    def h(x, idx=slice(None)):
        return -1.0 / x + beta * x + b[idx] - w * fn.g_prime(x)

    x = _quadratic_root(beta, b) if x0 is None else np.array(x0, dtype=float)
    lo, hi = x.copy(), x.copy()
    hl = h(lo)
    while np.any(hl >= 0):
        m = hl >= 0
        lo[m] *= 0.5
        hl[m] = h(lo[m], m)
    hh = h(hi)
    while np.any(hh <= 0):
        m = hh <= 0
        hi[m] *= 2.0
        hh[m] = h(hi[m], m)
    for _ in range(200):
        hx = h(x)
        lo = np.where(hx < 0, x, lo)
        hi = np.where(hx > 0, x, hi)
        dh = 1.0 / x**2 + beta - w * fn.g_second(x)
        xn = x - hx / dh
        bad = ~np.isfinite(xn) | (xn < lo) | (xn > hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        # quadratic convergence: a step this small leaves an error near round-off
        done = np.max(np.abs(xn - x) / xn) <= 1e-13
        x = xn
        if done:
            break
    return x


def _full(lam_free, q):
    return np.concatenate([np.zeros(q), lam_free])


def solve_eigenvalues(lam_hat, c, beta, constraints, q, n=None, tol=1e-13):
    """Minimize ``-sum log x + beta/2 |x - lam_hat|^2 + c.x`` over ``x > 0``.

    ``lam_hat`` and ``c`` hold the free coordinates only; the ``q`` pinned
    zeros count towards the spectral means. At most one constraint is made
    active (the most violated one at the unconstrained solution); its scalar
    multiplier is found by a bracketing false-position search that always
    returns a point on the feasible side.
    """
    lam_hat = np.asarray(lam_hat, dtype=float)
    n = lam_hat.size + q if n is None else n
    b = np.asarray(c, dtype=float) - beta * lam_hat
    x = _coordinate_roots(b, beta, None, 0.0)
    if not constraints:
        return x

    full = _full(x, q)
    res = [(con.residual(full) / max(1.0, abs(con.bound)), con) for con in constraints]
    worst, con = min(res, key=lambda rc: rc[0])
    if worst >= -tol:
        return x

    fn, sense = con.fn, con.sense
    scale = max(1.0, abs(con.bound))

    def at(nu, x0=None):
        xs = _coordinate_roots(b, beta, fn, sense * nu / n, x0)
        return xs, con.residual(_full(xs, q))

    a, ra = 0.0, con.residual(full)
    hi = 1.0
    xb, rb = at(hi, x)
    for _ in range(200):
        if rb >= 0:
            break
        a, ra = hi, rb
        hi *= 2.0
        xb, rb = at(hi, xb)
    else:
        raise InfeasibleTargets(
            f"cannot satisfy {fn.name} {'>=' if sense > 0 else '<='} {con.bound:.6g}"
        )

    # Illinois false position; (hi, xb, rb) stays feasible
    side = 0
    for _ in range(300):
        if rb <= tol * scale or hi - a <= 4e-16 * hi:
            break
        mid = hi - rb * (hi - a) / (rb - ra)
        if not a < mid < hi:
            mid = 0.5 * (a + hi)
        xm, rm = at(mid, xb)
        if rm >= 0:
            hi, xb, rb = mid, xm, rm
            if side == 1:
                ra *= 0.5
            side = 1
        else:
            a, ra = mid, rm
            if side == -1:
                rb *= 0.5
            side = -1
    return xb


# --------------------------------------------------------------------------
# objective and block updates

def _K(C_hat, alpha):
    n = C_hat.shape[0]
    H = -np.ones((n, n))
    np.fill_diagonal(H, 1.0)
    return C_hat + alpha * H


def _spectral_fns(cfg):
    seen = {}
    for t in cfg.targets:
        if t.test_fn.sign != 0:
            seen.setdefault(t.test_fn.name, t.test_fn)
    return list(seen.values())


def objective(state: SolverState, C_hat, cfg: SolverConfig) -> float:
    n = C_hat.shape[0]
    cfg = cfg.effective(n)
    q = cfg.zero_eigs
    S, V, lam = state.S, state.V, state.lam
    val = float(np.sum(C_hat * S)) + cfg.alpha * float(np.abs(S).sum())
    val -= float(np.sum(np.log(lam[q:])))
    R = S - (V * lam) @ V.T
    val += 0.5 * cfg.beta * float(np.sum(R * R))
    for f in _spectral_fns(cfg):
        val += cfg.gamma * f.sign * c_g(lam, f)
    return val


def step1(state: SolverState, C_hat, cfg: SolverConfig) -> SolverState:
    """Projected gradient step on the edge weights (one or more repeats)."""
    n = C_hat.shape[0]
    K = _K(C_hat, cfg.alpha)
    P = (state.V * state.lam) @ state.V.T
    z = adjoint(P - K / cfg.beta)
    L = operator_norm_sq(n)
    s = state.s
    for _ in range(cfg.step1_repeats):
        s = np.maximum(s - (gram_apply(s, n) - z) / L, 0.0)
    return replace(state, s=s, S=materialize(s, n))


def step2(state: SolverState) -> SolverState:
    """Eigenvectors of ``S``, ascending, with ``lam`` sorted to match."""
    spec = eig_sym(state.S)
    lam = np.sort(state.lam)
    return replace(state, V=spec.eigenvectors, lam=lam)


def _majorizer(lam_free, cfg, n):
    c = np.zeros(lam_free.size)
    for f in _spectral_fns(cfg):
        c += majorizer_coeffs(f, lam_free, cfg.gamma, cfg.sqrt_form, n=n)
    return c


def step3(state: SolverState, cfg: SolverConfig, constraints=None) -> SolverState:
    """Separable eigenvalue update with the linear majorizer at the current ``lam``."""
    n = state.S.shape[0]
    cfg = cfg.effective(n)
    q = cfg.zero_eigs
    if constraints is None:
        constraints = constraints_of(cfg.targets)
    lam_hat = np.sum(state.V * (state.S @ state.V), axis=0)[q:]
    c = _majorizer(state.lam[q:], cfg, n)
    lam_free = solve_eigenvalues(lam_hat, c, cfg.beta, constraints, q, n)
    return replace(state, lam=_full(lam_free, q))


def initial_state(C_hat, cfg: SolverConfig, constraints) -> SolverState:
    """Weights from the clipped off-diagonals of ``pinv(C_hat)``, then a feasible ``lam``."""
    from .baselines import pinv_estimator

    n = C_hat.shape[0]
    s = weights_of(pinv_estimator(C_hat))
    S = materialize(s, n)
    spec = eig_sym(S)
    q = cfg.zero_eigs
    lam_hat = spec.eigenvalues[q:]
    lam = solve_eigenvalues(lam_hat, np.zeros(n - q), cfg.beta, constraints, q, n)
    return SolverState(s=s, S=S, V=spec.eigenvectors, lam=_full(lam, q))


def solve(C_hat, n: int | None = None, cfg: SolverConfig | None = None, init: SolverState | None = None,
          callback=None) -> SolverState:
    """Run the three-block iteration until ``S`` stabilizes or ``max_iters``.

    Not converging is not an error: the state is returned with
    ``converged=False``.
    """
    C_hat = np.asarray(C_hat, dtype=float)
    C_hat = (C_hat + C_hat.T) / 2
    if n is None:
        n = C_hat.shape[0]
    if C_hat.shape != (n, n):
        raise ValueError(f"covariance must be {n}x{n}, got {C_hat.shape}")
    cfg = (cfg or SolverConfig(mode="unconstrained")).effective(n)
    if not 0 <= cfg.zero_eigs < n:
        raise ValueError("zero_eigs must be in [0, n)")
    constraints = constraints_of(cfg.targets)

    state = init if init is not None else initial_state(C_hat, cfg, constraints)
    trace = [objective(state, C_hat, cfg)]
    state = replace(state, objective_trace=trace, iter=0)
    for t in range(1, cfg.max_iters + 1):
        S_old = state.S
        state = step1(state, C_hat, cfg)
        state = step2(state)
        state = step3(state, cfg, constraints)
        trace.append(objective(state, C_hat, cfg))
        denom = np.linalg.norm(S_old)
        change = np.linalg.norm(state.S - S_old) / denom if denom > 0 else math.inf
        state = replace(state, iter=t, rel_change=float(change))
        if callback is not None:
            callback(state)
        if change < cfg.rel_tol:
            state.converged = True
            break
    state.objective_trace = np.asarray(trace)
    return state
