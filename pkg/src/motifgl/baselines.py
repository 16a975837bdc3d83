"""Reference estimators: pseudo-inverse, graphical lasso and the solver variants
without similarity information."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

BASELINES = ("pinv", "glasso", "tr_fixed", "unc")


def pinv_estimator(C_hat, rcond: float = 1e-10) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a symmetric PSD matrix.

    Eigenvalues below ``rcond * lambda_max`` are treated as zero.
    """
    C = np.asarray(C_hat, dtype=float)
    lam, V = np.linalg.eigh((C + C.T) / 2)
    cutoff = rcond * max(lam.max(), 0.0)
    keep = lam > cutoff
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    P = (V * inv) @ V.T
    return (P + P.T) / 2


@dataclass
class GlassoResult:
    precision: np.ndarray
    covariance: np.ndarray
    converged: bool
    n_iter: int


def glasso_estimator(C_hat, alpha: float, max_iters: int = 200, tol: float = 1e-6) -> GlassoResult:
    """Graphical lasso with an off-diagonal l1 penalty (diagonal unpenalized).

    Backed by scikit-learn's coordinate-descent solver, which stops when the
    duality gap falls below ``tol``. Failing to converge is reported through
    ``converged`` instead of an exception.
    """
    from sklearn.covariance import graphical_lasso
    from sklearn.exceptions import ConvergenceWarning

    C = np.asarray(C_hat, dtype=float)
    C = (C + C.T) / 2
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        P = np.linalg.inv(C)
        return GlassoResult((P + P.T) / 2, C, True, 0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        try:
            cov, prec, n_iter = graphical_lasso(
                C, alpha, max_iter=max_iters, tol=tol, return_n_iter=True
            )
        except FloatingPointError:
            d = np.diag(C)
            return GlassoResult(np.diag(1.0 / d), np.diag(d), False, max_iters)
    converged = not any(issubclass(w.category, ConvergenceWarning) for w in caught)
    return GlassoResult((prec + prec.T) / 2, cov, converged, n_iter)


def run_baseline(kind: str, C_hat, n: int | None = None, extras: dict | None = None) -> np.ndarray:
    """Estimate a graph-shift operator with one of ``pinv|glasso|tr_fixed|unc``.

    ``extras`` may hold ``alpha``/``max_iters``/``tol`` for the graphical lasso,
    or a ``config`` (:class:`~motifgl.solver.SolverConfig`) and
    ``value`` for the solver-based variants. ``tr_fixed`` is rescaled so its
    trace equals ``value`` (default ``n``) exactly; the error metric is
    scale-invariant, so this only fixes the reported scale.
    """
    from .solver import SolverConfig, solve

    C = np.asarray(C_hat, dtype=float)
    n = C.shape[0] if n is None else n
    extras = dict(extras or {})
    if kind == "pinv":
        return pinv_estimator(C)
    if kind == "glasso":
        return glasso_estimator(
            C,
            extras.get("alpha", 0.01),
            extras.get("max_iters", 200),
            extras.get("tol", 1e-6),
        ).precision
    base = extras.get("config") or SolverConfig(mode="unconstrained")
    if kind == "unc":
        cfg = replace(base, mode="unconstrained", targets=(), gamma=0.0)
        return solve(C, n, cfg).S
    if kind == "tr_fixed":
        value = float(extras.get("value", n))
        cfg = replace(base, mode="fixed_trace", targets=(), gamma=0.0, fixed_trace_value=value)
        S = solve(C, n, cfg).S
        tr = np.trace(S)
        return S * (value / tr) if tr > 0 else S
    raise ValueError(f"unknown baseline {kind!r}; choose from {'|'.join(BASELINES)}")
