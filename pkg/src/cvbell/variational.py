"""Free-function optimization of the Bell ratio over quadrature-node values.

Rather than assuming the x/(1 + eps x^2) family, this module maximizes the
exact Fock-space ratio over the value of the measurement function at every
positive quadrature node (odd extension supplies the negative axis).  The
discretized stationarity condition has the same algebra as the continuum one,
so the optimizer should land on the node samples of x/(1 + eps x^2) up to its
own tolerance; the tests use that as a two-route consistency check.

The ratio is scale invariant, which leaves a flat direction that stalls
quasi-Newton steps.  The gauge pins the value at the smallest positive node
to ``norm_gauge`` times that node (unit slope through the origin by default)
and optimizes the remaining values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import ConvergenceError
from .model import Basis, StateSpec, density_matrix
from .oracle import BellResult, evaluate, orthogonal_angles
from .quadrature import QuadratureRule


@dataclass(frozen=True)
class FreeFunction:
    """Odd function represented by its values at positive quadrature nodes."""

    nodes: np.ndarray
    values: np.ndarray
    norm_gauge: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.nodes.shape != self.values.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and values must be 1-D arrays of equal length")
        if not np.isfinite(self.values).all():
            raise ValueError("node values must be finite")

    def normalized(self) -> "FreeFunction":
        """Rescale so that value/node = norm_gauge at the smallest node."""
        v0 = self.values[0]
        if v0 == 0.0:
            raise ValueError("cannot gauge-fix a function vanishing at the first node")
        scale = self.norm_gauge * self.nodes[0] / v0
        return FreeFunction(self.nodes, self.values * scale, self.norm_gauge)

    def as_measurement(self) -> Basis:
        return Basis(self.nodes, self.values)

    def to_csv_rows(self):
        return [(float(x), float(v)) for x, v in zip(self.nodes, self.values)]


def free_function_from(f, rule: QuadratureRule, norm_gauge: float = 1.0) -> FreeFunction:
    """Sample a callable or measurement function onto the rule's positive nodes."""
    x = rule.positive_nodes
    if isinstance(f, FreeFunction):
        if f.nodes.shape == x.shape and np.allclose(f.nodes, x):
            return FreeFunction(x, f.values, norm_gauge)
        return FreeFunction(x, f.as_measurement()(x), norm_gauge)
    fn = f if callable(f) else None
    if fn is None:
        raise ValueError(f"cannot build a free function from {type(f)!r}")
    return FreeFunction(x, np.asarray(fn(x), dtype=float), norm_gauge)


def _central_gradient(fun: Callable, x: np.ndarray, rel_step: float) -> np.ndarray:
    # steps are relative to the overall function scale as well as the entry:
    # purely entry-relative steps on small tail values push the difference
    # quotient into evaluation roundoff
    floor = 0.25 * float(np.max(np.abs(x))) if x.size else 1e-8
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), floor, 1e-8)
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return g


def _fd_hessian(gradient: Callable, x: np.ndarray,
                step: float = 1e-3) -> np.ndarray:
    """Symmetrized central differences of the gradient.

    The step is deliberately large: the gradient itself carries differencing
    noise, and the nearly flat valley directions need curvatures resolved
    well below that noise divided by a small step.
    """
    n = x.size
    scale = max(float(np.max(np.abs(x))), 1e-3)
    hess = np.empty((n, n))
    for i in range(n):
        h = step * scale
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        hess[:, i] = (gradient(xp) - gradient(xm)) / (2.0 * h)
    return 0.5 * (hess + hess.T)


class _RatioProblem:
    """Shared state for ratio evaluations at fixed scenario and angles."""

    def __init__(self, spec: StateSpec, rule: QuadratureRule):
        if spec.n_modes > 10:
            raise ValueError("free-function optimization is limited to 10 modes")
        self.rule = rule
        self.rho = density_matrix(spec)
        self.angles = orthogonal_angles(spec.n_modes, spec.r_split)
        self.nodes = rule.positive_nodes

    def ratio(self, values: np.ndarray, g_values: Optional[np.ndarray] = None) -> float:
        f = Basis(self.nodes, values)
        g = f if g_values is None else Basis(self.nodes, g_values)
        return evaluate(self.rho, f, g, self.angles, self.rule).ratio

    def result(self, values: np.ndarray) -> BellResult:
        f = Basis(self.nodes, values)
        return evaluate(self.rho, f, f, self.angles, self.rule)


def _maximize(objective: Callable, x0: np.ndarray, gtol: float, max_iter: int,
              rel_step: float,
              iteration_callback: Optional[Callable[[float], None]]):
    """Drive the gradient max-norm of -objective below gtol; returns (x, norm)."""

    def gradient(x: np.ndarray) -> np.ndarray:
        return _central_gradient(objective, x, rel_step)

    scipy_callback = None
    if iteration_callback is not None:
        scipy_callback = lambda xk: iteration_callback(-objective(xk))

    # BFGS with restarts: each restart re-estimates the Hessian and recovers
    # from line searches that stall on sub-ulp objective improvements.
    x = np.asarray(x0, dtype=float)
    iters_left = max_iter
    grad_norm = np.inf
    for _ in range(4):
        res = minimize(
            objective, x, jac=gradient, method="BFGS",
            callback=scipy_callback,
            options={"gtol": gtol, "maxiter": iters_left},
        )
        x = res.x
        iters_left = max(iters_left - max(res.nit, 1), 1)
        grad_norm = float(np.max(np.abs(gradient(x))))
        if grad_norm <= gtol:
            return x, grad_norm

    # Two stall modes remain once line searches exhaust the objective's ulp
    # resolution.  Node values under negligible quadrature weight see a tiny
    # slope with an even tinier curvature (the quadratic model cannot move
    # them), so offending coordinates get an exact scalar minimization.
    # Coupled residuals then fall to Newton steps on a measured Hessian,
    # judged by the gradient norm itself rather than the objective.
    g = gradient(x)
    for _ in range(3):
        grad_norm = float(np.max(np.abs(g)))
        if grad_norm <= gtol:
            break

        offenders = [i for i in np.argsort(-np.abs(g)) if abs(g[i]) > 0.5 * gtol]
        for i in offenders[:12]:
            xi = x[i]
            span = max(1.0, 2.0 * abs(xi))

            def along(t, i=i):
                z = x.copy()
                z[i] = t
                return objective(z)

            res1d = minimize_scalar(along, bounds=(xi - span, xi + span),
                                    method="bounded", options={"xatol": 1e-10})
            x[i] = float(res1d.x)
        g = gradient(x)
        grad_norm = float(np.max(np.abs(g)))
        if grad_norm <= gtol:
            break

        # differencing noise can turn small Hessian eigenvalues negative, so
        # the spectrum is clamped before inverting
        hess = _fd_hessian(gradient, x)
        evals, evecs = np.linalg.eigh(hess)
        floor = 1e-6 * max(evals[-1], 1e-12)
        inv = evecs @ np.diag(1.0 / np.maximum(evals, floor)) @ evecs.T
        for scale in (1.0, 0.25, 0.05):
            cand = x - scale * (inv @ g)
            g_cand = gradient(cand)
            if np.max(np.abs(g_cand)) < grad_norm:
                x, g = cand, g_cand
                break
    return x, float(np.max(np.abs(g)))


def optimize_function(spec: StateSpec, rule: QuadratureRule, init, *,
                      gtol: float = 1e-7, max_iter: int = 500,
                      rel_step: float = 1e-6,
                      iteration_callback: Optional[Callable[[float], None]] = None):
    """Maximize the ratio over node values; returns (FreeFunction, BellResult).

    The same function is used on both quadratures of every site, which is the
    stationary configuration.  Gradients are central differences with the
    given relative step; ``iteration_callback`` receives the ratio at each
    accepted iterate.

    Raises ConvergenceError with the best (FreeFunction, BellResult) attached
    if the gradient max-norm does not reach ``gtol``.
    """
    problem = _RatioProblem(spec, rule)
    start = free_function_from(init, rule).normalized()
    v0 = start.values[0]

    def objective(free: np.ndarray) -> float:
        return -problem.ratio(np.concatenate(([v0], free)))

    x, grad_norm = _maximize(objective, start.values[1:], gtol, max_iter,
                             rel_step, iteration_callback)
    best_values = np.concatenate(([v0], x))
    best = FreeFunction(start.nodes, best_values, start.norm_gauge)
    raw = problem.result(best_values)
    bell = BellResult(
        lhs=raw.lhs, rhs=raw.rhs, ratio=raw.ratio,
        inequality_id="functional", function_id="free_function",
        angles=raw.angles,
    )
    if grad_norm > gtol:
        raise ConvergenceError(
            f"stationarity not reached: gradient max-norm {grad_norm:.3e} > {gtol:.1e}",
            best=(best, bell), residual=grad_norm,
        )
    return best, bell


def optimize_function_pair(spec: StateSpec, rule: QuadratureRule, init, *,
                           gtol: float = 1e-7, max_iter: int = 900,
                           rel_step: float = 1e-6):
    """Relaxed variant optimizing f and g independently.

    Returns (f, g, BellResult).  Used by the tests to confirm that the
    g = +/- f relation emerges from the optimization instead of being
    imposed; production paths use ``optimize_function``.
    """
    problem = _RatioProblem(spec, rule)
    start = free_function_from(init, rule).normalized()
    v0 = start.values[0]
    n_free = start.nodes.size - 1

    def objective(packed: np.ndarray) -> float:
        fv = np.concatenate(([v0], packed[:n_free]))
        gv = packed[n_free:]
        return -problem.ratio(fv, gv)

    x0 = np.concatenate((start.values[1:], start.values))
    x, grad_norm = _maximize(objective, x0, gtol, max_iter, rel_step, None)
    fv = np.concatenate(([v0], x[:n_free]))
    gv = x[n_free:]
    f_best = FreeFunction(start.nodes, fv, start.norm_gauge)
    g_best = FreeFunction(start.nodes, gv, start.norm_gauge)
    bell = evaluate(problem.rho, Basis(start.nodes, fv), Basis(start.nodes, gv),
                    problem.angles, rule)
    if grad_norm > gtol:
        raise ConvergenceError(
            f"stationarity not reached: gradient max-norm {grad_norm:.3e} > {gtol:.1e}",
            best=(f_best, g_best, bell), residual=grad_norm,
        )
    return f_best, g_best, bell


def euler_lagrange_residual(f, spec: StateSpec, rule: QuadratureRule,
                            rel_step: float = 1e-6) -> float:
    """Max-norm stationarity defect of the ratio at a given function.

    The function is gauge-normalized first, so the residual is invariant
    under rescaling f -> c f; the gradient is taken over all non-gauge node
    directions.  Near zero at a true optimum, order 1e-3 or larger away from
    one.
    """
    problem = _RatioProblem(spec, rule)
    ff = free_function_from(f, rule).normalized()
    v0 = ff.values[0]

    def objective(free: np.ndarray) -> float:
        return -problem.ratio(np.concatenate(([v0], free)))

    grad = _central_gradient(objective, ff.values[1:], rel_step)
    return float(np.max(np.abs(grad)))


def fit_optimal_epsilon(f: FreeFunction, rule: QuadratureRule) -> Tuple[float, float, float]:
    """Weighted least-squares fit of c * x/(1 + eps x^2) to the node values.

    Returns (eps, scale, relative_l2_error) with the Gaussian quadrature
    weights as the error measure.  The scale is eliminated analytically, so
    only eps is searched.
    """
    x = f.nodes
    v = f.values
    if rule.positive_nodes.shape != x.shape or not np.allclose(rule.positive_nodes, x):
        raise ValueError("fit requires the function to live on the rule's positive nodes")
    w = rule.weights[rule.nodes > 0.0]

    def sse(eps: float) -> float:
        phi = x / (1.0 + eps * x * x)
        denom = np.dot(w, phi * phi)
        c = np.dot(w, v * phi) / denom
        r = v - c * phi
        return float(np.dot(w, r * r))

    res = minimize_scalar(sse, bounds=(1e-6, 64.0), method="bounded",
                          options={"xatol": 1e-12})
    eps = float(res.x)
    phi = x / (1.0 + eps * x * x)
    c = float(np.dot(w, v * phi) / np.dot(w, phi * phi))
    rel = float(np.sqrt(sse(eps) / np.dot(w, v * v)))
    return eps, c, rel
