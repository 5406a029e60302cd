"""Exact brute-force evaluation of the functional-moment Bell observable.

Both sides of the inequality

    |< prod_k [f(x_k^theta_k) + i g(x_k^theta'_k)] >|^2
        <=  < prod_k [f(x_k^theta_k)^2 + g(x_k^theta'_k)^2] >

are evaluated as Fock-space traces against an explicit density matrix, with
no closed-form shortcuts.  Every analytic Bell value in the package is tested
against this path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ._accel import tensor_expectation
from .model import (
    AngleConfig,
    DensityMatrix,
    MeasurementFunction,
    Optimal,
    StateSpec,
    density_matrix,
    raising_amplitude,
    squared_moments,
)
from .quadrature import QuadratureRule, check_odd

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BellResult:
    """One inequality evaluation: correlator side, bound side, and their ratio."""

    lhs: float
    rhs: float
    ratio: float
    inequality_id: str
    function_id: str
    angles: AngleConfig


def orthogonal_angles(n: int, r: int, base: float = 0.0) -> AngleConfig:
    """Correlator-maximizing phase pattern for the r-against-(n-r) state.

    theta_k = base everywhere; theta'_k = theta_k + pi/2 on the first r sites
    and theta_k - pi/2 on the rest.  The globally conjugated pattern reaches
    the same value.
    """
    theta = (base,) * n
    theta_prime = tuple(
        base + (np.pi / 2.0 if k < r else -np.pi / 2.0) for k in range(n)
    )
    return AngleConfig(theta=theta, theta_prime=theta_prime)


def _site_correlator_matrix(mf: float, mg: float, th: float, thp: float) -> np.ndarray:
    o = np.zeros((2, 2), dtype=complex)
    o[0, 1] = np.exp(-1j * th) * mf + 1j * np.exp(-1j * thp) * mg
    o[1, 0] = np.exp(1j * th) * mf + 1j * np.exp(1j * thp) * mg
    return o


def _function_id(f, g) -> str:
    fl = getattr(f, "label", getattr(f, "__name__", "callable"))
    gl = getattr(g, "label", getattr(g, "__name__", "callable"))
    return fl if fl == gl else f"{fl}|{gl}"


def evaluate(rho: DensityMatrix, f, g, angles: AngleConfig, rule: QuadratureRule,
             inequality_id: str = "functional") -> BellResult:
    """Evaluate both sides of the inequality on an explicit density matrix.

    The tensor-product traces are contracted mode by mode; the 2^N x 2^N
    operator products are never formed.
    """
    n = rho.n_modes
    if angles.n_modes != n:
        raise ValueError(
            f"angle list has {angles.n_modes} sites but the state has {n} modes"
        )
    for fn in (f, g):
        if not isinstance(fn, MeasurementFunction):
            check_odd(fn, rule)
    # Angle-independent single-site data is computed once.
    mf = raising_amplitude(f, rule)
    mg = raising_amplitude(g, rule)
    qf0, qf1 = squared_moments(f, rule)
    qg0, qg1 = squared_moments(g, rule)
    q_ref = np.array([[qf0 + qg0, 0.0], [0.0, qf1 + qg1]], dtype=complex)
    o_mats = np.stack([
        _site_correlator_matrix(mf, mg, angles.theta[k], angles.theta_prime[k])
        for k in range(n)
    ])
    q_mats = np.stack([q_ref] * n)
    corr = tensor_expectation(rho.matrix, o_mats)
    lhs = abs(corr) ** 2
    rhs = tensor_expectation(rho.matrix, q_mats).real
    return BellResult(
        lhs=float(lhs),
        rhs=float(rhs),
        ratio=float(lhs / rhs),
        inequality_id=inequality_id,
        function_id=_function_id(f, g),
        angles=angles,
    )


def angle_scan(rho: DensityMatrix, f, g, rule: QuadratureRule,
               resolution: int = 4) -> Tuple[AngleConfig, BellResult]:
    """Scan the orthogonal-angle family for the maximal ratio.

    The scan covers every theta'_k = theta_k +/- pi/2 sign pattern combined
    with a common-phase sweep of ``resolution`` values.  The bound side must
    come out angle-invariant (to 1e-10); a violation of that aborts loudly
    since it would mean the site operators are broken.
    """
    n = rho.n_modes
    if n > 8:
        raise ValueError(f"exhaustive pattern scan limited to 8 modes, got {n}")
    if resolution < 2:
        raise ValueError(f"resolution must be at least 2, got {resolution}")
    phases = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
    best: Tuple[AngleConfig, BellResult] | None = None
    rhs_min = np.inf
    rhs_max = -np.inf
    for signs in itertools.product((1.0, -1.0), repeat=n):
        for phi in phases:
            cfg = AngleConfig(
                theta=(phi,) * n,
                theta_prime=tuple(phi + s * np.pi / 2.0 for s in signs),
            )
            res = evaluate(rho, f, g, cfg, rule)
            rhs_min = min(rhs_min, res.rhs)
            rhs_max = max(rhs_max, res.rhs)
            if best is None or res.ratio > best[1].ratio:
                best = (cfg, res)
    if rhs_max - rhs_min > 1e-10 * max(1.0, abs(rhs_max)):
        raise RuntimeError(
            f"bound side varied with angles by {rhs_max - rhs_min:.3e}; "
            "site operators violate their rotation identity"
        )
    return best


def optimize_epsilon_numeric(spec: StateSpec, rule: QuadratureRule,
                             eps_hi: float = 64.0,
                             xtol: float = 1e-8) -> Tuple[float, BellResult]:
    """Golden-section maximization of the ratio over the one-parameter family.

    f = g = x/(1 + eps x^2) at the correlator-maximizing angles; eps is
    searched on (0, eps_hi].
    """
    if spec.n_modes > 10:
        raise ValueError("numeric epsilon search is limited to 10 modes")
    rho = density_matrix(spec)
    angles = orthogonal_angles(spec.n_modes, spec.r_split)

    def ratio(eps: float) -> float:
        return evaluate(rho, Optimal(eps), Optimal(eps), angles, rule).ratio

    a, b = 1e-9, float(eps_hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = ratio(c), ratio(d)
    while d - c > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = ratio(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = ratio(d)
    eps = 0.5 * (c + d)
    f = Optimal(eps)
    return eps, evaluate(rho, f, f, angles, rule)


def random_product_mixture(n: int, rng: np.random.Generator,
                           n_states: int = 4) -> DensityMatrix:
    """Convex mixture of random product states on the qubit subspace.

    Local realism holds for such states, so any functional-moment ratio they
    produce must stay at or below 1; the tests use them as the bound-side
    sanity ensemble.
    """
    dim = 2 ** n
    weights = rng.dirichlet(np.ones(n_states))
    rho = np.zeros((dim, dim), dtype=complex)
    for w in weights:
        term = np.array([[1.0]], dtype=complex)
        for _ in range(n):
            alpha = rng.uniform(0.0, np.pi / 2.0)
            beta = rng.uniform(0.0, 2.0 * np.pi)
            ket = np.array([np.cos(alpha), np.exp(1j * beta) * np.sin(alpha)])
            term = np.kron(term, np.outer(ket, ket.conj()))
        rho += w * term
    return DensityMatrix(n_modes=n, matrix=rho)
