"""Critical detection efficiency, purity, and decoherence-product curves.

Thresholds are roots of B(parameter) = 1.  The Bell values are strictly
increasing in efficiency and purity for every inequality here, so bisection
brackets are sound; a bracket failure outside the documented no-violation
case aborts loudly instead of guessing.

Three separate decoherence-product conventions coexist and are never mixed:

- binned (MK): the per-site monomial eta * p^2, critical at 2^((1-2N)/N) pi;
- functional: the per-site monomial (eta * p)^2 of the product form, with the
  measurement function held at its noise-free optimum;
- plain moments (CFRD): no product form is quoted, its asymptote is tracked
  through the efficiency curve itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import MonotonicityError
from .functional_bell import bell_value, cfrd_bell_value, ideal_epsilon
from .mk_binning import mk_bell_value, mk_bell_value_product_form, mk_critical_product
from .model import Optimal, StateSpec
from .quadrature import QuadratureRule, kernel_integrals

INEQUALITIES = ("functional", "cfrd", "mk")

_ETA_BRACKET = (0.3, 1.0)


@dataclass(frozen=True)
class CriticalCurve:
    """Threshold values along a mode-count sweep.

    ``critical_values`` holds None where no parameter value up to 1 gives a
    violation; ``parameter`` names the swept quantity (efficiency, purity, or
    product).
    """

    inequality_id: str
    n_values: Tuple[int, ...]
    critical_values: Tuple[Optional[float], ...]
    parameter: str

    def __post_init__(self):
        if len(self.n_values) != len(self.critical_values):
            raise ValueError("n_values and critical_values must align")


@dataclass(frozen=True)
class AsymptoticProduct:
    """Large-N limit of a decoherence threshold curve plus its raw tail."""

    inequality_id: str
    parameter: str
    limit: float
    raw_tail: float
    n_tail: int


def _canonical_spec(n: int, eta: float, p: float) -> StateSpec:
    return StateSpec(n_modes=n, r_split=n // 2 if n > 1 else 1, purity=p, efficiency=eta)


def bell_ratio(inequality_id: str, n: int, eta: float, p: float,
               rule: QuadratureRule) -> float:
    """Canonical-split Bell ratio of the named inequality."""
    if inequality_id == "functional":
        return bell_value(_canonical_spec(n, eta, p), rule).ratio
    if inequality_id == "cfrd":
        return cfrd_bell_value(_canonical_spec(n, eta, p), rule).ratio
    if inequality_id == "mk":
        return mk_bell_value(_canonical_spec(n, eta, p))
    raise ValueError(f"unknown inequality {inequality_id!r}; use one of {INEQUALITIES}")


def _bisect_increasing(fn, lo: float, hi: float, tol: float) -> float:
    """Root of an increasing fn on [lo, hi] with fn(lo) <= 0 <= fn(hi)."""
    flo = fn(lo)
    fhi = fn(hi)
    if flo > 0.0 or fhi < 0.0:
        raise MonotonicityError(
            f"bracket [{lo}, {hi}] does not straddle the root: "
            f"f(lo)={flo:.3e}, f(hi)={fhi:.3e}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_efficiency(n: int, p: float, inequality_id: str, rule: QuadratureRule,
                        tol: float = 1e-6) -> Optional[float]:
    """Smallest efficiency giving B = 1 at fixed purity; None if B(1, p) <= 1.

    Bisection on [0.3, 1]; the Bell values are increasing in eta, so a
    violated lower bracket means an internal inconsistency and raises.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    lo, hi = _ETA_BRACKET
    if bell_ratio(inequality_id, n, hi, p, rule) <= 1.0:
        return None
    if bell_ratio(inequality_id, n, lo, p, rule) > 1.0:
        raise MonotonicityError(
            f"{inequality_id} at n={n}, p={p}: violation persists at eta={lo}; "
            "monotonicity assumption broken"
        )
    return _bisect_increasing(
        lambda e: bell_ratio(inequality_id, n, e, p, rule) - 1.0, lo, hi, tol
    )


def critical_purity(n: int, eta: float, inequality_id: str, rule: QuadratureRule,
                    tol: float = 1e-6) -> Optional[float]:
    """Smallest purity giving B = 1 at fixed efficiency; None if B(eta, 1) <= 1.

    The binned inequality uses the exact product inversion
    p = sqrt(mk_critical_product(n) / eta), cross-checked against its
    product-form observable; the others bisect on the mixed-state value.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta!r}")
    if inequality_id == "mk":
        target = mk_critical_product(n) / eta
        if target > 1.0:
            return None
        p = float(np.sqrt(target))
        check = mk_bell_value_product_form(_canonical_spec(n, eta, p))
        if abs(check - 1.0) > 1e-9:
            raise MonotonicityError(
                f"product inversion failed its cross-check: B={check!r} at p={p!r}"
            )
        return p
    if bell_ratio(inequality_id, n, eta, 1.0, rule) <= 1.0:
        return None
    return _bisect_increasing(
        lambda p: bell_ratio(inequality_id, n, eta, p, rule) - 1.0, 1e-9, 1.0, tol
    )


def critical_curve(inequality_id: str, parameter: str, n_values: Sequence[int],
                   rule: QuadratureRule, fixed: float = 1.0,
                   tol: float = 1e-6) -> CriticalCurve:
    """Threshold sweep over mode counts at a fixed complementary parameter."""
    vals = []
    for n in n_values:
        if parameter == "efficiency":
            vals.append(critical_efficiency(n, fixed, inequality_id, rule, tol))
        elif parameter == "purity":
            vals.append(critical_purity(n, fixed, inequality_id, rule, tol))
        else:
            raise ValueError(f"unknown parameter {parameter!r}")
    return CriticalCurve(
        inequality_id=inequality_id,
        n_values=tuple(int(n) for n in n_values),
        critical_values=tuple(vals),
        parameter=parameter,
    )


def curve_to_csv_rows(curve: CriticalCurve):
    """Rows (N, value, parameter, inequality_id, converged_flag) for export."""
    rows = []
    for n, v in zip(curve.n_values, curve.critical_values):
        rows.append((
            n,
            "" if v is None else v,
            curve.parameter,
            curve.inequality_id,
            "converged" if v is not None else "no_violation",
        ))
    return rows


def curve_to_csv_text(curve: CriticalCurve) -> str:
    """Deterministic CSV (12 significant digits, LF) of a threshold curve."""
    lines = ["N,value,parameter,inequality_id,converged_flag"]
    for n, value, parameter, ineq, flag in curve_to_csv_rows(curve):
        val = "" if value == "" else f"{value:.12g}"
        lines.append(f"{n},{val},{parameter},{ineq},{flag}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# asymptotics
# ---------------------------------------------------------------------------

def _functional_product_threshold(n: int, rule: QuadratureRule,
                                  tol: float = 1e-9) -> Optional[float]:
    """Root in s of the product-form ratio at mode count n.

    The product form folds all decoherence into the per-site monomial s^2
    (s = eta * p) while keeping the measurement function at its noise-free
    optimum; the admixture constant C is evaluated at effective efficiency s.
    """
    ki = kernel_integrals(Optimal(ideal_epsilon(rule)), rule)
    ip, ii, i0 = ki.i_plus, ki.i_cross, ki.i_zero

    def ratio(s: float) -> float:
        c = s * ii + (1.0 - s) * i0
        return 2.0 ** (n - 2) * (2.0 * ip ** 4 * s * s / (np.pi * i0 * c)) ** (n / 2.0)

    if ratio(1.0) <= 1.0:
        return None
    return _bisect_increasing(lambda s: ratio(s) - 1.0, 0.3, 1.0, tol)


def _richardson(n1: int, v1: float, n2: int, v2: float) -> float:
    """Two-point elimination of the leading 1/N correction (n2 > n1)."""
    x1, x2 = 1.0 / n1, 1.0 / n2
    return (v2 * x1 - v1 * x2) / (x1 - x2)


def asymptotic_product(inequality_id: str, n_max: int, rule: QuadratureRule) -> AsymptoticProduct:
    """Large-N limit of the decoherence threshold for the named inequality.

    Sweeps even mode counts up to ``n_max`` and removes the leading 1/N
    correction from the last two points.  The tracked quantity is the
    efficiency-purity product s = eta*p for the functional inequality, the
    product eta*p^2 for the binned one, and the pure-state critical
    efficiency for plain moment correlations.
    """
    if n_max < 20:
        raise ValueError(f"n_max must be at least 20, got {n_max}")
    ns = [n for n in range(4, n_max + 1) if n % 2 == 0]

    if inequality_id == "functional":
        pts = [(n, _functional_product_threshold(n, rule)) for n in ns]
        parameter = "product"
    elif inequality_id == "cfrd":
        pts = [(n, critical_efficiency(n, 1.0, "cfrd", rule, tol=1e-9)) for n in ns]
        parameter = "efficiency"
    elif inequality_id == "mk":
        pts = [(n, mk_critical_product(n)) for n in ns]
        parameter = "product"
    else:
        raise ValueError(f"unknown inequality {inequality_id!r}; use one of {INEQUALITIES}")

    pts = [(n, v) for n, v in pts if v is not None]
    if len(pts) < 2:
        raise MonotonicityError(
            f"{inequality_id}: fewer than two threshold points below n_max={n_max}"
        )
    (n1, v1), (n2, v2) = pts[-2], pts[-1]
    return AsymptoticProduct(
        inequality_id=inequality_id,
        parameter=parameter,
        limit=float(_richardson(n1, v1, n2, v2)),
        raw_tail=float(v2),
        n_tail=int(n2),
    )
