"""Knee-gauge capacities and the two-gauge limit machinery.

cap_eps computes the capacity under hybrid(f, g, eps). cap_hybrid sweeps a
decreasing eps schedule with resolution coupled to eps and reports the
monotone sequence plus a last-value limit estimate (no extrapolation is
claimed; an Aitken-accelerated value is reported separately and labeled).
cap_constrained minimizes the f-energy subject to a g-energy budget by
penalized conditional gradient.

At any fixed finite discretization every measure has finite g-energy, so
the constrained problem with a large budget collapses to the plain
f-capacity; the two-gauge separation only emerges along the coupled
(eps, resolution) schedule. Both facts are asserted in the test suite.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .capacity import (
    CapacityResult,
    DENSE_LIMIT,
    DiscreteMeasure,
    SolverError,
    _DenseKernelOp,
    _RadialKernelOp,
    _away_fw,
    capacity,
    energy,
    equilibrium_measure,
)
from .gauges import Gauge, describe, hybrid, kernel_matrix
from .geometry import CompactSet, node_arrays


class UnderResolvedError(ValueError):
    """Set resolution too coarse to resolve the knee of the hybrid gauge."""


@dataclass(frozen=True)
class HybridResult:
    eps_schedule: tuple[float, ...]
    cap_values: tuple[float, ...]
    resolution_schedule: tuple[float, ...]
    limit_estimate: float
    monotone_ok: bool
    aitken_estimate: Optional[float]
    kkt_residuals: tuple[float, ...]
    set_label: str
    f: str
    g: str

    def to_json_dict(self) -> dict:
        return {
            "set_label": self.set_label,
            "f": self.f,
            "g": self.g,
            "eps_schedule": list(self.eps_schedule),
            "resolution_schedule": list(self.resolution_schedule),
            "cap_values": list(self.cap_values),
            "limit_estimate": self.limit_estimate,
            "monotone_ok": self.monotone_ok,
            "aitken_estimate": self.aitken_estimate,
            "kkt_residuals": list(self.kkt_residuals),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["eps", "resolution", "cap_eps", "kkt_residual"])
        for e, r, c, k in zip(
            self.eps_schedule, self.resolution_schedule, self.cap_values,
            self.kkt_residuals,
        ):
            writer.writerow([repr(e), repr(r), repr(c), repr(k)])
        return buf.getvalue()


def cap_eps(cs: CompactSet, eps: float, f: Gauge, g: Gauge,
            tol: float = 1e-8, theta: float = 0.5) -> CapacityResult:
    """Capacity of the set under the knee gauge hybrid(f, g, eps).

    Requires resolution <= eps/4 so the grid resolves the knee.
    """
    if cs.is_empty:
        raise SolverError("cap_eps of an empty set; callers treat it as 0")
    if cs.resolution > eps / 4.0:
        raise UnderResolvedError(
            f"under-resolved: set resolution {cs.resolution:.6g} exceeds eps/4 = "
            f"{eps / 4.0:.6g}; rebuild the set at resolution <= {eps / 4.0:.6g}"
        )
    return capacity(cs, hybrid(f, g, eps), tol=tol, theta=theta)


def _aitken(values: Sequence[float]) -> Optional[float]:
    if len(values) < 3:
        return None
    x0, x1, x2 = values[-3], values[-2], values[-1]
    denom = (x2 - x1) - (x1 - x0)
    if denom == 0.0:
        return None
    return x2 - (x2 - x1) ** 2 / denom


def cap_hybrid(set_builder: Callable[[float], CompactSet],
               eps_schedule: Sequence[float],
               coupling: float = 0.125,
               f: Gauge = None, g: Gauge = None,
               tol: float = 1e-8, theta: float = 0.5,
               monotone_slack: float = 1e-6) -> HybridResult:
    """Sweep cap_eps along a decreasing eps schedule with coupled resolution.

    The set is rebuilt at resolution coupling * eps for each eps. The limit
    estimate is the last value of the sequence; monotone_ok flags whether
    the sequence is nondecreasing up to ``monotone_slack`` relative
    (violations indicate discretization error, not a solver failure).
    """
    from .gauges import LOG, LOG2

    f = LOG if f is None else f
    g = LOG2 if g is None else g
    eps_schedule = [float(e) for e in eps_schedule]
    if any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise ValueError("eps_schedule must be strictly decreasing")
    if not (0.0 < coupling <= 0.25):
        raise ValueError(f"coupling must lie in (0, 1/4], got {coupling}")
    caps, residuals, resolutions = [], [], []
    for eps in eps_schedule:
        cs = set_builder(coupling * eps)
        res = cap_eps(cs, eps, f, g, tol=tol, theta=theta)
        caps.append(res.value)
        residuals.append(res.kkt_residual)
        resolutions.append(cs.resolution)
    monotone_ok = all(
        b >= a * (1.0 - monotone_slack) for a, b in zip(caps, caps[1:])
    )
    return HybridResult(
        eps_schedule=tuple(eps_schedule),
        cap_values=tuple(caps),
        resolution_schedule=tuple(resolutions),
        limit_estimate=caps[-1],
        monotone_ok=monotone_ok,
        aitken_estimate=_aitken(caps),
        kkt_residuals=tuple(residuals),
        set_label=set_builder(coupling * eps_schedule[-1]).label,
        f=describe(f),
        g=describe(g),
    )


def _energy_and_grad(op, w):
    sup = np.flatnonzero(w > 0.0)
    phi = op.potential(w, sup)
    return float(w @ phi), phi


def cap_constrained(cs: CompactSet, f: Gauge, g: Gauge, gamma: float,
                    tol: float = 1e-8, theta: float = 0.5,
                    max_iter: int = 20_000) -> float:
    """Reciprocal of min E_f(mu) over probability measures with E_g(mu) <= gamma.

    Penalized conditional gradient: minimize E_f + P * max(0, E_g - gamma)
    with the penalty escalating tenfold per round (six rounds) until the
    budget holds at tolerance. gamma = inf reduces to the plain capacity.
    """
    if cs.is_empty:
        raise SolverError("constrained capacity of an empty set")
    if math.isinf(gamma):
        return capacity(cs, f, tol=tol, theta=theta).value
    g_min = 1.0 / capacity(cs, g, tol=tol, theta=theta).value
    if gamma <= g_min:
        raise SolverError(
            f"infeasible g-energy budget {gamma:.6g}: the minimum achievable "
            f"g-energy on this set is {g_min:.6g}"
        )
    pts, diams = node_arrays(cs)
    if len(cs) <= DENSE_LIMIT:
        op_f = _DenseKernelOp(kernel_matrix(cs, f, theta).entries)
        op_g = _DenseKernelOp(kernel_matrix(cs, g, theta).entries)
    else:
        op_f = _RadialKernelOp(pts, diams, f, theta)
        op_g = _RadialKernelOp(pts, diams, g, theta)
    n = len(cs)

    # start from the g-feasible side: the f-equilibrium if feasible, else
    # the g-equilibrium (always feasible since gamma > E_g*)
    res_f = capacity(cs, f, tol=tol, theta=theta)
    w = res_f.measure.weights.copy()
    if energy(op_g, w) <= gamma:
        return res_f.value

    w = capacity(cs, g, tol=tol, theta=theta).measure.weights.copy()
    penalty = 1.0
    for _ in range(6):
        for it in range(max_iter):
            sup = np.flatnonzero(w > 0.0)
            phi_f = op_f.potential(w, sup)
            phi_g = op_g.potential(w, sup)
            e_f = float(w @ phi_f)
            e_g = float(w @ phi_g)
            active = e_g > gamma
            grad = 2.0 * (phi_f + (penalty if active else 0.0) * phi_g)
            j = int(np.argmin(grad))
            gap = float(grad @ w - grad[j])
            obj = e_f + penalty * max(0.0, e_g - gamma)
            if gap <= tol * max(1.0, abs(obj)):
                break
            # exact line search on the piecewise-quadratic objective
            d_f = float(phi_f[j])
            d_g = float(phi_g[j])
            kff = float(op_f.diag[j])
            kgg = float(op_g.diag[j])

            def seg_energy(t, e0, cross, kjj):
                return (1 - t) ** 2 * e0 + 2 * t * (1 - t) * cross + t * t * kjj

            def objective(t):
                ef_t = seg_energy(t, e_f, d_f, kff)
                eg_t = seg_energy(t, e_g, d_g, kgg)
                return ef_t + penalty * max(0.0, eg_t - gamma)

            candidates = [0.0, 1.0]
            for e0, cross, kjj in ((e_f, d_f, kff), (e_g, d_g, kgg)):
                denom = e0 - 2 * cross + kjj
                if denom > 0:
                    candidates.append(min(1.0, max(0.0, (e0 - cross) / denom)))
            denom = (e_f + penalty * e_g) - 2 * (d_f + penalty * d_g) + (kff + penalty * kgg)
            if denom > 0:
                num = (e_f + penalty * e_g) - (d_f + penalty * d_g)
                candidates.append(min(1.0, max(0.0, num / denom)))
            # crossing point of E_g(t) = gamma, if inside (0,1)
            a_q = e_g - 2 * d_g + kgg
            b_q = 2 * (d_g - e_g)
            c_q = e_g - gamma
            if a_q != 0.0:
                disc = b_q * b_q - 4 * a_q * c_q
                if disc >= 0.0:
                    for root in ((-b_q + math.sqrt(disc)) / (2 * a_q),
                                 (-b_q - math.sqrt(disc)) / (2 * a_q)):
                        if 0.0 < root < 1.0:
                            candidates.append(root)
            t_best = min(candidates, key=objective)
            if t_best <= 0.0:
                break
            w *= 1.0 - t_best
            w[j] += t_best
        e_g = energy(op_g, w)
        if e_g <= gamma * (1.0 + 1e-9):
            break
        penalty *= 10.0
    e_f = energy(op_f, w)
    return 1.0 / e_f
