"""Energies, equilibrium measures, capacities, potentials, regular points.

The equilibrium problem is min_w w' K w over the probability simplex. The
solver is conditional gradient with away steps (exact line search, duality
gap stopping rule) followed by an active-set polish that solves the
equality-constrained system on the support and verifies the KKT
certificate globally:

    Phi_i  = E*   on the support,
    Phi_i >= E*   everywhere,        Phi = K w,  E* = min energy.

Capacity is 1/E*. Kernel columns are generated on demand from node
coordinates (the matrix is dense but never materialized above a size
threshold), so grids of ~1e6 nodes stay tractable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit, prange

from .geometry import CompactSet, node_arrays
from .gauges import Gauge, GaugeError, KernelMatrix, _eval_raw, describe, kernel_matrix


@njit(inline="always")
def _base_gauge_d2(code, alpha, d2):
    if code == 0:      # -log r
        return -0.5 * math.log(d2)
    elif code == 1:    # (log r)^2
        t = 0.5 * math.log(d2)
        return t * t
    else:              # r^-alpha
        return d2 ** (-0.5 * alpha)


@njit(parallel=True, cache=True)
def _pot_kernel(cx, cy, px, py, ws, selfj, diag,
                is_hyb, fcode, falpha, gcode, galpha, eps2, scale):
    n = cx.shape[0]
    m = px.shape[0]
    out = np.empty(n)
    for i in prange(n):
        xi = cx[i]
        yi = cy[i]
        acc = 0.0
        for k in range(m):
            if selfj[k] == i:
                acc += ws[k] * diag[i]
                continue
            dx = xi - px[k]
            dy = yi - py[k]
            d2 = dx * dx + dy * dy
            if is_hyb and d2 < eps2:
                v = scale * _base_gauge_d2(gcode, galpha, d2)
            else:
                v = _base_gauge_d2(fcode, falpha, d2)
            acc += ws[k] * v
        out[i] = acc
    return out


_GAUGE_CODE = {"log": 0, "log2": 1, "pow": 2}


def _gauge_kernel_params(gauge: Gauge):
    """(is_hyb, fcode, falpha, gcode, galpha, eps2, scale) for the jit kernel."""
    if gauge.kind == "hyb":
        f, g = gauge.f, gauge.g
        scale = float(_eval_raw(f, gauge.eps) / _eval_raw(g, gauge.eps))
        return (True, _GAUGE_CODE[f.kind], float(f.alpha or 0.0),
                _GAUGE_CODE[g.kind], float(g.alpha or 0.0),
                float(gauge.eps) ** 2, scale)
    return (False, _GAUGE_CODE[gauge.kind], float(gauge.alpha or 0.0),
            0, 0.0, 0.0, 1.0)

DENSE_LIMIT = 1600          # below this node count the full matrix is materialized
POLISH_SUPPORT_CAP = 6000   # largest support solved directly in the polish
_SELF_SENTINEL = 0.5        # placeholder distance for self-pairs, corrected afterward


class SolverError(ValueError):
    """Raised for structurally invalid solver inputs."""


@dataclass(frozen=True)
class DiscreteMeasure:
    """Nonnegative weights over the cells of a set."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise SolverError("measure weights must be a vector")
        if np.any(w < 0.0):
            raise SolverError("measure weights must be nonnegative")
        object.__setattr__(self, "weights", w)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0.0)


def point_mass(n: int, i: int) -> DiscreteMeasure:
    w = np.zeros(n)
    w[i] = 1.0
    return DiscreteMeasure(w)


def uniform_measure(n: int) -> DiscreteMeasure:
    return DiscreteMeasure(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class CapacityResult:
    value: float
    energy: float
    measure: DiscreteMeasure
    kkt_residual: float
    iterations: int
    gauge: str
    set_label: str = ""
    converged: bool = True
    duality_gap: float = 0.0

    def to_json_dict(self) -> dict:
        sup = self.measure.support
        return {
            "set_label": self.set_label,
            "gauge": self.gauge,
            "capacity": self.value,
            "energy": self.energy,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "duality_gap": self.duality_gap,
            "support_indices": [int(i) for i in sup],
            "support_weights": [float(self.measure.weights[i]) for i in sup],
        }


class _RadialKernelOp:
    """Kernel columns/potentials computed on demand from node coordinates."""

    def __init__(self, centers, diameters, gauge: Gauge, theta: float):
        self.centers = np.ascontiguousarray(centers, dtype=float)
        self.diameters = np.asarray(diameters, dtype=float)
        self.gauge = gauge
        self.theta = float(theta)
        self.n = len(self.centers)
        self._r2 = (self.centers**2).sum(axis=1)
        diag_args = self.theta * self.diameters
        if np.any(diag_args <= 0.0) or np.any(diag_args >= 1.0):
            raise SolverError("diagonal arguments theta*diameter must lie in (0, 1)")
        self.diag = _eval_raw(gauge, diag_args)

    def _gauge_from_d2(self, d2):
        g = self.gauge
        if g.kind == "log":
            return -0.5 * np.log(d2)
        if g.kind == "log2":
            lr = 0.5 * np.log(d2)
            return lr * lr
        if g.kind == "pow":
            return d2 ** (-0.5 * g.alpha)
        if g.kind == "hyb":
            scale = _eval_raw(g.f, g.eps) / _eval_raw(g.g, g.eps)
            fa = _self_eval(g.f, d2)
            ga = _self_eval(g.g, d2)
            return np.where(d2 >= g.eps * g.eps, fa, ga * scale)
        raise GaugeError(f"unknown gauge kind {g.kind!r}")

    def column(self, j: int) -> np.ndarray:
        d2 = self._r2 + self._r2[j] - 2.0 * (self.centers @ self.centers[j])
        d2[j] = _SELF_SENTINEL
        np.maximum(d2, 1e-300, out=d2)
        col = self._gauge_from_d2(d2)
        col[j] = self.diag[j]
        return col

    def potential(self, w: np.ndarray, support: np.ndarray) -> np.ndarray:
        """Full K @ w using only the support's columns (fused jit kernel;
        per-node accumulation order is fixed, so results are bitwise
        independent of the thread count)."""
        idx = np.asarray(support, dtype=np.intp)
        ws = np.ascontiguousarray(w[idx])
        px = np.ascontiguousarray(self.centers[idx, 0])
        py = np.ascontiguousarray(self.centers[idx, 1])
        cx = np.ascontiguousarray(self.centers[:, 0])
        cy = np.ascontiguousarray(self.centers[:, 1])
        params = _gauge_kernel_params(self.gauge)
        return _pot_kernel(cx, cy, px, py, ws, idx, self.diag, *params)

    def submatrix(self, idx: np.ndarray) -> np.ndarray:
        pts = self.centers[idx]
        r2 = (pts**2).sum(axis=1)
        d2 = r2[:, None] + r2[None, :] - 2.0 * (pts @ pts.T)
        np.fill_diagonal(d2, _SELF_SENTINEL)
        np.maximum(d2, 1e-300, out=d2)
        a = self._gauge_from_d2(d2)
        a[np.diag_indices(len(idx))] = self.diag[idx]
        return a


def _self_eval(gauge: Gauge, d2):
    if gauge.kind == "log":
        return -0.5 * np.log(d2)
    if gauge.kind == "log2":
        lr = 0.5 * np.log(d2)
        return lr * lr
    if gauge.kind == "pow":
        return d2 ** (-0.5 * gauge.alpha)
    raise GaugeError("knee gauge branches must be base gauges")


class _DenseKernelOp:
    """Same interface on a materialized matrix."""

    def __init__(self, entries: np.ndarray):
        self.entries = entries
        self.n = entries.shape[0]
        self.diag = np.diag(entries).copy()

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j].astype(float, copy=True)

    def potential(self, w: np.ndarray, support: np.ndarray) -> np.ndarray:
        idx = np.asarray(support, dtype=np.intp)
        return self.entries[:, idx] @ w[idx]

    def submatrix(self, idx: np.ndarray) -> np.ndarray:
        return self.entries[np.ix_(idx, idx)]


def _as_operator(K) -> Union[_DenseKernelOp, _RadialKernelOp]:
    if isinstance(K, KernelMatrix):
        return _DenseKernelOp(K.entries)
    if isinstance(K, (_DenseKernelOp, _RadialKernelOp)):
        return K
    if isinstance(K, np.ndarray):
        return _DenseKernelOp(K)
    raise SolverError(f"unsupported kernel object {type(K)!r}")


def energy(K, mu) -> float:
    """Quadratic form w' K w of a measure against a kernel."""
    op = _as_operator(K)
    w = mu.weights if isinstance(mu, DiscreteMeasure) else np.asarray(mu, dtype=float)
    if len(w) != op.n:
        raise SolverError(f"dimension mismatch: kernel {op.n}, measure {len(w)}")
    sup = np.flatnonzero(w != 0.0)
    if len(sup) == 0:
        return 0.0
    return float(w @ op.potential(w, sup))


def potential(K, mu, i: int) -> float:
    """(K w)_i, the potential of the measure at node i."""
    op = _as_operator(K)
    w = mu.weights if isinstance(mu, DiscreteMeasure) else np.asarray(mu, dtype=float)
    if len(w) != op.n:
        raise SolverError(f"dimension mismatch: kernel {op.n}, measure {len(w)}")
    if not (0 <= i < op.n):
        raise SolverError(f"node index {i} out of range [0, {op.n})")
    sup = np.flatnonzero(w != 0.0)
    if len(sup) == 0:
        return 0.0
    return float(op.potential(w, sup)[i])


def potential_vector(K, mu) -> np.ndarray:
    op = _as_operator(K)
    w = mu.weights if isinstance(mu, DiscreteMeasure) else np.asarray(mu, dtype=float)
    sup = np.flatnonzero(w != 0.0)
    if len(sup) == 0:
        return np.zeros(op.n)
    return op.potential(w, sup)


def _away_fw(op, tol, max_iter, w0=None):
    """Away-step conditional gradient. Returns (w, phi, E, iters, gap)."""
    n = op.n
    diag = op.diag
    if w0 is None:
        i0 = int(np.argmin(diag))
        w = np.zeros(n)
        w[i0] = 1.0
        phi = op.column(i0)
        E = float(diag[i0])
        sup = [i0]
    else:
        w = w0.copy()
        sup = [int(i) for i in np.flatnonzero(w > 0.0)]
        phi = op.potential(w, np.asarray(sup))
        E = float(w @ phi)
    it = 0
    gap = math.inf
    while it < max_iter:
        it += 1
        j = int(np.argmin(phi))
        gap = 2.0 * (E - phi[j])
        if gap <= tol * abs(E):
            break
        sup_arr = np.asarray(sup, dtype=np.intp)
        a_local = int(np.argmax(phi[sup_arr]))
        a = int(sup_arr[a_local])
        away_score = 2.0 * (phi[a] - E)

        if gap >= away_score or len(sup) == 1:
            # toward step: d = e_j - w
            phi_j = float(phi[j])
            denom = float(diag[j]) - 2.0 * phi_j + E
            gamma = 1.0 if denom <= 0.0 else min(1.0, (E - phi_j) / denom)
            if gamma <= 0.0:
                break
            colj = op.column(j)
            if gamma >= 1.0:
                w[:] = 0.0
                w[j] = 1.0
                sup = [j]
                phi = colj
                E = float(diag[j])
            else:
                if w[j] == 0.0:
                    sup.append(j)
                w *= 1.0 - gamma
                w[j] += gamma
                phi *= 1.0 - gamma
                phi += gamma * colj
                E = (1 - gamma) ** 2 * E + 2 * gamma * (1 - gamma) * phi_j + gamma**2 * float(diag[j])
        else:
            # away step: d = w - e_a
            wa = float(w[a])
            if wa >= 1.0:
                break
            gamma_max = wa / (1.0 - wa)
            phi_a = float(phi[a])
            denom = E - 2.0 * phi_a + float(diag[a])
            gamma = gamma_max if denom <= 0.0 else min(gamma_max, (phi_a - E) / denom)
            if gamma <= 0.0:
                break
            cola = op.column(a)
            w *= 1.0 + gamma
            w[a] -= gamma * 1.0
            np.maximum(w, 0.0, out=w)
            phi *= 1.0 + gamma
            phi -= gamma * cola
            E = (1 + gamma) ** 2 * E - 2 * gamma * (1 + gamma) * phi_a + gamma**2 * float(diag[a])
            if gamma >= gamma_max * (1.0 - 1e-14) or w[a] <= 0.0:
                w[a] = 0.0
                sup.pop(a_local)
        if it % 512 == 0:
            s = float(w.sum())
            if abs(s - 1.0) > 1e-13:
                w /= s
                phi /= s
                E /= s * s
    return w, phi, E, it, gap


def _solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b with iterative refinement; the fine-grid Gram matrices
    are ill-conditioned enough (adjacent-cell rows nearly dependent) that a
    bare factorization leaves ~1e-4 backward error in the KKT potentials."""
    solve = None
    try:
        from scipy.linalg import cho_factor, cho_solve

        fac = cho_factor(a, lower=True, check_finite=False)
        solve = lambda rhs: cho_solve(fac, rhs, check_finite=False)
    except Exception:
        try:
            from scipy.linalg import lu_factor, lu_solve

            fac = lu_factor(a, check_finite=False)
            solve = lambda rhs: lu_solve(fac, rhs, check_finite=False)
        except Exception:
            return np.linalg.lstsq(a, b, rcond=None)[0]
    x = solve(b)
    for _ in range(3):
        r = b - a @ x
        if np.max(np.abs(r)) <= 1e-14 * max(1.0, np.max(np.abs(b))):
            break
        x = x + solve(r)
    return x


def _equality_solve(a, p, ridge_rel: float = 1e-8):
    """Solve the level system on index set p; returns (z normalized, level).

    A relative ridge of 1e-8 on the diagonal stabilizes the near-null
    space of fine-grid Gram matrices (weight signs become meaningful);
    the bias it introduces in the level potentials is ~1e-11 relative and
    every certificate is verified against the unregularized kernel."""
    sub = a[np.ix_(p, p)]
    if ridge_rel > 0.0:
        sub = sub + (ridge_rel * float(np.mean(np.diag(sub)))) * np.eye(len(p))
    z = _solve_spd(sub, np.ones(len(p)))
    total = float(z.sum())
    if not np.all(np.isfinite(z)) or total <= 0.0:
        return None, None
    return z / total, 1.0 / total


def _restricted_minimum(a: np.ndarray, readd_tol: float = 3e-9,
                        max_readds: int = 400):
    """Minimize w'Aw over the simplex restricted to the rows of ``a``.

    Two phases. Cleanup: solve the equality system and drop every negative
    weight at once until feasible (fast on overcomplete index sets).
    Pivoting: classical one-at-a-time re-add of the worst under-level
    index with Lawson-Hanson line-search drops, which handles the
    degenerate swaps (new node in, blocking node out) that bulk dropping
    cannot. A node re-added three times is frozen out; the outer
    verification loop runs against full-precision potentials anyway.
    Returns (w, energy) on the local index set, or None on failure.
    """
    m = a.shape[0]
    if m == 1:
        return np.ones(1), float(a[0, 0])
    in_p = np.ones(m, dtype=bool)

    # cleanup phase
    z = lam = None
    for _ in range(80):
        p = np.flatnonzero(in_p)
        z, lam = _equality_solve(a, p)
        if z is None:
            return None
        if z.min() >= 0.0:
            break
        keep = z > 0.0
        if not keep.any():
            return None
        in_p[p[~keep]] = False
    else:
        return None
    w = np.zeros(m)
    w[p] = z

    # pivoting phase
    readd_count = np.zeros(m, dtype=np.int32)
    for _ in range(max_readds):
        p = np.flatnonzero(in_p)
        phi_local = a[:, p] @ w[p]
        out = ~in_p & (readd_count < 3)
        out_idx = np.flatnonzero(out)
        if len(out_idx) == 0 or phi_local[out_idx].min() >= lam * (1.0 - readd_tol):
            # done, unless a frozen node still violates; those pivots are
            # too degenerate for equality solves, so descend directly
            frozen = np.flatnonzero(~in_p & (readd_count >= 3))
            if len(frozen) == 0 or phi_local[frozen].min() >= lam * (1.0 - readd_tol):
                return w, lam
            return _descent_fallback(a, w, lam, readd_tol)
        u = out_idx[np.argmin(phi_local[out_idx])]
        in_p[u] = True
        readd_count[u] += 1
        for _ in range(200):
            p = np.flatnonzero(in_p)
            z, lam_new = _equality_solve(a, p)
            if z is None:
                return None
            if z.min() >= 0.0:
                w[:] = 0.0
                w[p] = z
                lam = lam_new
                break
            cur = w[p]
            d = z - cur
            neg = d < 0.0
            alpha = min(1.0, float((cur[neg] / -d[neg]).min()))
            cur = cur + alpha * d
            cur[cur < 1e-15] = 0.0
            w[:] = 0.0
            w[p] = cur
            keep = cur > 0.0
            if keep.all() or not keep.any():
                return None
            in_p[p[~keep]] = False
    return w, float(w @ a @ w)


def _descent_fallback(a, w, lam, readd_tol):
    """Away-step descent on the local dense matrix for pivots the equality
    solves cannot place (near-null-space degeneracy), then one equality
    re-solve on the descent support for an exact level."""
    op = _DenseKernelOp(a)
    w_fw, _, e_fw, _, _ = _away_fw(op, max(readd_tol, 1e-9), 200_000, w0=w.copy())
    p = np.flatnonzero(w_fw > 0.0)
    z, lam_eq = _equality_solve(a, p)
    if z is not None and z.min() >= 0.0:
        phi_local = a[:, p] @ z
        if phi_local.min() >= lam_eq * (1.0 - readd_tol):
            out = np.zeros(len(a))
            out[p] = z
            return out, lam_eq
    return w_fw, float(w_fw @ a @ w_fw)


def _polish(op, support, tol, max_rounds=40, add_per_round=1024):
    """Active-set refinement: solve on the support, verify global KKT,
    grow the support by the worst violators, repeat. Returns the best
    iterate found or None when the support exceeds the direct-solve cap.

    Screening rounds on large grids run the global potential in float32
    (threshold 30x float32 noise); every accepted certificate is float64.
    """
    S = np.unique(np.asarray(support, dtype=np.intp))
    best = None
    for _ in range(max_rounds):
        if len(S) > POLISH_SUPPORT_CAP:
            return best
        a = op.submatrix(S)
        sol = _restricted_minimum(a)
        if sol is None:
            return best
        w_s, _ = sol
        keep = w_s > 0.0
        w = np.zeros(op.n)
        w[S] = w_s
        sup_now = S[keep]
        phi = op.potential(w, sup_now)
        # level from the true kernel; the inner solves are ridge-stabilized
        lam = float(w @ phi)
        under = float(np.max(lam - phi))
        kkt = max(0.0, under) / lam + float(np.max(np.abs(phi[sup_now] - lam))) / lam
        cand = (w, phi, lam, sup_now, kkt)
        if best is None or kkt < best[4]:
            best = cand
        if under <= tol * lam:
            break
        viol = np.flatnonzero(phi < lam * (1.0 - tol))
        if len(viol) == 0:
            continue
        viol = viol[np.argsort(phi[viol])][:add_per_round]
        S = np.unique(np.concatenate([sup_now, viol]))
    return best


def equilibrium_measure(K, tol: float = 1e-8, max_iter: int = 100_000,
                        set_label: str = "", gauge_name: str = "") -> CapacityResult:
    """Minimize w'Kw over the probability simplex.

    Accepts a KernelMatrix (or a raw symmetric array / internal operator).
    Returns the measure, minimal energy E*, capacity 1/E*, and the KKT
    residual max(0, E*-Phi_i)/E* + max_support |Phi_i - E*|/E*.
    On non-convergence the best iterate is returned with converged=False
    and its duality gap.
    """
    if tol <= 0.0:
        raise SolverError(f"tol must be > 0, got {tol}")
    if isinstance(K, KernelMatrix):
        if not gauge_name:
            gauge_name = describe(K.gauge)
        if not set_label:
            set_label = K.set_label
    op = _as_operator(K)
    if op.n == 0:
        raise SolverError("equilibrium problem of dimension 0")
    if op.n == 1:
        e = float(op.diag[0])
        return CapacityResult(
            value=1.0 / e, energy=e, measure=point_mass(1, 0), kkt_residual=0.0,
            iterations=0, gauge=gauge_name, set_label=set_label,
            converged=True, duality_gap=0.0,
        )

    # Conditional-gradient phase seeds the active set; the polish owns the
    # final accuracy, growing the support by KKT violators. Only if the
    # polish stalls does the conditional gradient resume at full tolerance.
    seed_tol = max(tol, 1e-3 if op.n > 20_000 else 1e-5)
    seed_iters = min(max_iter, 4000 if op.n > 20_000 else max_iter)
    w, phi, E, iters, gap = _away_fw(op, seed_tol, seed_iters)
    best_kkt = None
    for _ in range(3):
        sup = np.flatnonzero(w > 0.0)
        polished = _polish(op, sup, tol)
        if polished is not None:
            pw, pphi, plam, pS, pkkt = polished
            if best_kkt is None or pkkt < best_kkt[4]:
                best_kkt = polished
            if pkkt <= tol:
                break
            w = pw
        # tighten with more conditional-gradient work from the better iterate
        w, phi, E, extra, gap = _away_fw(op, tol, min(max_iter, 3000), w0=w)
        iters += extra
        if best_kkt is not None and best_kkt[4] <= tol:
            break
        if gap <= tol * abs(E):
            break

    if best_kkt is not None:
        w, phi, E, S, kkt = best_kkt
        lam = E
    else:
        sup = np.flatnonzero(w > 0.0)
        phi = op.potential(w, sup)
        lam = float(w @ phi)
        under = max(0.0, float(np.max(lam - phi)))
        on_sup = float(np.max(np.abs(phi[sup] - lam)))
        kkt = under / lam + on_sup / lam
        E = lam
    return CapacityResult(
        value=1.0 / E,
        energy=E,
        measure=DiscreteMeasure(w),
        kkt_residual=float(kkt),
        iterations=iters,
        gauge=gauge_name,
        set_label=set_label,
        converged=bool(kkt <= tol),
        duality_gap=float(gap),
    )


def capacity(cs: CompactSet, gauge: Gauge, tol: float = 1e-8,
             theta: float = 0.5, max_iter: int = 100_000) -> CapacityResult:
    """Capacity of a set under a gauge: kernel assembly + equilibrium solve."""
    if cs.is_empty:
        raise SolverError("capacity of an empty set; callers treat it as 0")
    if len(cs) <= DENSE_LIMIT:
        km = kernel_matrix(cs, gauge, diagonal_theta=theta)
        return equilibrium_measure(km, tol=tol, max_iter=max_iter,
                                   set_label=cs.label, gauge_name=describe(gauge))
    pts, diams = node_arrays(cs)
    op = _RadialKernelOp(pts, diams, gauge, theta)
    return equilibrium_measure(op, tol=tol, max_iter=max_iter,
                               set_label=cs.label, gauge_name=describe(gauge))


@dataclass(frozen=True)
class RegularPartition:
    regular: np.ndarray
    nonregular: np.ndarray
    result: CapacityResult


def regular_points(cs: CompactSet, gauge: Gauge, tol: float = 1e-6,
                   theta: float = 0.5, solver_tol: float = 1e-8) -> RegularPartition:
    """Partition nodes by whether the equilibrium potential sits at E*.

    A node is regular when |Phi_i - E*| <= tol * E*. The KKT certificate
    puts support nodes at equality, so nonregular nodes are off-support
    nodes whose potential exceeds (1 + tol) E*.
    """
    res = capacity(cs, gauge, tol=solver_tol, theta=theta)
    if not res.converged:
        raise SolverError(
            f"equilibrium solve did not converge (gap {res.duality_gap:.3g}); "
            "regular-point classification needs the KKT certificate"
        )
    pts, diams = node_arrays(cs)
    if len(cs) <= DENSE_LIMIT:
        op = _DenseKernelOp(kernel_matrix(cs, gauge, diagonal_theta=theta).entries)
    else:
        op = _RadialKernelOp(pts, diams, gauge, theta)
    phi = op.potential(res.measure.weights, res.measure.support)
    lam = res.energy
    reg = np.abs(phi - lam) <= tol * lam
    return RegularPartition(
        regular=np.flatnonzero(reg),
        nonregular=np.flatnonzero(~reg),
        result=res,
    )
