"""Gauge functions (radially symmetric kernel profiles) and kernel matrices.

A gauge is a positive, strictly decreasing function of distance on (0, 1)
blowing up at 0. Natural logarithm is the canonical base throughout; every
downstream claim is base-invariant up to constant factors.

The knee gauge equals f at distances >= eps and a rescaled g below eps:

    h(r) = f(r)            r >= eps
    h(r) = g(r) f(eps)/g(eps)   r < eps

so h is continuous at the knee and h >= f pointwise whenever f/g is
nondecreasing on (0, eps].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import CompactSet, node_arrays


class GaugeError(ValueError):
    """Raised for invalid gauge construction or evaluation."""


@dataclass(frozen=True)
class Gauge:
    """Gauge descriptor. kind is one of 'log', 'log2', 'pow', 'hyb'."""

    kind: str
    alpha: Optional[float] = None
    f: Optional["Gauge"] = None
    g: Optional["Gauge"] = None
    eps: Optional[float] = None

    def __call__(self, r):
        return eval_gauge(self, r)


LOG = Gauge("log")
LOG2 = Gauge("log2")


def power(alpha: float) -> Gauge:
    if alpha <= 0.0:
        raise GaugeError(f"power gauge exponent must be > 0, got {alpha}")
    return Gauge("pow", alpha=float(alpha))


_HYB_CHECK_POINTS = 64


def hybrid(f: Gauge, g: Gauge, eps: float) -> Gauge:
    """Knee gauge. Requires f <= g on (0, eps], checked on a log-spaced grid."""
    if not (0.0 < eps < 1.0):
        raise GaugeError(f"knee eps must lie in (0, 1), got {eps}")
    if f.kind == "hyb" or g.kind == "hyb":
        raise GaugeError("nested knee gauges are not supported")
    rs = np.exp(np.linspace(math.log(eps) - 20.0, math.log(eps), _HYB_CHECK_POINTS))
    fv = _eval_raw(f, rs)
    gv = _eval_raw(g, rs)
    bad = fv > gv * (1.0 + 1e-12)
    if bad.any():
        r_bad = rs[bad][-1]
        raise GaugeError(
            f"hybrid requires f <= g at distances <= eps; violated at r={r_bad:.6g} "
            f"(f={_eval_raw(f, r_bad):.6g} > g={_eval_raw(g, r_bad):.6g})"
        )
    return Gauge("hyb", f=f, g=g, eps=float(eps))


def _eval_raw(gauge: Gauge, r):
    """Evaluate without domain checks. r may be scalar or ndarray in (0, 1)."""
    if gauge.kind == "log":
        return -np.log(r)
    if gauge.kind == "log2":
        lr = np.log(r)
        return lr * lr
    if gauge.kind == "pow":
        return np.asarray(r, dtype=float) ** (-gauge.alpha) if isinstance(r, np.ndarray) else r ** (-gauge.alpha)
    if gauge.kind == "hyb":
        scale = _eval_raw(gauge.f, gauge.eps) / _eval_raw(gauge.g, gauge.eps)
        r_arr = np.asarray(r, dtype=float)
        out = np.where(r_arr >= gauge.eps, _eval_raw(gauge.f, r_arr), _eval_raw(gauge.g, r_arr) * scale)
        return out if isinstance(r, np.ndarray) else float(out)
    raise GaugeError(f"unknown gauge kind {gauge.kind!r}")


def eval_gauge(gauge: Gauge, r):
    """Evaluate a gauge at distance(s) r, requiring 0 < r < 1."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0) or np.any(r_arr >= 1.0):
        raise GaugeError(
            f"gauge evaluated outside (0, 1): min={r_arr.min() if r_arr.size else 'n/a'}, "
            f"max={r_arr.max() if r_arr.size else 'n/a'}"
        )
    out = _eval_raw(gauge, r_arr)
    return float(out) if np.isscalar(r) or np.ndim(r) == 0 else out


def describe(gauge: Gauge) -> str:
    if gauge.kind == "log":
        return "log"
    if gauge.kind == "log2":
        return "log2"
    if gauge.kind == "pow":
        return f"pow:{gauge.alpha:g}"
    if gauge.kind == "hyb":
        return f"hyb:{describe(gauge.f)}→{describe(gauge.g)}:{gauge.eps:g}"
    raise GaugeError(f"unknown gauge kind {gauge.kind!r}")


def parse_gauge(text: str) -> Gauge:
    """Parse 'log', 'log2', 'pow:a', 'hyb:f->g:eps' (unicode arrow accepted)."""
    t = text.strip()
    if t == "log":
        return LOG
    if t == "log2":
        return LOG2
    if t.startswith("pow:"):
        return power(float(t[4:]))
    if t.startswith("hyb:"):
        body = t[4:]
        arrow = "→" if "→" in body else "->"
        try:
            pair, eps_text = body.rsplit(":", 1)
            f_text, g_text = pair.split(arrow)
        except ValueError as exc:
            raise GaugeError(f"cannot parse gauge descriptor {text!r}") from exc
        return hybrid(parse_gauge(f_text), parse_gauge(g_text), float(eps_text))
    raise GaugeError(f"cannot parse gauge descriptor {text!r}")


def martin_kernel(gauge: Gauge, xi):
    """Kernel normalized at a base point: (x, y) -> gauge(|x-y|)/gauge(|xi-y|).

    Evaluation at y = xi (or x = y) is rejected; localized capacities use
    the diagonal rule instead (see the polar module).
    """
    xi = (float(xi[0]), float(xi[1]))

    def kernel(x, y):
        dxy = math.hypot(x[0] - y[0], x[1] - y[1])
        dxiy = math.hypot(xi[0] - y[0], xi[1] - y[1])
        if dxiy == 0.0:
            raise GaugeError("Martin kernel evaluated at y = xi")
        if dxy == 0.0:
            raise GaugeError("Martin kernel evaluated at x = y")
        return eval_gauge(gauge, dxy) / eval_gauge(gauge, dxiy)

    return kernel


@dataclass(frozen=True)
class KernelMatrix:
    """Dense symmetric kernel matrix over a set's nodes.

    entries[i, j] = gauge(|x_i - x_j|) off the diagonal and
    entries[i, i] = gauge(diagonal_theta * diameter_i).
    """

    centers: np.ndarray
    diameters: np.ndarray
    entries: np.ndarray
    gauge: Gauge
    diagonal_theta: float
    set_label: str = ""

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def pairwise_distances(centers: np.ndarray) -> np.ndarray:
    diff = centers[:, None, :] - centers[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def kernel_matrix(cs: CompactSet, gauge: Gauge, diagonal_theta: float = 0.5) -> KernelMatrix:
    """Build the dense kernel matrix for a set under a gauge.

    Preconditions: nonempty set, pairwise node distances in (0, 1), and
    diagonal arguments theta * diameter in (0, 1).
    """
    if cs.is_empty:
        raise GaugeError("kernel matrix of an empty set")
    if not (0.0 < diagonal_theta <= 1.0):
        raise GaugeError(f"diagonal_theta must lie in (0, 1], got {diagonal_theta}")
    pts, diams = node_arrays(cs)
    d = pairwise_distances(pts)
    off = ~np.eye(len(pts), dtype=bool)
    if len(pts) > 1:
        dmin = d[off].min()
        if dmin == 0.0:
            raise GaugeError("duplicate node centers (zero pairwise distance)")
        if d[off].max() >= 1.0:
            raise GaugeError(
                f"pairwise node distance {d[off].max():.6g} >= 1 is outside the model"
            )
    diag_args = diagonal_theta * diams
    if np.any(diag_args >= 1.0) or np.any(diag_args <= 0.0):
        raise GaugeError("diagonal arguments theta*diameter must lie in (0, 1)")
    entries = np.empty_like(d)
    entries[off] = _eval_raw(gauge, d[off])
    entries[np.diag_indices(len(pts))] = _eval_raw(gauge, diag_args)
    return KernelMatrix(
        centers=pts,
        diameters=diams,
        entries=entries,
        gauge=gauge,
        diagonal_theta=float(diagonal_theta),
        set_label=cs.label,
    )
