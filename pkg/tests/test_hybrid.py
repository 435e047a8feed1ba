import math

import numpy as np
import pytest

from caplab.capacity import SolverError, capacity, energy, uniform_measure
from caplab.gauges import LOG, LOG2, hybrid, kernel_matrix, power
from caplab.geometry import make_cantor, make_disk, refine_to
from caplab.hybrid import HybridResult, UnderResolvedError, cap_eps, cap_hybrid, cap_constrained

R2 = math.exp(-2)


def disk_builder(res):
    return make_disk((0, 0), R2, res, label="disk-e2")


def cantor_builder(res):
    # deepest level whose interval length fits the target resolution
    n = 0
    while 2 * make_cantor(0.75, n).cells[0].hx > res and n < 12:
        n += 1
    return refine_to(make_cantor(0.75, n), res)


class TestCapEps:
    def test_under_resolved_rejected(self):
        cs = make_disk((0, 0), 0.1, 0.02)  # resolution ~0.028
        with pytest.raises(UnderResolvedError, match="under-resolved"):
            cap_eps(cs, 0.05, LOG, LOG2)

    def test_large_eps_matches_plain_capacity(self):
        # off-diagonal kernels agree exactly when eps >= diameter; the
        # diagonal rule still uses the inner branch, so compare capacities
        # with a certified bound from the diagonal discrepancy
        cs = make_disk((0, 0), 0.04, 0.04 / 8)
        eps = 0.15
        assert cs.diameter() <= eps
        h = hybrid(LOG, LOG2, eps)
        km_h = kernel_matrix(cs, h)
        km_f = kernel_matrix(cs, LOG)
        off = ~np.eye(len(cs), dtype=bool)
        assert km_h.entries[off] == pytest.approx(km_f.entries[off], rel=1e-14)

        res_h = cap_eps(cs, eps, LOG, LOG2)
        res_f = capacity(cs, LOG)
        diag_gap = np.abs(np.diag(km_h.entries) - np.diag(km_f.entries))
        bound = max(
            float(res_h.measure.weights**2 @ diag_gap),
            float(res_f.measure.weights**2 @ diag_gap),
        )
        assert abs(res_h.energy - res_f.energy) <= bound + 1e-10

    def test_small_diameter_scales_g_capacity(self):
        # on sets of diameter < eps the knee gauge is a scaled g, so the
        # capacity is exactly |ln eps| * Cap_g (diagonals included)
        cs = make_disk((0, 0), 0.01, 0.01 / 6)
        eps = 0.25
        assert cs.diameter() < eps
        res_h = cap_eps(cs, eps, LOG, LOG2)
        res_g = capacity(cs, LOG2)
        assert res_h.value == pytest.approx(
            abs(math.log(eps)) * res_g.value, rel=1e-6
        )

    def test_monotone_in_eps_fixed_grid(self):
        cs = make_disk((0, 0), R2, R2 / 24)
        vals = [
            cap_eps(cs, eps, LOG, LOG2).value
            for eps in [2**-2, 2**-3, 2**-4]
        ]
        assert all(b >= a * (1 - 1e-6) for a, b in zip(vals, vals[1:]))

    def test_at_most_plain_capacity(self):
        cs = make_disk((0, 0), R2, R2 / 24)
        cap_f = capacity(cs, LOG).value
        for eps in [2**-2, 2**-4]:
            assert cap_eps(cs, eps, LOG, LOG2).value <= cap_f * (1 + 1e-9)


class TestCapHybrid:
    def test_disk_plateau_near_half(self):
        sched = [2**-k for k in range(2, 7)]
        out = cap_hybrid(disk_builder, sched, coupling=0.125)
        assert out.monotone_ok or max(
            a / b for a, b in zip(out.cap_values, out.cap_values[1:])
        ) < 1.01
        assert out.limit_estimate == pytest.approx(0.5, rel=0.05)
        assert out.limit_estimate == out.cap_values[-1]

    def test_cantor_decays(self):
        sched = [2**-k for k in range(2, 8)]
        out = cap_hybrid(cantor_builder, sched, coupling=0.125)
        assert out.cap_values[-1] < out.cap_values[0]

    def test_limit_below_plain_capacity(self):
        sched = [2**-k for k in range(2, 6)]
        out = cap_hybrid(disk_builder, sched, coupling=0.125)
        cs = disk_builder(0.125 * sched[-1])
        assert out.limit_estimate <= capacity(cs, LOG).value + 1e-9

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            cap_hybrid(disk_builder, [0.25, 0.25])
        with pytest.raises(ValueError):
            cap_hybrid(disk_builder, [0.25, 0.125], coupling=0.3)

    def test_serialization(self):
        out = cap_hybrid(disk_builder, [2**-2, 2**-3], coupling=0.125)
        doc = out.to_json_dict()
        assert doc["cap_values"] == list(out.cap_values)
        csv_text = out.to_csv()
        assert csv_text.splitlines()[0] == "eps,resolution,cap_eps,kkt_residual"
        assert len(csv_text.splitlines()) == 3


class TestCapConstrained:
    def test_infinite_budget_is_plain_capacity(self):
        cs = make_disk((0, 0), 0.05, 0.01)
        assert cap_constrained(cs, LOG, LOG2, math.inf) == pytest.approx(
            capacity(cs, LOG).value, rel=1e-10
        )

    def test_slack_budget_is_plain_capacity(self):
        cs = make_disk((0, 0), 0.05, 0.01)
        res_f = capacity(cs, LOG)
        km_g = kernel_matrix(cs, LOG2)
        budget = 2.0 * energy(km_g, res_f.measure)
        got = cap_constrained(cs, LOG, LOG2, budget)
        assert got == pytest.approx(res_f.value, rel=1e-8)

    def test_infeasible_budget_rejected(self):
        cs = make_disk((0, 0), 0.05, 0.01)
        g_min = 1.0 / capacity(cs, LOG2).value
        with pytest.raises(SolverError, match="infeasible"):
            cap_constrained(cs, LOG, LOG2, 0.5 * g_min)

    def test_monotone_in_budget(self):
        # tighter g-energy budgets can only decrease the constrained value
        cs = make_disk((0, 0), 0.05, 0.05 / 7)
        g_pow = power(1.0)
        g_min = 1.0 / capacity(cs, g_pow).value
        budgets = [g_min * s for s in (1.2, 2.0, 4.0, 16.0)]
        vals = [cap_constrained(cs, LOG, g_pow, b, tol=1e-8) for b in budgets]
        assert all(b >= a * (1 - 1e-4) for a, b in zip(vals, vals[1:]))
        cap_f = capacity(cs, LOG).value
        assert all(v <= cap_f * (1 + 1e-6) for v in vals)

    def test_tradeoff_against_power_gauge(self):
        # as the budget grows the f-energy of the constrained minimizer
        # falls toward the unconstrained minimum while its g-energy climbs
        cs = make_disk((0, 0), 0.05, 0.05 / 7)
        g_pow = power(1.0)
        g_min = 1.0 / capacity(cs, g_pow).value
        cap_f = capacity(cs, LOG).value
        budgets = [g_min * s for s in (1.2, 3.0, 30.0)]
        f_energies = [1.0 / cap_constrained(cs, LOG, g_pow, b) for b in budgets]
        assert all(a > b * (1 - 1e-9) for a, b in zip(f_energies, f_energies[1:]))
        assert f_energies[-1] >= 1.0 / cap_f - 1e-9
