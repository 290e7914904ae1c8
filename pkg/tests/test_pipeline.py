"""Three-phase solver: frozen run, degenerate inputs, factors, dominance."""

import json
import math
from fractions import Fraction

import pytest

from nswfair import (
    Additive,
    Allocation,
    Instance,
    brute_force_opt,
    guarantee_factor,
    nsw_log,
    phi,
    solve_nsw,
)
from nswfair.generate import FAMILIES, random_instance

from conftest import make_instance


def test_reference_solve(e1):
    report = solve_nsw(e1, eps=0.1)
    assert report.feasible
    assert report.tau == {"1": "a", "2": "b"}
    assert report.leftover_universe == frozenset({"c", "d"})
    assert report.search_bundles == {"1": frozenset({"d"}), "2": frozenset({"c"})}
    assert report.sigma == {"1": "a", "2": "b"}
    assert report.swaps == 1
    assert report.eps_bar == pytest.approx(0.024113689084445132, abs=1e-15)
    assert report.allocation.bundle("1") == frozenset({"a", "d"})
    assert report.allocation.bundle("2") == frozenset({"b", "c"})
    assert report.log_nsw == pytest.approx(0.5 * math.log(20), rel=1e-12)
    assert report.certificates.local_opt_violations == ()
    # this small instance is solved to optimality
    assert report.log_nsw == pytest.approx(brute_force_opt(e1).opt_log, rel=1e-12)


def test_eps_must_be_positive(e1):
    with pytest.raises(ValueError):
        solve_nsw(e1, eps=0.0)
    with pytest.raises(ValueError):
        solve_nsw(e1, eps=-0.5)


def test_invalid_instance_rejected():
    broken = Instance(
        agents=("1", "2"),
        weights=(Fraction(1, 2), Fraction(1, 3)),
        items=("a", "b"),
        valuations=(Additive({"a": 1, "b": 1}), Additive({"a": 1, "b": 1})),
    )
    with pytest.raises(ValueError):
        solve_nsw(broken, eps=0.1)


def test_fewer_items_than_agents_is_infeasible():
    inst = make_instance({"1": {"a": 1}, "2": {"a": 1}})
    report = solve_nsw(inst, eps=0.1)
    assert not report.feasible
    assert report.log_nsw == float("-inf")
    assert report.nsw() == 0.0
    assert report.allocation.is_complete(inst)
    assert report.allocation.bundle("1") == frozenset({"a"})


def test_zero_values_block_every_matching():
    inst = make_instance({"1": {"a": 1, "b": 1}, "2": {"a": 0, "b": 0}})
    report = solve_nsw(inst, eps=0.1)
    assert not report.feasible
    assert report.allocation.is_complete(inst)
    assert brute_force_opt(inst).opt_log == float("-inf")


def test_no_items_at_all():
    inst = Instance(
        agents=("1", "2"),
        weights=(Fraction(1, 2), Fraction(1, 2)),
        items=(),
        valuations=(Additive({}), Additive({})),
    )
    report = solve_nsw(inst, eps=0.1)
    assert not report.feasible
    assert report.eps_bar == 0.0


def test_square_additive_instances_are_solved_exactly():
    # With m == n every positive-welfare allocation is a perfect matching,
    # so phase 1 alone already attains the optimum.
    for seed in range(6):
        inst = random_instance("additive", n=3, m=3, seed=seed)
        report = solve_nsw(inst, eps=0.1)
        opt = brute_force_opt(inst)
        if opt.opt_log == float("-inf"):
            assert not report.feasible
        else:
            assert report.log_nsw == pytest.approx(opt.opt_log, abs=1e-9)


def test_phi_anchor_values():
    assert phi(0.0) == pytest.approx(2.0, abs=1e-6)
    assert phi(3.5) == pytest.approx(4.5, abs=1e-6)
    assert phi(10.0) == pytest.approx(11.0, abs=1e-6)
    with pytest.raises(ValueError):
        phi(-0.1)


def test_phi_stays_between_its_envelopes():
    nu = 0.0
    previous = 2.0
    while nu <= 12.0:
        val = phi(nu)
        assert val <= nu + 2.0 + 1e-6
        assert val >= max(2.0, 1.0 + nu) - 1e-9
        assert val >= previous - 1e-9  # nondecreasing in nu
        previous = val
        nu += 0.1


def test_guarantee_factors_symmetric(e1):
    g = guarantee_factor(e1, 0.1)
    assert g.symmetric == pytest.approx(4.1)
    assert g.asymmetric == pytest.approx((1.0 + 2.0 + 0.1) * math.e, rel=1e-12)
    assert g.strong == pytest.approx((phi(1.0) + 0.1) * math.e, rel=1e-12)
    assert g.best() == pytest.approx(4.1)


def test_guarantee_factors_asymmetric():
    inst = make_instance(
        {"1": {"a": 1, "b": 1}, "2": {"a": 1, "b": 1}},
        weights=[(3, 4), (1, 4)],
    )
    g = guarantee_factor(inst, 0.1)
    assert g.symmetric is None
    assert g.asymmetric == pytest.approx((1.5 + 2.0 + 0.1) * math.e, rel=1e-12)
    assert g.strong == pytest.approx((phi(1.5) + 0.1) * math.e, rel=1e-12)
    # phi(nu) <= nu + 2 makes the phi-based factor the binding one
    assert g.best() == pytest.approx(g.strong, rel=1e-12)
    assert g.strong <= g.asymmetric + 1e-12


def test_rematching_never_loses_to_the_first_matching():
    for seed in range(8):
        inst = random_instance("budget_additive", n=3, m=6, seed=seed)
        report = solve_nsw(inst, eps=0.1)
        if not report.feasible:
            continue
        keep_tau = Allocation(
            {a: report.search_bundles[a] | {report.tau[a]} for a in inst.agents}
        )
        assert report.log_nsw >= nsw_log(inst, keep_tau) - 1e-9


@pytest.mark.parametrize("family", FAMILIES)
def test_small_instances_meet_the_factor(family):
    for seed in range(4):
        inst = random_instance(family, n=2, m=5, seed=seed)
        report = solve_nsw(inst, eps=0.1)
        opt = brute_force_opt(inst)
        if opt.opt_log == float("-inf"):
            assert not report.feasible
            continue
        ratio = math.exp(opt.opt_log - report.log_nsw)
        assert ratio <= report.guarantee.best() + 1e-9


def test_report_serializes(e1):
    report = solve_nsw(e1, eps=0.1)
    doc = report.to_json()
    text = json.dumps(doc)
    assert json.loads(text)["swaps"] == 1
    assert doc["allocation"] == {"1": ["a", "d"], "2": ["b", "c"]}
    infeasible = solve_nsw(make_instance({"1": {"a": 1}, "2": {"a": 1}}), eps=0.1)
    assert infeasible.to_json()["log_nsw"] == "-inf"


def test_solver_is_deterministic():
    inst = random_instance("coverage", n=3, m=7, seed=42, weight_mode="random_rational")
    a = solve_nsw(inst, eps=0.2)
    b = solve_nsw(inst, eps=0.2)
    assert a.to_json() == b.to_json()
