import math

import numpy as np
import pytest

from tanglefl import energy
from tanglefl.energy import CostParams, EnergyLedger
from tanglefl.errors import ConfigError


def P(**kw):
    return CostParams(**kw)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def random_params(rng):
    u = lambda: float(rng.uniform(0.01, 50))  # noqa: E731
    return CostParams(capacitance=u(), cpu_freq=u(), eval_cycles=u(), agg_cycles=u(),
                      train_cycles_per_sample=u(), confidence_cycles=u(), rating_cycles=u(),
                      walk_depth=int(rng.integers(1, 40)), avg_children=u(),
                      ref_walks=int(rng.integers(1, 10)))


# Independent scalar forms, written out term by term.
def e_tip(C, d, l, fw, f):
    return C * 2 * d * l * fw * f * f


def e_agg(C, fa, f):
    return C * fa * f * f


def e_train(C, b, bnum, e, ft, f):
    return C * b * bnum * e * ft * f * f


def e_ref(C, r, d, l, fw, fc, fr, f):
    return C * r * d * (l * fw + fc + l * fr) * f * f


def t_tip(d, l, fw, f):
    return 2 * d * l * fw / f


def test_hand_examples():
    p = P(capacitance=2, walk_depth=3, avg_children=2, eval_cycles=5, cpu_freq=10)
    assert energy.tip_energy(p) == pytest.approx(12000, rel=1e-12)
    assert energy.tip_time(p) == pytest.approx(6, rel=1e-12)
    assert energy.aggregation_energy(P(capacitance=1, agg_cycles=7, cpu_freq=2)) == pytest.approx(28)
    assert energy.training_energy(P(capacitance=1, cpu_freq=1, train_cycles_per_sample=3), 10, 10, 1) == 300
    assert energy.training_energy(P(), 10, 10, 0) == 0
    ref = P(capacitance=1, ref_walks=5, walk_depth=2, avg_children=2, eval_cycles=1,
            confidence_cycles=1, rating_cycles=1, cpu_freq=1)
    assert energy.reference_energy(ref) == pytest.approx(50, rel=1e-12)


def test_scaling_relations():
    p = P(cpu_freq=1.7)
    q = P(cpu_freq=3.4)
    assert energy.tip_energy(q) == pytest.approx(4 * energy.tip_energy(p), rel=1e-12)
    assert energy.tip_time(q) == pytest.approx(energy.tip_time(p) / 2, rel=1e-12)
    assert energy.aggregation_energy(P(agg_cycles=10)) == pytest.approx(2 * energy.aggregation_energy(P(agg_cycles=5)))
    assert energy.training_energy(p, 3, 7, 2) == energy.training_energy(p, 7, 3, 2)
    r1, r2 = energy.reference_energy(P(walk_depth=4)), energy.reference_energy(P(walk_depth=8))
    assert r2 == pytest.approx(2 * r1, rel=1e-12)


def test_invalid_params():
    for bad in (0, -1, math.inf, math.nan):
        with pytest.raises(ConfigError):
            P(capacitance=bad)


def test_formulas_on_random_draws():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        p = random_params(rng)
        b, bnum, e = (int(rng.integers(1, 50)) for _ in range(3))
        C, f, d, l = p.capacitance, p.cpu_freq, p.walk_depth, p.avg_children
        want = {
            "tip": e_tip(C, d, l, p.eval_cycles, f),
            "agg": e_agg(C, p.agg_cycles, f),
            "train": e_train(C, b, bnum, e, p.train_cycles_per_sample, f),
            "ref": e_ref(C, p.ref_walks, d, l, p.eval_cycles, p.confidence_cycles, p.rating_cycles, f),
            "t_tip": t_tip(d, l, p.eval_cycles, f),
        }
        got = {
            "tip": energy.tip_energy(p), "agg": energy.aggregation_energy(p),
            "train": energy.training_energy(p, b, bnum, e), "ref": energy.reference_energy(p),
            "t_tip": energy.tip_time(p),
        }
        for k in want:
            assert rel(got[k], want[k]) < 1e-12, k
        total = want["tip"] + want["agg"] + want["train"] + want["ref"]
        assert rel(energy.total_update_energy(p, b, bnum, e), total) < 1e-12
        assert rel(energy.total_update_energy(p, b, bnum, e, include_reference=False),
                   total - want["ref"]) < 1e-12
        assert rel(energy.tip_energy(p) / energy.tip_time(p), C * f ** 3) < 1e-12


def test_esdagfl_ratio_identity():
    p = P(train_cycles_per_sample=4.0)
    full = energy.total_update_energy(p, 10, 10, 1)
    lean = energy.total_update_energy(p, 10, 10, 1, include_reference=False)
    assert lean / full == pytest.approx(1 - energy.reference_energy(p) / full, rel=1e-12)


@pytest.mark.parametrize("share", [0.1, 0.33, 0.5])
def test_calibration(share):
    p = P()
    ft = energy.calibrate_train_cycles(p, 10, 10, 1, share)
    q = P(train_cycles_per_sample=ft)
    assert energy.reference_energy(q) / energy.total_update_energy(q, 10, 10, 1) == pytest.approx(share, rel=1e-12)
    with pytest.raises(ConfigError):
        energy.calibrate_train_cycles(p, 10, 10, 1, 0.99)


def test_update_cost_and_ledger_conservation():
    p = P(train_cycles_per_sample=2.5)
    led = EnergyLedger()
    rng = np.random.default_rng(1)
    for rnd in range(1, 6):
        for c in range(4):
            led.add(energy.update_cost(p, rnd, c, 10, 10, 1, include_reference=bool(rng.integers(2))))
    tot = led.totals()
    assert rel(tot["total"], sum(r.e_total for r in led.rows)) < 1e-9
    assert rel(tot["total"], sum(e for e, _ in led.round_totals().values())) < 1e-9
    assert rel(tot["total"], sum(sum(v[k] for k in ("tip", "aggregation", "training", "reference"))
                                 for v in led.per_client.values())) < 1e-9
    assert rel(tot["time"], sum(v["time"] for v in led.per_client.values())) < 1e-9
    row = next(led.table())
    assert len(row) == len(energy.ENERGY_COLUMNS)


def test_update_cost_formula_matches_stage_functions():
    p = P()
    c = energy.update_cost(p, 1, 0, 10, 10, 1, include_reference=True)
    assert c.e_tip == energy.tip_energy(p) and c.e_ref == energy.reference_energy(p)
    assert c.t_tip == energy.tip_time(p)
    assert energy.update_cost(p, 1, 0, 10, 10, 1, include_reference=False).e_ref == 0.0


def test_update_cost_measured():
    p = P(eval_cycles=3, rating_cycles=1, confidence_cycles=2, capacitance=1, cpu_freq=1)
    c = energy.update_cost(p, 1, 0, 1, 1, 1, True, measured={"tip_evals": 4, "ref_evals": 6, "ref_steps": 5})
    assert c.e_tip == 12 and c.e_ref == 6 * 4 + 5 * 2


def test_objective_pair():
    led = EnergyLedger()
    led.add(energy.update_cost(P(), 1, 0, 10, 10, 1, True))
    e, loss = energy.objective(led, 0.25)
    assert e == energy.reference_energy(P()) and loss == 0.25
