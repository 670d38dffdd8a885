import json
import math

import numpy as np
import pytest

from perclab.errors import DomainError
from perclab.estimators import estimate_onearm
from perclab.experiments import (
    SweepCell,
    SweepPlan,
    SweepRow,
    diameter_scale,
    fit_onearm_profile,
    fit_ratios,
    onearm_splitting,
    rows_from_document,
    rows_to_csv,
    run_cell,
    run_sweep,
    sweep_document,
)
from perclab.graphs import GraphSpec
from perclab.oracle import enumerate_exact


def test_p_zero_cell():
    plan = SweepPlan(cells=[SweepCell("Q8", p=0.0)], trials=3, tmix=True, radii=(0, 1))
    (row,) = run_sweep(plan)
    assert row.c1 == [1, 1, 1] and row.delta_max == [0, 0, 0] and row.tmix_max == [0, 0, 0]
    assert not row.in_regime and row.p_source == "explicit"
    assert row.onearm["mean"] == [1.0, 0.0]


def test_q3_largest_against_oracle():
    plan = SweepPlan(cells=[SweepCell("Q3", p=0.5)], trials=20_000, diameters=False, seed=3)
    (row,) = run_sweep(plan)
    s = row.summary("c1")
    exact = enumerate_exact(GraphSpec.hypercube(3), 0.5).largest
    assert abs(s["mean"] - exact) < 3 * s["stderr"]


def test_regime_flags_and_anchor():
    plan = SweepPlan(cells=[("Q12", 0.3), ("Q12", 0.7), ("Q6", 0.3)], trials=2)
    rows = run_sweep(plan)
    assert [r.in_regime for r in rows] == [True, False, False]
    assert rows[0].p == pytest.approx(0.7 / 11) and rows[0].p_source == "anchor"


def test_replay_is_bit_identical():
    plan = SweepPlan(cells=[("Q11", 0.3), ("T6^3", 0.4)], trials=4, tmix=True,
                     js=(2,), radii=(1, 3), seed=77)
    a = json.dumps(sweep_document(plan, run_sweep(plan)), sort_keys=True)
    plan.threads = 1
    b = json.dumps(sweep_document(plan, run_sweep(plan)), sort_keys=True)
    assert a == b and "threads" not in a
    assert run_cell(plan, 1).to_dict() == run_sweep(plan)[1].to_dict()


def test_row_invariants():
    plan = SweepPlan(cells=[("Q12", 0.3)], trials=5, tmix=True, js=(1, 3))
    (row,) = run_sweep(plan)
    assert row.cj[1] == row.c1
    assert all(c3 <= c1 for c1, c3 in zip(row.c1, row.cj[3]))
    assert row.bound_violations == 0 and row.tmix_checked > 0
    assert all(1 <= r <= 10 for r in row.tmix_rank)


def test_errors_are_recorded():
    plan = SweepPlan(cells=[("Q12", 0.3)], trials=1, census_budget=100, radii=(1,),
                     sampled_trials=1000)
    (row,) = run_sweep(plan)
    assert row.method == "sampled" and row.error is None and row.onearm["method"] == "sampled"
    plan = SweepPlan(cells=[("Q10", 0.3)], trials=1, tmix=True, tmix_budget=1)
    (row,) = run_sweep(plan)
    assert row.error is None and row.tmix_exact == [False]
    plan = SweepPlan(cells=[("K4", 0.1), ("Q8", 0.1)], trials=1, p_source="find_pc",
                     pc_options={"lam": 100.0, "trials_per_probe": 256})
    rows = run_sweep(plan)
    assert rows[0].error.startswith("PrecisionError") and rows[0].c1 == []
    assert rows[1].error is not None


def test_validation():
    with pytest.raises(DomainError):
        SweepPlan(cells=[("Q8", 0.1)], p_source="magic").validate()
    with pytest.raises(DomainError):
        SweepCell("Q8")
    with pytest.raises(DomainError):
        SweepPlan(cells=[("Q8", 0.1)], p_source="explicit").validate()


def _synthetic_rows():
    rows = []
    for i, eps in enumerate((0.35, 0.25, 0.18)):
        spec = GraphSpec.hypercube(20)
        d = diameter_scale(spec, eps)
        rows.append(SweepRow(index=i, spec="Q20", V=spec.V, epsilon=eps, p=0.0,
                             p_source="anchor", in_regime=True, seeds=[1, 2],
                             delta_max=[d, d], c1=[1, 1]))
    return rows


def test_fit_synthetic_exact_law():
    fit = fit_ratios(_synthetic_rows(), "delta_max", band=(0.6, 1.4))
    assert np.allclose(fit.medians, 1.0) and fit.slope == 0.0
    assert fit.dispersion == pytest.approx(1.0) and fit.band_fraction == 1.0


def test_fit_needs_three_in_regime_rows():
    rows = _synthetic_rows()
    rows[0].in_regime = False
    with pytest.raises(DomainError):
        fit_ratios(rows, "delta_max")
    with pytest.raises(DomainError):
        fit_ratios(rows, "bogus")


def test_out_of_regime_rows_never_fitted():
    rows = _synthetic_rows()
    rows.append(SweepRow(index=9, spec="Q20", V=2**20, epsilon=0.9, p=0.0, p_source="anchor",
                         in_regime=False, delta_max=[1e9]))
    fit = fit_ratios(rows, "delta_max")
    assert 9 not in fit.rows


def test_profile_fit_on_oracle_curve():
    law = enumerate_exact(GraphSpec.hypercube(3), 0.5)
    fit = fit_onearm_profile(range(1, len(law.onearm)), law.onearm[1:], 0.3)
    assert math.isfinite(fit.residual_norm) and fit.dropped >= 0


def test_profile_fit_recovers_model():
    eps = 0.2
    r = np.arange(2, 40)
    logp = np.where(r <= 1 / eps, 0.3 - np.log(r), -0.5 + math.log(eps) + r * math.log(1 - eps))
    fit = fit_onearm_profile(r, np.exp(logp), eps)
    assert fit.max_residual < 1e-10
    assert fit.slope_rel_error < 1e-10 and fit.a == pytest.approx(0.3)


def test_splitting_agrees_with_direct_sampling():
    spec, p = GraphSpec.hypercube(10), 0.09
    prof = onearm_splitting(spec, p, 6, particles=400, replicates=6, seed=3)
    assert prof.mean[0] == 1.0
    for r in (1, 3, 6):
        direct = estimate_onearm(spec, p, r, 40_000, 9)
        se = math.hypot(direct.stderr, prof.stderr[r])
        assert abs(direct.mean - prof.mean[r]) < 4 * se
    again = onearm_splitting(spec, p, 6, particles=400, replicates=6, seed=3, threads=1)
    assert np.array_equal(prof.replicates, again.replicates)


def test_csv_and_document_roundtrip():
    plan = SweepPlan(cells=[("Q10", 0.3)], trials=3, js=(2,), radii=(1, 2))
    rows = run_sweep(plan)
    text = rows_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "# perc-lab sweep csv v1" and lines[1].startswith("index,spec,V")
    doc = json.loads(json.dumps(sweep_document(plan, rows)))
    back = rows_from_document(doc)
    assert back[0].c1 == rows[0].c1 and back[0].cj == rows[0].cj
