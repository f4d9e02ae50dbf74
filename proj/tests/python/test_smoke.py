import math

import pytest

import vtdlib as v


def tiny_sim(seed=7, gamma=0.6):
    c = v.SimConfig()
    c.n_patients = 100
    c.n_steps = 6
    c.n_covariates = 5
    c.n_confounders = 2
    c.gamma = gamma
    c.seed = seed
    return c


def tiny_experiment():
    e = v.ExperimentConfig()
    e.sim = tiny_sim()
    e.model.r = 2
    e.model.hidden = 8
    e.model.head_hidden = 4
    e.model.batch_size = 32
    e.model.max_epochs = 2
    e.model.kl_warmup_epochs = 2
    e.plugin_window = 2
    return e


def test_simulate_shapes_and_determinism():
    d1 = v.simulate(tiny_sim())
    d2 = v.simulate(tiny_sim())
    assert len(d1) == 100
    assert d1.n_steps == 6 and d1.n_covariates == 5 and d1.n_confounders == 2
    assert d1.has_truth()
    p = d1.patient(0)
    assert len(p.x) == 6 and len(p.x[0]) == 5
    assert len(p.a) == len(p.y) == len(p.tau_true) == 6
    assert all(a in (0, 1) for a in p.a)
    assert all(0.01 <= pi <= 0.99 for pi in p.propensity_true)
    assert 0.45 <= d1.treated_fraction() <= 0.55
    # bitwise reproducibility
    for i in range(len(d1)):
        assert d1.patient(i).y == d2.patient(i).y
        assert d1.patient(i).x == d2.patient(i).x
    d3 = v.simulate(tiny_sim(seed=8))
    assert d3.patient(0).y != d1.patient(0).y


def test_split_partitions():
    d = v.simulate(tiny_sim())
    tr, va, te = v.split(d, [0.6, 0.2, 0.2], 7)
    assert len(tr) == 60 and len(va) == 20 and len(te) == 20
    ids = sorted(s.patient(i).id for s in (tr, va, te) for i in range(len(s)))
    assert ids == sorted(d.patient(i).id for i in range(len(d)))


def test_dataset_io_roundtrip(tmp_path):
    d = v.simulate(tiny_sim())
    path = str(tmp_path / "d.jsonl")
    v.save_dataset(d, path)
    d2 = v.load_dataset(path)
    assert len(d2) == len(d)
    assert d2.patient(3).y == d.patient(3).y
    assert d2.patient(3).tau_true == d.patient(3).tau_true


def test_fit_evaluate_and_manifest_roundtrip(tmp_path):
    e = tiny_experiment()
    d = v.simulate(e.sim)
    tr, va, te = v.split(d, [0.6, 0.2, 0.2], 7)
    for name in ("gformula", "vtd"):
        fit = v.fit_model(name, tr, va, e, 7)
        rep = v.evaluate_fit(fit, te, e, 7)
        assert rep["rmse"] > 0 and math.isfinite(rep["rmse"])
        assert rep["pehe"] is not None and rep["pehe"] >= 0
        assert math.isfinite(rep["if_pehe"])
        assert 0 <= rep["overlap_min"] <= rep["overlap_max"] <= 1
        assert len(rep["deciles"]) == 11

        path = str(tmp_path / f"{name}.vtd.json")
        v.save_fit(fit, path)
        fit2 = v.load_fit(path)
        assert fit2.name == name
        assert v.evaluate_fit(fit2, te, e, 7) == rep

        tau = v.predict_ite(fit, te)
        assert len(tau) == len(te)
        assert all(len(row) == te.n_steps for row in tau)


def test_experiment_config_from_file(tmp_path):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text(
        "sim.n_patients = 80\nsim.n_steps = 6\nsim.n_covariates = 5\n"
        "sim.n_confounders = 2\nharness.gammas = 0.0, 0.6\n"
        "harness.realizations = 2\nharness.models = vtd, gformula\n"
    )
    e = v.ExperimentConfig.from_file(str(cfg))
    assert e.sim.n_patients == 80
    assert e.gammas == [0.0, 0.6]
    assert e.models == ["vtd", "gformula"]
    with pytest.raises(RuntimeError):
        v.ExperimentConfig.from_file("/nonexistent/path.cfg")


def test_gradcheck_fast():
    results = v.check_primitives(seed=3, cases=8)
    assert len(results) >= 15
    assert all(r["pass"] for r in results)
    assert v.check_total_loss_gradient("vtd", 20260814) <= 1e-4
