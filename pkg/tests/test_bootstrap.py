import numpy as np
import pandas as pd
import pytest

from relfidelity.metrics import BootstrapError, BootstrapSpec, bootstrap_separability, categorical_distance, wasserstein1
from relfidelity.metrics.bootstrap import bootstrap_ci, replicate_values


def tv(a, b):
    return categorical_distance("total_variation", a, b)


def test_spec_validation():
    with pytest.raises(ValueError):
        BootstrapSpec(replications=99)
    with pytest.raises(ValueError):
        BootstrapSpec(alpha=1.0)
    with pytest.raises(ValueError):
        BootstrapSpec(goal="max")


def test_constant_column_has_degenerate_interval():
    r = bootstrap_separability(tv, pd.Series(["k"] * 30), 0.0, BootstrapSpec(replications=100, support=(0, 1)))
    assert r.ci == (0.0, 0.0)
    assert not r.separable
    assert r.p_value is None


def test_value_beyond_every_replicate_is_separable():
    x = np.random.default_rng(0).normal(size=60)
    spec = BootstrapSpec(replications=200, seed=3)
    values = replicate_values(wasserstein1, x, spec)
    r = bootstrap_separability(wasserstein1, x, values.max() + 1e-9, spec)
    assert r.separable
    assert r.details["replications"] == 200 and r.details["support"] == [0.0, None]


def test_ci_is_clipped_to_support():
    spec = BootstrapSpec(replications=100, support=(0.0, 1.0))
    assert bootstrap_ci(np.linspace(-1, 2, 100), spec) == (0.0, 1.0)


def test_deterministic_and_worker_independent():
    x = np.random.default_rng(1).normal(size=80)
    serial = replicate_values(wasserstein1, x, BootstrapSpec(replications=150, seed=5))
    again = replicate_values(wasserstein1, x, BootstrapSpec(replications=150, seed=5))
    threaded = replicate_values(wasserstein1, x, BootstrapSpec(replications=150, seed=5, n_jobs=4))
    np.testing.assert_array_equal(serial, again)
    np.testing.assert_array_equal(serial, threaded)
    other = replicate_values(wasserstein1, x, BootstrapSpec(replications=150, seed=6))
    assert not np.array_equal(serial, other)


def test_metric_failure_names_the_replicate():
    calls = []

    def flaky(a, b):
        calls.append(1)
        if len(calls) == 7:
            raise RuntimeError("boom")
        return 0.0

    with pytest.raises(BootstrapError) as info:
        replicate_values(flaky, np.arange(10.0), BootstrapSpec(replications=100))
    assert info.value.replicate == 6
    assert isinstance(info.value.cause, RuntimeError)


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        replicate_values(wasserstein1, np.array([]), BootstrapSpec(replications=100))


def test_fresh_resample_falls_inside_interval():
    # a genuine second sample from the same population should look like a bootstrap replicate
    rng = np.random.default_rng(2)
    inside = 0
    trials = 60
    for t in range(trials):
        population = rng.normal(size=100_000)
        real = rng.choice(population, 300)
        fresh = rng.choice(population, 300)
        observed = wasserstein1(real, fresh)
        r = bootstrap_separability(wasserstein1, real, observed, BootstrapSpec(replications=200, seed=t))
        inside += not r.separable
    assert inside / trials >= 0.90
