"""Quick end-to-end check of the dfakit extension module.

Build and install it first, e.g. `maturin develop --release` from
crates/python, then run `python python/smoke_test.py`.
"""

import math

import dfakit


def check_generate_and_fit():
    x = dfakit.generate_power_law(20000, 0.7, seed=1)
    assert len(x) == 20000
    mean = sum(x) / len(x)
    assert abs(mean) < 1e-9

    curve = dfakit.fluctuation_curve(x, "dfa1")
    assert curve.method == "DFA1"
    assert curve.series_length == 20000
    assert len(curve) == len(curve.scales)

    est = curve.fit(10, 5000)
    assert abs(est.alpha - 0.7) < 0.1, est
    assert est.n_points > 10

    # a curve rebuilt from its stored points fits identically
    again = dfakit.FluctuationCurve("dfa1", curve.scales, curve.values, 20000)
    assert again.fit(10, 5000).alpha == est.alpha
    assert curve.to_csv().startswith("s,F")


def check_ensemble_and_crossover():
    members = [dfakit.generate_crossover(20000, 0.8, 0.5, 100, seed=s) for s in (1024, 2048, 3072)]
    curve = dfakit.ensemble_curve(members, "cma")
    assert curve.ensemble_size == 3
    cross = curve.detect_crossover()
    assert cross.found, cross
    assert cross.alpha_below > cross.alpha_above
    assert cross.s_corrected > 0

    white = dfakit.generate_power_law(20000, 0.5, seed=7)
    flat = dfakit.fluctuation_curve(white, "dfa2").detect_crossover()
    assert not flat.found
    assert flat.s_observed is None


def check_helpers():
    p = dfakit.profile([1.0, 2.0, 3.0])
    assert p == [-1.0, -1.0, 0.0]
    assert dfakit.default_scale_grid(1000, "cma")[0] % 2 == 1
    assert math.isfinite(dfakit.correct_crossover(200.0, "mdfa1"))
    y = dfakit.downsample(list(range(100)), 10)
    assert len(y) == 10
    z = dfakit.shuffle_boxes([float(i) for i in range(100)], 10, 3)
    assert sorted(z) == [float(i) for i in range(100)]
    rows = dfakit.alpha_vs_length_study(0.7, [200], 20, ["dfa1", "cma"], seed=1)
    assert [r[1] for r in rows] == ["DFA1", "CMA"]


def check_errors():
    for bad in (
        lambda: dfakit.fluctuation_curve([1.0] * 100, "dfa0"),
        lambda: dfakit.generate_power_law(1000, -1.0),
        lambda: dfakit.ensemble_curve([[0.0] * 500, [0.0] * 400], "dfa1"),
    ):
        try:
            bad()
        except ValueError:
            continue
        raise AssertionError("expected ValueError")


if __name__ == "__main__":
    print("dfakit", dfakit.__version__)
    check_generate_and_fit()
    check_ensemble_and_crossover()
    check_helpers()
    check_errors()
    print("smoke test passed")
