import json
import math
import os

import pytest

import parasafe


MINI = {
    "name": "mini",
    "mode": "openloop",
    "plant": {
        "A": [[0, 1], [0, 0]],
        "b": 1.0,
        "eps": 1.0,
        "lambda": 1.0,
        "box": {"lambda": [0.0, 2.0], "b": [0.5, 2.0]},
    },
    "grid": {"nx": 10, "dt": 0.002, "t_final": 0.1},
    "initial": {"y": [1.0, 0.0], "u0": {"kind": "cos_half", "amp": 0.5}},
    "output": {"dir": "out/mini", "stride": 10},
    "acceptance": {"expect": "safe"},
}


def test_sigma_bump_matches_gap():
    assert parasafe.sigma_bump(-10.0, 1.0, 1.0, 0, 0.0) == pytest.approx(11.0, abs=1e-12)
    assert parasafe.sigma_bump(-10.0, 1.0, 1.0, 0, 1.5) == 0.0
    assert parasafe.sigma_bump(-10.0, 1.0, 1.0, 1, 0.0) == 0.0


def test_delta_decays():
    assert parasafe.delta(0.0, 3000.0, 3.0, 1) == pytest.approx(3000.0)
    assert parasafe.delta(1.0, 3000.0, 3.0, -1) == pytest.approx(-3000.0 * math.exp(-3.0))


def test_alt_series_values():
    v, tail = parasafe.alt_theta_sum(1.0)
    assert v == pytest.approx(0.3678383, abs=1e-6)
    assert tail > 0
    assert parasafe.claim_L(50.0) == pytest.approx(math.pi / 4, abs=1e-12)


def test_safe_drive_sign():
    v, tail = parasafe.safe_drive_check(0.5, 2.0, 1, 1.0)
    assert v >= -tail


def test_structural_transform_known_pair():
    Tz, K, Az = parasafe.structural_transform([[0.0, 1.0], [2.0, -1.0]], 5.0)
    assert Tz == pytest.approx([[1.0, 0.0], [0.0, 1.0]])
    assert K == pytest.approx([0.4, -0.2])
    assert Az[0][1] == pytest.approx(1.0)


def test_trigger_schedule_saturates():
    t_i, mu_i = parasafe.trigger_schedule(21, 0.5, 12)
    assert t_i == pytest.approx(10.5)
    assert mu_i == pytest.approx(4.5)


def test_update_estimate_least_squares():
    out = parasafe.update_estimate(
        8.0, 7.0, [2.0], [4.0], 3.0, 6.0, 0.0, 1.0, 0.0, 1.0
    )
    assert out["lambda_hat"] == pytest.approx(0.5)
    assert out["b_hat"] == pytest.approx(0.5)
    assert not out["held_lambda"] and not out["held_b"]


def test_kernel_diagonal():
    k, r, iters, inc = parasafe.kernel_tables(
        [[0.0, 1.0], [2.0, -1.0]], [0.4, -0.2], 10.0, 5.0, 3.0, 1.0, 20
    )
    assert k[20][20] == pytest.approx(-6.5, abs=1e-12)
    assert iters > 1 and inc < 1e-10


def test_run_json_roundtrip():
    report = parasafe.run_json(json.dumps(MINI))
    assert report["pass"] is True
    assert report["name"] == "mini"
    assert report["config"]["grid"]["nx"] == 10


def test_errors_are_typed():
    bad = dict(MINI, grid={"nx": 10, "dt": 0.2, "t_final": 0.4})
    with pytest.raises(parasafe.ParasafeError):
        parasafe.run_json(json.dumps(bad))
