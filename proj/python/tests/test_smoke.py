"""Smoke tests for the _seqcast extension module.

These check that the bindings round-trip numpy arrays correctly and agree
with simple reference computations; the heavy numerical validation lives in
the C++ test suites.
"""

import itertools
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import _seqcast as sq


def test_selective_scan_matches_reference():
    rng = np.random.default_rng(5)
    batch, seq, d_inner, d_state = 2, 9, 3, 4
    u = rng.normal(size=(batch, seq, d_inner))
    delta = np.exp(rng.uniform(np.log(1e-3), np.log(0.5), (batch, seq, d_inner)))
    B = rng.normal(size=(batch, seq, d_state))
    C = rng.normal(size=(batch, seq, d_state))
    A_log = rng.uniform(-1.0, 1.0, (d_inner, d_state))
    D = rng.normal(size=d_inner)

    got = sq.selective_scan(u, delta, B, C, A_log, D)

    A = -np.exp(A_log)
    want = np.empty_like(u)
    for b in range(batch):
        h = np.zeros((d_inner, d_state))
        for t in range(seq):
            da = delta[b, t][:, None] * A
            h = np.exp(da) * h + np.expm1(da) / A * B[b, t] * u[b, t][:, None]
            want[b, t] = h @ C[b, t] + D * u[b, t]
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)


def test_instance_normalize_round_trip():
    rng = np.random.default_rng(6)
    x = rng.normal(loc=4.0, scale=2.5, size=(3, 16, 2))
    xn, mean, std = sq.instance_normalize(x)
    assert xn.shape == x.shape and mean.shape == (3, 2) and std.shape == (3, 2)
    np.testing.assert_allclose(xn.mean(axis=1), 0.0, atol=1e-12)
    restored = xn * (std[:, None, :] + 1e-5) + mean[:, None, :]
    np.testing.assert_allclose(restored, x, atol=1e-9)


def test_solvers_agree_with_exhaustive_search():
    rng = np.random.default_rng(7)
    P = rng.normal(size=(5, 5))
    best = min(
        (sq.path_cost(P, list(p)) for p in itertools.permutations(range(5)))
    )
    for solver in ("sa", "bruteforce"):
        order, cost = sq.solve_order(P, solver=solver, seed=3)
        assert sorted(order) == list(range(5))
        assert cost == pytest.approx(best, abs=1e-12)
    greedy_cost = sq.solve_order(P, solver="greedy")[1]
    assert greedy_cost >= best - 1e-12


def test_update_cost_graph_matches_hand_ema():
    P = np.zeros((3, 3))
    losses = [0.4, 0.1]
    centered = np.asarray(losses) - np.mean(losses)
    new = sq.update_cost_graph(P, 0.9, [[0, 1, 2], [2, 1, 0]], losses)
    assert new[0, 1] == pytest.approx(0.1 * centered[0])
    assert new[2, 1] == pytest.approx(0.1 * centered[1])
    assert new[2, 0] == 0.0


def test_forecaster_from_cli_checkpoint(tmp_path):
    seqcast = Path(__file__).resolve().parents[2] / "build" / "seqcast"
    if not seqcast.exists():
        pytest.skip("seqcast CLI not built")
    data = tmp_path / "data.csv"
    subprocess.run(
        [seqcast, "gen-data", "--out", data, "--steps", "400", "--k", "3"],
        check=True,
    )
    config = tmp_path / "run.conf"
    config.write_text(
        "K=3\nL=32\nT=8\ns=8\nd_model=8\nN=1\nd_state=4\n"
        "dropout_rate=0.1\nepochs=1\nbatch_size=16\nmax_batches_per_epoch=4\n"
    )
    run_dir = tmp_path / "run"
    subprocess.run(
        [seqcast, "train", "--config", config, "--data", data, "--out", run_dir],
        check=True,
        stdout=subprocess.DEVNULL,
    )

    f = sq.Forecaster(str(run_dir / "model.ckpt"))
    assert (f.variables, f.lookback, f.horizon) == (3, 32, 8)

    x = np.loadtxt(data, delimiter=",", skiprows=1, usecols=(1, 2, 3))[:32]
    y = f.predict(x[None, :, :])
    assert y.shape == (1, 8, 3)
    assert np.isfinite(y).all()

    order = f.decode_order(solver="ls")
    assert sorted(order) == [0, 1, 2]
    y_perm = f.predict(x[None, :, :], order=order)
    assert y_perm.shape == (1, 8, 3)
    assert f.cost_graph().shape == (3, 3)


def test_bad_inputs_raise():
    with pytest.raises(ValueError):
        sq.solve_order(np.zeros((2, 3)), solver="sa")
    with pytest.raises(ValueError):
        sq.solve_order(np.zeros((3, 3)), solver="nope")
    with pytest.raises(ValueError):
        sq.path_cost(np.zeros((3, 3)), [0, 0, 1])
