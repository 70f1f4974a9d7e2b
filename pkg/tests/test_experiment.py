import numpy as np
import pytest

from parallel_vq.config import ExperimentConfig, parse_config
from parallel_vq.experiment import grid, prepare_seed, run_experiment
from parallel_vq.metrics import read_curves_csv

TINY = dict(total_steps=300, eval_every=30, n=300, dim=3, components=4, kappa=5)


@pytest.fixture(scope="module")
def tiny_result(tmp_path_factory):
    cfg = ExperimentConfig(seeds=(0, 1), M=(1, 3), tau=(5,), **TINY)
    out = tmp_path_factory.mktemp("run")
    return cfg, out, run_experiment(cfg, out_dir=out)


def test_grid_size():
    cfg = ExperimentConfig(seeds=(0, 1), M=(1, 2, 10), tau=(10, 100), schemes=("delta",))
    assert len(grid(cfg)) == 12


def test_single_worker_speedup_is_one(tiny_result):
    _, _, res = tiny_result
    for row in res.summary:
        if row.M == 1 and row.time_to_threshold is not None:
            assert row.speedup == 1.0


def test_summary_final_is_last_curve_point(tiny_result):
    _, _, res = tiny_result
    for row in res.summary:
        curve = res.curve(row.scheme, row.M, row.tau, row.seed)
        assert row.final_distortion == curve.points[-1].distortion
        assert curve.ticks[-1] == 300


def test_output_layout(tiny_result):
    cfg, out, res = tiny_result
    files = sorted(p.name for p in (out / "curves").iterdir())
    assert len(files) == len(grid(cfg)) and "delta_M3_tau5_seed1.csv" in files
    header = (out / "summary.csv").read_text().splitlines()[0]
    assert header == "scheme,M,tau,seed,final_distortion,threshold,time_to_threshold,speedup"
    (back,) = read_curves_csv(out / "curves" / "async_M3_tau5_seed0.csv")
    assert back.distortions.tolist() == res.curve("async", 3, 5, 0).distortions.tolist()


def test_rerun_is_bitwise_identical(tiny_result, tmp_path):
    cfg, out, _ = tiny_result
    run_experiment(cfg, out_dir=tmp_path)
    for p in sorted((out / "curves").iterdir()):
        assert (tmp_path / "curves" / p.name).read_bytes() == p.read_bytes()
    assert (tmp_path / "summary.csv").read_bytes() == (out / "summary.csv").read_bytes()


def test_threads_match_serial(tiny_result):
    cfg, _, res = tiny_result
    par = run_experiment(cfg, threads=2)
    for a, b in zip(res.curves, par.curves):
        assert a.distortions.tobytes() == b.distortions.tobytes()


def test_cells_share_data_and_init():
    cfg = ExperimentConfig(M=(1, 4), **TINY)
    data, w0 = prepare_seed(cfg, 0)
    data_b, w0_b = prepare_seed(cfg.with_seed(0), 0)
    assert data == data_b and np.array_equal(w0, w0_b)
    assert data.M == 4 and w0.shape == (5, 3)


def test_dataset_file(tmp_path):
    from parallel_vq.datagen import save_dataset
    cfg = ExperimentConfig(M=(1, 2), **TINY)
    data, _ = prepare_seed(cfg, 0)
    save_dataset(data, tmp_path / "d.dvq")
    text = f"[data]\npath = {tmp_path / 'd.dvq'}\nn = 300\ndim = 3\n[model]\nkappa = 5\n" \
           "[scheme]\nM = 1, 2\n[experiment]\ntotal_steps = 50\n"
    loaded, w0 = prepare_seed(parse_config(text), 0)
    assert loaded == data and w0.shape == (5, 3)
    assert all(any(np.array_equal(row, p) for p in data.shards.reshape(-1, 3)) for row in w0)
