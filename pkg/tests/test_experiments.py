import math

import numpy as np
import pytest

from cfgutil import make_config
from spectral_cnn import experiments as ex
from spectral_cnn.config import parse_config
from spectral_cnn.data import synth_power_law_images
from spectral_cnn.nn import Mode, build_architecture, network_forward


class TestSpeedup:
    def test_smooth_trailing(self):
        assert ex.smooth([5, 3, 1, 1, 0, 10], window=3).tolist() == [5, 4, 3, 5 / 3, 2 / 3, 11 / 3]

    def test_first_reach(self):
        assert ex.first_reach([3, 2, 1, 0.5], 1.0) == 3
        assert ex.first_reach([3, 2], 1.0) is None

    def test_faster_spectral(self):
        spatial = [4, 3, 2, 1.5, 1.2, 1.0, 0.9, 0.8, 0.7, 0.6]
        spectral = [3, 1.5, 0.8, 0.5, 0.3, 0.2, 0.2, 0.2, 0.2, 0.2]
        res = ex.speedup_factor(spatial, spectral, window=1)
        assert res.threshold == 0.6 and res.spatial_epochs == 10
        assert res.spectral_epochs == 4 and res.speedup == 2.5 and not res.lower_bound

    def test_lower_bound(self):
        res = ex.speedup_factor([3, 2, 1], [3, 3, 3], window=1)
        assert res.lower_bound and res.spectral_epochs == 3 and res.speedup == 1.0

    def test_identical_curves(self):
        curve = list(np.linspace(2.3, 0.4, 12))
        res = ex.speedup_factor(curve, curve)
        assert res.speedup == 1.0


class TestInformationPreservation:
    @pytest.mark.parametrize("fraction,stride", [(1.0, 1), (0.25, 2), (0.3, 2), (0.2, 4),
                                                 (1 / 16, 4), (0.02, 8)])
    def test_stride(self, fraction, stride):
        assert ex.max_pool_stride_for(fraction) == stride

    def test_parse_fractions(self):
        assert ex.parse_fractions("0.25,1") == [0.25, 1.0]
        fr = ex.parse_fractions("0.02..1.0")
        assert len(fr) == 25 and fr[0] == 0.02 and fr[-1] == 1.0
        assert len(ex.parse_fractions("0.1..0.5:5")) == 5
        for bad in ("0..1", "1.5", "", "0.5..0.2"):
            with pytest.raises(ValueError):
                ex.parse_fractions(bad)

    def test_curve_properties(self):
        images = synth_power_law_images(30, size=32, exponent=2.0, seed=1).images
        rows = ex.information_preservation(images, ex.parse_fractions("0.02..1.0"))
        spectral = [r[3] for r in rows]
        assert all(b <= a + 1e-15 for a, b in zip(spectral, spectral[1:]))
        assert rows[-1][3] < 1e-10 and rows[-1][4] == 0.0
        quarter = ex.information_preservation(images, [0.25])[0]
        assert quarter[5] == 2 and quarter[3] < quarter[4]


class TestPoolDemo:
    def test_constant_image(self, tmp_path):
        img = np.full((16, 16), 0.3)
        _, rows = ex.pool_demo(img, [2, 4, 8, 16], tmp_path)
        assert all(r[3] < 1e-12 for r in rows)
        assert (tmp_path / "pool_004.pgm").exists() and (tmp_path / "pool_demo.csv").exists()

    def test_full_size_identity(self, tmp_path, rng):
        img = rng.random((12, 12))
        outputs, rows = ex.pool_demo(img, [12], tmp_path)
        assert np.max(np.abs(outputs[12][0] - img)) < 1e-10
        assert np.max(np.abs(outputs[12][1] - img)) < 1e-10

    def test_checkerboard_half(self, tmp_path):
        img = (np.indices((16, 16)).sum(axis=0) % 2).astype(float)
        outputs, _ = ex.pool_demo(img, [8], tmp_path)
        assert np.max(np.abs(outputs[8][0] - 0.5)) < 1e-12

    def test_bad_size(self, tmp_path):
        with pytest.raises(ValueError):
            ex.pool_demo(np.zeros((8, 8)), [9], tmp_path)


class TestTraining:
    def test_loss_decreases_from_ln10(self, tmp_path):
        cfg = parse_config(make_config(tmp_path, data={"n_train": 96}, optim={"epochs": 4, "lr": 0.003}))
        train, test = ex.load_splits(cfg)
        net = build_architecture(cfg.architecture())
        net.mode = Mode.EVAL
        init_loss = network_forward(net, train.images, train.labels)[0]
        assert abs(init_loss - math.log(10)) < 0.3
        records, _ = ex.run_train(cfg)
        assert len(records) == 4
        assert records[-1].train_loss < init_loss
        assert (tmp_path / "train_log.csv").exists() and (tmp_path / "checkpoint.spck").exists()

    def test_rerun_byte_identical(self, tmp_path):
        for name in ("a", "b"):
            ex.run_train(parse_config(make_config(tmp_path / name, data={"max_shift": 2, "hflip": True})))
        for fname in ("train_log.csv", "checkpoint.spck"):
            assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()
        header = (tmp_path / "a" / "train_log.csv").read_text().splitlines()[0]
        assert header == "schema,epoch,lr,train_loss,train_err,test_err"

    def test_eval_error_dropout_free(self, tmp_path):
        cfg = parse_config(make_config(tmp_path))
        train, test = ex.load_splits(cfg)
        net = build_architecture(cfg.architecture())
        assert net.has_dropout
        a = ex.error_rate(net, test)
        net.rng = np.random.default_rng(123)
        assert ex.error_rate(net, test) == a

    def test_schedule_applied(self, tmp_path):
        cfg = parse_config(make_config(tmp_path, optim={"epochs": 3, "milestones": [[1, 0.5], [2, 0.1]]}))
        records, _ = ex.run_train(cfg)
        assert [r.lr for r in records] == pytest.approx([0.001, 0.0005, 0.00005])

    def test_plain_sgd_twins_identical(self, tmp_path):
        cfg = parse_config(make_config(tmp_path, model={"alpha": None, "beta": None},
                                       optim={"rule": "sgd", "lr": 0.01, "weight_decay": 0.001,
                                              "epochs": 2}))
        runs, result = ex.compare_parametrizations(cfg)
        a = [r.train_loss for r in runs["spatial"][1]]
        b = [r.train_loss for r in runs["spectral"][1]]
        assert np.max(np.abs(np.subtract(a, b))) < 1e-6
        for fa, fb in zip(runs["spatial"][0].spatial_conv_filters(),
                          runs["spectral"][0].spatial_conv_filters()):
            assert np.max(np.abs(fa - fb)) < 1e-8

    def test_run_compare_outputs(self, tmp_path):
        cfg = parse_config(make_config(tmp_path, optim={"epochs": 3}))
        ex.run_compare(cfg)
        for name in ("compare_log.csv", "compare_summary.csv", "spatial_timing.csv",
                     "spectral_timing.csv", "spatial.spck", "spectral.spck"):
            assert (tmp_path / name).exists()
        lines = (tmp_path / "compare_log.csv").read_text().splitlines()
        assert len(lines) == 4 and lines[1].startswith("compare_log.v1,1,")
