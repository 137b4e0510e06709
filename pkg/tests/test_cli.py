import hashlib
import json

import numpy as np
import pytest

from phsar.cli import main, read_config
from phsar.image import load_image, resize_bicubic, save_image
from phsar.model import Model


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def hr_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("hr")
    r = np.random.default_rng(5)
    for i in range(3):
        save_image(resize_bicubic(r.random((12, 12)), 48, 48, False), root / f"t{i}.png")
    return root


SMALL = ["--patch", "5", "--clusters", "4"]


def run_train(hr_dir, out, *extra):
    return main(["train", "--hr-dir", str(hr_dir), "--out", str(out), *SMALL, *extra])


@pytest.fixture(scope="module")
def models(hr_dir, tmp_path_factory):
    root = tmp_path_factory.mktemp("models")
    full, ablated, s3 = root / "full.phsar", root / "ablated.phsar", root / "s3.phsar"
    assert run_train(hr_dir, full) == 0
    assert run_train(hr_dir, ablated, "--no-pst") == 0
    assert run_train(hr_dir, s3, "--scale", "3") == 0
    return full, ablated, s3


class TestTrain:
    def test_same_seed_same_file(self, hr_dir, tmp_path, models):
        again = tmp_path / "again.phsar"
        assert run_train(hr_dir, again, "--threads", "3") == 0
        assert sha(again) == sha(models[0])

    def test_summary(self, hr_dir, tmp_path, capsys):
        assert run_train(hr_dir, tmp_path / "m.phsar") == 0
        out = capsys.readouterr().out
        assert "fallback:" in out and "buckets: 16" in out

    def test_missing_dir(self, tmp_path, capsys):
        missing = tmp_path / "nowhere"
        assert run_train(missing, tmp_path / "m.phsar") == 3
        assert "nowhere" in capsys.readouterr().err

    def test_even_patch(self, hr_dir, tmp_path, capsys):
        code = main(["train", "--hr-dir", str(hr_dir), "--out", str(tmp_path / "m"), "--patch", "8"])
        assert code == 2
        assert "--patch" in capsys.readouterr().err

    @pytest.mark.parametrize("flag, value", [("--scale", "5"), ("--clusters", "0"), ("--ridge", "-1"),
                                             ("--pst-w", "0"), ("--threads", "0")])
    def test_bad_values_name_flag(self, hr_dir, tmp_path, capsys, flag, value):
        code = main(["train", "--hr-dir", str(hr_dir), "--out", str(tmp_path / "m"), flag, value])
        assert code == 2
        assert flag in capsys.readouterr().err

    def test_unparseable_flag(self, capsys):
        assert main(["train", "--scale", "two"]) == 2

    def test_missing_required(self, capsys):
        assert main(["train"]) == 2
        assert "--hr-dir" in capsys.readouterr().err

    def test_empty_dir(self, tmp_path):
        assert run_train(tmp_path, tmp_path / "m.phsar") == 2

    def test_training_error(self, tmp_path, capsys):
        save_image(np.zeros((6, 6)), tmp_path / "tiny.png")
        assert run_train(tmp_path, tmp_path / "m.phsar") == 4
        assert "training error" in capsys.readouterr().err


class TestConfigFile:
    def test_file_then_flag(self, hr_dir, tmp_path, models):
        conf = tmp_path / "exp.conf"
        conf.write_text("# experiment\nscale = 3\npatch = 5\nclusters = 4\n")
        out = tmp_path / "m.phsar"
        assert main(["train", "--config", str(conf), "--hr-dir", str(hr_dir), "--out", str(out)]) == 0
        assert Model.load(out).scale == 3
        assert sha(out) == sha(models[2])
        out2 = tmp_path / "m2.phsar"
        assert main(["train", "--config", str(conf), "--scale", "2",
                     "--hr-dir", str(hr_dir), "--out", str(out2)]) == 0
        assert sha(out2) == sha(models[0])

    def test_bool_key(self, hr_dir, tmp_path, models):
        conf = tmp_path / "exp.conf"
        conf.write_text("no-pst = true\npatch = 5\nclusters = 4\n")
        out = tmp_path / "m.phsar"
        assert main(["train", "--config", str(conf), "--hr-dir", str(hr_dir), "--out", str(out)]) == 0
        assert sha(out) == sha(models[1])

    def test_bad_line(self, tmp_path, capsys):
        conf = tmp_path / "bad.conf"
        conf.write_text("scale 3\n")
        assert main(["train", "--config", str(conf)]) == 2
        assert "--config" in capsys.readouterr().err

    def test_bad_value(self, tmp_path, capsys):
        conf = tmp_path / "bad.conf"
        conf.write_text("scale = big\n")
        assert main(["train", "--config", str(conf), "--hr-dir", "x", "--out", "y"]) == 2
        assert "--scale" in capsys.readouterr().err

    def test_read_config(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("pst-s = 0.4   # comment\n\n--seed = 3\n")
        assert read_config(conf) == {"pst_s": "0.4", "seed": "3"}


class TestUpscale:
    def test_scale3_dimensions(self, models, tmp_path, capsys):
        src = tmp_path / "in.png"
        save_image(np.random.default_rng(0).random((64, 64)), src)
        dst = tmp_path / "out.png"
        assert main(["upscale", "--model", str(models[2]), "--input", str(src), "--output", str(dst)]) == 0
        assert load_image(dst).shape == (192, 192)
        assert "192x192" in capsys.readouterr().out

    def test_input_untouched(self, models, tmp_path):
        src = tmp_path / "in.png"
        save_image(np.random.default_rng(1).random((20, 20)), src)
        before = sha(src)
        assert main(["upscale", "--model", str(models[0]), "--input", str(src),
                     "--output", str(tmp_path / "o.pgm")]) == 0
        assert sha(src) == before

    def test_thread_independent(self, models, tmp_path):
        src = tmp_path / "in.png"
        save_image(np.random.default_rng(2).random((24, 24)), src)
        outs = []
        for t in ("1", "4"):
            dst = tmp_path / f"o{t}.png"
            assert main(["upscale", "--model", str(models[0]), "--input", str(src),
                         "--output", str(dst), "--threads", t]) == 0
            outs.append(sha(dst))
        assert outs[0] == outs[1]

    def test_too_small(self, models, tmp_path, capsys):
        src = tmp_path / "in.png"
        save_image(np.zeros((3, 3)), src)
        assert main(["upscale", "--model", str(models[0]), "--input", str(src),
                     "--output", str(tmp_path / "o.png")]) == 2
        assert "5x5" in capsys.readouterr().err

    def test_missing_model(self, tmp_path):
        assert main(["upscale", "--model", str(tmp_path / "no.phsar"), "--input", "a.png",
                     "--output", "b.png"]) == 3


class TestEval:
    def test_report(self, models, hr_dir, tmp_path, capsys):
        report = tmp_path / "r.json"
        assert main(["eval", "--model", str(models[0]), "--hr-dir", str(hr_dir),
                     "--report", str(report), "--repeats", "1"]) == 0
        data = json.loads(report.read_text())
        assert len(data["rows"]) == 3
        assert "psnrAblated" not in data["rows"][0]
        assert data["config"]["seed"] == 0
        assert "mean" in capsys.readouterr().out

    def test_ablate_on_pst_free_model(self, models, hr_dir, tmp_path):
        report = tmp_path / "r.json"
        assert main(["eval", "--model", str(models[1]), "--hr-dir", str(hr_dir),
                     "--report", str(report), "--ablate", "--repeats", "1"]) == 0
        assert all("psnrAblated" in r for r in json.loads(report.read_text())["rows"])

    def test_ablated_model(self, models, hr_dir, tmp_path):
        report = tmp_path / "r.json"
        assert main(["eval", "--model", str(models[0]), "--ablated-model", str(models[1]),
                     "--hr-dir", str(hr_dir), "--report", str(report), "--repeats", "1"]) == 0
        assert all("psnrAblated" in r for r in json.loads(report.read_text())["rows"])

    def test_ablate_on_pst_model(self, models, hr_dir, tmp_path, capsys):
        assert main(["eval", "--model", str(models[0]), "--hr-dir", str(hr_dir),
                     "--report", str(tmp_path / "r.json"), "--ablate"]) == 2
        assert "--ablate" in capsys.readouterr().err

    def test_psnr_deterministic(self, models, hr_dir, tmp_path):
        cols = []
        for t in ("1", "2"):
            report = tmp_path / f"r{t}.json"
            assert main(["eval", "--model", str(models[0]), "--hr-dir", str(hr_dir),
                         "--report", str(report), "--repeats", "1", "--threads", t]) == 0
            rows = json.loads(report.read_text())["rows"]
            cols.append([(r["psnrBicubic"], r["psnrModel"]) for r in rows])
        assert cols[0] == cols[1]


class TestPstAndInspect:
    def test_pst(self, tmp_path, capsys):
        src = tmp_path / "in.png"
        img = np.zeros((16, 16))
        img[:, 8:] = 1.0
        save_image(img, src)
        dst = tmp_path / "phase.png"
        assert main(["pst", "--input", str(src), "--output", str(dst)]) == 0
        out = load_image(dst)
        assert out.shape == (16, 16) and out.min() == 0.0 and out.max() == 1.0

    def test_pst_bad_flag(self, tmp_path, capsys):
        assert main(["pst", "--input", "a.png", "--output", "b.png", "--pst-sigma", "0"]) == 2
        assert "--pst-sigma" in capsys.readouterr().err

    def test_inspect(self, models, capsys):
        assert main(["inspect", "--model", str(models[0])]) == 0
        out = capsys.readouterr().out
        assert "K=4" in out and "buckets=16" in out and "l2 norm" in out

    def test_inspect_truncated(self, models, tmp_path, capsys):
        bad = tmp_path / "cut.phsar"
        bad.write_bytes(models[0].read_bytes()[:-10])
        assert main(["inspect", "--model", str(bad)]) == 3
        assert "unexpected end of file" in capsys.readouterr().err

    def test_no_command(self):
        assert main([]) == 2
