import numpy as np
import pytest

from splinesvm.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from splinesvm.dataio import LabeledDataset, read_model, read_svmlight, write_svmlight
from splinesvm.solver import TrainConfig, classify_many, train_linear


@pytest.fixture(scope="module")
def toy_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("toy")
    train, test = d / "train.svm", d / "test.svm"
    assert main(["toy-gen", "-o", str(train), "--m", "600", "--seed", "1"]) == EXIT_OK
    assert main(["toy-gen", "-o", str(test), "--m", "600", "--seed", "2"]) == EXIT_OK
    return train, test


def report_value(out, key):
    for line in out.splitlines():
        if line.startswith(key + ":"):
            return line.split(":", 1)[1].split()[0]
    raise KeyError(key)


def test_toy_gen_deterministic(tmp_path):
    a, b = tmp_path / "a.svm", tmp_path / "b.svm"
    main(["toy-gen", "-o", str(a), "--m", "50", "--seed", "3"])
    main(["toy-gen", "-o", str(b), "--m", "50", "--seed", "3"])
    assert a.read_bytes() == b.read_bytes()


def test_train_report_and_model(toy_files, tmp_path, capsys):
    train, test = toy_files
    model = tmp_path / "m.txt"
    code = main(["train", str(train), "-o", str(model), "--degree", "1", "--reg", "1",
                 "--bins", "10", "--C", "1", "--test", str(test), "--no-progress"])
    out = capsys.readouterr().out
    assert code == EXIT_OK and model.is_file()
    assert float(report_value(out, "test accuracy")) >= 0.95
    assert report_value(out, "encodings materialized") == "no"
    assert int(report_value(out, "passes")) >= 1


def test_progress_lines_on_stderr(toy_files, tmp_path, capsys):
    main(["train", str(toy_files[0]), "-o", str(tmp_path / "m.txt"), "--bins", "4"])
    err = capsys.readouterr().err
    assert "pass 1 violation" in err and "objective" in err


def test_predict_matches_train_report(toy_files, tmp_path, capsys):
    train, _ = toy_files
    model, preds = tmp_path / "m.txt", tmp_path / "p.txt"
    main(["train", str(train), "-o", str(model), "--degree", "2", "--no-progress"])
    train_acc = report_value(capsys.readouterr().out, "train accuracy")
    assert main(["predict", str(model), str(train), "-o", str(preds)]) == EXIT_OK
    assert report_value(capsys.readouterr().out, "accuracy") == train_acc
    lines = preds.read_text().splitlines()
    assert len(lines) == 600
    cls, score = lines[0].split()
    assert int(cls) in (-1, 1) and np.isfinite(float(score))


def test_predict_unlabelled_scores_only(toy_files, tmp_path, capsys):
    train, _ = toy_files
    model = tmp_path / "m.txt"
    main(["train", str(train), "-o", str(model), "--no-progress"])
    unl = tmp_path / "u.svm"
    unl.write_text("1:0.1 2:0.2\n1:0.9 2:-0.9\n")
    capsys.readouterr()
    assert main(["predict", str(model), str(unl)]) == EXIT_OK
    captured = capsys.readouterr()
    assert len(captured.out.splitlines()) == 2
    assert "accuracy" not in captured.out + captured.err


def test_multiclass_predict_matches_classify(tmp_path, capsys):
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(150, 2))
    y = np.digitize(X[:, 0], [0.33, 0.66])
    data_path, model = tmp_path / "mc.svm", tmp_path / "m.txt"
    write_svmlight(LabeledDataset(X, y), data_path)
    assert main(["train", str(data_path), "-o", str(model), "--jobs", "2",
                 "--no-progress"]) == EXIT_OK
    capsys.readouterr()
    main(["predict", str(model), str(data_path)])
    got = [int(line.split()[0]) for line in capsys.readouterr().out.splitlines()]
    data = read_svmlight(data_path)
    assert got == classify_many(read_model(model), data.X).tolist()


def test_encode_then_linear_matches_online(toy_files, tmp_path, capsys):
    train, _ = toy_files
    enc, model = tmp_path / "enc.svm", tmp_path / "m.txt"
    flags = ["--degree", "3", "--bins", "8", "--reg", "2"]
    assert main(["encode", str(train), "-o", str(enc)] + flags) == EXIT_OK
    assert main(["train", str(train), "-o", str(model), "--no-progress"] + flags) == EXIT_OK
    online = read_model(model)
    E = read_svmlight(enc, n_dims=online.spec.width)
    w, _ = train_linear(E.X, E.y, TrainConfig(), bias=None)
    assert np.abs(w - online.plain_weights()).max() <= 1e-10 * max(1, np.abs(w).max())


def test_encode_raw(toy_files, tmp_path):
    out = tmp_path / "raw.svm"
    assert main(["encode", str(toy_files[0]), "-o", str(out), "--raw", "--bins", "5"]) == EXIT_OK
    E = read_svmlight(out)
    np.testing.assert_allclose(E.X[:, :-1].sum(axis=1), 2.0)


def test_kernel_grid(tmp_path, capsys):
    out = tmp_path / "k.csv"
    assert main(["kernel-grid", "-o", str(out), "--step", "0.1"]) == EXIT_OK
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows.shape == (121, 5)
    off = np.abs(rows[:, 0] - rows[:, 1]) >= 0.1 - 1e-12
    assert np.abs(rows[off, 4]).max() < 1e-9
    assert "off-band" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["train", "{train}", "-o", "{out}", "--family", "fourier", "--bins", "5"],
    ["train", "{train}", "-o", "{out}", "--terms", "3"],
    ["train", "{train}", "-o", "{out}", "--degree", "4"],
    ["train", "{train}", "-o", "{out}", "--lo", "0"],
    ["train", "{train}", "-o", "{out}", "--C", "0"],
    ["kernel-grid", "-o", "{out}", "--step", "0.7"],
    ["toy-gen", "-o", "{out}", "--m", "0"],
])
def test_usage_errors_leave_no_output(toy_files, tmp_path, argv):
    out = tmp_path / "out"
    argv = [a.format(train=toy_files[0], out=out) for a in argv]
    assert main(argv) == EXIT_USAGE
    assert not out.exists()


def test_unknown_flag_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["train", "x.svm", "-o", str(tmp_path / "m"), "--bogus"])
    assert exc.value.code == 2


def test_missing_input(tmp_path):
    out = tmp_path / "m.txt"
    assert main(["train", str(tmp_path / "absent.svm"), "-o", str(out)]) == EXIT_DATA
    assert not out.exists()


def test_malformed_input(tmp_path):
    bad = tmp_path / "bad.svm"
    bad.write_text("+1 0:1\n")
    assert main(["train", str(bad), "-o", str(tmp_path / "m.txt")]) == EXIT_DATA


def test_single_class_is_data_error(tmp_path):
    one = tmp_path / "one.svm"
    one.write_text("+1 1:0.2\n+1 1:0.4\n")
    assert main(["train", str(one), "-o", str(tmp_path / "m.txt")]) == EXIT_DATA


def test_bad_model_file(toy_files, tmp_path):
    m = tmp_path / "m.txt"
    m.write_text("splinesvm-model 7\n")
    assert main(["predict", str(m), str(toy_files[0])]) == EXIT_DATA


def test_batch_mode_same_model(toy_files, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    main(["train", str(toy_files[0]), "-o", str(a), "--no-progress"])
    main(["train", str(toy_files[0]), "-o", str(b), "--mode", "batch", "--no-progress"])
    wa, wb = read_model(a).weights, read_model(b).weights
    assert np.abs(wa - wb).max() <= 1e-10


def test_deterministic_training(toy_files, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    main(["train", str(toy_files[0]), "-o", str(a), "--seed", "5", "--no-progress"])
    main(["train", str(toy_files[0]), "-o", str(b), "--seed", "5", "--no-progress"])
    assert a.read_bytes() == b.read_bytes()
