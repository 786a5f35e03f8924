import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from splinesvm.dataio import (
    MODEL_MAGIC,
    DataError,
    LabeledDataset,
    ModelFormatError,
    gen_toy_circle,
    read_model,
    read_svmlight,
    write_model,
    write_svmlight,
)
from splinesvm.encoder import EmbeddingSpec
from splinesvm.solver import TrainConfig, train_binary, train_ova


def write(tmp_path, text, name="d.svm"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestReadSvmlight:
    def test_basic_line(self, tmp_path):
        d = read_svmlight(write(tmp_path, "+1 1:0.5 3:0.2\n"))
        assert d.y.tolist() == [1]
        assert d.X.tolist() == [[0.5, 0.0, 0.2]]

    def test_comments_and_blank_lines(self, tmp_path):
        d = read_svmlight(write(tmp_path, "# header\n\n-1 2:1 # note\n3 1:4\n"))
        assert d.y.tolist() == [-1, 3]
        assert d.X.tolist() == [[0.0, 1.0], [4.0, 0.0]]

    def test_unlabelled(self, tmp_path):
        d = read_svmlight(write(tmp_path, "1:0.5\n2:1\n"))
        assert d.y is None and d.X.shape == (2, 2)

    def test_empty_line_only_example(self, tmp_path):
        d = read_svmlight(write(tmp_path, "+1\n-1 1:2\n"))
        assert d.X.tolist() == [[0.0], [2.0]]

    def test_dims_override(self, tmp_path):
        assert read_svmlight(write(tmp_path, "1 1:1\n"), n_dims=4).X.shape == (1, 4)
        with pytest.raises(DataError):
            read_svmlight(write(tmp_path, "1 5:1\n"), n_dims=4)

    @pytest.mark.parametrize("text,line", [
        ("", None),
        ("# nothing\n", None),
        ("+1 0:0.5\n", 1),
        ("+1 1:0.5\nabc 1:1\n", 2),
        ("+1 1:0.5\n+1 1\n", 2),
        ("+1 1:x\n", 1),
        ("+1 1:nan\n", 1),
        ("+1 1:inf\n", 1),
        ("+1 1:1 1:2\n", 1),
        ("+1 1:1\n1:1\n", 2),
        ("0.5 1:1\n", 1),
        ("+1 a:1\n", 1),
    ])
    def test_rejects(self, tmp_path, text, line):
        with pytest.raises(DataError) as err:
            read_svmlight(write(tmp_path, text))
        if line is not None:
            assert f"line {line}" in str(err.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_svmlight(tmp_path / "absent.svm")


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=6),
                  elements=st.floats(-1e12, 1e12, allow_subnormal=False)),
       st.integers(-3, 3))
def test_svmlight_round_trip(tmp_path_factory, X, label):
    path = tmp_path_factory.mktemp("rt") / "d.svm"
    y = np.full(X.shape[0], label)
    write_svmlight(LabeledDataset(X, y), path)
    back = read_svmlight(path, n_dims=X.shape[1])
    assert back.X.tobytes() == (X + 0.0).tobytes()
    assert back.y.tolist() == y.tolist()


def test_dataset_validation():
    with pytest.raises(DataError):
        LabeledDataset(np.zeros(3))
    with pytest.raises(DataError):
        LabeledDataset(np.zeros((2, 1)), np.zeros(3))
    with pytest.raises(DataError):
        LabeledDataset(np.array([[np.inf]]))


def test_subset_and_classes():
    d = LabeledDataset(np.arange(6.0).reshape(3, 2), np.array([2, -1, 2]))
    assert d.classes.tolist() == [-1, 2]
    assert d.subset([0, 2]).X.tolist() == [[0.0, 1.0], [4.0, 5.0]]


class TestToyCircle:
    def test_labels(self):
        d = gen_toy_circle(500, seed=4)
        inside = (d.X**2).sum(axis=1) <= 1
        assert np.all(d.y[inside] == 1) and np.all(d.y[~inside] == -1)
        assert np.all(np.abs(d.X) <= 1)

    def test_deterministic(self):
        a, b = gen_toy_circle(100, 9), gen_toy_circle(100, 9)
        assert a.X.tobytes() == b.X.tobytes()
        assert gen_toy_circle(100, 10).X.tobytes() != a.X.tobytes()

    def test_area(self):
        d = gen_toy_circle(100_000, seed=0)
        assert abs(np.mean(d.y == 1) - np.pi / 4) <= 0.01

    def test_invalid(self):
        with pytest.raises(ValueError):
            gen_toy_circle(0)


class TestModelFile:
    @pytest.mark.parametrize("family", ["spline", "fourier", "hermite"])
    def test_round_trip_bit_exact(self, tmp_path, rng, family):
        train = gen_toy_circle(300, seed=5)
        spec = EmbeddingSpec.fit(train, family=family, degree=2, bins=7, terms=3, bias=0.75)
        model = train_binary(train, spec, TrainConfig(C=0.5, seed=3))
        path = tmp_path / "m.txt"
        write_model(model, path)
        back = read_model(path)
        assert back.weights.tobytes() == model.weights.tobytes()
        assert (back.C, back.seed, back.classes) == (0.5, 3, model.classes)
        Z = rng.uniform(-1.5, 1.5, (100, 2))
        assert back.decision_function(Z).tobytes() == model.decision_function(Z).tobytes()

    def test_ova_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.uniform(size=(90, 1))
        y = np.digitize(X[:, 0], [1 / 3, 2 / 3]) * 2 + 1
        data = LabeledDataset(X, y)
        ova = train_ova(data, EmbeddingSpec.fit(data, bins=6), TrainConfig())
        path = tmp_path / "m.txt"
        write_model(ova, path)
        back = read_model(path)
        assert back.classes == (1, 3, 5)
        assert back.decision_function(X).tobytes() == ova.decision_function(X).tobytes()

    def test_header_documents_objective(self, tmp_path):
        train = gen_toy_circle(50, seed=1)
        model = train_binary(train, EmbeddingSpec.fit(train), TrainConfig())
        path = tmp_path / "m.txt"
        write_model(model, path)
        text = path.read_text()
        assert text.startswith(f"{MODEL_MAGIC} 1\n")
        assert "C = 1/(lambda*m)" in text

    def test_unknown_version(self, tmp_path):
        p = write(tmp_path, f"{MODEL_MAGIC} 99\nfamily spline\n", "m.txt")
        with pytest.raises(ModelFormatError, match="version"):
            read_model(p)

    def test_not_a_model(self, tmp_path):
        with pytest.raises(ModelFormatError):
            read_model(write(tmp_path, "+1 1:2\n", "m.txt"))

    def test_truncated(self, tmp_path):
        train = gen_toy_circle(50, seed=1)
        model = train_binary(train, EmbeddingSpec.fit(train), TrainConfig())
        path = tmp_path / "m.txt"
        write_model(model, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(ModelFormatError):
            read_model(path)
