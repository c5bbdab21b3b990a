import pytest

from pbdetect.augment import AugmentSpec
from pbdetect.config import DEFAULT_OUTPUT, OUTPUT_ENV, ConfigError, ExperimentConfig
from pbdetect.eval.folds import Scheme
from pbdetect.labelfuse import Granularity
from pbdetect.windowing import Padding


def test_defaults():
    cfg = ExperimentConfig()
    spec = cfg.window_specs()[0]
    assert (spec.window_len, spec.step, spec.padding) == (180, 45, Padding.ZERO)
    assert cfg.model.layers == 3 and cfg.model.hidden == 32
    assert cfg.train.learning_rate == 0.001 and cfg.train.batch_size == 20
    assert cfg.scheme == Scheme.LOSO and cfg.labels == Granularity()
    assert cfg.augment == AugmentSpec()


def test_yaml_round_trip(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(
        "synthetic: {n_healthy: 3, n_cp: 3, two_trial_healthy: 0, two_trial_cp: 1}\n"
        "window_lengths_s: [2.5, 3, 4]\noverlap: 0.5\npadding: last\n"
        "augment: {methods: [jitter, reverse]}\nlabels: 'quad:3:1.5'\n"
        "model: {architecture: dual-stream}\ntrain: {epochs: 4}\nscheme: lsso\nlsso_folds: 3\nseed: 5\n"
    )
    cfg = ExperimentConfig.load(path)
    assert cfg.synthetic.n_cp == 3 and cfg.window_lengths_s == (2.5, 3.0, 4.0)
    assert cfg.padding == Padding.LAST and cfg.augment.methods == frozenset({"jitter", "reverse"})
    assert cfg.labels == Granularity("quad", 3, 1.5) and cfg.model.architecture == "dual-stream"
    assert cfg.train.epochs == 4 and cfg.scheme == Scheme.LSSO and cfg.seed == 5
    assert len(cfg.plan(cfg.load_sequences())) == 3


@pytest.mark.parametrize(
    "text",
    [
        "bogus: 1\n",
        "model: {depth: 3}\n",
        "padding: sideways\n",
        "overlap: 1.0\n",
        "manifest: a.json\nsynthetic: {}\n",
        "- a list\n",
        "labels: five\n",
    ],
)
def test_invalid_files(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        ExperimentConfig.load(path)


def test_flags_override_and_none_means_unset():
    cfg = ExperimentConfig(seed=3).override(seed=None, overlap=0.5)
    assert cfg.seed == 3 and cfg.overlap == 0.5


def test_output_dir_resolution(monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    assert str(ExperimentConfig().resolved_output_dir()) == DEFAULT_OUTPUT
    monkeypatch.setenv(OUTPUT_ENV, "/tmp/elsewhere")
    assert str(ExperimentConfig().resolved_output_dir()) == "/tmp/elsewhere"
    assert str(ExperimentConfig(output_dir="x").resolved_output_dir()) == "x"


def test_plan_seed_is_derived():
    seqs = ExperimentConfig(synthetic=None).load_sequences()
    a = ExperimentConfig(scheme=Scheme.LSSO, seed=1).plan(seqs)
    assert a == ExperimentConfig(scheme=Scheme.LSSO, seed=1).plan(seqs)
    assert a != ExperimentConfig(scheme=Scheme.LSSO, seed=2).plan(seqs)
