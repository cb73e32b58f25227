"""
Unit tests for the run configuration file.
"""

import pytest

from curvednet.config import RunConfig, load_run_config, parse_key_values, parse_value, validate_run_config
from curvednet.errors import ConfigError


class TestParseKeyValues:
    """Tests for the flat ``key = value`` syntax."""

    def test_comments_and_blanks(self):
        values = parse_key_values("# header\n\nepochs = 3   # trailing\nlr=0.1\n")
        assert values == {"epochs": (3, "3"), "lr": (4, "0.1")}

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match=":2:"):
            parse_key_values("epochs = 3\nlr 0.1\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_key_values("seed = 1\nseed = 2\n")


class TestParseValue:
    """Tests for typed conversion."""

    def test_scalars(self):
        assert parse_value("epochs", "7") == 7
        assert parse_value("curvature_h", "-0.01") == -0.01
        assert parse_value("hyperbolic_linear", "yes") is True
        assert parse_value("architecture", "mit") == "mit"

    def test_tuples(self):
        assert parse_value("hidden_dims", "32, 16") == (32, 16)
        assert parse_value("mixed_components", "spherical,hyperbolic") == ("spherical", "hyperbolic")
        assert parse_value("sweep_curvatures", "-1e-4, -1") == (-1e-4, -1.0)

    def test_bad_bool(self):
        with pytest.raises(ValueError):
            parse_value("hyperbolic_linear", "maybe")


class TestLoadRunConfig:
    """Tests for reading and validating a config file."""

    def test_defaults(self):
        cfg = RunConfig()
        validate_run_config(cfg)
        assert (cfg.curvature_s, cfg.curvature_h) == (1.0, -1.0)
        assert cfg.embed_dim == 8
        assert cfg.hidden_dims == (64, 64)
        assert cfg.detection_error_mode == "min"
        assert cfg.aupr_positive == "ood"

    def test_overrides(self, config_file):
        cfg = load_run_config(config_file("architecture = sit\nepochs = 2\ncompare_seeds = 0, 1, 2\n"))
        assert cfg.architecture == "sit"
        assert cfg.epochs == 2
        assert cfg.compare_seeds == (0, 1, 2)

    def test_unknown_key(self, config_file):
        with pytest.raises(ConfigError, match="unknown key 'epoch'"):
            load_run_config(config_file("epoch = 2\n"))

    def test_bad_value_names_line(self, config_file):
        with pytest.raises(ConfigError, match=":2: bad value for 'epochs'"):
            load_run_config(config_file("seed = 1\nepochs = many\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(str(tmp_path / "absent.cfg"))

    def test_all_violations_reported(self, config_file):
        with pytest.raises(ConfigError) as exc:
            load_run_config(config_file("architecture = xyz\ncurvature_h = 0.5\nbatch_size = 0\n"))
        message = str(exc.value)
        assert "architecture" in message
        assert "curvature_h" in message
        assert "batch_size" in message

    def test_mit_rejects_euclidean_component(self, config_file):
        with pytest.raises(ConfigError, match="mit"):
            load_run_config(config_file("architecture = mit\nmixed_components = euclidean, spherical\n"))

    def test_config_error_exit_code(self):
        assert ConfigError("x").exit_code == 2
