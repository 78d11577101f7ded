import numpy as np
import pytest

from src.core.cache import DensityCache
from src.core.config import RunConfig, load_run_config
from src.core.exceptions import (
    ConfigurationError,
    CoverageViolation,
    OutOfDomain,
    StrataException,
    ValidationError,
)
from src.core.sampling import halton_ball
from src.core.workers import parallel_map


def test_run_config_defaults():
    run = load_run_config()
    assert isinstance(run, RunConfig)
    assert run.eps == 0.1
    assert run.r_min == 0.0625
    assert run.provenance()["out"] == "strata_out"


def test_run_config_file_parses_lists(tmp_path):
    config_file = tmp_path / "run.cfg"
    config_file.write_text("x=0.5,0,0,0,0\nframe=1,0,0;0,1,0\nsamples=12\n")
    run = load_run_config(str(config_file), {"samples": None})
    assert run.x == [0.5, 0.0, 0.0, 0.0, 0.0]
    assert run.frame == [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    assert run.samples == 12


def test_run_config_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigurationError):
        load_run_config(None, {"eps": -1.0})
    with pytest.raises(ConfigurationError):
        load_run_config(None, {"unknown_key": 1})
    with pytest.raises(ConfigurationError):
        load_run_config(str(tmp_path / "missing.cfg"))


def test_exit_codes():
    assert ValidationError("k", "9").exit_code == 2
    assert OutOfDomain(np.zeros(3), 2.0).exit_code == 2
    assert issubclass(CoverageViolation, StrataException)
    assert CoverageViolation.exit_code == 3


def test_exception_serialization():
    error = ValidationError("eps", "-1", "a positive threshold", technical_details="eps <= 0")
    payload = error.to_dict(include_technical=True)
    assert payload["error_type"] == "ValidationError"
    assert payload["exit_code"] == 2
    assert payload["technical_details"] == "eps <= 0"
    assert "technical_details" not in error.to_dict()


def test_cache_computes_once():
    cache = DensityCache(max_entries=2)
    calls = []

    def compute():
        calls.append(1)
        return "profile"

    assert cache.get_or_compute("profile", "v0", compute, n=5) == "profile"
    assert cache.get_or_compute("profile", "v0", compute, n=5) == "profile"
    assert len(calls) == 1
    assert cache.get_cache_stats()["hits"] == 1


def test_cache_evicts_least_recent():
    cache = DensityCache(max_entries=2)
    cache.put("a", 1)
    cache.put("b", 2)
    cache.get("a")
    cache.put("c", 3)
    assert cache.get("b") is None
    assert cache.get("a") == 1
    assert cache.invalidate_cache() == 2


def test_parallel_map_keeps_order():
    assert parallel_map(lambda v: v * v, range(20), max_workers=4) == [v * v for v in range(20)]


def test_halton_ball_is_prefix_stable():
    small = halton_ball(3, 10)
    large = halton_ball(3, 50, center=[1.0, 0.0, 0.0], radius=0.5)
    assert np.allclose(np.array([1.0, 0.0, 0.0]) + 0.5 * small, large[:10])
    assert np.all(np.linalg.norm(small, axis=1) <= 1.0)
    with pytest.raises(ValidationError):
        halton_ball(3, 5, radius=0.0)
