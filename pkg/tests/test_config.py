import numpy as np
import pytest

from piatr.config import ConfigError, RunConfig, dump_flat_config, load_flat_config


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_defaults_from_empty_config(tmp_path):
    cfg = RunConfig.load(write(tmp_path, ""))
    assert cfg.problem.kind == "quadratic"
    assert cfg.schedule.p == 1.8
    assert cfg.run.iters == 1000
    assert cfg.diagnostics.window_fraction == 0.5


def test_dotted_and_table_forms_agree(tmp_path):
    a = load_flat_config(write(tmp_path, "schedule.q = 0.6\nrun.iters = 10\n", "a.toml"))
    b = load_flat_config(write(tmp_path, "[schedule]\nq = 0.6\n[run]\niters = 10\n", "b.toml"))
    assert a == b == {"schedule.q": 0.6, "run.iters": 10}


def test_round_trip(tmp_path):
    text = 'problem.kind = "l1"\nproblem.dim = 7\nschedule.lambda = 0.9\nrun.x_init = "zero"\n'
    cfg = RunConfig.load(write(tmp_path, text))
    again = RunConfig.load(write(tmp_path, dump_flat_config(cfg.to_flat()), "d.toml"))
    assert again == cfg


@pytest.mark.parametrize(
    "text",
    [
        "run.iters = 1\n",
        "schedule.q = 2.0\n",
        "nope.key = 1\n",
        'problem.kind = "huber"\n',
        'run.x_init = "gaussian"\n',
        'run.iters = "many"\n',
        "diagnostics.window_fraction = 1.0\n",
        'diagnostics.energy_variant = "medium"\n',
        'problem.kind = "custom_csv"\n',
        'problem.matrix_path = "missing.csv"\n',
        "schedule.q = \n",
    ],
)
def test_invalid_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        RunConfig.load(write(tmp_path, text))


def test_custom_csv_dims(tmp_path):
    write(tmp_path, "1,0,0\n0,1,0\n", "A.csv")
    write(tmp_path, "1\n2\n", "b.csv")
    base = 'problem.kind = "custom_csv"\nproblem.matrix_path = "A.csv"\nproblem.b_path = "b.csv"\n'
    assert RunConfig.load(write(tmp_path, base + "problem.dim = 3\n")).problem.build().dim == 3
    cfg = RunConfig.load(write(tmp_path, base + "problem.dim = 4\n"))
    with pytest.raises(ConfigError):
        cfg.problem.build()


def test_trace_keys_ignored(tmp_path):
    cfg = RunConfig.load(write(tmp_path, 'trace.problem_id = "x"\n'))
    assert cfg.problem.kind == "quadratic"


def test_starting_points():
    cfg = RunConfig.from_flat({"run.x_init": "random_unit"})
    x0, x1 = cfg.run.starting_points(5, 0)
    assert np.linalg.norm(x0) == pytest.approx(1.0)
    np.testing.assert_array_equal(x0, x1)
    y0, _ = cfg.run.starting_points(5, 0)
    np.testing.assert_array_equal(x0, y0)
    z0, _ = RunConfig.from_flat({"run.x_init": "zero"}).run.starting_points(5, 0)
    np.testing.assert_array_equal(z0, 0.0)


def test_dump_skips_none_and_sorts():
    text = dump_flat_config({"b.x": 1, "a.y": None, "a.z": "s", "c.t": True})
    assert text == 'a.z = "s"\nb.x = 1\nc.t = true\n'
