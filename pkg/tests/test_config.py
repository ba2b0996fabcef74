import pytest

from ftl_haar_qmc.config import ExperimentConfig, load_config, load_defaults, parse_config
from ftl_haar_qmc.errors import ConfigError, ValidationError
from ftl_haar_qmc.haar import Exponent

BASIC = """\
# rates of the Faure nets
[experiment faure-rates]
generator = faure
b = 2
s = 2
m = 2..6
alpha = [0.75, 1.0]
methods = [upper, lower]
out = rates.csv
"""


def test_load_defaults():
    defaults = load_defaults()
    assert defaults["experiment"]["generator"] == "faure"
    assert defaults["fit_min_points"] == 4


def test_parse_config():
    (cfg,) = parse_config(BASIC, "rates.ini")
    assert cfg.name == "faure-rates"
    assert cfg.m == [2, 3, 4, 5, 6]
    assert cfg.alpha == [0.75, 1.0]
    assert cfg.p == [Exponent.parse(2)]
    assert cfg.methods == ["upper", "lower"]
    assert cfg.out == "rates.csv"
    assert cfg.replicates == 8
    assert cfg.lineno == 2
    assert cfg.key_lines["alpha"] == 7
    assert [params.alpha for params in cfg.space_params()] == [0.75, 1.0]


def test_several_sections_in_file_order():
    text = BASIC + "\n; second\n[experiment]\nkind = sharpness\nm = [3]\nalpha = 0.9\n"
    configs = parse_config(text)
    assert [c.name for c in configs] == ["faure-rates", "experiment-2"]
    assert configs[1].kind == "sharpness"
    assert configs[1].alpha == [0.9]
    assert configs[1].panels is None


def test_infinite_exponents():
    (cfg,) = parse_config("[experiment]\nm = 1..3\nalpha = 1.0\np = [2, inf]\nq = inf\n")
    assert [str(p) for p in cfg.p] == ["2", "inf"]
    assert cfg.q[0].is_infinite


@pytest.mark.parametrize("text,message,lineno", [
    ("m = 1..3\n", "outside an \\[experiment\\] section", 1),
    ("[experiment]\nm = 1..3\nm = 2..4\n", "duplicate key 'm'", 3),
    ("[experiment]\nm 1..3\n", "expected 'key = value'", 2),
    ("[experimnet]\n", "unknown section", 1),
    ("[experiment]\nm = 1..3\ncolour = red\n", "unknown key 'colour'", 3),
    ("[experiment]\nm = 1..3\nb = two\n", "b: expected an integer", 3),
    ("[experiment]\nm = 5..3\n", "empty range", 2),
    ("[experiment]\nm = 1..3\nalpha = [0.5\n", "cannot parse value", 3),
])
def test_config_errors_point_at_the_line(text, message, lineno):
    with pytest.raises(ConfigError, match=message) as info:
        parse_config(text, "bad.ini")
    assert info.value.lineno == lineno
    assert info.value.message.startswith(f"bad.ini:{lineno}: ")


def test_no_sections():
    with pytest.raises(ConfigError, match="no \\[experiment\\] section"):
        parse_config("# nothing here\n")


@pytest.mark.parametrize("body,key", [
    ("m = []\n", "m"),
    ("m = 1..3\ngenerator = vdc\ns = 2\n", "s"),
    ("m = 1..3\ngenerator = matrices\n", "matrices"),
    ("generator = points\n", "points"),
    ("m = 1..3\nworkers = 0\n", "workers"),
    ("m = 1..3\ntol = 0\n", "tol"),
    ("m = 1..3\nmethods = [upper, exact]\n", "methods"),
    ("m = 1..3\nmethods = [hilbert]\nalpha = 0.5\n", "alpha"),
    ("m = 1..3\nmethods = [hilbert]\nalpha = 1.0\np = 3\n", "methods"),
    ("m = 1..3\nalpha = 0.4\n", "alpha"),
    ("m = 1..3\nmethods = [discrepancy]\nalpha = 1.0\ndiscrepancy_method = sobol\n", "discrepancy_method"),
    ("m = 1..3\nkind = sharpness\nalpha = 1.0\np = inf\n", "alpha"),
    ("m = 1..3\nkind = sharpness\nalpha = 1.0\npanels = [0]\n", "panels"),
    ("m = 1..3\nkind = sharpness\nalpha = 1.0\npanels = []\n", "panels"),
])
def test_validation_blames_the_key(body, key):
    text = "[experiment]\n" + body
    with pytest.raises(ConfigError) as info:
        parse_config(text, "bad.ini")
    expected = 1
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith(f"{key} ="):
            expected = lineno
    assert info.value.lineno == expected


def test_discrepancy_aliases_are_accepted():
    (cfg,) = parse_config("[experiment]\nm = 1..3\nalpha = 1.0\nmethods = [discrepancy]\ndiscrepancy_method = mc\n")
    assert cfg.discrepancy_method == "mc"


def test_with_overrides():
    (cfg,) = parse_config(BASIC)
    changed = cfg.with_overrides(seed=7, workers=4, out=None, timing=True)
    assert (changed.seed, changed.workers, changed.out, changed.timing) == (7, 4, "rates.csv", True)
    assert cfg.seed == 0
    with pytest.raises(ValidationError):
        cfg.with_overrides(workers=0)
    with pytest.raises(ValidationError):
        cfg.with_overrides(colour="red")


def test_from_values_defaults():
    cfg = ExperimentConfig.from_values({"m": [1, 2]})
    assert cfg.generator == "faure"
    assert cfg.alpha == [0.75]
    assert cfg.samples == 65536


def test_load_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(BASIC)
    (cfg,) = load_config(path)
    assert cfg.path == str(path)
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "missing.ini")
