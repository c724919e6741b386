import math

import pytest

from fsl.config import ConfigError, format_value, load_config, parse_config, parse_value

MINIMAL = "experiment = decay_rates\nflux = burgers\na = 1\n"


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    p = cfg.experiment_params()
    assert (p["N"], p["X"], p["cfl"]) == (4096, 128.5, 0.4)
    assert cfg.grid["N"] == 4096 and cfg.grid["X"] == 128.5 and cfg.scheme["cfl"] == 0.4
    assert cfg.output_dir == "runs"
    res = cfg.resolved()
    assert res["grid"]["N"] == 4096 and res["scheme"]["cfl"] == 0.4


def test_cfl_out_of_range():
    with pytest.raises(ConfigError, match=r"CFL out of \(0,1\]") as err:
        parse_config(MINIMAL + "[scheme]\nCFL = 1.5\n")
    assert err.value.key == "cfl"


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="'foo'") as err:
        parse_config(MINIMAL + "foo = 3\n")
    assert err.value.key == "foo" and err.value.line == 4
    with pytest.raises(ConfigError, match="'foo'"):
        parse_config(MINIMAL + "[grid]\nfoo = 3\n")
    with pytest.raises(ConfigError, match="section"):
        parse_config(MINIMAL + "[extras]\nN = 3\n")


def test_parse_error_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config("experiment = decay_rates\nthis line has no delimiter\n", source="c.ini")
    assert err.value.line == 2
    assert str(err.value).startswith("c.ini:2:")
    with pytest.raises(ConfigError, match="duplicate|twice"):
        parse_config(MINIMAL + "a = 2\n")


@pytest.mark.parametrize("extra,key", [
    ("[grid]\nN = 1000\n", "N"),
    ("[grid]\nX = -1\n", "X"),
    ("seed = -1\n", "seed"),
    ("[grid]\nn = 2\n", "n"),
    ("[scheme]\nflux_kind = weno\n", "flux_kind"),
    ("[farfield]\nh_table = missing.txt\n", "h_table"),
])
def test_validation_names_key(extra, key):
    with pytest.raises(ConfigError) as err:
        parse_config(MINIMAL + extra)
    assert err.value.key == key


def test_bad_flux_and_experiment():
    with pytest.raises(ConfigError) as err:
        parse_config("experiment = decay_rates\nflux = quartic\n")
    assert err.value.key == "flux"
    with pytest.raises(ConfigError) as err:
        parse_config("experiment = bogus\n")
    assert err.value.key == "experiment"
    with pytest.raises(ConfigError, match="missing"):
        parse_config("flux = burgers\n")


def test_key_not_used_by_experiment():
    with pytest.raises(ConfigError, match="not used"):
        parse_config("experiment = profile\n[grid]\nX = 10\n")


def test_paths_resolve_against_config_directory(tmp_path):
    (tmp_path / "h.txt").write_text("\n".join(str(math.cos(2 * math.pi * k / 16)) for k in range(16)))
    path = tmp_path / "c.ini"
    path.write_text("experiment = n2_smoke\n[farfield]\nh_table = h.txt\n")
    cfg = load_config(path)
    assert cfg.far_field["h_table"] == str(tmp_path / "h.txt")
    assert cfg.experiment_params()["h_table"] == str(tmp_path / "h.txt")
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.ini")


def test_aliases_and_params_section():
    cfg = parse_config("experiment = verify_decay_rates\n[params]\nslope_tol = 0.05\nfit_window = (10, 1e4)\n")
    assert cfg.experiment == "decay_rates"
    p = cfg.experiment_params()
    assert p["slope_tol"] == 0.05 and p["fit_window"] == (10, 1e4)
    # eps is read as epsilon, which decay_rates does not take
    with pytest.raises(ConfigError, match="'epsilon' is not used"):
        parse_config(MINIMAL + "[scheme]\neps = 0.01\n")


def test_digest_roundtrip_and_spelling():
    cfg = parse_config(MINIMAL + "q = inf\n[params]\nfit_window = (10, 1e4)\n")
    again = parse_config(cfg.to_text())
    assert again.digest() == cfg.digest()
    assert parse_config(MINIMAL.replace("a = 1", "a = 1.0")).digest() == parse_config(MINIMAL).digest()
    assert parse_config(MINIMAL + "output_dir = elsewhere\n").digest() == parse_config(MINIMAL).digest()
    assert parse_config(MINIMAL + "[grid]\nN = 2048\n").digest() != parse_config(MINIMAL).digest()


@pytest.mark.parametrize("text,value", [("inf", math.inf), ("-inf", -math.inf), ("none", None), ("true", True),
                                        ("(1, 2.5)", (1, 2.5)), ("burgers", "burgers"), ("3", 3),
                                        ("(0, 0, 0.5)", (0, 0, 0.5))])
def test_value_parsing(text, value):
    assert parse_value(text) == value
    assert parse_value(format_value(value)) == value
