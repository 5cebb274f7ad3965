import pytest

from berezin_kms.config import ConfigError, load_config, parse_config
from berezin_kms.lattice import Region

GOOD = """
[experiment]
js = [1, 2]
region = [[0], [1]]

[[potential.terms]]
offsets = [[0]]
coeffs = [{site = 0, l = 1, m = 0, re = 0.5}]

[[potential.terms]]
offsets = [[0], [1]]
monomials = [{re = 0.25, factors = [{site = 0, l = 1, m = 0}, {site = 1, l = 1, m = 0}]}]

[observables.a]
coeffs = [{site = 0, l = 1, m = 1, re = 1.0}]
"""


def test_parse_good():
    cfg = parse_config(GOOD, "good.toml")
    phi = cfg.potential
    assert len(phi.terms) == 2 and phi.max_arity == 2
    assert phi.terms[1].observable[(((0,), 1, 0), ((1,), 1, 0))] == 0.25
    assert cfg.region() == Region.path(2)
    assert cfg.get("js") == [1, 2]
    assert cfg.observables["a"][(((0,), 1, 1),)] == 1.0
    assert len(cfg.sha256) == 64


def test_sha_changes_with_content():
    assert parse_config(GOOD).sha256 != parse_config(GOOD + "\n# x\n").sha256


def test_non_self_adjoint_is_line_anchored():
    bad = GOOD.replace("l = 1, m = 0, re = 0.5", "l = 1, m = 1, re = 0.5")
    with pytest.raises(ConfigError, match=r"bad.toml:6: self-adjointness violated at term 0"):
        parse_config(bad, "bad.toml")


@pytest.mark.parametrize(
    "text,msg",
    [
        ("[[potential.terms]]\ncoeffs = []\n", "missing offsets"),
        ("[[potential.terms]]\noffsets = [[0]]\ncoeffs = [{site = 3, l = 1, m = 0, re = 1.0}]\n", "out of range"),
        ("[[potential.terms]]\noffsets = [[0]]\ncoeffs = [{site = 0, l = 1, m = 2, re = 1.0}]\n", "invalid harmonic"),
        ("[[potential.terms]]\noffsets = [[0]]\ncoeffs = [{site = 0, m = 0, re = 1.0}]\n", "missing field"),
        ("[[potential.terms\n", "x.toml"),
    ],
)
def test_invalid_configs(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text, "x.toml")


def test_shipped_configs(repo_root):
    for name in ["single_site.toml", "two_site.toml", "beta_zero.toml"]:
        load_config(repo_root / "configs" / name)
    with pytest.raises(ConfigError, match="self-adjointness violated at term 1"):
        load_config(repo_root / "configs" / "not_self_adjoint.toml")
