import pytest

from branchscope import config
from branchscope.errors import ParseError, ValidationError
from branchscope.model import Geometric, IndependentParetoLifetime, TwoPoint

MINIMAL = '[model]\nfamily = "exp"\n[run]\nt = 10\nseed = 3\n'


def test_minimal_defaults(monkeypatch):
    monkeypatch.delenv("BRANCHSCOPE_SEED", raising=False)
    c = config.loads(MINIMAL)
    assert c.run.horizon == 10.0 and c.run.seed == 3
    assert c.run.window == 3.0 and c.run.edge_cap == 10_000_000
    assert c.analysis.grid == (-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0)
    assert c.run.order == "event"


def test_full_config(tmp_path, monkeypatch):
    monkeypatch.delenv("BRANCHSCOPE_SEED", raising=False)
    path = tmp_path / "c.toml"
    path.write_text("""
# heavy tail
[model]
family = "pareto"
shape = 2.0
label = "heavy"
[model.offspring]
law = "two_point"
p0 = 0.4
k = 3

[run]
t = 12.5
window = 2.0
cap = 5000
seed = 0x10
replicates = 300
order = "depth"

[analysis]
grid = [1.0, -1.0]
horizons = [4, 6, 8]
census = { one = [[0.0, 1.0]] }
laplace = [{ name = "r", phi = [[0.0, 0.0], [1.0, 1.0]] }]

[output]
dir = "out"
json = "r.json"
""")
    c = config.parse_config(path)
    assert isinstance(c.model, IndependentParetoLifetime) and c.model.offspring == TwoPoint(0.4, 3)
    assert c.model.label == "heavy"
    assert (c.run.horizon, c.run.window, c.run.edge_cap, c.run.seed, c.replicates) == (12.5, 2.0, 5000, 16, 300)
    assert c.analysis.grid == (-1.0, 1.0)
    assert c.analysis.horizons == (4.0, 6.0, 8.0)
    assert list(c.run.characteristics) == ["one"]
    assert c.analysis.laplace_pairs[0][0] == "r" and c.analysis.laplace_pairs[0][2].is_zero
    assert str(c.output.path("json")) == "out/r.json"
    assert c.source == str(path)


def test_pareto_shape_half_accepted():
    c = config.loads('[model]\nfamily = "pareto"\nshape = 0.5\n[model.offspring]\nlaw = "geometric"\nmean = 2.0\n[run]\nt = 5\n')
    assert c.model.shape == 0.5 and c.model.offspring == Geometric(2.0)
    assert c.model.tail_exponent() == 0.0


@pytest.mark.parametrize("text, key", [
    ('[modle]\nfamily = "exp"\n', "modle"),
    ('[model]\nfamily = "exp"\nrat = 1\n[run]\nt = 1\n', "model.rat"),
    ('[model]\nfamily = "exp"\n[run]\nt = 1\nseeds = 1\n', "run.seeds"),
    ('[model]\nfamily = "weibull"\n[run]\nt = 1\n', "model.family"),
    ('[model]\nfamily = "exp"\n[run]\nt = -1\n', "run.t"),
    ('[model]\nfamily = "exp"\n[run]\nseed = 1\n', "run.t"),
    ('[run]\nt = 1\n', "model"),
    ('[model]\nfamily = "exp"\n[model.offspring]\nk = 1\n[run]\nt = 1\n', "model"),
    ('[model]\nfamily = "exp"\n[run]\nt = 1\norder = "bfs"\n', "run.order"),
    ('[model]\nfamily = "exp"\n[run]\nt = 1\n[analysis]\ngrid = [-4.0]\n', "analysis.grid"),
    ('[model]\nfamily = "exp"\n[run]\nt = 1\n[analysis]\nhorizons = [1, 2]\n', "analysis.horizons"),
    ('[model]\nfamily = "exp"\n[run]\nt = 1\n[analysis]\nlaplace = [{ phi = [[0.0, 1.0]] }]\n', "analysis.laplace[0].phi"),
    ('[model]\nfamily = "correlated"\noffspring = {}\n[run]\nt = 1\n', "model.offspring"),
])
def test_validation_errors(text, key):
    with pytest.raises(ValidationError) as err:
        config.loads(text)
    assert err.value.key == key


def test_parse_error_location():
    with pytest.raises(ParseError) as err:
        config.loads('[model]\nfamily = "exp"\nrate = = 1\n')
    assert err.value.line == 3 and err.value.column is not None


def test_missing_file(tmp_path):
    with pytest.raises(ValidationError):
        config.parse_config(tmp_path / "nope.toml")


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv("BRANCHSCOPE_SEED", "77")
    assert config.loads(MINIMAL).run.seed == 77
    monkeypatch.setenv("BRANCHSCOPE_SEED", "x")
    with pytest.raises(ValidationError):
        config.loads(MINIMAL)


def test_overrides(monkeypatch):
    monkeypatch.delenv("BRANCHSCOPE_SEED", raising=False)
    c = config.loads(MINIMAL).with_overrides(t=4.0, seed=9, cap=100, window=None, replicates=150)
    assert (c.run.horizon, c.run.seed, c.run.edge_cap, c.run.window, c.replicates) == (4.0, 9, 100, 3.0, 150)
    with pytest.raises(ValidationError):
        config.loads(MINIMAL).with_overrides(t=-1.0)
