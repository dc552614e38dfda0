import io
import json

import pytest

from pitc.cli import main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


@pytest.fixture
def files(tmp_path):
    def make(**texts):
        paths = {}
        for name, text in texts.items():
            f = tmp_path / name
            f.write_text(text)
            paths[name] = str(f)
        return paths
    return make


def test_parse_echo(files):
    f = files(p="(a!x.0 | b!x.0) + tau.0\n")
    assert run("parse", f["p"]) == (0, "a!x.0 | b!x.0 + tau.0\n")


def test_parse_error_exit(files, capsys):
    f = files(p="a!x.(0 +[")
    code, _ = run("parse", f["p"])
    assert code == 65
    assert ":1:" in capsys.readouterr().err


def test_usage_errors():
    assert run()[0] == 64
    assert run("frobnicate")[0] == 64
    assert run("eq", "only-one")[0] == 64


def test_missing_file():
    assert run("parse", "/nonexistent/file")[0] == 65


def test_eq_sum_commutes(files):
    f = files(p="a!x.0 + b?(z).z!a.0", q="b?(z).z!a.0 + a!x.0")
    assert run("eq", f["p"], f["q"])[0] == 0


def test_eq_discriminator(files):
    f = files(p="a!x.0|b!x.0", q="a!x.b!x.0 + b!x.a!x.0")
    code, out = run("eq", "--relation", "step", f["p"], f["q"])
    assert code == 1
    assert "{a!x, b!x}" in out


def test_eq_truncated(files):
    f = files(p="A(a)", d="A(x) := x!x.A(x)\n")
    assert run("eq", "--defs", f["d"], "--max-nodes", "20", f["p"], f["p"])[0] == 2


def test_eq_guards_inconclusive_for_pomset(files):
    f = files(p="[g].a!x.0", m="atoms: g\nstates: s0={g} s1={}\n")
    assert run("eq", "--model", f["m"], "--relation", "pomset", f["p"], f["p"])[0] == 2
    assert run("eq", "--model", f["m"], f["p"], f["p"])[0] == 0


def test_eq_recursion_inconclusive_for_hp(files):
    f = files(p="A(a)", d="A(x) := x!x.A(x)\n")
    assert run("eq", "--defs", f["d"], "--relation", "hp", f["p"], f["p"])[0] == 2


def test_step_and_pick(files):
    f = files(p="a!x.0 +[1/4] b!x.0")
    code, out = run("step", f["p"])
    assert code == 0 and "p=1/4" in out and "p=3/4" in out
    code, out = run("step", f["p"], "--pick", "1")
    assert out.splitlines()[-1].startswith("^")
    assert run("step", f["p"], "--pick", "9")[0] == 65


def test_step_forward_and_reverse(files):
    f = files(p="^a!x.0 | ^b!y.0", k="a!x[1].0 | b!y[1].0")
    code, out = run("step", f["p"])
    assert "{a!x, b!y}" in out
    code, out = run("step", f["k"], "--reverse", "--pick", "0")
    assert code == 0 and out.splitlines()[-1] == "^a!x.0 | ^b!y.0 @ {}"


def test_step_with_model_state(files):
    f = files(p="^a!x.0", m="atoms: g\nstates: s0={} s1={g}\neffect: a s0 -> s1\n")
    code, out = run("step", "--model", f["m"], f["p"], "--state", "s0")
    assert "@ s1" in out
    assert run("step", "--model", f["m"], f["p"], "--state", "nope")[0] == 65


def test_lts_json(files):
    f = files(p="tau.0")
    code, out = run("lts", f["p"], "--format", "json")
    doc = json.loads(out)
    assert code == 0 and len(doc["nodes"]) == 4
    assert all("/" in e["weight"] for e in doc["prob_edges"])


def test_lts_features(files):
    f = files(p="a!x.0 +[1/2] 0")
    assert run("lts", "--features", "rev", f["p"])[0] == 65
    assert run("lts", "--features", "bogus", f["p"])[0] == 64


def test_normalize_trace(files):
    f = files(p="a!x.0 | b!x.0")
    code, out = run("normalize", "--trace", f["p"])
    assert code == 0 and out.startswith("@ {}: {a!x, b!x}.0")
    assert "E " in out


def test_unbound_identifier(files):
    f = files(p="B(a)")
    assert run("lts", f["p"])[0] == 65


def test_laws_small(files):
    code, out = run("laws", "--seed", "7", "--cases", "2")
    assert code in (0, 1)
    assert "seed 7, 2 cases" in out


def test_deterministic(files):
    f = files(p="(new y)(a!y.0 | a?(z).z!b.0) +[1/3] tau.0")
    first = [run("lts", f["p"], "--format", fmt) for fmt in ("dot", "json")]
    again = [run("lts", f["p"], "--format", fmt) for fmt in ("dot", "json")]
    assert first == again
