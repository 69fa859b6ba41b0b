import pytest

from limitgroups import cli
from limitgroups.clg import parse_clg_file
from limitgroups.gad import apply_aut, parse_gad
from limitgroups.homs import Hom, format_hom, hom_length, injective_on, parse_hom
from limitgroups.laminations import format_complex, format_weights, octahedron
from limitgroups.shortening import edge_twists
from limitgroups.words import parse_word
from tests.conftest import FIXTURES


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_discriminate_round_trip(tmp_path, capsys):
    out = tmp_path / "h.hom"
    code, _, _ = run(capsys, "discriminate", "--clg", str(FIXTURES / "z2.clg"),
                     "--elements", str(FIXTURES / "z2.words"), "--out", str(out))
    assert code == 0
    c = parse_clg_file(str(FIXTURES / "z2.clg"))
    text = out.read_text()
    h = parse_hom(text, c.presentation)
    X = cli.read_words((FIXTURES / "z2.words").read_text(), c.presentation)
    assert injective_on(h, X)
    assert "# pass injective on 2 elements" in text


def test_discriminate_is_deterministic(tmp_path, capsys):
    outs = []
    for i in range(2):
        out = tmp_path / f"h{i}.hom"
        elements = tmp_path / "x.words"
        elements.write_text("a\nc\na c\nb d^-1\n")
        assert run(capsys, "--seed", "3", "discriminate", "--clg", str(FIXTURES / "double.clg"),
                   "--elements", str(elements), "--out", str(out))[0] == 0
        outs.append(out.read_text())
    assert outs[0] == outs[1]


def test_shorten_output_parses(tmp_path, capsys):
    g = parse_gad((FIXTURES / "double.gad").read_text())
    hom = tmp_path / "f.hom"
    base = Hom(g.presentation, 2, tuple(parse_word(t, "xy") for t in "xyyx"), ("x", "y"))
    hom.write_text(format_hom(apply_aut(edge_twists(g)[0].power(2), base)))
    code, out, _ = run(capsys, "shorten", "--gad", str(FIXTURES / "double.gad"), "--hom", str(hom), "--inner")
    assert code == 0, out
    f = parse_hom(out, g.presentation)
    assert hom_length(f) == hom_length(base) == 1
    assert "# certified local minimum within radius 1" in out


def test_lam_validate_exit_codes(tmp_path, capsys):
    k = octahedron()
    cx = tmp_path / "oct.cx"
    cx.write_text(format_complex(k))
    good = tmp_path / "good.w"
    good.write_text(format_weights({e: 2 for e in k.edges}))
    bad = tmp_path / "bad.w"
    bad.write_text(format_weights({e: 9 if i == 0 else 1 for i, e in enumerate(k.edges)}))
    assert run(capsys, "lam-validate", "--complex", str(cx), "--weights", str(good)) == (0, "valid true\n", "")
    assert run(capsys, "lam-validate", "--complex", str(cx), "--weights", str(bad))[:2] == (1, "valid false\n")


def test_criterion_output(capsys):
    code, out, _ = run(capsys, "criterion", "--z", "a b", "--a", "b|b", "--exp", "2")
    assert code == 0
    assert out == "nontrivial true bound 2\n"


def test_check_fixture(capsys):
    code, out, _ = run(capsys, "check", "--clg", str(FIXTURES / "double.clg"))
    assert code == 0 and out


def test_embed_certificate(capsys):
    code, out, _ = run(capsys, "embed", "--certify", "--target", "sl2", "--depth", "3")
    assert code == 0 and out.startswith("pass ")


def test_embed_numeric(tmp_path, capsys):
    pres = tmp_path / "z2.pres"
    pres.write_text("gens a t\nrel a t a^-1 t^-1\n")
    targets = tmp_path / "t.words"
    targets.write_text("a\nt\n")
    code, out, _ = run(capsys, "--seed", "0", "embed", "--numeric", "--presentation", str(pres),
                       "--elements", str(targets))
    assert code == 0
    lines = out.splitlines()
    assert lines[-1].startswith("success 1")
    mats = [ln for ln in lines if ln.startswith("matrix ")]
    assert [ln.split()[1] for ln in mats] == ["a", "t"]
    assert all(len(ln.split()) == 6 for ln in mats)
    assert run(capsys, "--seed", "0", "embed", "--numeric", "--presentation", str(pres),
               "--elements", str(targets))[1] == out


@pytest.mark.parametrize("argv", [
    ["criterion", "--z", "a q", "--a", "b|b", "--exp", "2"],
    ["discriminate", "--clg", "/nonexistent.clg", "--elements", "/nonexistent"],
    ["no-such-command"],
    ["--jobs", "0", "check", "--clg", "x"],
])
def test_malformed_input_exit_2(capsys, argv):
    assert cli.run(argv) == 2


def test_malformed_weights_exit_2(tmp_path, capsys):
    cx = tmp_path / "t.cx"
    cx.write_text("edge a\nedge b\nedge c\ncell a b c\n")
    w = tmp_path / "w"
    w.write_text("w a -1\nw b 1\nw c 1\n")
    assert cli.run(["lam-validate", "--complex", str(cx), "--weights", str(w)]) == 2
