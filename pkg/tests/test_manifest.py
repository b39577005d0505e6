from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from densalg.manifest import ManifestError, manifest_ast, parse_manifest, print_manifest

import manifestgen

MANIFESTS = Path(__file__).parent / "fixtures" / "manifests"

HEAD = "[chart]\nx\nxi : odd\n\n[objects]\noperator D : odd = d[x]*d[xi]\n"


@pytest.mark.parametrize("path", sorted(MANIFESTS.glob("*.dens")), ids=lambda p: p.stem)
def test_fixture_manifests_round_trip(path):
    m = parse_manifest(path.read_text())
    printed = print_manifest(m)
    assert parse_manifest(printed) == m
    assert print_manifest(parse_manifest(printed)) == printed


@given(st.integers(min_value=0, max_value=10**6))
def test_generated_manifests_round_trip(seed):
    assert manifestgen.round_trip(seed)


def test_objects_and_checks_are_resolved():
    m = parse_manifest(HEAD + "scalar A = x^2\n[checks]\njacobi D\nmaster D action=A weight=1/2\n")
    assert [c.kind for c in m.checks] == ["jacobi", "master"]
    assert m.checks[1].params == {"action": "A", "weight": 1 / 2}
    assert m.objects["D"].value.parity.name == "ODD"


def test_change_with_and_without_inverse():
    body = "change C to u, th : odd\n    u = x^3\n    th = xi\n"
    m = parse_manifest(HEAD + body)
    assert m.objects["C"].value.inverse is None
    assert "x =" not in print_manifest(m)
    full = HEAD + body.replace("x^3", "x + 1") + "    x = u - 1\n    xi = th\n"
    assert parse_manifest(full).objects["C"].value.inverse is not None


def test_zero_operator_takes_declared_parity():
    m = parse_manifest("[chart]\nx\n[objects]\noperator Z : odd = 0\n")
    assert m.objects["Z"].value.parity.name == "ODD"


@pytest.mark.parametrize(
    "tail,line,col",
    [
        ("operator E : odd = d[x]*d[xi] +\n", 7, 32),
        ("[checks]\njacobi D foo=1\n", 8, 10),
        ("[checks]\nfrob D\n", 8, 1),
        ("[checks]\njacobi Q\n", 8, None),
        ("[checks]\nrecover D\n", 8, 1),
        ("scalar D = x\n", 7, 1),
        ("operator E : even = d[xi]\n", 7, 1),
        ("data P : odd\n    S[x, zz] = 1\n", 8, 10),
        ("data P : odd\n    S[x, xi] = 1\n    S[xi, x] = 2\n", 9, 5),
        ("data P : odd\n    bogus\n", 8, 5),
        ("  S[x, xi] = 1\n", None, None),
        ("widget W\n", 7, 1),
        ("scalar A = x\n[checks]\nmaster D action=Q\n", 9, None),
    ],
)
def test_diagnostics_have_line_and_column(tail, line, col):
    with pytest.raises(ManifestError) as err:
        parse_manifest(HEAD + tail)
    if line is not None:
        assert err.value.line == line
        assert str(err.value).startswith(f"{line}:")
    if col is not None:
        assert err.value.col == col


def test_structural_errors():
    with pytest.raises(ManifestError, match="missing"):
        parse_manifest("[objects]\n")
    with pytest.raises(ManifestError, match="outside"):
        parse_manifest("x\n[chart]\nx\n")
    with pytest.raises(ManifestError, match="unknown section"):
        parse_manifest("[chart]\nx\n[other]\n")
    with pytest.raises(ManifestError, match="duplicate"):
        parse_manifest("[chart]\nx, x\n")
    with pytest.raises(ManifestError, match="UTF-8"):
        parse_manifest(b"[chart]\n\xff\n")


def test_ast_view():
    ast = manifest_ast(parse_manifest(HEAD + "[checks]\njacobi D\n"))
    assert ast["chart"] == [["x", "even"], ["xi", "odd"]]
    assert ast["objects"][0]["ast"] == "(* (d x) (d xi))"
    assert ast["checks"] == [{"kind": "jacobi", "target": "D", "line": 8, "params": {}}]


@pytest.mark.parametrize(
    "line,message",
    [
        ("    S[x, xi] = xi", "6:16: S[x,xi] must be even"),
        ("    gamma[x] = 1", "6:16: gamma[x] must be odd"),
        ("    theta = x", "6:13: theta must be odd"),
        ("    S[x, xi] = 1 + xi", "6:16: S[x,xi] is not homogeneous"),
    ],
)
def test_data_component_parity_diagnostics(line, message):
    with pytest.raises(ManifestError) as err:
        parse_manifest("[chart]\nx\nxi : odd\n[objects]\ndata P : odd\n" + line + "\n")
    assert str(err.value) == message
