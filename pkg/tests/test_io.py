import csv
import json

import numpy as np
import pytest

from toposynth.builders import BUILDERS, evaluate
from toposynth.delay import build_connectivity
from toposynth.errors import ToposynthError, UnderlayParseError, UnderlayValidationError
from toposynth.fixtures import fixture_path, gaia11, shipped_underlays, write_data_files
from toposynth.io import (
    ComparisonReport,
    GraphMLDefaults,
    parse_underlay,
    read_overlay,
    underlay_from_dict,
    underlay_to_dict,
    write_overlay,
    write_underlay,
)

MINIMAL = {
    "name": "two",
    "nodes": [
        {"id": "a", "kind": "silo", "lat": 0.0, "lon": 0.0, "up_mbps": 100, "down_mbps": 100, "compute_ms": 5},
        {"id": "b", "kind": "silo", "lat": 1.0, "lon": 1.0, "up_mbps": 100, "down_mbps": 100, "compute_ms": 5},
    ],
    "links": [{"u": "a", "v": "b", "capacity_mbps": 1000}],
}


def write_json(tmp_path, data, name="u.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data, indent=2))
    return p


def test_minimal_json(tmp_path):
    u = parse_underlay(write_json(tmp_path, MINIMAL))
    assert len(u.silos) == 2
    assert u.links[0].latency_ms is None


def test_underlay_round_trip(tmp_path):
    for name, u in shipped_underlays().items():
        p = tmp_path / f"{name}.json"
        write_underlay(u, p)
        assert parse_underlay(p) == u
        assert underlay_from_dict(underlay_to_dict(u)) == u


def test_shipped_files_match_generators(tmp_path):
    for p in write_data_files(tmp_path):
        assert p.read_text() == fixture_path(p.name).read_text()


def test_unknown_field_located(tmp_path):
    data = json.loads(json.dumps(MINIMAL))
    data["nodes"][1]["colour"] = "red"
    with pytest.raises(UnderlayValidationError, match=r"nodes\[1\].*colour"):
        parse_underlay(write_json(tmp_path, data))
    data = json.loads(json.dumps(MINIMAL))
    data["links"][0]["jitter"] = 1
    with pytest.raises(UnderlayValidationError, match=r"links\[0\].*jitter"):
        parse_underlay(write_json(tmp_path, data))
    data = json.loads(json.dumps(MINIMAL))
    data["version"] = 2
    with pytest.raises(UnderlayValidationError, match="version"):
        parse_underlay(write_json(tmp_path, data))


def test_missing_capacity_names_silo(tmp_path):
    data = json.loads(json.dumps(MINIMAL))
    del data["nodes"][1]["up_mbps"]
    with pytest.raises(UnderlayValidationError, match="'b'.*up_mbps"):
        parse_underlay(write_json(tmp_path, data))


def test_bad_types(tmp_path):
    data = json.loads(json.dumps(MINIMAL))
    data["nodes"][0]["lat"] = "north"
    with pytest.raises(UnderlayValidationError, match="lat"):
        parse_underlay(write_json(tmp_path, data))
    data = json.loads(json.dumps(MINIMAL))
    data["nodes"] = {}
    with pytest.raises(UnderlayValidationError):
        parse_underlay(write_json(tmp_path, data))


def test_parse_error_has_position(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{\n  "name": "x",\n  "nodes": [,]\n}\n')
    with pytest.raises(UnderlayParseError) as exc:
        parse_underlay(p)
    assert exc.value.line == 3
    assert exc.value.column is not None
    assert "line 3" in str(exc.value)


def test_missing_file_and_unknown_format(tmp_path):
    with pytest.raises(ToposynthError):
        parse_underlay(tmp_path / "nope.json")
    p = write_json(tmp_path, MINIMAL)
    with pytest.raises(ValueError):
        parse_underlay(p, fmt="yaml")


def test_graphml_import():
    p = fixture_path("abilene.graphml")
    u = parse_underlay(p)
    assert len(u.nodes) == 11
    assert len(u.links) == 14
    assert u.name == "Abilene"
    caps = [link.capacity_mbps for link in u.links]
    assert caps.count(GraphMLDefaults().core_mbps) == 1  # one edge lacks a speed attribute
    assert caps.count(10000.0) == 13
    u2 = parse_underlay(p, defaults=GraphMLDefaults(access_mbps=10.0, core_mbps=50.0, compute_ms=1.0))
    assert all(n.up_mbps == 10.0 and n.compute_ms == 1.0 for n in u2.nodes)
    assert 50.0 in {link.capacity_mbps for link in u2.links}
    cg = build_connectivity(u, 1e6)
    assert cg.n == 11


def test_graphml_errors(tmp_path):
    p = tmp_path / "bad.graphml"
    p.write_text("<graphml>\n<graph>\n<node id='a'>\n</graph>\n")
    with pytest.raises(UnderlayParseError) as exc:
        parse_underlay(p)
    assert exc.value.line is not None
    q = tmp_path / "nocoords.graphml"
    q.write_text(
        '<?xml version="1.0"?>\n<graphml xmlns="http://graphml.graphdrawing.org/xmlns">'
        '<graph edgedefault="undirected"><node id="a"/><node id="b"/><edge source="a" target="b"/></graph></graphml>\n'
    )
    with pytest.raises(UnderlayValidationError, match="Latitude"):
        parse_underlay(q)


def test_overlay_round_trip_bit_identical(tmp_path):
    cg = build_connectivity(gaia11(), 3.74e8)
    for name, build in BUILDERS.items():
        res = build(cg)
        p = tmp_path / f"{name}.json"
        write_overlay(res.overlay, p, builder=name)
        back = read_overlay(p)
        assert back == res.overlay
        assert evaluate(back).tau == res.tau
        assert json.loads(p.read_text())["builder"] == name


def test_overlay_file_errors(tmp_path):
    p = tmp_path / "o.json"
    p.write_text('{"arcs": []}')
    with pytest.raises(ToposynthError, match="d_o"):
        read_overlay(p)
    p.write_text("{")
    with pytest.raises(UnderlayParseError):
        read_overlay(p)


def test_comparison_report(tmp_path):
    cg = build_connectivity(gaia11(), 3.74e8)
    results = {name: build(cg) for name, build in BUILDERS.items()}
    rep = ComparisonReport.from_results(results, results["star"].tau, underlay="gaia", n=11, link_count=55)
    assert rep.row("star").speedup_vs_star == 1.0
    for r in rep.rows:
        assert r.speedup_vs_star == results["star"].tau / r.tau_ms
    with pytest.raises(KeyError):
        rep.row("nope")
    c, j = tmp_path / "r.csv", tmp_path / "r.json"
    rep.write(c, j)
    rows = list(csv.DictReader(c.open()))
    assert list(rows[0]) == ["builder", "tau_ms", "speedup_vs_star", "critical_circuit", "flags"]
    assert [float(r["tau_ms"]) for r in rows] == [r.tau_ms for r in rep.rows]
    data = json.loads(j.read_text())
    assert data["metadata"] == {"underlay": "gaia", "n": 11, "link_count": 55}
    assert [r["builder"] for r in data["rows"]] == [r["builder"] for r in rows]
    assert "ring" in rep.format_table()
