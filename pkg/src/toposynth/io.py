"""File formats: underlay JSON/GraphML in, overlay JSON and comparison reports out."""

from __future__ import annotations

import csv
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

from .builders import BuilderResult
from .delay import CoreLink, Overlay, Underlay, UnderlayNode
from .errors import ToposynthError, UnderlayParseError, UnderlayValidationError

NODE_FIELDS = {"id", "kind", "lat", "lon", "up_mbps", "down_mbps", "compute_ms"}
NODE_REQUIRED = {"id", "kind", "lat", "lon"}
LINK_FIELDS = {"u", "v", "capacity_mbps", "latency_ms"}
LINK_REQUIRED = {"u", "v", "capacity_mbps"}
TOP_FIELDS = {"name", "nodes", "links", "access_latency_ms"}
TOP_REQUIRED = {"name", "nodes", "links"}


@dataclass(frozen=True)
class GraphMLDefaults:
    """Values filled in for quantities Topology Zoo files do not carry."""

    access_mbps: float = 100.0
    core_mbps: float = 1000.0
    compute_ms: float = 25.0


# --------------------------------------------------------------------------- underlay JSON


def _check_keys(obj, allowed: set, required: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise UnderlayValidationError(f"{where}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise UnderlayValidationError(f"{where}: unknown field(s) {unknown}")
    missing = sorted(required - set(obj))
    if missing:
        raise UnderlayValidationError(f"{where}: missing field(s) {missing}")


def _number(obj: dict, key: str, where: str, optional: bool = False):
    if key not in obj or obj[key] is None:
        if optional:
            return None
        raise UnderlayValidationError(f"{where}: missing {key}")
    x = obj[key]
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise UnderlayValidationError(f"{where}: {key} must be a number, got {x!r}")
    return float(x)


def underlay_from_dict(data) -> Underlay:
    _check_keys(data, TOP_FIELDS, TOP_REQUIRED, "underlay")
    if not isinstance(data["nodes"], list) or not isinstance(data["links"], list):
        raise UnderlayValidationError("underlay: nodes and links must be arrays")
    nodes = []
    for k, raw in enumerate(data["nodes"]):
        where = f"nodes[{k}]"
        _check_keys(raw, NODE_FIELDS, NODE_REQUIRED, where)
        where = f"nodes[{k}] (id {raw['id']!r})"
        kind = raw["kind"]
        if kind == "silo":
            missing = [f for f in ("up_mbps", "down_mbps", "compute_ms") if f not in raw]
            if missing:
                raise UnderlayValidationError(f"silo {raw['id']!r} ({where}): missing {', '.join(missing)}")
        nodes.append(
            UnderlayNode(
                str(raw["id"]),
                str(kind),
                _number(raw, "lat", where),
                _number(raw, "lon", where),
                _number(raw, "up_mbps", where, optional=True),
                _number(raw, "down_mbps", where, optional=True),
                _number(raw, "compute_ms", where, optional=True),
            )
        )
    links = []
    for k, raw in enumerate(data["links"]):
        where = f"links[{k}]"
        _check_keys(raw, LINK_FIELDS, LINK_REQUIRED, where)
        links.append(
            CoreLink(
                str(raw["u"]),
                str(raw["v"]),
                _number(raw, "capacity_mbps", where),
                _number(raw, "latency_ms", where, optional=True),
            )
        )
    extra = {}
    if "access_latency_ms" in data:
        extra["access_latency_ms"] = _number(data, "access_latency_ms", "underlay")
    return Underlay(str(data["name"]), tuple(nodes), tuple(links), **extra)


def underlay_to_dict(u: Underlay) -> dict:
    nodes = []
    for n in u.nodes:
        d = {"id": n.id, "kind": n.kind, "lat": n.lat, "lon": n.lon}
        for attr in ("up_mbps", "down_mbps", "compute_ms"):
            if getattr(n, attr) is not None:
                d[attr] = getattr(n, attr)
        nodes.append(d)
    links = []
    for link in u.links:
        d = {"u": link.u, "v": link.v, "capacity_mbps": link.capacity_mbps}
        if link.latency_ms is not None:
            d["latency_ms"] = link.latency_ms
        links.append(d)
    return {"name": u.name, "nodes": nodes, "links": links, "access_latency_ms": u.access_latency_ms}


def write_underlay(u: Underlay, path: str | Path) -> None:
    Path(path).write_text(json.dumps(underlay_to_dict(u), indent=2) + "\n", encoding="utf-8")


def _parse_json(path: Path) -> Underlay:
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UnderlayParseError(f"{path}: {exc.msg}", exc.lineno, exc.colno) from None
    try:
        return underlay_from_dict(data)
    except UnderlayValidationError as exc:
        raise UnderlayValidationError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------- GraphML


def _parse_graphml(path: Path, defaults: GraphMLDefaults) -> Underlay:
    try:
        ET.parse(path)
    except ET.ParseError as exc:
        line, col = exc.position
        raise UnderlayParseError(f"{path}: malformed GraphML", line, col + 1) from None
    try:
        g = nx.read_graphml(path)
    except (nx.NetworkXError, KeyError, ValueError) as exc:
        raise UnderlayParseError(f"{path}: {exc}") from None
    name = str(g.graph.get("label") or g.graph.get("Network") or path.stem)
    nodes = []
    for nid, attrs in g.nodes(data=True):
        if "Latitude" not in attrs or "Longitude" not in attrs:
            label = attrs.get("label", nid)
            raise UnderlayValidationError(f"{path}: node {nid!r} ({label}) has no Latitude/Longitude")
        nodes.append(
            UnderlayNode(
                str(nid),
                "silo",
                float(attrs["Latitude"]),
                float(attrs["Longitude"]),
                defaults.access_mbps,
                defaults.access_mbps,
                defaults.compute_ms,
            )
        )
    caps: dict[frozenset, float] = {}
    for a, b, attrs in g.edges(data=True):
        if a == b:
            continue
        raw = attrs.get("LinkSpeedRaw")
        mbps = float(raw) / 1e6 if raw else defaults.core_mbps
        key = frozenset((str(a), str(b)))
        caps[key] = max(caps.get(key, 0.0), mbps)
    links = tuple(CoreLink(*sorted(k), c) for k, c in sorted(caps.items(), key=lambda kv: sorted(kv[0])))
    return Underlay(name, tuple(nodes), links)


def parse_underlay(path: str | Path, fmt: str | None = None, defaults: GraphMLDefaults | None = None) -> Underlay:
    """Read an underlay file; ``fmt`` defaults to the file extension."""
    path = Path(path)
    if fmt is None:
        fmt = "graphml" if path.suffix.lower() == ".graphml" else "json"
    if not path.is_file():
        raise ToposynthError(f"{path}: no such file")
    if fmt == "json":
        return _parse_json(path)
    if fmt == "graphml":
        return _parse_graphml(path, defaults or GraphMLDefaults())
    raise ValueError(f"unknown underlay format {fmt!r}")


# --------------------------------------------------------------------------- overlay JSON


def overlay_to_dict(ov: Overlay, **meta) -> dict:
    d = {
        "silo_ids": list(ov.silo_ids),
        "undirected": ov.undirected,
        "arcs": [list(a) for a in ov.arcs],
        "d_o": list(ov.delays),
        "self_loops": list(ov.self_loops),
    }
    d.update(meta)
    return d


def overlay_from_dict(data: dict) -> Overlay:
    for key in ("arcs", "d_o", "self_loops"):
        if key not in data:
            raise ToposynthError(f"overlay file is missing {key!r}")
    n = len(data["self_loops"])
    return Overlay(
        n,
        tuple(tuple(a) for a in data["arcs"]),
        tuple(data["d_o"]),
        tuple(data["self_loops"]),
        bool(data.get("undirected", False)),
        tuple(data.get("silo_ids", ())),
    )


def write_overlay(ov: Overlay, path: str | Path, **meta) -> None:
    Path(path).write_text(json.dumps(overlay_to_dict(ov, **meta), indent=2) + "\n", encoding="utf-8")


def read_overlay(path: str | Path) -> Overlay:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UnderlayParseError(f"{path}: {exc.msg}", exc.lineno, exc.colno) from None
    return overlay_from_dict(data)


# --------------------------------------------------------------------------- comparison report


@dataclass(frozen=True)
class ReportRow:
    builder: str
    tau_ms: float
    speedup_vs_star: float
    critical_circuit: tuple[int, ...]
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ReportRow, ...]
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_results(cls, results: dict[str, BuilderResult], star_tau: float, **metadata) -> "ComparisonReport":
        rows = tuple(
            ReportRow(
                name,
                r.tau,
                star_tau / r.tau if r.tau > 0 else float("inf"),
                r.report.critical_circuit.nodes,
                tuple(sorted(r.guarantee_flags)),
            )
            for name, r in results.items()
        )
        return cls(rows, metadata)

    def row(self, builder: str) -> ReportRow:
        for r in self.rows:
            if r.builder == builder:
                return r
        raise KeyError(builder)

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "rows": [
                {
                    "builder": r.builder,
                    "tau_ms": r.tau_ms,
                    "speedup_vs_star": r.speedup_vs_star,
                    "critical_circuit": list(r.critical_circuit),
                    "flags": list(r.flags),
                }
                for r in self.rows
            ],
        }

    def write(self, csv_path: str | Path, json_path: str | Path) -> None:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["builder", "tau_ms", "speedup_vs_star", "critical_circuit", "flags"])
            for r in self.rows:
                w.writerow(
                    [
                        r.builder,
                        repr(r.tau_ms),
                        repr(r.speedup_vs_star),
                        "-".join(map(str, r.critical_circuit)),
                        ";".join(r.flags),
                    ]
                )
        Path(json_path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def format_table(self) -> str:
        lines = [f"{'builder':<12}{'tau_ms':>14}{'speedup':>10}  critical circuit"]
        for r in self.rows:
            circ = "-".join(map(str, r.critical_circuit))
            lines.append(f"{r.builder:<12}{r.tau_ms:>14.4f}{r.speedup_vs_star:>10.3f}  {circ}")
        return "\n".join(lines)
