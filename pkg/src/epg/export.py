"""Graph serialization: GraphViz DOT and GraphSON 3 documents.

Four views of one graph can be exported: the contract-level call trace
("ctg"), the basic-block control flow ("dcfg"), the data-dependence
view ("ddg"), or everything together ("epg"). Output is deterministic
for a fixed graph because vertices and edges are emitted in id order.
"""
from __future__ import annotations

import json

from .errors import SchemaViolation, SinkFailure
from .graph import CT_BASES, CONTROL_LABELS, DATA_LABELS, Epg, PropertyGraph

_INT64_MAX = 2**63 - 1

VIEWS = {
    "ctg": (("contract",), tuple(CT_BASES)),
    "dcfg": (("contract", "block"), tuple(CONTROL_LABELS)),
    "ddg": (("block", "source"), tuple(DATA_LABELS)),
    "epg": (("contract", "block", "source"), None),
}

_SHAPES = {"contract": "box", "block": "ellipse", "source": "diamond"}


def _view(graph: PropertyGraph, which: str):
    try:
        kinds, labels = VIEWS[which]
    except KeyError:
        raise SchemaViolation(f"unknown graph view: {which!r}") from None
    vertices = [v for v in graph.vertices.values() if v.kind in kinds]
    keep = set(v.vid for v in vertices)
    edges = [
        e
        for e in graph.edges.values()
        if (labels is None or e.label in labels)
        and e.src in keep
        and e.dst in keep
    ]
    return vertices, edges


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _vertex_label(vertex) -> str:
    if vertex.kind == "contract":
        return vertex.props["address"]
    if vertex.kind == "block":
        return f"pc={vertex.props['pc']} i={vertex.props['index']}"
    return f"{vertex.props['identifier']}@{vertex.props['index']}"


def dot_document(epg: Epg, which: str = "epg") -> str:
    vertices, edges = _view(epg.graph, which)
    lines = [f"digraph {which} {{", "  rankdir=LR;"]
    for v in vertices:
        label = _dot_escape(_vertex_label(v))
        lines.append(f'  v{v.vid} [shape={_SHAPES[v.kind]}, label="{label}"];')
    for e in edges:
        parts = [f'label="{_dot_escape(e.label)}"']
        if "condition" in e.props:
            parts.append(f'condition="{str(e.props["condition"]).lower()}"')
        if e.props.get("assetFlow"):
            parts.append('style="bold"')
        lines.append(f"  v{e.src} -> v{e.dst} [{', '.join(parts)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _typed(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        if -_INT64_MAX - 1 <= value <= _INT64_MAX:
            return {"@type": "g:Int64", "@value": value}
        return {"@type": "gx:BigInteger", "@value": hex(value)}
    return value


def _untyped(value):
    if isinstance(value, dict) and "@type" in value:
        if value["@type"] == "g:Int64":
            return value["@value"]
        if value["@type"] == "gx:BigInteger":
            return int(value["@value"], 16)
        raise SchemaViolation(f"unsupported value type {value['@type']!r}")
    return value


def graphson_document(epg: Epg, which: str = "epg") -> str:
    """One JSON object per line, one line per vertex, edges grouped
    under outE by label."""
    vertices, edges = _view(epg.graph, which)
    by_src: dict[int, list] = {}
    for e in edges:
        by_src.setdefault(e.src, []).append(e)
    prop_id = 0
    lines = []
    for v in vertices:
        properties = {}
        for key, value in v.props.items():
            properties[key] = [
                {"id": _typed(prop_id), "value": _typed(value)}
            ]
            prop_id += 1
        out_e: dict[str, list] = {}
        for e in by_src.get(v.vid, ()):
            entry = {"id": _typed(e.eid), "inV": _typed(e.dst)}
            if e.props:
                entry["properties"] = {
                    k: _typed(val) for k, val in e.props.items()
                }
            out_e.setdefault(e.label, []).append(entry)
        record = {"id": _typed(v.vid), "label": v.kind}
        if out_e:
            record["outE"] = out_e
        if properties:
            record["properties"] = properties
        lines.append(json.dumps(record, sort_keys=True))
    return "\n".join(lines) + "\n"


def import_graphson(text: str) -> PropertyGraph:
    """Rebuilds a property graph from a document written by
    graphson_document. Ids are remapped densely in arrival order, so a
    full-graph document reproduces its original ids exactly."""
    graph = PropertyGraph()
    remap: dict[int, int] = {}
    pending = []
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        vid = _untyped(record["id"])
        props = {
            key: _untyped(slots[0]["value"])
            for key, slots in record.get("properties", {}).items()
        }
        remap[vid] = graph.add_vertex(record["label"], **props)
        for label, entries in record.get("outE", {}).items():
            for entry in entries:
                pending.append(
                    (
                        _untyped(entry["id"]),
                        vid,
                        _untyped(entry["inV"]),
                        label,
                        {
                            k: _untyped(v)
                            for k, v in entry.get("properties", {}).items()
                        },
                    )
                )
    pending.sort(key=lambda item: item[0])
    for _, src, dst, label, props in pending:
        try:
            graph.add_edge(remap[src], remap[dst], label, **props)
        except KeyError as exc:
            raise SchemaViolation(f"edge references unknown vertex: {exc}") from exc
    return graph


def export_graph(epg: Epg, format: str, sink, which: str = "epg") -> None:
    """Serializes one view to a path or a writable object."""
    if format == "dot":
        document = dot_document(epg, which)
    elif format == "graphson":
        document = graphson_document(epg, which)
    else:
        raise SchemaViolation(f"unknown export format: {format!r}")
    try:
        if hasattr(sink, "write"):
            sink.write(document)
        else:
            with open(sink, "w", encoding="utf-8") as fh:
                fh.write(document)
    except OSError as exc:
        raise SinkFailure(f"cannot write export: {exc}") from exc
