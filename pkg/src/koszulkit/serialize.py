"""JSON object schema: parse and emit complexes, algebras, coalgebras and
(co)operads.

Top level: {"kind", "field": {"kind": "Q"|"Fp", "p"}, ...}.  Degrees are
serialized as strings (negative keys); basis entries are canonical label
strings; map entries are [target label, source label(s)..., value] rows
with values "num/den" over Q or residue integers over Fp.  Parsing always
ends in the relevant validator, so a loaded object is a checked object.
"""

from __future__ import annotations

import json

from .assoc import (
    AInfCoalgebra,
    DgAssocAlgebra,
    validate_ainf_coalgebra,
    validate_algebra,
)
from .complexes import ChainComplex, validate_complex
from .fields import QQ, FieldSpec, prime_field
from .graded import GradedSpace, map_from_rule, tensor_space
from .labels import label_from_str, label_to_str
from .operads import (
    NsCooperad,
    NsOperad,
    validate_cooperad,
    validate_operad,
)


class ParseError(Exception):
    def __init__(self, location, message):
        self.location = location
        super().__init__("%s: %s" % (location, message))


def field_from_json(data) -> FieldSpec:
    kind = data.get("kind", "Q")
    if kind == "Q":
        return QQ
    if kind == "Fp":
        return prime_field(int(data["p"]))
    raise ParseError("/field", "unknown field kind %r" % kind)


def field_to_json(field: FieldSpec):
    if field.kind == "Q":
        return {"kind": "Q"}
    return {"kind": "Fp", "p": field.characteristic}


def _space_from_json(field, data, location):
    comps = {}
    try:
        for deg, labels in data.items():
            comps[int(deg)] = [label_from_str(l) for l in labels]
    except ValueError as exc:
        raise ParseError(location, str(exc))
    return GradedSpace(field, comps)


def _space_to_json(space: GradedSpace):
    return {
        str(d): [label_to_str(l) for l in space.labels(d)]
        for d in space.degrees()
    }


def _map_from_rows(field, space_src, space_tgt, shift, rows, location):
    table = {}
    for i, row in enumerate(rows):
        if len(row) < 3:
            raise ParseError("%s[%d]" % (location, i), "expected [target, source..., value]")
        tgt = label_from_str(row[0])
        srcs = tuple(label_from_str(s) for s in row[1:-1])
        val = row[-1]
        table.setdefault(srcs, []).append((val, tgt))
    return table


def _graded_map_from_json(field, src, tgt, shift, rows, location):
    table = _map_from_rows(field, src, tgt, shift, rows, location)

    def rule(label, degree):
        for val, t in table.get((label,), ()):
            yield val, t

    try:
        return map_from_rule(src, tgt, shift, rule)
    except KeyError as exc:
        raise ParseError(location, "unknown label %s" % (exc,))
    except ValueError as exc:
        raise ParseError(location, str(exc))


def _graded_map_to_rows(gmap):
    rows = []
    for slabel, tlabel, v in gmap.entries_with_labels():
        rows.append([label_to_str(tlabel), label_to_str(slabel), gmap.field.format(v)])
    rows.sort()
    return rows


def complex_from_json(data, location="/") -> ChainComplex:
    field = field_from_json(data.get("field", {}))
    space = _space_from_json(field, data.get("spaces", {}), location + "spaces")
    rows = data.get("maps", {}).get("d", [])
    d = _graded_map_from_json(field, space, space, -1, rows, location + "maps/d")
    return validate_complex(space, d)


def complex_to_json(cx: ChainComplex, kind="complex"):
    return {
        "kind": kind,
        "field": field_to_json(cx.field),
        "spaces": _space_to_json(cx.space),
        "maps": {"d": _graded_map_to_rows(cx.d)},
    }


def algebra_from_json(data, location="/") -> DgAssocAlgebra:
    cx = complex_from_json(data, location)
    AA = tensor_space(cx.space, cx.space)
    rows = data.get("mu2", [])
    table = {}
    for i, row in enumerate(rows):
        if len(row) != 4:
            raise ParseError("/mu2[%d]" % i, "expected [out, left, right, value]")
        out = label_from_str(row[0])
        a = label_from_str(row[1])
        b = label_from_str(row[2])
        table.setdefault((a, b), []).append((row[3], out))

    from .labels import tensor as tensor_label
    from .graded import split_tensor_label

    def rule(label, degree):
        a, b = split_tensor_label(label, cx.space, cx.space)
        for val, out in table.get((a, b), ()):
            yield val, out

    mu2 = map_from_rule(AA, cx.space, 0, rule)
    return validate_algebra(cx, mu2)


def algebra_to_json(A: DgAssocAlgebra):
    data = complex_to_json(A.underlying, kind="algebra")
    rows = []
    for slabel, tlabel, v in A.mu2.entries_with_labels():
        parts = slabel[1]
        rows.append([
            label_to_str(tlabel),
            label_to_str(parts[0]),
            label_to_str(parts[1]),
            A.field.format(v),
        ])
    rows.sort()
    data["mu2"] = rows
    return data


def ainf_from_json(data, location="/") -> AInfCoalgebra:
    cx = complex_from_json(data, location)
    bound = int(data.get("arity_bound", 6))
    ops = {}
    for key, rows in data.get("delta", {}).items():
        n = int(key)
        power = cx.space
        for _ in range(n - 1):
            power = tensor_space(power, cx.space)
        table = {}
        for i, row in enumerate(rows):
            if len(row) != n + 2:
                raise ParseError("/delta/%s[%d]" % (key, i), "expected [in, outs..., value]")
            src = label_from_str(row[0])
            outs = tuple(label_from_str(s) for s in row[1:-1])
            table.setdefault(src, []).append((row[-1], outs))

        from .labels import tensor as tensor_label

        def rule(label, degree, _t=table):
            for val, outs in _t.get(label, ()):
                yield val, tensor_label(*outs)

        ops[n] = map_from_rule(cx.space, power, n - 2, rule)
    return validate_ainf_coalgebra(cx, ops, bound)


def ainf_to_json(C: AInfCoalgebra):
    data = complex_to_json(C.underlying, kind="ainf_coalgebra")
    data["arity_bound"] = C.arity_bound
    delta = {}
    for n, dmap in sorted(C.ops.items()):
        rows = []
        for slabel, tlabel, v in dmap.entries_with_labels():
            parts = tlabel[1] if tlabel[0] == "tensor" else (tlabel,)
            rows.append(
                [label_to_str(slabel)]
                + [label_to_str(p) for p in parts]
                + [C.field.format(v)]
            )
        rows.sort()
        delta[str(n)] = rows
    data["delta"] = delta
    return data


def _components_from_json(field, data, location):
    comps = {}
    for key, sub in data.items():
        n = int(key)
        space = _space_from_json(field, sub.get("spaces", {}), "%s/%s/spaces" % (location, key))
        rows = sub.get("maps", {}).get("d", [])
        d = _graded_map_from_json(field, space, space, -1, rows, "%s/%s/maps" % (location, key))
        comps[n] = validate_complex(space, d)
    return comps


def _components_to_json(components):
    out = {}
    for n, cx in sorted(components.items()):
        out[str(n)] = {
            "spaces": _space_to_json(cx.space),
            "maps": {"d": _graded_map_to_rows(cx.d)},
        }
    return out


def operad_from_json(data, location="/") -> NsOperad:
    field = field_from_json(data.get("field", {}))
    bound = int(data.get("arity_bound", 6))
    comps = _components_from_json(field, data.get("components", {}), location + "components")
    partial = {}
    for key, rows in data.get("partial_comp", {}).items():
        m, i, n = (int(x) for x in key.split(","))
        src = tensor_space(comps[m].space, comps[n].space)
        tgt = comps[m + n - 1].space
        table = {}
        for idx, row in enumerate(rows):
            if len(row) != 4:
                raise ParseError("/partial_comp/%s[%d]" % (key, idx), "expected [out, p, q, value]")
            out = label_from_str(row[0])
            p = label_from_str(row[1])
            q = label_from_str(row[2])
            table.setdefault((p, q), []).append((row[3], out))

        from .graded import split_tensor_label

        def rule(label, degree, _t=table, _m=m, _n=n):
            a, b = split_tensor_label(label, comps[_m].space, comps[_n].space)
            for val, out in _t.get((a, b), ()):
                yield val, out

        partial[(m, i, n)] = map_from_rule(src, tgt, 0, rule)
    exact = bool(data.get("exact", False))
    return validate_operad(field, bound, comps, partial, exact=exact,
                           name=data.get("name", ""))


def operad_to_json(P: NsOperad):
    data = {
        "kind": "operad",
        "field": field_to_json(P.field),
        "arity_bound": P.arity_bound,
        "exact": P.exact,
        "name": P.name,
        "components": _components_to_json(P.components),
    }
    pc = {}
    for (m, i, n), gmap in sorted(P.partial.items()):
        rows = []
        for slabel, tlabel, v in gmap.entries_with_labels():
            parts = slabel[1]
            rows.append([
                label_to_str(tlabel),
                label_to_str(parts[0]),
                label_to_str(parts[1]),
                P.field.format(v),
            ])
        rows.sort()
        pc["%d,%d,%d" % (m, i, n)] = rows
    data["partial_comp"] = pc
    return data


def cooperad_from_json(data, location="/") -> NsCooperad:
    field = field_from_json(data.get("field", {}))
    bound = int(data.get("arity_bound", 6))
    comps = _components_from_json(field, data.get("components", {}), location + "components")
    decomp = {}
    for key, rows in data.get("decomp", {}).items():
        m, i, n = (int(x) for x in key.split(","))
        src = comps[m + n - 1].space
        tgt = tensor_space(comps[m].space, comps[n].space)
        table = {}
        for idx, row in enumerate(rows):
            if len(row) != 4:
                raise ParseError("/decomp/%s[%d]" % (key, idx), "expected [in, bottom, top, value]")
            src_l = label_from_str(row[0])
            b = label_from_str(row[1])
            t = label_from_str(row[2])
            table.setdefault(src_l, []).append((row[3], b, t))

        from .labels import tensor as tensor_label

        def rule(label, degree, _t=table):
            for val, b, t in _t.get(label, ()):
                yield val, tensor_label(b, t)

        decomp[(m, i, n)] = map_from_rule(src, tgt, 0, rule)
    exact = bool(data.get("exact", False))
    return validate_cooperad(field, bound, comps, decomp, exact=exact,
                             name=data.get("name", ""))


def cooperad_to_json(C: NsCooperad):
    data = {
        "kind": "cooperad",
        "field": field_to_json(C.field),
        "arity_bound": C.arity_bound,
        "exact": C.exact,
        "name": C.name,
        "components": _components_to_json(C.components),
    }
    dc = {}
    for (m, i, n), gmap in sorted(C.decomp.items()):
        rows = []
        for slabel, tlabel, v in gmap.entries_with_labels():
            parts = tlabel[1]
            rows.append([
                label_to_str(slabel),
                label_to_str(parts[0]),
                label_to_str(parts[1]),
                C.field.format(v),
            ])
        rows.sort()
        dc["%d,%d,%d" % (m, i, n)] = rows
    data["decomp"] = dc
    return data


_PARSERS = {
    "complex": complex_from_json,
    "algebra": algebra_from_json,
    "ainf_coalgebra": ainf_from_json,
    "operad": operad_from_json,
    "cooperad": cooperad_from_json,
}


def parse_object(data):
    """Parse a JSON value (dict) into a validated object."""
    if not isinstance(data, dict):
        raise ParseError("/", "expected an object")
    kind = data.get("kind")
    parser = _PARSERS.get(kind)
    if parser is None:
        raise ParseError("/kind", "unknown kind %r" % kind)
    return parser(data)


def parse_object_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(path, str(exc))
    except json.JSONDecodeError as exc:
        raise ParseError("%s:%s" % (path, exc.pos), exc.msg)
    return parse_object(data)


def emit_object(obj):
    if isinstance(obj, DgAssocAlgebra):
        return algebra_to_json(obj)
    if isinstance(obj, AInfCoalgebra):
        return ainf_to_json(obj)
    if isinstance(obj, NsOperad):
        return operad_to_json(obj)
    if isinstance(obj, NsCooperad):
        return cooperad_to_json(obj)
    if isinstance(obj, ChainComplex):
        return complex_to_json(obj)
    raise TypeError("cannot serialize %r" % type(obj))
