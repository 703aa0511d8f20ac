"""Structured basis labels with a canonical total order and a string codec.

A label is a nested tuple:

    ("atom", name)
    ("susp", offset, inner)          offset != 0, inner not a susp
    ("dual", inner)
    ("tensor", (l1, ..., lk))        k >= 2, factors not tensors
    ("tree", code)                   code: "leaf" or (vertex_label, child...)
    ("tag", name, inner)             lightweight namespacing (cone parts, ...)

Canonical form is enforced by the constructors: nested tensors are
flattened, suspension offsets merged, zero offsets dropped.  The total
order (via sort_key) makes every basis, and hence every matrix, bit-for-bit
reproducible.
"""

from __future__ import annotations

LEAF = "leaf"

_RANK = {"atom": 0, "susp": 1, "dual": 2, "tensor": 3, "tree": 4, "tag": 5}


def atom(name: str):
    return ("atom", str(name))


def susp(offset: int, inner):
    if inner[0] == "susp":
        offset += inner[1]
        inner = inner[2]
    if offset == 0:
        return inner
    return ("susp", offset, inner)


def dual(inner):
    return ("dual", inner)


def tensor(*labels):
    flat = []
    for l in labels:
        if l[0] == "tensor":
            flat.extend(l[1])
        else:
            flat.append(l)
    if len(flat) == 1:
        return flat[0]
    return ("tensor", tuple(flat))


def tree_node(vertex_label, children):
    return (vertex_label, tuple(children))


def tree(code):
    return ("tree", code)


def tagged(name: str, inner):
    return ("tag", str(name), inner)


_KEY_CACHE = {}


def sort_key(label):
    cached = _KEY_CACHE.get(label)
    if cached is not None:
        return cached
    kind = label[0]
    rank = _RANK[kind]
    if kind == "atom":
        key = (rank, label[1])
    elif kind == "susp":
        key = (rank, label[1], sort_key(label[2]))
    elif kind == "dual":
        key = (rank, sort_key(label[1]))
    elif kind == "tensor":
        key = (rank, len(label[1]), tuple(sort_key(l) for l in label[1]))
    elif kind == "tree":
        key = (rank, _tree_key(label[1]))
    else:
        key = (rank, label[1], sort_key(label[2]))
    _KEY_CACHE[label] = key
    return key


def _tree_key(code):
    if code == LEAF:
        return (0,)
    vertex, children = code
    return (1, len(children), sort_key(vertex), tuple(_tree_key(c) for c in children))


def tree_vertices(code):
    """Vertex labels in depth-first order (root first)."""
    if code == LEAF:
        return []
    vertex, children = code
    out = [vertex]
    for c in children:
        out.extend(tree_vertices(c))
    return out


def tree_leaf_count(code) -> int:
    if code == LEAF:
        return 1
    return sum(tree_leaf_count(c) for c in (code[1]))


# -- string codec ----------------------------------------------------------
# atom:   bare name            susp:  s{n}[inner]     dual: d[inner]
# tensor: (a|b|c)              tree:  T{code},  code: * | {label:child,...}
# tag:    name@[inner]

_NAME_OK = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.^+-")


def label_to_str(label) -> str:
    kind = label[0]
    if kind == "atom":
        name = label[1]
        if not name or not all(ch in _NAME_OK for ch in name):
            raise ValueError("atom name %r not serializable" % name)
        return name
    if kind == "susp":
        return "s{%d}[%s]" % (label[1], label_to_str(label[2]))
    if kind == "dual":
        return "d[%s]" % label_to_str(label[1])
    if kind == "tensor":
        return "(%s)" % "|".join(label_to_str(l) for l in label[1])
    if kind == "tree":
        return "T%s" % _tree_to_str(label[1])
    return "%s@[%s]" % (label[1], label_to_str(label[2]))


def _tree_to_str(code):
    if code == LEAF:
        return "*"
    vertex, children = code
    return "{%s:%s}" % (label_to_str(vertex), ",".join(_tree_to_str(c) for c in children))


class _Parser:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def error(self, msg):
        raise ValueError("label parse error at %d: %s (in %r)" % (self.pos, msg, self.text))

    def peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            self.error("expected %r" % ch)
        self.pos += 1

    def name(self):
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] in _NAME_OK:
            self.pos += 1
        if self.pos == start:
            self.error("expected a name")
        return self.text[start : self.pos]

    def label(self):
        ch = self.peek()
        if ch == "(":
            self.expect("(")
            parts = [self.label()]
            while self.peek() == "|":
                self.pos += 1
                parts.append(self.label())
            self.expect(")")
            return tensor(*parts)
        if ch == "T":
            nxt = self.text[self.pos + 1] if self.pos + 1 < len(self.text) else ""
            if nxt in "{*":
                self.pos += 1
                return tree(self.tree_code())
        if ch == "d" and self.text[self.pos : self.pos + 2] == "d[":
            self.pos += 2
            inner = self.label()
            self.expect("]")
            return dual(inner)
        if ch == "s" and self.text[self.pos : self.pos + 2] == "s{":
            self.pos += 2
            sign = 1
            if self.peek() == "-":
                sign = -1
                self.pos += 1
            digits = ""
            while self.peek().isdigit():
                digits += self.peek()
                self.pos += 1
            if not digits:
                self.error("expected offset")
            self.expect("}")
            self.expect("[")
            inner = self.label()
            self.expect("]")
            return susp(sign * int(digits), inner)
        name = self.name()
        if self.peek() == "@":
            self.pos += 1
            self.expect("[")
            inner = self.label()
            self.expect("]")
            return tagged(name, inner)
        return atom(name)

    def tree_code(self):
        if self.peek() == "*":
            self.pos += 1
            return LEAF
        self.expect("{")
        vertex = self.label()
        self.expect(":")
        children = [self.tree_code()]
        while self.peek() == ",":
            self.pos += 1
            children.append(self.tree_code())
        self.expect("}")
        return tree_node(vertex, children)


def label_from_str(text: str):
    p = _Parser(text)
    out = p.label()
    if p.pos != len(text):
        p.error("trailing characters")
    return out
