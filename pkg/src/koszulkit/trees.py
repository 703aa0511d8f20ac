"""Planar rooted trees for free (co)operads: shapes, grafts, cuts.

A labeled tree code is LEAF or (vertex_label, (child_code, ...)) with at
least two children per vertex (reduced setting: no unary operations).
Vertices are ordered depth-first, root first; that order fixes the
tensor-factor word used for all Koszul sign computations.
"""

from __future__ import annotations

from functools import lru_cache

from .labels import LEAF, tree_node


def leaf_count(code) -> int:
    if code == LEAF:
        return 1
    return sum(leaf_count(c) for c in code[1])


def vertex_count(code) -> int:
    if code == LEAF:
        return 0
    return 1 + sum(vertex_count(c) for c in code[1])


def vertex_labels(code):
    """Depth-first vertex labels."""
    if code == LEAF:
        return []
    out = [code[0]]
    for c in code[1]:
        out.extend(vertex_labels(c))
    return out


def vertex_addresses(code, prefix=()):
    """Depth-first addresses; an address is the path of child indices."""
    if code == LEAF:
        return []
    out = [prefix]
    for i, c in enumerate(code[1]):
        out.extend(vertex_addresses(c, prefix + (i,)))
    return out


def subtree_at(code, addr):
    for i in addr:
        code = code[1][i]
    return code


def replace_at(code, addr, new):
    if not addr:
        return new
    i = addr[0]
    children = list(code[1])
    children[i] = replace_at(children[i], addr[1:], new)
    return tree_node(code[0], children)


@lru_cache(maxsize=None)
def shapes(n_leaves: int, arities: tuple):
    """All planar shapes with the given leaf count; vertices carry their
    arity as a placeholder label."""
    if n_leaves == 1:
        return (LEAF,)
    out = []
    for a in arities:
        if a < 2 or a > n_leaves:
            continue
        for split in _compositions(n_leaves, a):
            for kids in _product_shapes(split, arities):
                out.append(tree_node(a, kids))
    return tuple(out)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _product_shapes(split, arities):
    if not split:
        yield ()
        return
    for head in shapes(split[0], arities):
        for tail in _product_shapes(split[1:], arities):
            yield (head,) + tail


def label_shapes(shape, labels_by_arity):
    """All labelings of a shape; labels_by_arity[a] lists (label, degree)."""
    if shape == LEAF:
        yield LEAF, 0
        return
    arity = shape[0]
    for label, ldeg in labels_by_arity.get(arity, ()):
        for kids, kdeg in _label_children(shape[1], labels_by_arity):
            yield tree_node(label, kids), ldeg + kdeg


def _label_children(children, labels_by_arity):
    if not children:
        yield (), 0
        return
    for head, hdeg in label_shapes(children[0], labels_by_arity):
        for tail, tdeg in _label_children(children[1:], labels_by_arity):
            yield (head,) + tail, hdeg + tdeg


def dfs_position(code, addr) -> int:
    """Index of the vertex at addr in the depth-first vertex order."""
    pos = 0
    node = code
    for i in addr:
        pos += 1  # the node itself
        for j in range(i):
            pos += vertex_count(node[1][j])
        node = node[1][i]
    return pos


def leaf_offset(code, addr) -> int:
    """Number of leaves strictly to the left of the subtree at addr."""
    off = 0
    node = code
    for i in addr:
        for j in range(i):
            off += leaf_count(node[1][j])
        node = node[1][i]
    return off


def internal_edges(code):
    """(parent_addr, child_index) pairs where the child is a vertex."""
    out = []
    for addr in vertex_addresses(code):
        node = subtree_at(code, addr)
        for i, c in enumerate(node[1]):
            if c != LEAF:
                out.append((addr, i))
    return out


def contract_edge(code, parent_addr, child_index, new_label):
    """Merge the child vertex into its parent, relabeling the parent."""
    parent = subtree_at(code, parent_addr)
    child = parent[1][child_index]
    kids = parent[1][:child_index] + child[1] + parent[1][child_index + 1 :]
    return replace_at(code, parent_addr, tree_node(new_label, kids))


def expand_vertex(code, addr, bottom_label, slot, top_label, top_arity):
    """Replace the vertex at addr (arity m+n-1) by bottom (arity m) with a
    new top vertex of the given arity in the bottom's slot (1-based)."""
    node = subtree_at(code, addr)
    kids = node[1]
    i = slot - 1
    top = tree_node(top_label, kids[i : i + top_arity])
    new_kids = kids[:i] + (top,) + kids[i + top_arity :]
    return replace_at(code, addr, tree_node(bottom_label, new_kids))


def graft(code1, leaf_index, code2):
    """Plug code2 into the leaf_index-th leaf (0-based, left to right)."""

    def walk(node, target):
        if node == LEAF:
            if target == 0:
                return code2, -1
            return node, target - 1
        new_children = []
        for c in node[1]:
            if target >= 0:
                c, target = walk(c, target)
            new_children.append(c)
        return tree_node(node[0], tuple(new_children)), target

    out, rest = walk(code1, leaf_index)
    if rest != -1:
        raise IndexError("leaf index %d out of range" % leaf_index)
    return out


def cuts(code):
    """All ways to cut into (bottom, tops): bottom keeps the root, tops hang
    one per bottom leaf (LEAF meaning a trivial top).  Includes the two
    trivial cuts."""
    if code == LEAF:
        return [(LEAF, (LEAF,))]
    out = [(LEAF, (code,))]
    for combo in _cut_children(code[1]):
        bottoms = tuple(c[0] for c in combo)
        tops = sum((c[1] for c in combo), ())
        out.append((tree_node(code[0], bottoms), tops))
    return out


def _cut_children(children):
    if not children:
        yield ()
        return
    for head in cuts(children[0]):
        for tail in _cut_children(children[1:]):
            yield (head,) + tail


def permutation_koszul_sign(degrees, perm) -> int:
    """Sign of reordering graded factors; perm[i] is the source position of
    the factor landing in slot i."""
    odd = [degrees[p] % 2 for p in perm]
    inversions = 0
    for i in range(len(perm)):
        if not odd[i]:
            continue
        for j in range(i + 1, len(perm)):
            if odd[j] and perm[i] > perm[j]:
                inversions += 1
    return -1 if inversions % 2 else 1
