"""Per-vertex adjacency labels: addresses, decision trees, wire format, decoder.

Each vertex ``x`` gets an address (its cell path through the hierarchy and a
slot in its terminal node) and a tree recording, for every hierarchy node
on the way down, which cells are entirely adjacent or entirely non-adjacent
to ``x``.  Adjacency of ``x`` and ``y`` is read off by walking the smaller
id's address through the larger id's tree.

Bit layout of one label (all fields unsigned, most significant bit first)::

    version:8  n:32  Q:16  s:16  flags:8          header
    id:ceil(log2 n)
    L:ceil(log2(s+1))  L x (cell-1):Q  (slot-1):2Q  address
    tree

A tree node at depth ``< s`` starts with a kind bit (1 split, 0 final);
nodes at depth ``s`` are always final and carry no kind bit.  A split node
is ``a:Q+1`` followed by ``a`` pairs ``(cell-1:Q, bit:1)`` and then its
non-leaf children in increasing cell order.  A final node is ``(c-1):2Q``
followed by ``c`` adjacency bits.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .bounds import alpha, trivial_bound
from .partition import HierarchyTree, depth_bound

FORMAT_VERSION = 1
HEADER_BITS = 80
MAGIC = b"SAGL"

FLAG_STRICT = 1
FLAG_COMPLEMENT = 2


class LabelError(ValueError):
    pass


class HeaderMismatch(LabelError):
    pass


class MalformedLabel(LabelError):
    pass


# ---------------------------------------------------------------------------
# sign matrices


@dataclass(frozen=True)
class SignMatrix:
    """Exact signs of the predicate over all vertex pairs (diagonal unused)."""

    signs: np.ndarray  # int8 (n, n)

    @property
    def n(self) -> int:
        return self.signs.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        A = self.signs >= 0
        np.fill_diagonal(A, False)
        return A

    def zero_pairs(self) -> list[tuple[int, int]]:
        z = self.signs == 0
        np.fill_diagonal(z, False)
        i, j = np.nonzero(np.triu(z, 1))
        return list(zip(i.tolist(), j.tolist()))

    @classmethod
    def from_lifted(cls, lifted, diagonal) -> "SignMatrix":
        from .family import integerize
        from .signs import bilinear_signs

        rows = [integerize(lifted.vector(i))[0] for i in range(len(lifted))]
        diag = integerize([Fraction(d) for d in diagonal])[0]
        return cls(bilinear_signs(rows, rows, diag))


# ---------------------------------------------------------------------------
# labels as values


@dataclass(frozen=True)
class Address:
    components: tuple  # cell indices, each in 1..2^Q
    slot: int  # 1-based position inside the terminal node


@dataclass
class SplitNode:
    leaves: list  # [(cell, bit)] with strictly increasing cells
    children: list  # [(cell, node)] for the remaining cells, increasing


@dataclass
class FinalNode:
    bits: list  # adjacency bits, one per terminal member


@dataclass(frozen=True)
class LabelHeader:
    n: int
    Q: int
    s: int
    flags: int = 0
    version: int = FORMAT_VERSION

    @property
    def strict(self) -> bool:
        return bool(self.flags & FLAG_STRICT)

    @property
    def complement(self) -> bool:
        return bool(self.flags & FLAG_COMPLEMENT)


@dataclass
class VertexLabel:
    vertex: int
    header: LabelHeader
    address: Address
    tree: object  # SplitNode | FinalNode
    _bits: str | None = field(default=None, repr=False, compare=False)

    @property
    def bits(self) -> str:
        if self._bits is None:
            self._bits = serialize_label(self)
        return self._bits

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def payload_bits(self) -> int:
        return len(self.bits) - HEADER_BITS


def _width(count: int) -> int:
    """Bits needed to tell ``count`` values apart."""
    return max(0, (count - 1).bit_length())


# ---------------------------------------------------------------------------
# building labels


def assign_addresses(h: HierarchyTree) -> dict[int, Address]:
    out = {}

    def walk(node, path):
        if node.terminal:
            for slot, v in enumerate(node.members.tolist(), start=1):
                out[v] = Address(tuple(path), slot)
            return
        for cell, cid in sorted(node.children.items()):
            walk(h.nodes[cid], path + [cell])

    walk(h.root, [])
    return out


def build_label_tree(y: int, h: HierarchyTree, adjacency: np.ndarray, node=None):
    """Decision tree for vertex ``y``; cells in ``y``'s certificate become leaves."""
    node = h.root if node is None else node
    if node.terminal:
        row = adjacency[y, node.members] & (node.members != y)
        return FinalNode(row.astype(int).tolist())
    cert = node.certificate
    if not cert.uniform[y].any():
        raise LabelError(f"vertex {y} has an empty certificate at node {node.id}")
    leaves, children = [], []
    for cell in range(1, node.assignment.cell_count + 1):
        if cert.uniform[y, cell - 1]:
            leaves.append((cell, int(cert.bits[y, cell - 1])))
        else:
            children.append((cell, build_label_tree(y, h, adjacency, h.nodes[node.children[cell]])))
    return SplitNode(leaves, children)


def encode_hierarchy(h: HierarchyTree, adjacency: np.ndarray, flags: int = 0) -> list[VertexLabel]:
    """Labels for every vertex of a certified hierarchy."""
    header = LabelHeader(h.n, h.Q, h.depth, flags | (FLAG_STRICT if h.strict else 0))
    addresses = assign_addresses(h)
    return [VertexLabel(v, header, addresses[v], build_label_tree(v, h, adjacency)) for v in range(h.n)]


# ---------------------------------------------------------------------------
# wire format


def _u(value: int, width: int) -> str:
    if width == 0:
        if value:
            raise LabelError("value does not fit in zero bits")
        return ""
    if not 0 <= value < (1 << width):
        raise LabelError(f"value {value} does not fit in {width} bits")
    return format(value, f"0{width}b")


def _tree_bits(node, depth: int, h: LabelHeader, out: list):
    Q = h.Q
    if depth > h.s:
        raise LabelError("tree deeper than the header's s")
    tagged = depth < h.s
    if isinstance(node, FinalNode):
        if tagged:
            out.append("0")
        c = len(node.bits)
        if not 1 <= c <= 4**Q:
            raise LabelError(f"final node with {c} members")
        out.append(_u(c - 1, 2 * Q))
        out.append("".join("1" if b else "0" for b in node.bits))
        return
    if not tagged:
        raise LabelError("split node at maximum depth")
    out.append("1")
    a = len(node.leaves)
    if not 1 <= a <= 2**Q:
        raise LabelError(f"split node with {a} leaves")
    out.append(_u(a, Q + 1))
    for cell, bit in node.leaves:
        out.append(_u(cell - 1, Q))
        out.append("1" if bit else "0")
    for _, child in node.children:
        _tree_bits(child, depth + 1, h, out)


def serialize_label(v: VertexLabel) -> str:
    h = v.header
    parts = [
        _u(h.version, 8), _u(h.n, 32), _u(h.Q, 16), _u(h.s, 16), _u(h.flags, 8),
        _u(v.vertex, _width(h.n)),
    ]
    comps = v.address.components
    if len(comps) > h.s:
        raise LabelError("address longer than s")
    parts.append(_u(len(comps), _width(h.s + 1)))
    parts.extend(_u(c - 1, h.Q) for c in comps)
    parts.append(_u(v.address.slot - 1, 2 * h.Q))
    _tree_bits(v.tree, 0, h, parts)
    return "".join(parts)


class _Reader:
    def __init__(self, bits: str):
        self.bits = bits
        self.pos = 0

    def take(self, width: int) -> int:
        if self.pos + width > len(self.bits):
            raise MalformedLabel("truncated label")
        chunk = self.bits[self.pos : self.pos + width]
        self.pos += width
        return int(chunk, 2) if chunk else 0

    def take_bits(self, count: int) -> list:
        if self.pos + count > len(self.bits):
            raise MalformedLabel("truncated label")
        chunk = self.bits[self.pos : self.pos + count]
        self.pos += count
        return [1 if ch == "1" else 0 for ch in chunk]


def _read_tree(r: _Reader, depth: int, h: LabelHeader):
    Q = h.Q
    kind = r.take(1) if depth < h.s else 0
    if kind == 0:
        c = r.take(2 * Q) + 1
        return FinalNode(r.take_bits(c))
    a = r.take(Q + 1)
    if not 1 <= a <= 2**Q:
        raise MalformedLabel(f"split node with {a} leaves")
    leaves = []
    for _ in range(a):
        cell = r.take(Q) + 1
        leaves.append((cell, r.take(1)))
    cells = [c for c, _ in leaves]
    if cells != sorted(set(cells)):
        raise MalformedLabel("leaf cells not strictly increasing")
    rest = [c for c in range(1, 2**Q + 1) if c not in set(cells)]
    return SplitNode(leaves, [(c, _read_tree(r, depth + 1, h)) for c in rest])


def read_header(bits: str) -> LabelHeader:
    r = _Reader(bits)
    version = r.take(8)
    if version != FORMAT_VERSION:
        raise LabelError(f"unsupported label version {version}")
    return LabelHeader(r.take(32), r.take(16), r.take(16), r.take(8), version)


def deserialize_label(bits: str) -> VertexLabel:
    if set(bits) - {"0", "1"}:
        raise MalformedLabel("label must be a string of 0s and 1s")
    h = read_header(bits)
    r = _Reader(bits)
    r.pos = HEADER_BITS
    vertex = r.take(_width(h.n))
    L = r.take(_width(h.s + 1))
    if L > h.s:
        raise MalformedLabel("address longer than s")
    comps = tuple(r.take(h.Q) + 1 for _ in range(L))
    slot = r.take(2 * h.Q) + 1
    tree = _read_tree(r, 0, h)
    if r.pos != len(bits):
        raise MalformedLabel(f"{len(bits) - r.pos} trailing bits")
    return VertexLabel(vertex, h, Address(comps, slot), tree, bits)


# ---------------------------------------------------------------------------
# decoding


def _walk(address: Address, tree) -> int:
    node = tree
    for depth in range(len(address.components) + 1):
        if isinstance(node, FinalNode):
            if depth != len(address.components):
                raise MalformedLabel("address continues past a final node")
            if not 1 <= address.slot <= len(node.bits):
                raise MalformedLabel("slot outside final node")
            return node.bits[address.slot - 1]
        if depth == len(address.components):
            raise MalformedLabel("address ends at a split node")
        cell = address.components[depth]
        for c, bit in node.leaves:
            if c == cell:
                return bit
        for c, child in node.children:
            if c == cell:
                node = child
                break
        else:
            raise MalformedLabel(f"cell {cell} missing from split node")
    raise MalformedLabel("unreachable")


def decode_oriented(a: VertexLabel, b: VertexLabel) -> int:
    """Walk ``a``'s address through ``b``'s tree (no orientation rule)."""
    if a.header != b.header:
        raise HeaderMismatch(f"labels come from different encodings: {a.header} vs {b.header}")
    if a.vertex == b.vertex:
        raise LabelError("self-query: both labels belong to the same vertex")
    bit = _walk(a.address, b.tree)
    return bit ^ int(a.header.complement)


def decode(a: VertexLabel, b: VertexLabel) -> int:
    """Adjacency bit of two vertices from their labels alone."""
    lo, hi = (a, b) if a.vertex < b.vertex else (b, a)
    return decode_oriented(lo, hi)


class _Tables:
    """All trees of a label set flattened into shared transition tables.

    ``nxt[node, cell]`` is a global child index, ``-1`` for a leaf whose bit
    is ``leaf[node, cell]``; final nodes have ``fin_off[node] >= 0`` pointing
    into ``fin_bits``.  ``roots[j]`` is the root of tree ``j``.
    """

    def __init__(self, trees, Q: int):
        nxt, leaf, fin_off, fin_len, fin_bits, roots = [], [], [], [], [], []
        width = 1 << Q

        def add(node):
            k = len(nxt)
            nxt.append([-2] * width)
            leaf.append([0] * width)
            if isinstance(node, FinalNode):
                fin_off.append(len(fin_bits))
                fin_len.append(len(node.bits))
                fin_bits.extend(node.bits)
                return k
            fin_off.append(-1)
            fin_len.append(0)
            for c, bit in node.leaves:
                nxt[k][c - 1] = -1
                leaf[k][c - 1] = bit
            for c, child in node.children:
                nxt[k][c - 1] = add(child)
            return k

        for tree in trees:
            roots.append(add(tree))
        self.nxt = np.array(nxt, dtype=np.int64)
        self.leaf = np.array(leaf, dtype=np.int8)
        self.fin_off = np.array(fin_off, dtype=np.int64)
        self.fin_len = np.array(fin_len, dtype=np.int64)
        self.fin_bits = np.array(fin_bits + [0], dtype=np.int8)
        self.roots = np.array(roots, dtype=np.int64)


def decode_matrix(labels: Sequence[VertexLabel], oriented: bool = False, chunk: int = 256) -> np.ndarray:
    """All-pairs decode.

    Entry ``[i, j]`` walks label ``i``'s address through label ``j``'s tree.
    With ``oriented=False`` the canonical orientation is applied, so the
    result is symmetric by construction; pass ``oriented=True`` to get the
    raw walks (see :func:`canonical` and :func:`orientation_disagreements`).
    The diagonal is zero.
    """
    n = len(labels)
    if n == 0:
        return np.zeros((0, 0), dtype=np.int8)
    header = labels[0].header
    for lab in labels:
        if lab.header != header:
            raise HeaderMismatch("labels come from different encodings")
    if sorted(lab.vertex for lab in labels) != list(range(n)):
        raise LabelError("label set must cover vertices 0..n-1 exactly once")
    labels = sorted(labels, key=lambda lab: lab.vertex)
    width = max(1, header.s)
    comps = np.zeros((n, width), dtype=np.int64)
    lengths = np.zeros(n, dtype=np.int64)
    slots = np.zeros(n, dtype=np.int64)
    for i, lab in enumerate(labels):
        c = lab.address.components
        comps[i, : len(c)] = np.asarray(c, dtype=np.int64) - 1
        lengths[i] = len(c)
        slots[i] = lab.address.slot - 1
    T = _Tables([lab.tree for lab in labels], header.Q)
    out = np.zeros((n, n), dtype=np.int8)
    for j0 in range(0, n, chunk):
        cols = np.arange(j0, min(n, j0 + chunk))
        self_mask = np.arange(n)[:, None] == cols[None, :]
        node = np.broadcast_to(T.roots[cols], (n, len(cols))).copy()
        result = np.full(node.shape, -1, dtype=np.int8)
        active = ~self_mask
        for depth in range(header.s + 1):
            at_final = active & (T.fin_off[node] >= 0)
            if at_final.any():
                rows = np.nonzero(at_final)[0]
                nodes = node[at_final]
                if (lengths[rows] != depth).any() or (slots[rows] >= T.fin_len[nodes]).any():
                    raise MalformedLabel("an address does not fit a final node")
                result[at_final] = T.fin_bits[T.fin_off[nodes] + slots[rows]]
                active &= ~at_final
            if not active.any() or depth == header.s:
                break
            cell = comps[:, depth][:, None]
            step = T.nxt[node, cell]
            hit_leaf = active & (step == -1)
            result[hit_leaf] = T.leaf[node, cell][hit_leaf]
            active &= ~hit_leaf
            if (active & (step < 0)).any():
                raise MalformedLabel("an address leaves its tree")
            node = np.where(active, step, node)
        if active.any():
            raise MalformedLabel("an address ends at a split node")
        result[self_mask] = 0
        out[:, cols] = result
    if header.complement:
        out ^= 1
        np.fill_diagonal(out, 0)
    return out if oriented else canonical(out)


def canonical(raw: np.ndarray) -> np.ndarray:
    """Symmetric matrix taking each pair from the smaller id's walk."""
    upper = np.triu(raw, 1)  # [i, j] with i < j: i's address through j's tree
    return (upper + upper.T).astype(np.int8)


def orientation_disagreements(raw: np.ndarray) -> int:
    return int(np.triu(raw != raw.T, 1).sum())


# ---------------------------------------------------------------------------
# bit accounting


def formula_tree_bound(Q: int, s: int) -> Fraction:
    """Tree size from the closed-form count at ``s`` splitting levels.

    ``Q == 1`` makes the closed form divide by zero; there the exact count of
    a single path of one-leaf nodes is used instead.
    """
    if Q == 1:
        return Fraction(2 * s + 6)
    return Fraction(alpha(Q) * (2**Q - 1) ** s - (Q + 1), 2**Q - 2)


def formula_bound(n: int, Q: int, s: int) -> Fraction:
    return formula_tree_bound(Q, s) + Q * (s + 2)


def adjusted_tree_bound(Q: int, s: int) -> int:
    """Worst-case tree bits in this wire format with ``s`` splitting levels."""
    final = 2 * Q + 4**Q
    best = final  # depth s: untagged final node
    for _ in range(s):
        split = 1 + (Q + 1) + max(a * (Q + 1) + (2**Q - a) * best for a in range(1, 2**Q + 1))
        best = max(1 + final, split)
    return best


def adjusted_bound(n: int, Q: int, s: int, with_header: bool = False) -> int:
    """Worst-case label bits (payload, or whole label with ``with_header``)."""
    address = _width(n) + _width(s + 1) + Q * s + 2 * Q
    return adjusted_tree_bound(Q, s) + address + (HEADER_BITS if with_header else 0)


def label_stats(labels: Sequence[VertexLabel], beta=2) -> dict:
    """Size summary.  ``max_bits``/``mean_bits`` count the payload (id,
    address and tree); the 80-bit header is identical in every label and
    reported separately."""
    if not labels:
        raise ValueError("no labels")
    h = labels[0].header
    sizes = np.array([lab.payload_bits for lab in labels])
    n, Q, s = h.n, h.Q, h.s
    max_bits = int(sizes.max())
    guaranteed = depth_bound(n, Q, None if h.strict else beta)
    return {
        "n": n,
        "Q": Q,
        "s": s,
        "strict": h.strict,
        "max_bits": max_bits,
        "mean_bits": float(sizes.mean()),
        "header_bits": HEADER_BITS,
        "formula_bound": float(formula_bound(n, Q, s)),
        "adjusted_bound": adjusted_bound(n, Q, s),
        "guaranteed_depth": guaranteed,
        "guaranteed_bound": adjusted_bound(n, Q, guaranteed),
        "trivial_bound": trivial_bound(n),
        "exponent_estimate": math.log(max_bits) / math.log(n) if n > 1 else 0.0,
    }


# ---------------------------------------------------------------------------
# label files


_BLOCK = struct.Struct(">4sBIHHB")


def _pack_bits(bits: str) -> bytes:
    if not bits:
        return b""
    padded = bits + "0" * (-len(bits) % 8)
    return int(padded, 2).to_bytes(len(padded) // 8, "big")


def _unpack_bits(data: bytes, length: int) -> str:
    if length == 0:
        return ""
    return format(int.from_bytes(data, "big"), f"0{len(data) * 8}b")[:length]


def dump_labels(blocks: Iterable[Sequence[VertexLabel]]) -> bytes:
    """One block per constraint; each block covers all ``n`` vertices."""
    out = bytearray()
    for labels in blocks:
        labels = sorted(labels, key=lambda lab: lab.vertex)
        h = labels[0].header
        out += _BLOCK.pack(MAGIC, h.version, h.n, h.Q, h.s, h.flags)
        for lab in labels:
            bits = lab.bits
            out += struct.pack(">I", len(bits))
            out += _pack_bits(bits)
    return bytes(out)


def load_labels(data: bytes) -> list[list[VertexLabel]]:
    blocks, pos = [], 0
    while pos < len(data):
        if len(data) - pos < _BLOCK.size:
            raise MalformedLabel("truncated block header")
        magic, version, n, Q, s, flags = _BLOCK.unpack_from(data, pos)
        if magic != MAGIC:
            raise MalformedLabel("bad magic bytes")
        if version != FORMAT_VERSION:
            raise LabelError(f"unsupported label version {version}")
        pos += _BLOCK.size
        header = LabelHeader(n, Q, s, flags, version)
        labels = []
        for _ in range(n):
            if len(data) - pos < 4:
                raise MalformedLabel("truncated record")
            (length,) = struct.unpack_from(">I", data, pos)
            pos += 4
            nbytes = (length + 7) // 8
            if len(data) - pos < nbytes:
                raise MalformedLabel("truncated record")
            lab = deserialize_label(_unpack_bits(data[pos : pos + nbytes], length))
            pos += nbytes
            if lab.header != header:
                raise HeaderMismatch("record header disagrees with block header")
            labels.append(lab)
        blocks.append(labels)
    if not blocks:
        raise MalformedLabel("empty label file")
    return blocks


def decode_blocks(blocks_a: Sequence[VertexLabel], blocks_b: Sequence[VertexLabel]) -> int:
    """Conjunction over per-constraint labels of two vertices."""
    if len(blocks_a) != len(blocks_b):
        raise HeaderMismatch("different constraint counts")
    return int(all(decode(a, b) for a, b in zip(blocks_a, blocks_b)))
