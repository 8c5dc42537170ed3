"""Orbit types of register valuations and the symbolic successor machinery.

A valuation over an ordered domain is abstracted by the ordered partition of
its registers into equal-value blocks, together with the position of the
constant 0.  Internally every type carries a pseudo-point ``"0"`` pinned to
the constant, always sitting in the least block; this makes zero handling
uniform.  Over ``eq-nat`` the order between blocks is erased (blocks are
sorted by name instead), which turns the same machinery into plain
equality types.

Two valuations have equal types exactly when an automorphism of the domain
(fixing 0) maps one to the other, so reachability questions about the
infinite configuration space reduce to a finite graph over types.

All functions here are pure; memo tables are only appended to.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .domain import Atom, And, BoolConst, Domain, Input, Not, Or, Reg, Test, Zero

ZERO_POINT = "0"

PRIME = "'"


@dataclass(frozen=True)
class OrbitType:
    """Canonical orbit descriptor: blocks of equal points, least block first.

    ``blocks[0]`` always contains the zero pseudo-point.  For ordered
    domains the block order is the value order; for ``eq-nat`` the blocks
    after the zero block are sorted by name and carry no order meaning.
    """

    blocks: tuple
    ordered: bool

    def __post_init__(self):
        object.__setattr__(self, "_pos", None)

    @property
    def positions(self) -> dict:
        pos = self._pos  # type: ignore[attr-defined]
        if pos is None:
            pos = {}
            for i, block in enumerate(self.blocks):
                for name in block:
                    pos[name] = i
            object.__setattr__(self, "_pos", pos)
        return pos

    def position(self, name: str) -> int:
        return self.positions[name]

    @property
    def points(self) -> frozenset:
        return frozenset(self.positions)

    def zero_block_index(self) -> int:
        return 0


_INTERN: dict = {}


def make_type(blocks: Iterable[Iterable[str]], ordered: bool) -> OrbitType:
    """Canonicalize and intern block structure (zero pseudo-point enforced)."""
    blocks = [tuple(sorted(set(b))) for b in blocks if b]
    if not blocks or ZERO_POINT not in blocks[0]:
        raise ValueError("the first block must contain the zero point")
    if not ordered:
        blocks = [blocks[0]] + sorted(blocks[1:])
    key = (tuple(blocks), ordered)
    ty = _INTERN.get(key)
    if ty is None:
        ty = OrbitType(tuple(blocks), ordered)
        _INTERN[key] = ty
    return ty


def type_of(val: Mapping[str, Fraction], domain: Domain) -> OrbitType:
    """Canonical orbit type of a valuation."""
    groups: dict = {Fraction(0): [ZERO_POINT]}
    for name, value in val.items():
        groups.setdefault(value, []).append(name)
    blocks = [groups[v] for v in sorted(groups)]
    return make_type(blocks, ordered=domain.has_order)


def prime(name: str) -> str:
    return name + PRIME


def pair_type(v1: Mapping[str, Fraction], v2: Mapping[str, Fraction], domain: Domain) -> OrbitType:
    """Type of the disjoint union of two valuations; second copy primed."""
    if set(v1) != set(v2):
        raise ValueError("pair_type requires identical register sets")
    merged = dict(v1)
    for name, value in v2.items():
        merged[prime(name)] = value
    return type_of(merged, domain)


def project(ty: OrbitType, keep, rename: Mapping[str, str] | None = None) -> OrbitType:
    keep = set(keep) | {ZERO_POINT}
    rename = rename or {}
    blocks = []
    for block in ty.blocks:
        names = [rename.get(n, n) for n in block if n in keep]
        if names:
            blocks.append(names)
    if ZERO_POINT not in blocks[0]:
        raise AssertionError("zero point lost in projection")
    return make_type(blocks, ty.ordered)


def restrict_pair(ty: OrbitType, names: Iterable[str]) -> OrbitType:
    return project(ty, set(names))


# --------------------------------------------------------------------------
# Placements and extensions

# A placement locates one fresh point relative to the blocks of the type it
# extends: ("eq", i) joins block i; ("gap", i) sits strictly between block i
# and block i+1, or above all blocks when i is the last index.


def _insert_point(blocks: list, name: str):
    """All single-point ordered insertions; yields (placement, new blocks)."""
    m = len(blocks)
    for i in range(m):
        yield ("eq", i), blocks[:i] + [blocks[i] + (name,)] + blocks[i + 1 :]
    for i in range(m):
        yield ("gap", i), blocks[: i + 1] + [(name,)] + blocks[i + 1 :]


_EXT_MEMO: dict = {}


def extensions(ty: OrbitType, new_names: tuple) -> list:
    """All extensions of a type by fresh points, with their placements.

    Works on the canonical block order; for ``eq-nat`` types the caller
    deduplicates after canonicalization (order carries no meaning there).
    Returned types keep ``ty.ordered``'s value-order interpretation during
    the step; canonicalization happens in :func:`make_type` on projection.
    """
    key = (ty, new_names)
    cached = _EXT_MEMO.get(key)
    if cached is not None:
        return cached
    results = [((), list(ty.blocks))]
    for name in new_names:
        nxt = []
        for placements, blocks in results:
            for placement, new_blocks in _insert_point(blocks, name):
                nxt.append((placements + (placement,), new_blocks))
        results = nxt
    out = [(placements, OrbitType(tuple(blocks), True)) for placements, blocks in results]
    _EXT_MEMO[key] = out
    return out


def eval_test_on_type(
    test: Test, ty: OrbitType, star_point: str | None, reg_prefix: str = ""
) -> bool:
    """Evaluate a quantifier-free test using only block positions."""
    pos = ty.positions

    def term_pos(term):
        if isinstance(term, Reg):
            return pos[reg_prefix + term.name]
        if isinstance(term, Input):
            if star_point is None:
                raise ValueError("test mentions the input but no input point given")
            return pos[star_point]
        return 0

    def ev(t):
        if isinstance(t, BoolConst):
            return t.value
        if isinstance(t, Atom):
            a, b = term_pos(t.left), term_pos(t.right)
            return a < b if t.op == "<" else a == b
        if isinstance(t, And):
            return all(ev(x) for x in t.items)
        if isinstance(t, Or):
            return any(ev(x) for x in t.items)
        if isinstance(t, Not):
            return not ev(t.item)
        raise TypeError(f"not a test: {t!r}")

    return ev(test)


def clone_point(ty: OrbitType, src: str, new_name: str) -> OrbitType:
    """Add a fresh point into the block of an existing one (equal value)."""
    idx = ty.position(src)
    blocks = [tuple(b) + ((new_name,) if i == idx else ()) for i, b in enumerate(ty.blocks)]
    return OrbitType(tuple(blocks), ty.ordered)


def drop_points(ty: OrbitType, names) -> OrbitType:
    names = set(names)
    blocks = [tuple(n for n in b if n not in names) for b in ty.blocks]
    return OrbitType(tuple(b for b in blocks if b), ty.ordered)


# --------------------------------------------------------------------------
# The star order condition and widening over the naturals


def star_property_positions(
    position, pairs: Sequence, members: Iterable | None = None
) -> bool:
    """Core of the loop-repeatability condition over pairs (start, end).

    ``pairs`` lists (start_point, end_point) per tracked register;
    ``members`` restricts which pairs participate (default: all).  The
    condition says: no register decreases, and any register lying at or
    below a register that stays fixed must itself stay fixed.  Loops whose
    start/end pair satisfies it create neither infinite descending chains
    nor bounded infinite ascending chains, so they repeat over naturals.
    """
    chosen = list(pairs) if members is None else [pairs[i] for i in members]
    for start, end in chosen:
        if position(start) > position(end):
            return False
    for s_start, s_end in chosen:
        if position(s_start) != position(s_end):
            continue
        for r_start, r_end in chosen:
            if position(r_start) <= position(s_start) and position(r_start) != position(r_end):
                return False
    return True


def star_property(sigma: OrbitType, regs: Iterable[str]) -> bool:
    """Star condition on a pair type over R and its primed copy, restricted to X."""
    pairs = [(r, prime(r)) for r in regs]
    return star_property_positions(sigma.position, pairs)


def pair_projections_equal(sigma: OrbitType, regs: Sequence[str]) -> bool:
    base = {r: sigma.position(r) for r in regs}
    primed = {r: sigma.position(prime(r)) for r in regs}

    def order_key(m):
        vals = sorted(set(m.values()))
        rank = {v: i for i, v in enumerate(vals)}
        return tuple(sorted((r, rank[v]) for r, v in m.items()))

    return order_key(base) == order_key(primed)


def widen_witness(sigma: OrbitType, regs: Sequence[str]) -> tuple:
    """Natural-number valuations (d, d_wider) realizing a star pair type.

    Requires the two projections of ``sigma`` to be the same type and the
    star condition to hold on all of ``regs``.  Starting from the canonical
    integer realization, interval-shrinking pairs are eliminated with
    integer stretch maps until the second valuation is wider than the
    first (all gaps, including to 0, at least as large, pointwise >=).
    """
    regs = list(regs)
    if not pair_projections_equal(sigma, regs):
        raise ValueError("pair type projections differ")
    if not star_property(sigma, regs):
        raise ValueError("pair type does not satisfy the star condition")
    values = {name: Fraction(i) for i, block in enumerate(sigma.blocks) for name in block}
    d = {r: values[r] for r in regs}
    dw = {r: values[prime(r)] for r in regs}

    def shrinking():
        pts = [Fraction(0)] + list(d.values())
        out = []
        for r in regs + [None]:
            for s in regs:
                a = d[r] if r is not None else Fraction(0)
                aw = dw[r] if r is not None else Fraction(0)
                b, bw = d[s], dw[s]
                if abs(bw - aw) < abs(b - a):
                    out.append((aw, bw) if bw >= aw else (bw, aw), )
        return [x for x in out]

    for _ in range(4 * (len(regs) + 1) ** 2):
        bad = None
        for r in [None] + regs:
            a = d[r] if r is not None else Fraction(0)
            aw = dw[r] if r is not None else Fraction(0)
            for s in regs:
                if abs(dw[s] - aw) < abs(d[s] - a):
                    lo, hi = sorted((aw, dw[s]))
                    c = abs(d[s] - a) - abs(dw[s] - aw)
                    bad = (hi, c)
                    break
            if bad:
                break
        if bad is None:
            break
        threshold, c = bad

        def stretch(x):
            return x + c if x >= threshold else x

        d = {r: stretch(v) for r, v in d.items()}
        dw = {r: stretch(v) for r, v in dw.items()}
    else:
        raise AssertionError("interval expansion failed to converge")

    merged = dict(d)
    merged.update({prime(r): dw[r] for r in regs})
    if type_of(merged, Domain.DENSE_Q) != make_ordered(sigma):
        raise AssertionError("widening changed the pair type")
    return d, dw


def make_ordered(ty: OrbitType) -> OrbitType:
    return make_type(ty.blocks, ordered=True)


def is_wider(d: Mapping[str, Fraction], dw: Mapping[str, Fraction]) -> bool:
    names = list(d)
    if any(dw[r] < d[r] for r in names):
        return False
    anchored = names + [None]
    for r in anchored:
        a = d[r] if r is not None else Fraction(0)
        aw = dw[r] if r is not None else Fraction(0)
        for s in names:
            if abs(dw[s] - aw) < abs(d[s] - a):
                return False
    return True


# --------------------------------------------------------------------------
# Piecewise-linear order automorphisms of the nonnegative rationals


@dataclass(frozen=True)
class PiecewiseLinearMap:
    """Strictly increasing bijection of the nonnegative rationals fixing 0.

    Defined by matching anchor sequences (0=x0<x1<...<xn) -> (0=y0<...<yn):
    linear between consecutive anchors, shift by (yn - xn) above the top.
    When built by :func:`wider_morphism` it additionally maps naturals to
    naturals.
    """

    xs: tuple
    ys: tuple

    def __call__(self, value: Fraction) -> Fraction:
        xs, ys = self.xs, self.ys
        if value < 0:
            raise ValueError("map is defined on nonnegative values only")
        if value >= xs[-1]:
            return value + (ys[-1] - xs[-1])
        lo, hi = 0, len(xs) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if xs[mid] <= value:
                lo = mid
            else:
                hi = mid
        x0, x1, y0, y1 = xs[lo], xs[lo + 1], ys[lo], ys[lo + 1]
        return y0 + (value - x0) * (y1 - y0) / (x1 - x0)

    def apply_word(self, word) -> tuple:
        return tuple(self(v) for v in word)


def pl_map_from_anchors(xs: Sequence[Fraction], ys: Sequence[Fraction]) -> PiecewiseLinearMap:
    xs = [Fraction(x) for x in xs]
    ys = [Fraction(y) for y in ys]
    if Fraction(0) not in xs:
        xs, ys = [Fraction(0)] + xs, [Fraction(0)] + ys
    pairs = sorted(set(zip(xs, ys)))
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    if len(set(xs)) != len(xs) or len(set(ys)) != len(ys):
        raise ValueError("anchor sequences are not strictly matched")
    if any(y1 <= y0 for y0, y1 in zip(ys, ys[1:])):
        raise ValueError("anchor images must be strictly increasing")
    if xs[0] != 0 or ys[0] != 0:
        raise ValueError("maps must fix 0")
    return PiecewiseLinearMap(tuple(xs), tuple(ys))


def identity_map() -> PiecewiseLinearMap:
    return PiecewiseLinearMap((Fraction(0),), (Fraction(0),))


def wider_morphism(d: Mapping[str, Fraction], d_wider: Mapping[str, Fraction]) -> PiecewiseLinearMap:
    """Increasing bijection fixing 0 with mu(d) = d_wider and mu(N) in N.

    Both valuations must be natural-valued, of equal type, with ``d_wider``
    wider than ``d``.  Per sorted anchor interval [a_i, a_{i+1}] the map is
    a unit shift on [a_i, a_{i+1}-1] followed by a single stretched unit
    segment; beyond the top anchor it is a translation.  Integer anchors
    plus unit source segments keep naturals inside naturals.
    """
    if set(d) != set(d_wider):
        raise ValueError("valuations over different registers")
    for v in list(d.values()) + list(d_wider.values()):
        if v.denominator != 1 or v < 0:
            raise ValueError("wider_morphism needs natural-number valuations")
    if type_of(d, Domain.DENSE_Q) != type_of(d_wider, Domain.DENSE_Q):
        raise ValueError("valuations have different types")
    if not is_wider(d, d_wider):
        raise ValueError("second valuation is not wider than the first")
    a = sorted(set(d.values()) | {Fraction(0)})
    b = sorted(set(d_wider.values()) | {Fraction(0)})
    xs, ys = [Fraction(0)], [Fraction(0)]
    for (x0, x1), (y0, y1) in zip(zip(a, a[1:]), zip(b, b[1:])):
        if x1 - 1 > x0:
            xs.append(x1 - 1)
            ys.append(y0 + (x1 - 1 - x0))
        xs.append(x1)
        ys.append(y1)
    return pl_map_from_anchors(xs, ys)


# --------------------------------------------------------------------------
# Finite injections (automorphisms for the equality-only domain)


@dataclass(frozen=True)
class ValuePermutation:
    """Bijection of the naturals fixing 0, given by a finite set of moves.

    Completes a finite partial injection into a full bijection: points not
    mentioned map to themselves, and collisions are resolved by chaining
    back to the free preimages.
    """

    moves: tuple  # ((src, dst), ...)

    def __call__(self, value: Fraction) -> Fraction:
        mapping = dict(self.moves)
        if value in mapping:
            return mapping[value]
        image = set(mapping.values())
        if value not in image:
            return value
        # walk the chain of sources mapping onto this value
        inverse = {dst: src for src, dst in mapping.items()}
        cur = value
        while cur in inverse:
            cur = inverse[cur]
        return cur

    def apply_word(self, word) -> tuple:
        return tuple(self(v) for v in word)


def permutation_from_pairs(pairs: Iterable) -> ValuePermutation:
    moves = tuple(sorted({(Fraction(a), Fraction(b)) for a, b in pairs if a != b}))
    srcs = [m[0] for m in moves]
    dsts = [m[1] for m in moves]
    if len(set(srcs)) != len(srcs) or len(set(dsts)) != len(dsts):
        raise ValueError("not an injection")
    if any(a == 0 or b == 0 for a, b in moves):
        raise ValueError("bijection must fix 0")
    return ValuePermutation(moves)


# --------------------------------------------------------------------------
# Counting and the signed Bezout identity


def _fubini(k: int) -> int:
    # ordered set partitions
    memo = [1] + [0] * k
    for n in range(1, k + 1):
        total = 0
        for j in range(1, n + 1):
            total += math.comb(n, j) * memo[n - j]
        memo[n] = total
    return memo[k]


def _bell_weighted(k: int) -> int:
    # sum over partitions into m blocks of (m + 1): one choice per block for
    # "this block is 0" plus the no-zero-block option
    from math import comb

    stirling = [[0] * (k + 1) for _ in range(k + 1)]
    stirling[0][0] = 1
    for n in range(1, k + 1):
        for m in range(1, n + 1):
            stirling[n][m] = m * stirling[n - 1][m] + stirling[n - 1][m - 1]
    return sum(stirling[k][m] * (m + 1) for m in range(k + 1))


def ryll_nardzewski(k: int, domain: Domain) -> int:
    """Number of orbits of k-tuples (the finite-type bound used for reports).

    For ``nat-order`` the count is for the enclosing dense order, which is
    what the searches actually enumerate (the domain itself has infinitely
    many orbits).
    """
    if k == 0:
        return 1
    if domain is Domain.EQ_NAT:
        return _bell_weighted(k)
    return 2 * _fubini(k)


def signed_bezout(values: Sequence[int]) -> list:
    """Nonnegative coefficients with sum(n_i * p_i) = gcd(|p_i|).

    Requires a mixed-sign input.  Coefficients stay within max(|p_i|)**3.
    """
    if not values or any(v == 0 for v in values):
        raise ValueError("inputs must be nonzero integers")
    if all(v > 0 for v in values) or all(v < 0 for v in values):
        raise ValueError("inputs must contain both signs")
    g = math.gcd(*[abs(v) for v in values])
    bound = max(abs(v) for v in values) ** 3

    # base solution over distinct values via iterated extended gcd
    distinct = sorted(set(values), key=lambda v: (-abs(v), v))
    coeff = {distinct[0]: 1 if distinct[0] > 0 else -1}
    cur = abs(distinct[0])
    for v in distinct[1:]:
        x, y, gg = _ext_gcd(cur, abs(v))
        coeff = {w: c * x for w, c in coeff.items()}
        coeff[v] = y if v > 0 else -y
        cur = gg
    assert cur == g

    pos = [v for v in distinct if v > 0]
    neg = [v for v in distinct if v < 0]
    # clear negatives pairwise: adding |q| to the coefficient of p and p to
    # the coefficient of q (p>0>q) leaves the sum unchanged
    p0, q0 = pos[0], neg[0]
    for v in distinct:
        if coeff.get(v, 0) >= 0:
            continue
        other = q0 if v > 0 else p0
        if v == other:
            other = p0 if v < 0 else q0
        step = abs(other)
        k = (-coeff[v] + step - 1) // step
        coeff[v] += k * step
        coeff[other] = coeff.get(other, 0) + k * abs(v)

    # greedy shrink: remove opposite-sign coefficient pairs while possible
    changed = True
    while changed:
        changed = False
        for p in pos:
            for q in neg:
                a, b = abs(q) // math.gcd(p, abs(q)), p // math.gcd(p, abs(q))
                while coeff.get(p, 0) >= a and coeff.get(q, 0) >= b and (a or b):
                    coeff[p] -= a
                    coeff[q] -= b
                    changed = True

    out = []
    used = set()
    for v in values:
        if v in used:
            out.append(0)
        else:
            used.add(v)
            out.append(coeff.get(v, 0))
    total = sum(n * v for n, v in zip(out, values))
    assert total == g, (out, values, total, g)
    assert all(n >= 0 for n in out)
    if any(n > bound for n in out):
        small = _bezout_search(values, g, bound)
        if small is not None:
            return small
    return out


def _ext_gcd(a: int, b: int):
    """Returns (x, y, g) with a*x + b*y = g for nonnegative a, b."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    return old_x, old_y, old_r


def _bezout_search(values, target, bound):
    """Small fallback search used when the constructive route lands high."""
    if len(values) > 4:
        return None
    best = None

    def rec(i, remaining, acc):
        nonlocal best
        if best is not None:
            return
        if i == len(values):
            if remaining == 0:
                best = list(acc)
            return
        v = values[i]
        tail = values[i + 1 :]
        for n in range(0, bound + 1):
            rest = remaining - n * v
            if not tail:
                if rest == 0:
                    rec(i + 1, 0, acc + [n])
                continue
            g_tail = math.gcd(*[abs(t) for t in tail])
            if rest % g_tail == 0 and abs(rest) <= sum(abs(t) for t in tail) * bound:
                rec(i + 1, rest, acc + [n])
            if best is not None:
                return

    rec(0, target, [])
    return best


# --------------------------------------------------------------------------
# Rendering and parsing of types

_BLOCK_RE = re.compile(r"\{([^{}]*)\}(=0)?")


def render_type(ty: OrbitType) -> str:
    """Stable textual rendering, e.g. ``{t}=0 < {s} < {r,u}``."""
    parts = []
    sep = " < " if ty.ordered else " | "
    for i, block in enumerate(ty.blocks):
        names = [n for n in block if n != ZERO_POINT]
        if i == 0:
            if not names:
                continue
            parts.append("{" + ",".join(names) + "}=0")
        else:
            parts.append("{" + ",".join(names) + "}")
    if not parts:
        return "{}=0"
    return sep.join(parts)


def parse_type(text: str, registers: Iterable[str]) -> OrbitType:
    """Inverse of :func:`render_type` for the given register universe."""
    text = text.strip()
    ordered = " | " not in text
    chunks = [c.strip() for c in re.split(r"<|\|", text) if c.strip()]
    blocks: list = []
    zero_names: list = []
    rest: list = []
    for chunk in chunks:
        m = _BLOCK_RE.fullmatch(chunk)
        if not m:
            raise ValueError(f"bad type block {chunk!r}")
        names = [n.strip() for n in m.group(1).split(",") if n.strip()]
        if m.group(2):
            zero_names = names
        else:
            rest.append(names)
    blocks = [zero_names + [ZERO_POINT]] + rest
    ty = make_type(blocks, ordered)
    known = set(registers) | {ZERO_POINT}
    if not ty.points <= known:
        raise ValueError("type mentions unknown registers")
    return ty
