"""Bit-tributary mappings, LDPC codes, and belief-propagation decoding.

A bit mapping assigns each codeword position to one bit tributary of the
underlying PAM labels; structured (fs1/fs2), per-codeword random (r) and
fixed unstructured (fu) mappings all keep the final n/bar_m positions on
tributary 1, so that with a systematic encoder whose parity block is no
longer than n/bar_m the parity bits land exclusively on sign slots.

Codes are systematic irregular repeat-accumulate constructions: the
information part of the parity-check matrix is built from shifted-identity
(circulant) blocks of size Z with column degree 3, the parity part is the
dual-diagonal accumulator staircase.  The staircase makes the matrix
provably full rank and gives O(n) encoding; circulant shifts are chosen
under explicit girth constraints so the Tanner graph has no 4-cycles.
Matrices round-trip through the standard alist text format and the
package ships one frozen n=1008, rate-1/2 instance for fast studies.

Decoding is flooding-schedule sum-product in the phi domain,
phi(x) = -ln tanh(x/2) being its own inverse; check magnitudes use
np.add.reduceat row sums and signs use np.bitwise_xor.reduceat parities,
with early exit once the hard decisions satisfy every check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

HD_FEC_THRESHOLD = 5e-5

MAPPING_KINDS = ("fs1", "fs2", "r", "fu")

# supported design rates: numerator/denominator pairs
_RATES = {
    "1/3": (1, 3),
    "1/2": (1, 2),
    "2/3": (2, 3),
    "3/4": (3, 4),
    "5/6": (5, 6),
    "9/10": (9, 10),
}

_REFERENCE_ALIST = "data/n1008_r12.alist"


# --- bit mappings --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BitMapping:
    """Assignment of codeword positions to bit tributaries.

    ``mapping[j]`` is the 1-based tributary fed by codeword position j.
    Every tributary occurs exactly n/bar_m times and the trailing
    n/bar_m positions are all tributary 1 (the sign slots).
    """

    mapping: np.ndarray
    kind: str
    bar_m: int
    seed: int | None = None

    def __post_init__(self):
        n = self.mapping.size
        if n % self.bar_m:
            raise ValueError("mapping length must be divisible by bar_m")
        counts = np.bincount(self.mapping, minlength=self.bar_m + 1)[1:]
        if not np.all(counts == n // self.bar_m):
            raise ValueError("each tributary must occur exactly n/bar_m times")
        if not np.all(self.mapping[-(n // self.bar_m):] == 1):
            raise ValueError("trailing n/bar_m positions must map to tributary 1")

    @property
    def n(self):
        return self.mapping.size

    @cached_property
    def slot_permutation(self):
        """slot index receiving codeword position j.

        Slots are PAM-symbol major: symbol u holds slots u*bar_m + (t-1)
        for tributaries t = 1..bar_m; the bits of one tributary fill its
        slots in codeword order.
        """
        occ = np.empty(self.n, dtype=np.int64)
        for t in range(1, self.bar_m + 1):
            idx = np.flatnonzero(self.mapping == t)
            occ[idx] = np.arange(idx.size)
        return occ * self.bar_m + (self.mapping - 1)


def build_mapping(kind, n, k, bar_m, seed=None, pas=True):
    """Construct one of the fs1/fs2/r/fu tributary mappings.

    fs1 is block-contiguous [bar_m..bar_m, ..., 1..1]; fs2 cycles
    [bar_m, bar_m-1, .., 2] before the trailing 1-block; r and fu
    permute fs1's leading block randomly (r is meant to be rebuilt with
    a fresh seed per codeword, fu keeps one fixed seed).  With ``pas``
    the parity block must fit inside the sign slots: n - k <= n/bar_m.
    """
    kind = kind.lower()
    if kind not in MAPPING_KINDS:
        raise ValueError(f"unknown mapping kind {kind!r}")
    if n % bar_m:
        raise ValueError("bar_m must divide n")
    if pas and n - k > n // bar_m:
        raise ValueError("parity block exceeds the sign slots: need n - k <= n/bar_m")
    block = n // bar_m
    lead = np.repeat(np.arange(bar_m, 1, -1), block)
    if kind == "fs2":
        lead = np.tile(np.arange(bar_m, 1, -1), block)
    elif kind in ("r", "fu"):
        if seed is None:
            raise ValueError(f"{kind} mapping needs a seed")
        lead = np.random.default_rng(seed).permutation(lead)
    m = np.concatenate([lead, np.ones(block, dtype=lead.dtype)])
    return BitMapping(mapping=m, kind=kind, bar_m=bar_m, seed=seed)


def apply_mapping(x, bit_mapping):
    """Codeword order -> tributary slot order (PAM-symbol major)."""
    x = np.asarray(x)
    if x.shape[-1] != bit_mapping.n:
        raise ValueError("length must equal the mapping size")
    out = np.empty_like(x)
    out[..., bit_mapping.slot_permutation] = x
    return out


def invert_mapping(x, bit_mapping):
    """Tributary slot order -> codeword order; inverse of apply_mapping."""
    x = np.asarray(x)
    if x.shape[-1] != bit_mapping.n:
        raise ValueError("length must equal the mapping size")
    return x[..., bit_mapping.slot_permutation]


# --- code representation -------------------------------------------------

@dataclass(frozen=True, eq=False)
class LdpcCode:
    """Sparse parity-check matrix in row-adjacency form.

    ``row_cols`` lists the variable columns of each check row
    back-to-back; ``row_ptr`` holds the n_rows+1 segment boundaries.
    ``k`` is the systematic prefix length n - n_rows; ``effective_k``
    accounts for any rank deficiency (equal to k for the shipped
    staircase codes, which are full rank by construction).  ``encoder``
    is "staircase" when the parity columns form the dual-diagonal
    accumulator, enabling ``encode``.
    """

    name: str
    n: int
    k: int
    row_ptr: np.ndarray
    row_cols: np.ndarray
    encoder: str | None
    effective_k: int

    @property
    def n_rows(self):
        return self.row_ptr.size - 1

    @property
    def rate(self):
        return self.k / self.n

    @cached_property
    def row_degrees(self):
        return np.diff(self.row_ptr)

    @cached_property
    def edge_row(self):
        return np.repeat(np.arange(self.n_rows), self.row_degrees)

    @cached_property
    def col_degrees(self):
        return np.bincount(self.row_cols, minlength=self.n)

    def to_dense(self):
        h = np.zeros((self.n_rows, self.n), dtype=np.uint8)
        h[self.edge_row, self.row_cols] = 1
        return h

    @classmethod
    def from_row_lists(cls, rows, n, name="custom"):
        """Build from an iterable of per-row column-index lists."""
        rows = [np.asarray(sorted(r), dtype=np.int64) for r in rows]
        if any(r.size == 0 for r in rows):
            raise ValueError("every check row needs at least one column")
        if any(r.min() < 0 or r.max() >= n for r in rows):
            raise ValueError("column index out of range")
        row_ptr = np.concatenate([[0], np.cumsum([r.size for r in rows])])
        row_cols = np.concatenate(rows)
        k = n - len(rows)
        code = cls(
            name=name, n=n, k=k,
            row_ptr=row_ptr.astype(np.int64), row_cols=row_cols,
            encoder="staircase" if _is_staircase(rows, n, k) else None,
            effective_k=n - _gf2_rank(rows, n),
        )
        return code


def _is_staircase(rows, n, k):
    # parity column k+j must appear in rows {j, j+1} (last column: row
    # n_rows-1 only) -- the structure the O(n) accumulator encoder needs
    n_rows = len(rows)
    col_rows = [[] for _ in range(n - k)]
    for r, cols in enumerate(rows):
        for c in cols:
            if c >= k:
                col_rows[c - k].append(r)
    for j in range(n_rows - 1):
        if col_rows[j] != [j, j + 1]:
            return False
    return col_rows[n_rows - 1] == [n_rows - 1]


def _gf2_rank(rows, n):
    # row echelon over GF(2) with python bigints as bit rows
    pivots = {}
    rank = 0
    for cols in rows:
        v = 0
        for c in cols:
            v ^= 1 << int(c)
        while v:
            p = v.bit_length() - 1
            if p in pivots:
                v ^= pivots[p]
            else:
                pivots[p] = v
                rank += 1
                break
    return rank


# --- quasi-cyclic IRA construction ---------------------------------------

def _candidate_geometries(n, num, den, z=None):
    """(block cols, block rows, z) candidates, preferred first.

    Needs >= 3 block rows for column degree 3 and z >= 8 for shift
    diversity; preference is a lifting size near 48, which balances
    girth headroom against block-row count.
    """
    if n % den:
        raise ValueError(f"n must be divisible by {den} for rate {num}/{den}")
    br_base = den - num
    if z is not None:
        if n % (den * z):
            raise ValueError("n must equal den * f * z for an integer f")
        f = n // (den * z)
        if br_base * f < 3:
            raise ValueError("need at least 3 block rows for column degree 3")
        return [(den * f, br_base * f, z)]
    out = []
    for f in range(1, n // den + 1):
        if (n // den) % f:
            continue
        zz = n // (den * f)
        if br_base * f < 3 or zz < 8:
            continue
        out.append((abs(zz - 48), den * f, br_base * f, zz))
    if not out:
        raise ValueError("no block geometry with >= 3 block rows and z >= 8")
    return [(bc, br, zz) for _, bc, br, zz in sorted(out)]


def _leg_rows(classes, shifts, z, q):
    """Check rows of one bit group, shape (z, degree).

    Bit c of a group connects, per leg, to row ((c + u) mod z) * q + v:
    each leg walks one residue class v (mod q) with in-class circulant
    shift u.  Consecutive bits of a group land q rows apart, so the
    parity runs they trigger in the accumulator have length >= q instead
    of 1 -- this row interleaving is what keeps sparse-information
    codewords heavy.
    """
    c = np.arange(z)
    return np.stack(
        [((c + int(u)) % z) * q + int(v) for v, u in zip(classes, shifts)], axis=1
    )


def _accumulated_weight(rows_sorted, m):
    """Parity weight of flips at the given sorted check rows.

    The accumulator chain toggles at each flipped row, so the parity set
    covers the alternating intervals [r_0, r_1), [r_2, r_3), ...; an odd
    flip count leaves the chain set through [r_last, m).
    """
    t = rows_sorted.shape[1]
    hi = t - 1 if t % 2 else t
    w = (rows_sorted[:, 1:hi:2] - rows_sorted[:, 0:hi:2]).sum(axis=1)
    if t % 2:
        w = w + (m - rows_sorted[:, -1])
    return w


def _pair_weights(rows_a, rows_b, m):
    """Codeword weights for every 2-info-bit pairing of rows_a x rows_b.

    Duplicated rows cancel to zero-length intervals automatically.
    """
    na, nb = rows_a.shape[0], rows_b.shape[0]
    merged = np.concatenate(
        [np.repeat(rows_a, nb, axis=0), np.tile(rows_b, (na, 1))], axis=1
    )
    merged.sort(axis=1)
    return 2 + _accumulated_weight(merged, m)


def _group_passes(cand, placed, m, w_floor):
    """Weight screen for one candidate bit group against placed groups.

    cand holds the sorted check rows of the group's z bits; rejected when
    any single bit, any pair within the group, or any pair with an
    already placed bit would give a codeword lighter than w_floor.
    """
    if (1 + _accumulated_weight(cand, m)).min() < w_floor:
        return False
    i, j = np.triu_indices(cand.shape[0], k=1)
    merged = np.sort(np.concatenate([cand[i], cand[j]], axis=1), axis=1)
    if (2 + _accumulated_weight(merged, m)).min() < w_floor:
        return False
    for other in placed:
        if _pair_weights(cand, other, m).min() < w_floor:
            return False
    return True


def _sparse_codeword_floor(layout, z, q):
    """Exact minimum weight over all codewords with 1 or 2 info bits set.

    These sparse-information words dominate the distance spectrum of
    accumulator codes, so generated layouts are screened against them;
    this helper re-derives the floor of a finished layout.
    """
    m = q * z
    rows = [np.sort(_leg_rows(classes, shifts, z, q), axis=1)
            for classes, shifts in layout]
    w = min(int((1 + _accumulated_weight(r, m)).min()) for r in rows)
    for a in range(len(rows)):
        i, j = np.triu_indices(z, k=1)
        merged = np.sort(np.concatenate([rows[a][i], rows[a][j]], axis=1), axis=1)
        w = min(w, int((2 + _accumulated_weight(merged, m)).min()))
        for b in range(a + 1, len(rows)):
            w = min(w, int(_pair_weights(rows[a], rows[b], m).min()))
    return w


def _group_degrees(info_groups, q, num, den):
    """Information-column degree per bit group, heavy groups first.

    The staircase already contributes the degree-1/2 mass, so the
    threshold is set by the information side: a fraction of groups at a
    high degree and the rest at 3, in proportions that track deployed
    irregular accumulator profiles for each rate.  Geometries with few
    residue classes fall back to all-3: a heavy group must leave at
    least two classes unused or the shift search has no freedom left.
    """
    high, frac = {
        (1, 3): (12, 0.25), (1, 2): (8, 0.40), (2, 3): (12, 0.17),
        (3, 4): (12, 0.15), (5, 6): (13, 0.12), (9, 10): (4, 0.18),
    }[(num, den)]
    high = min(high, q - 2)
    if high <= 3:
        return [3] * info_groups
    n_high = int(round(frac * info_groups))
    return [high] * n_high + [3] * (info_groups - n_high)


def _pick_classes(q, deg, used, rng, samples=8):
    """Class combination for one group, preferring unloaded class pairs."""
    if deg >= q:
        return np.arange(q)
    best = None
    for _ in range(samples):
        classes = np.sort(rng.choice(q, size=deg, replace=False))
        load = sum(
            len(used.get((int(classes[a]), int(classes[b])), ()))
            for a in range(deg) for b in range(a + 1, deg)
        )
        if best is None or load < best[0]:
            best = (load, classes)
    return best[1]


def _pick_shifts(classes, used, z, q, rng):
    """Sequentially choose in-class shifts against the remaining budget.

    For each class the banned shifts are derived from already chosen
    legs: repeats of a consumed shift difference (cross-group 4-cycle),
    equal shifts on consecutive classes, and the difference-1 wrap of
    the (0, q-1) pair (both put one bit on two consecutive check rows).
    Returns None when a class has no shift left.
    """
    deg = classes.size
    shifts = np.empty(deg, dtype=np.int64)
    for j in range(deg):
        cj = int(classes[j])
        ok = np.ones(z, dtype=bool)
        for i in range(j):
            ci, ui = int(classes[i]), int(shifts[i])
            for d in used.get((ci, cj), ()):
                ok[(ui - d) % z] = False
            if cj == ci + 1:
                ok[ui] = False
            if (ci, cj) == (0, q - 1):
                ok[(ui - 1) % z] = False
        cand = np.flatnonzero(ok)
        if cand.size == 0:
            return None
        shifts[j] = int(rng.choice(cand))
    return shifts


def _search_layout(bc, br, z, rng, degrees, restarts=8, group_tries=300):
    """Draw class/shift placements satisfying girth and weight screens.

    Returns a list of (classes, shifts) per information bit group, or
    None when the geometry cannot be satisfied.  A group's legs sit in
    distinct residue classes, so no two legs of a group can collide and
    cross-group 4-cycles reduce to repeated in-class shift differences
    per class pair.  Staircase 4-cycles need a bit covering two
    consecutive rows, i.e. equal in-class shifts on consecutive classes
    (or u_first = u_last + 1 across the row-index wrap), and are
    excluded the same way.
    """
    q = br
    m = q * z
    # short parity chains cannot support the 2 + 2q target, so cap by m
    w_floor = max(6, min(2 + 2 * q, m // 12))
    for _ in range(restarts):
        used = {}                           # (v1, v2) -> set of shift diffs
        layout = []
        placed_rows = []
        for deg in degrees:
            hit = False
            for _try in range(group_tries):
                classes = _pick_classes(q, deg, used, rng)
                shifts = _pick_shifts(classes, used, z, q, rng)
                if shifts is None:
                    continue
                cand = np.sort(_leg_rows(classes, shifts, z, q), axis=1)
                if not _group_passes(cand, placed_rows, m, w_floor):
                    continue
                for a in range(deg):
                    for b in range(a + 1, deg):
                        pair = (int(classes[a]), int(classes[b]))
                        used.setdefault(pair, set()).add(int((shifts[a] - shifts[b]) % z))
                layout.append((classes, shifts))
                placed_rows.append(cand)
                hit = True
                break
            if not hit:
                layout = None
                break
        if layout is not None:
            return layout
    return None


def generate_code(n, rate, seed=0, z=None):
    """Generate a quasi-cyclic IRA code of length n at the given rate.

    ``rate`` is one of {1/3, 1/2, 2/3, 3/4, 5/6, 9/10} (string or float).
    Information bits are organized in groups of Z; each group gets
    degree-1 legs in distinct row-residue classes mod q (q = rows / Z),
    so consecutive bits of a group land q rows apart and their parity
    runs through the accumulator stay long.  Group degrees follow a
    rate-dependent irregular profile (most groups at 3, a fraction
    higher) when the geometry has enough classes.  Class/shift draws
    come from a seeded generator and are re-drawn until the girth
    constraints hold (distinct in-class shift differences per class
    pair, no bit covering two consecutive rows) and every 1- and
    2-info-bit codeword clears a weight floor scaled to q, which removes
    the construction's dominant undetected-error words.
    """
    if not isinstance(rate, str):
        matches = [s for s, (p, q) in _RATES.items() if abs(rate - p / q) < 1e-9]
        if not matches:
            raise ValueError(f"unsupported rate {rate!r}")
        rate = matches[0]
    if rate not in _RATES:
        raise ValueError(f"unsupported rate {rate!r}")
    num, den = _RATES[rate]
    rng = np.random.default_rng(seed)
    layout = None
    for bc, br, zz in _candidate_geometries(n, num, den, z):
        degrees = _group_degrees(bc - br, br, num, den)
        layout = _search_layout(bc, br, zz, rng, degrees)
        if layout is not None:
            z = zz
            break
    if layout is None:
        raise ValueError("could not satisfy girth and weight constraints; "
                         "try a different n or an explicit z")
    n_rows = br * z
    k = n - n_rows

    rows = [[] for _ in range(n_rows)]
    for group, (classes, shifts) in enumerate(layout):
        base = group * z
        leg_rows = _leg_rows(classes, shifts, z, br)
        for c in range(z):
            for r in leg_rows[c]:
                rows[int(r)].append(base + c)
    for j in range(n_rows):                 # accumulator staircase
        rows[j].append(k + j)
        if j:
            rows[j].append(k + j - 1)
    name = f"qcira_n{n}_r{rate.replace('/', '')}_z{z}_s{seed}"
    return LdpcCode.from_row_lists(rows, n, name=name)


def _span_weight(rows, m):
    """Scalar accumulator-span weight of one sorted row set."""
    return int(_accumulated_weight(np.asarray(rows)[None, :], m)[0])


def _merged_pair_weight(rows_a, rows_b, m):
    """Codeword weight of a 2-info-bit pattern; shared rows cancel."""
    uniq, cnt = np.unique(np.concatenate([rows_a, rows_b]), return_counts=True)
    return 2 + _span_weight(uniq[cnt == 1], m)


class _PegGraph:
    """Mutable bipartite graph used while growing info columns."""

    def __init__(self, n, n_rows, rng):
        self.n, self.m, self.k = n, n_rows, n - n_rows
        self.rng = rng
        self.row_cols = [[] for _ in range(n_rows)]
        self.col_rows = [[] for _ in range(n)]
        for r in range(n_rows):             # accumulator staircase edges
            self._link(r, self.k + r)
            if r:
                self._link(r, self.k + r - 1)
        self.row_deg = np.array([len(rc) for rc in self.row_cols])
        self.placed = []                    # sorted row sets of placed columns

    def _link(self, r, c):
        self.row_cols[r].append(c)
        self.col_rows[c].append(r)

    def _candidates(self, c, slack):
        """Rows farthest from column c, restricted to the least loaded.

        BFS over the partial graph; rows not reachable at all are
        preferred, otherwise the deepest BFS layer, so each new edge
        closes only the longest cycle available.
        """
        depth = np.full(self.m, -1)
        frontier = list(self.col_rows[c])
        for r in frontier:
            depth[r] = 0
        d = 0
        while frontier:
            nxt = []
            for r in frontier:
                for cc in self.row_cols[r]:
                    for rr in self.col_rows[cc]:
                        if depth[rr] < 0:
                            depth[rr] = d + 1
                            nxt.append(rr)
            frontier = nxt
            d += 1
        cand = np.flatnonzero(depth < 0)
        if cand.size == 0:
            cand = np.flatnonzero(depth == depth.max())
        load = self.row_deg[cand]
        return cand[load <= load.min() + slack]

    def place(self, c, degree, w_floor, tries=60):
        """Grow column c edge by edge; redraw until the span screen holds."""
        for t in range(tries):
            slack = 0 if t < 15 else (1 if t < 35 else 2)
            for _ in range(degree):
                r = int(self.rng.choice(self._candidates(c, slack)))
                self._link(r, c)
                self.row_deg[r] += 1
            rows = np.sort(np.asarray(self.col_rows[c]))
            ok = 1 + _span_weight(rows, self.m) >= w_floor and all(
                _merged_pair_weight(rows, prev, self.m) >= w_floor
                for prev in self.placed
            )
            if ok:
                self.placed.append(rows)
                return True
            for r in self.col_rows[c]:
                self.row_cols[r].remove(c)
                self.row_deg[r] -= 1
            self.col_rows[c] = []
        return False


def peg_code(n, degrees, seed=0, w_floor=None, name=None):
    """Staircase-IRA code with progressively grown info columns.

    ``degrees`` lists the target check degree of each of the k = n -
    len(degrees) information columns, in codeword-position order.
    Columns are constructed lightest first; every edge attaches to the
    farthest reachable (then least loaded) check row, so short cycles
    appear only when unavoidable.  On top of the growth rule, a column
    is accepted only while every codeword built from it and at most one
    previously placed column keeps accumulator weight >= ``w_floor``
    (default scales with the row count, 26 at the shipped 504), which
    removes the sparse near-codewords that otherwise dominate the
    high-SNR tail of the staircase family.
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    n_rows = n - degrees.size
    if w_floor is None:
        w_floor = max(6, min(26, n_rows // 12))
    if n_rows < 2 or degrees.size < 1:
        raise ValueError("need at least one info column and two check rows")
    if degrees.min() < 2:
        raise ValueError("info column degrees must be at least 2")
    if degrees.max() > n_rows:
        raise ValueError("column degree exceeds the number of check rows")
    graph = _PegGraph(n, n_rows, np.random.default_rng(seed))
    order = np.argsort(degrees, kind="stable")
    for c in order:
        if not graph.place(int(c), int(degrees[c]), w_floor):
            raise ValueError("could not satisfy the weight floor; "
                             "lower w_floor or lighten the degree profile")
    if name is None:
        name = f"pegira_n{n}_k{degrees.size}_s{seed}"
    return LdpcCode.from_row_lists(graph.row_cols, n, name=name)


# degree profile and seed reproducing the shipped data/n1008_r12.alist
REFERENCE_DEGREES = (3,) * 330 + (10,) * 174
REFERENCE_SEED = 1


# --- alist I/O -----------------------------------------------------------

def write_alist(code, path):
    """Write the parity-check matrix in standard alist text format.

    Layout: "n_cols n_rows", max degrees, per-column and per-row degree
    lists, then 1-indexed adjacency lines padded with zeros.
    """
    n, n_rows = code.n, code.n_rows
    col_lists = [[] for _ in range(n)]
    for r in range(n_rows):
        for c in code.row_cols[code.row_ptr[r]:code.row_ptr[r + 1]]:
            col_lists[c].append(r + 1)
    row_lists = [
        (code.row_cols[code.row_ptr[r]:code.row_ptr[r + 1]] + 1).tolist()
        for r in range(n_rows)
    ]
    max_col = max(len(x) for x in col_lists)
    max_row = max(len(x) for x in row_lists)
    lines = [
        f"{n} {n_rows}",
        f"{max_col} {max_row}",
        " ".join(str(len(x)) for x in col_lists),
        " ".join(str(len(x)) for x in row_lists),
    ]
    for x in col_lists:
        lines.append(" ".join(map(str, x + [0] * (max_col - len(x)))))
    for x in row_lists:
        lines.append(" ".join(map(str, x + [0] * (max_row - len(x)))))
    Path(path).write_text("\n".join(lines) + "\n")


def read_alist(path, name=None):
    """Read an alist file; tolerates both zero-padded and unpadded lines."""
    text = Path(path).read_text()
    name = name or Path(path).stem
    toks = [int(t) for t in text.split()]
    pos = 0

    def take(count):
        nonlocal pos
        if pos + count > len(toks):
            raise ValueError("truncated alist file")
        out = toks[pos:pos + count]
        pos += count
        return out

    n, n_rows = take(2)
    max_col, max_row = take(2)
    col_deg = take(n)
    row_deg = take(n_rows)

    # padded files carry max_deg entries per line (zeros beyond the
    # degree); unpadded files carry exactly degree entries.  Detect by
    # total token count.
    remaining = len(toks) - pos
    padded_total = n * max_col + n_rows * max_row
    plain_total = sum(col_deg) + sum(row_deg)
    if remaining == padded_total:
        col_lists = [[v for v in take(max_col) if v] for _ in range(n)]
        row_lists = [[v for v in take(max_row) if v] for _ in range(n_rows)]
    elif remaining == plain_total:
        col_lists = [take(d) for d in col_deg]
        row_lists = [take(d) for d in row_deg]
    else:
        raise ValueError("alist adjacency size matches neither padded nor plain layout")

    if any(len(x) != d for x, d in zip(col_lists, col_deg)):
        raise ValueError("column degree list disagrees with adjacency")
    if any(len(x) != d for x, d in zip(row_lists, row_deg)):
        raise ValueError("row degree list disagrees with adjacency")
    rows = [[c - 1 for c in r] for r in row_lists]
    if any(c < 0 or c >= n for r in rows for c in r):
        raise ValueError("column index out of range in alist file")
    return LdpcCode.from_row_lists(rows, n, name=name)


def reference_code():
    """The shipped n=1008, rate-1/2 staircase-IRA code.

    The packaged alist is frozen output of
    ``peg_code(1008, REFERENCE_DEGREES, seed=REFERENCE_SEED)``: 330
    degree-3 columns followed by 174 degree-10 columns (light columns
    first, which also places them on the weakest tributary under the
    block bit mapping).
    """
    ref = resources.files("psbicm").joinpath(_REFERENCE_ALIST)
    with resources.as_file(ref) as path:
        return read_alist(path, name="n1008_r12")


# --- encode / decode -----------------------------------------------------

def encode(code, info_bits):
    """Systematic staircase encoding: codeword = [info, parity].

    Parity follows the accumulator recursion p_j = s_j xor p_{j-1} where
    s_j is the parity of the information bits on check row j.
    """
    if code.encoder != "staircase":
        raise ValueError(f"code {code.name!r} has no systematic encoder")
    info = np.asarray(info_bits, dtype=np.uint8)
    if info.shape != (code.k,):
        raise ValueError(f"info length must be k = {code.k}")
    s = np.zeros(code.n_rows, dtype=np.int64)
    info_edges = code.row_cols < code.k
    np.add.at(s, code.edge_row[info_edges], info[code.row_cols[info_edges]])
    parity = np.bitwise_xor.accumulate(np.asarray(s & 1, dtype=np.uint8))
    return np.concatenate([info, parity])


def syndrome(code, bits):
    """Per-check parity of a bit vector; all zero iff it is a codeword."""
    bits = np.asarray(bits, dtype=np.uint8)
    return np.bitwise_xor.reduceat(bits[code.row_cols], code.row_ptr[:-1])


@dataclass(frozen=True)
class DecodeResult:
    codeword: np.ndarray
    iterations: int
    converged: bool
    k: int

    @property
    def info(self):
        return self.codeword[: self.k]


def _phi(x):
    # phi(x) = -ln tanh(x/2), involutive; the floor clip bounds check
    # magnitudes at phi(1e-12) ~ 28 instead of overflowing at exact zeros
    return -np.log(np.tanh(np.clip(x, 1e-12, None) / 2.0))


def decode(code, lvalues, max_iter=50):
    """Flooding-schedule sum-product decoding of one codeword.

    ``lvalues`` follow the positive-means-bit-0 convention.  Stops early
    once hard decisions satisfy every check with a strictly nonzero
    total at every position (all-zero inputs are a sum-product fixed
    point and report non-convergence).
    """
    lam = np.asarray(lvalues, dtype=float)
    if lam.shape != (code.n,):
        raise ValueError(f"need n = {code.n} L-values")
    starts = code.row_ptr[:-1]
    cols = code.row_cols
    erow = code.edge_row
    m_cv = np.zeros(cols.size)

    iterations = 0
    converged = False
    totals = lam
    for it in range(max_iter + 1):
        totals = lam + np.bincount(cols, weights=m_cv, minlength=code.n)
        hard = (totals < 0).astype(np.uint8)
        sat = not np.bitwise_xor.reduceat(hard[cols], starts).any()
        if sat and np.all(totals != 0):
            iterations, converged = it, True
            break
        if it == max_iter:
            iterations = max_iter
            break
        m_vc = totals[cols] - m_cv
        mag = _phi(np.abs(m_vc))
        neg = (m_vc < 0).astype(np.uint8)
        row_mag = np.add.reduceat(mag, starts)
        row_neg = np.bitwise_xor.reduceat(neg, starts)
        ext_neg = row_neg[erow] ^ neg
        m_cv = np.where(ext_neg == 1, -1.0, 1.0) * _phi(row_mag[erow] - mag)

    hard = (totals < 0).astype(np.uint8)
    return DecodeResult(codeword=hard, iterations=iterations,
                        converged=converged, k=code.k)


@dataclass(frozen=True)
class PostFecResult:
    ber: float
    hd_fec_pass: bool


def post_fec_ber(decoded, reference):
    """Post-decoding bit error fraction and the outer-code verdict.

    ``hd_fec_pass`` is True when the BER is at or below the outer
    hard-decision code's correctable input threshold of 5e-5.
    """
    decoded = np.asarray(decoded, dtype=np.uint8).ravel()
    reference = np.asarray(reference, dtype=np.uint8).ravel()
    if decoded.size != reference.size:
        raise ValueError("length mismatch")
    ber = float(np.mean(decoded != reference))
    return PostFecResult(ber=ber, hd_fec_pass=ber <= HD_FEC_THRESHOLD)
