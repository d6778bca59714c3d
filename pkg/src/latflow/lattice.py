"""Lattice linear algebra: reduction, shortest vectors, covolumes.

Everything here works on column-convention bases held in numpy object
arrays of gmpy2 scalars, so the same code path serves 128-bit floats,
escalated precisions and exact rationals.  The shortest-vector pipeline
is LLL preprocessing followed by depth-first enumeration with the radius
taken from the reduced basis; results are certified when the enumeration
tree was explored completely within budget.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .errors import (
    EnumerationBudgetExceeded,
    NonInvertibleBasis,
    PrecisionInsufficient,
)
from .scalars import ScalarContext, nearest_int, scalar_from_str, scalar_str, to_scalar

DEFAULT_ENUM_BUDGET = 10**7
DEFAULT_LLL_DELTA = 0.99

# ---------------------------------------------------------------------------
# matrix helpers


def matrix(rows, ctx: ScalarContext) -> np.ndarray:
    """Object ndarray of context scalars from nested lists (row-major)."""
    return np.array([[to_scalar(v, ctx) for v in row] for row in rows], dtype=object)


def identity(k: int, ctx: ScalarContext) -> np.ndarray:
    return matrix([[1 if i == j else 0 for j in range(k)] for i in range(k)], ctx)


def int_matrix(rows) -> np.ndarray:
    return np.array([[int(v) for v in row] for row in rows], dtype=object)


def det(m: np.ndarray, ctx: ScalarContext):
    """Determinant by Gaussian elimination; exact in rational mode."""
    a = m.copy()
    r = a.shape[0]
    if a.shape != (r, r):
        raise ValueError("det needs a square matrix")
    with ctx.active():
        sign = 1
        d = to_scalar(1, ctx)
        for col in range(r):
            piv = max(range(col, r), key=lambda i: abs(a[i, col]))
            if a[piv, col] == 0:
                return to_scalar(0, ctx)
            if piv != col:
                a[[col, piv]] = a[[piv, col]]
                sign = -sign
            d = d * a[col, col]
            inv = 1 / a[col, col]
            for i in range(col + 1, r):
                f = a[i, col] * inv
                if f != 0:
                    a[i, col:] = a[i, col:] - f * a[col, col:]
        return sign * d


def int_det(m) -> int:
    """Exact integer determinant (Bareiss)."""
    a = [[int(v) for v in row] for row in m]
    r = len(a)
    sign = 1
    prev = 1
    for col in range(r - 1):
        if a[col][col] == 0:
            for i in range(col + 1, r):
                if a[i][col] != 0:
                    a[col], a[i] = a[i], a[col]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(col + 1, r):
            for j in range(col + 1, r):
                a[i][j] = (a[i][j] * a[col][col] - a[i][col] * a[col][j]) // prev
        prev = a[col][col]
    return sign * a[r - 1][r - 1]


def matrix_to_json(m: np.ndarray, ctx: ScalarContext) -> dict:
    k = m.shape[0]
    cols = [[scalar_str(m[i, j], ctx) for i in range(m.shape[0])] for j in range(m.shape[1])]
    return {"k": k, "mode": ctx.mode, "precision_bits": ctx.precision_bits, "columns": cols}


def matrix_from_json(d: dict) -> tuple[np.ndarray, ScalarContext]:
    ctx = ScalarContext(mode=d["mode"], precision_bits=d["precision_bits"])
    cols = d["columns"]
    k = d["k"]
    m = np.empty((k, len(cols)), dtype=object)
    for j, col in enumerate(cols):
        for i, s in enumerate(col):
            m[i, j] = scalar_from_str(s, ctx)
    return m, ctx


# ---------------------------------------------------------------------------
# domain types


def minkowski_constant(k: int, ctx: ScalarContext):
    """E(k) = 2 / omega_k^(1/k) with omega_k the unit-ball volume.

    Minkowski's convex body theorem gives a nonzero vector of length at
    most E(k) * covolume^(1/k) in any rank-k lattice.
    """
    if k < 1:
        raise ValueError("k must be positive")
    with gmpy2.context(precision=ctx.precision_bits):
        pi = gmpy2.const_pi()
        ball = pi ** (mpfr(k) / 2) / gmpy2.gamma(mpfr(k) / 2 + 1)
        return 2 / gmpy2.root(ball, k)


@dataclass
class LatticeState:
    """Unimodular lattice g Z^k given by basis columns, with provenance."""

    basis: np.ndarray
    ctx: ScalarContext
    provenance: Optional[dict] = None

    def __post_init__(self):
        k = self.basis.shape[0]
        if k < 2 or self.basis.shape != (k, k):
            raise ValueError("basis must be square with k >= 2")
        d = det(self.basis, self.ctx)
        if d == 0:
            raise NonInvertibleBasis("basis columns are dependent")
        with self.ctx.active():
            err = abs(abs(d) - 1)
        if self.ctx.mode == "rational":
            if err != 0:
                raise ValueError(f"|det| = {d} is not 1: not unimodular")
        elif float(err) > self.ctx.rel_tolerance:
            raise ValueError(f"|det| deviates from 1 by {float(err):.3e}")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def standard(cls, k: int, ctx: ScalarContext) -> "LatticeState":
        return cls(basis=identity(k, ctx), ctx=ctx, provenance={"kind": "standard"})

    def to_json(self) -> dict:
        d = matrix_to_json(self.basis, self.ctx)
        if self.provenance is not None:
            d["provenance"] = self.provenance
        return d

    @classmethod
    def from_json(cls, d: dict) -> "LatticeState":
        m, ctx = matrix_from_json(d)
        return cls(basis=m, ctx=ctx, provenance=d.get("provenance"))


@dataclass
class RationalSubspace:
    """Proper nonzero rational subspace of R^k, primitive integer basis columns."""

    basis: np.ndarray  # k x j, object dtype of python ints

    def __post_init__(self):
        self.basis = int_matrix(self.basis)
        k, j = self.basis.shape
        if not (1 <= j <= k - 1):
            raise ValueError(f"subspace dimension {j} not in [1, {k - 1}]")
        g = self._minor_gcd()
        if g == 0:
            raise ValueError("basis columns are dependent over Q")
        if g != 1:
            raise ValueError(f"basis is not primitive (minor gcd {g})")

    def _minor_gcd(self) -> int:
        k, j = self.basis.shape
        g = 0
        for rows in itertools.combinations(range(k), j):
            g = math.gcd(g, abs(int_det(self.basis[list(rows), :])))
            if g == 1:
                return 1
        return g

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def line(cls, vector) -> "RationalSubspace":
        v = [int(x) for x in vector]
        g = math.gcd(*[abs(x) for x in v]) if any(v) else 0
        if g == 0:
            raise ValueError("zero vector spans no line")
        v = [x // g for x in v]
        for x in v:
            if x != 0:
                if x < 0:
                    v = [-y for y in v]
                break
        return cls(basis=np.array([[x] for x in v], dtype=object))


@dataclass
class ShortVectorResult:
    """Shortest-vector certificate: integer coordinates in the given basis."""

    vector: np.ndarray
    length: object
    length_sq: object
    certified: bool
    nodes: int
    precision_used: int

    def to_json(self, ctx: ScalarContext) -> dict:
        return {
            "vector": [int(v) for v in self.vector],
            "length": scalar_str(self.length, ctx),
            "certified": self.certified,
            "nodes": self.nodes,
            "precision_used": self.precision_used,
        }


@dataclass
class LLLReduction:
    """Reduced basis together with the unimodular change of basis.

    ``basis == original @ transform`` and ``|det transform| == 1``.
    """

    basis: np.ndarray
    transform: np.ndarray


# ---------------------------------------------------------------------------
# Gram-Schmidt + LLL


def _gram_schmidt(cols, ctx: ScalarContext):
    """mu coefficients and squared GS norms for a list of column vectors.

    Only genuine degeneracy raises here: a squared GS norm at or below
    the cancellation noise floor ~ ||col||^2 * 2^(-2P) means the column
    is numerically dependent at this precision.
    """
    r = len(cols)
    mu = [[None] * r for _ in range(r)]
    star = []
    cnorm = []
    for i in range(r):
        v = cols[i].copy()
        for j in range(i):
            mu_ij = _dot(cols[i], star[j]) / cnorm[j]
            mu[i][j] = mu_ij
            v = v - mu_ij * star[j]
        star.append(v)
        cnorm.append(_dot(v, v))
        scale = _dot(cols[i], cols[i])
        if cnorm[i] <= 0 or (ctx.mode == "float" and scale > 0
                             and cnorm[i] < scale * mpfr(2) ** (-(2 * ctx.precision_bits - 16))):
            raise NonInvertibleBasis(
                f"Gram-Schmidt norm collapsed at column {i} "
                f"(precision {ctx.precision_bits} bits)")
    return mu, star, cnorm


def _certify_enumeration_precision(cols, cnorm, ctx: ScalarContext):
    """Enumeration over this GS data is trusted only while the dynamic
    range stays well inside the working precision (64 guard bits)."""
    if ctx.mode != "float":
        return
    scale = max(_dot(c, c) for c in cols)
    floor = min(cnorm)
    if floor <= 0 or scale / floor > mpfr(2) ** (ctx.precision_bits - 64):
        raise PrecisionInsufficient(
            f"basis condition exceeds certification headroom at "
            f"{ctx.precision_bits} bits")


def _dot(u, v):
    s = u[0] * v[0]
    for i in range(1, len(u)):
        s += u[i] * v[i]
    return s


def lll_reduce(basis: np.ndarray, delta_param=DEFAULT_LLL_DELTA, *,
               ctx: ScalarContext) -> LLLReduction:
    """LLL-reduce the columns of ``basis``; records the unimodular transform.

    Raises NonInvertibleBasis when the Gram data is numerically singular
    at the working precision (retry at higher precision).
    """
    if not (0.25 < float(delta_param) < 1):
        raise ValueError("delta_param must lie in (1/4, 1)")
    k, r = basis.shape
    with ctx.active():
        delta = to_scalar(delta_param, ctx)
        cols = [basis[:, i].copy() for i in range(r)]
        u = [[1 if i == j else 0 for j in range(r)] for i in range(r)]  # column ops
        mu, star, cnorm = _gram_schmidt(cols, ctx)

        def size_reduce(i):
            for j in range(i - 1, -1, -1):
                t = nearest_int(mu[i][j])
                if t != 0:
                    cols[i] = cols[i] - t * cols[j]
                    for row in range(r):
                        u[row][i] -= t * u[row][j]
                    for jj in range(j + 1):
                        prev = mu[i][jj]
                        mu[i][jj] = prev - t * (mu[j][jj] if jj < j else to_scalar(1, ctx))

        idx = 1
        guard = 0
        max_rounds = 4000 * r * r + 1000
        while idx < r:
            guard += 1
            if guard > max_rounds:
                raise PrecisionInsufficient("LLL failed to terminate; raise precision")
            size_reduce(idx)
            if cnorm[idx] >= (delta - mu[idx][idx - 1] ** 2) * cnorm[idx - 1]:
                idx += 1
            else:
                cols[idx - 1], cols[idx] = cols[idx], cols[idx - 1]
                for row in range(r):
                    u[row][idx - 1], u[row][idx] = u[row][idx], u[row][idx - 1]
                mu, star, cnorm = _gram_schmidt(cols, ctx)
                idx = max(idx - 1, 1)
        reduced = np.empty((k, r), dtype=object)
        for i in range(r):
            reduced[:, i] = cols[i]
        transform = np.array(u, dtype=object)
        return LLLReduction(basis=reduced, transform=transform)


# ---------------------------------------------------------------------------
# enumeration


def iter_short_vectors(basis: np.ndarray, radius_sq, *, ctx: ScalarContext,
                       budget: int = DEFAULT_ENUM_BUDGET) -> Iterator[tuple]:
    """Yield (coeffs, norm_sq) for all nonzero v = basis @ coeffs with
    ||v||^2 <= radius_sq, one representative per +-v pair.

    Depth-first over Gram-Schmidt coordinates with a zig-zag that starts
    toward the fractional side of each center, so per-level costs are
    non-decreasing and a level can be abandoned at the first overshoot.
    Raises EnumerationBudgetExceeded if the node budget runs out before
    the tree is exhausted.  Vectors come out in tree order, not sorted.
    """
    k, r = basis.shape
    with ctx.active():
        cols = [basis[:, i] for i in range(r)]
        mu, _star, cnorm = _gram_schmidt(cols, ctx)
        _certify_enumeration_precision(cols, cnorm, ctx)
        bound = to_scalar(radius_sq, ctx)
        x = [0] * r
        center = [to_scalar(0, ctx)] * r
        base = [0] * r        # rounded center
        count = [0] * r       # zig-zag step counter
        sign0 = [1] * r       # first step direction
        partial = [to_scalar(0, ctx)] * (r + 1)  # partial[i] = cost of levels > i
        nodes = 0
        level = r - 1

        def reset_level(i):
            c = to_scalar(0, ctx)
            for j in range(i + 1, r):
                if x[j] != 0:
                    c -= mu[j][i] * x[j]
            center[i] = c
            base[i] = nearest_int(c)
            count[i] = 0
            sign0[i] = 1 if c >= base[i] else -1
            x[i] = base[i]

        def advance(i):
            count[i] += 1
            n = count[i]
            mag = (n + 1) // 2
            s = sign0[i] if n % 2 == 1 else -sign0[i]
            x[i] = base[i] + s * mag

        reset_level(level)
        while True:
            nodes += 1
            if nodes > budget:
                raise EnumerationBudgetExceeded(f"enumeration budget {budget} exhausted")
            diff = x[level] - center[level]
            cost = partial[level + 1] + cnorm[level] * diff * diff
            if cost <= bound:
                if level == 0:
                    if any(x) and _canonical_rep(x):
                        yield tuple(x), cost
                    advance(level)
                else:
                    partial[level] = cost
                    level -= 1
                    reset_level(level)
            else:
                # zig-zag costs only grow from here: abandon this level
                level += 1
                if level >= r:
                    return
                advance(level)


def _canonical_rep(coeffs) -> bool:
    for c in reversed(coeffs):
        if c != 0:
            return c > 0
    return False


def shortest_vector(lattice, *, ctx: ScalarContext = None,
                    budget: int = DEFAULT_ENUM_BUDGET,
                    delta_param=DEFAULT_LLL_DELTA,
                    max_escalations: int = 3) -> ShortVectorResult:
    """Shortest nonzero vector of the lattice; precision escalates on demand.

    Accepts a LatticeState or a bare basis matrix (with explicit ctx).
    The result's ``vector`` holds integer coordinates in the given basis.
    """
    if isinstance(lattice, LatticeState):
        basis = lattice.basis
        ctx = lattice.ctx
    else:
        basis = lattice
        if ctx is None:
            raise ValueError("ctx required for a bare basis matrix")
    attempt_ctx = ctx
    last_err = None
    for _ in range(max_escalations + 1):
        try:
            return _shortest_vector_at(basis, attempt_ctx, budget, delta_param)
        except (NonInvertibleBasis, PrecisionInsufficient) as err:
            last_err = err
            attempt_ctx = attempt_ctx.escalate()
    raise PrecisionInsufficient(f"escalation exhausted: {last_err}")


def _shortest_vector_at(basis, ctx, budget, delta_param) -> ShortVectorResult:
    red = lll_reduce(basis, delta_param, ctx=ctx)
    k, r = red.basis.shape
    with ctx.active():
        norms = [_dot(red.basis[:, i], red.basis[:, i]) for i in range(r)]
        radius = min(norms)
        best_sq = radius
        first = norms.index(radius)
        best = tuple(1 if j == first else 0 for j in range(r))
        nodes = 0
        certified = True
        if ctx.mode == "float":
            slack = 1 + mpfr(2) ** (-(ctx.precision_bits // 2))
        else:
            slack = 1
        try:
            for coeffs, nsq in iter_short_vectors(red.basis, radius * slack,
                                                  ctx=ctx, budget=budget):
                nodes += 1
                if nsq < best_sq:
                    best_sq = nsq
                    best = coeffs
        except EnumerationBudgetExceeded:
            certified = False
        vec = red.transform @ np.array(best, dtype=object)
        vec = _canonical_sign(vec)
        length_sq = best_sq
        length = gmpy2.sqrt(mpfr(length_sq))
        return ShortVectorResult(vector=np.array([int(v) for v in vec], dtype=object),
                                 length=length, length_sq=length_sq,
                                 certified=certified, nodes=nodes,
                                 precision_used=ctx.precision_bits)


def _canonical_sign(vec):
    for v in vec:
        if v != 0:
            return vec if v > 0 else -vec
    return vec


def lattice_min(basis, *, ctx, budget=DEFAULT_ENUM_BUDGET):
    """delta(basis Z^r): length of the shortest nonzero vector."""
    return shortest_vector(basis, ctx=ctx, budget=budget).length


# ---------------------------------------------------------------------------
# covolumes of rational subspaces


def subspace_covolume(v: RationalSubspace, g: np.ndarray, *, ctx: ScalarContext):
    """Covolume of g Z^k intersect g V inside g V: sqrt det(B^T g^T g B)."""
    with ctx.active():
        gb = g @ v.basis
        gram = gb.T @ gb
        d = det(gram, ctx)
        if ctx.mode == "float":
            hadamard = to_scalar(1, ctx)
            for j in range(gb.shape[1]):
                hadamard *= _dot(gb[:, j], gb[:, j])
            if d <= 0 or (hadamard > 0 and
                          d < hadamard * mpfr(2) ** (-(ctx.precision_bits - 16))):
                raise PrecisionInsufficient(
                    f"Gram determinant unresolved at {ctx.precision_bits} bits")
            return gmpy2.sqrt(d)
        if d <= 0:
            raise NonInvertibleBasis("Gram determinant not positive")
        return gmpy2.sqrt(mpfr(d))


def minkowski_sub_line(v: RationalSubspace, g: np.ndarray, *, ctx: ScalarContext,
                       budget: int = DEFAULT_ENUM_BUDGET):
    """Rational line V' in V with l_{V'}(g) <= E(k) l_V(g)^(1/dim V).

    Found as the shortest vector of the rank-j sublattice g(Z^k cap V).
    """
    with ctx.active():
        gb = g @ v.basis
    res = shortest_vector(gb, ctx=ctx, budget=budget)
    direction = v.basis @ res.vector
    line = RationalSubspace.line(direction)
    return line, res.length


# ---------------------------------------------------------------------------
# deterministic rational-subspace enumeration


def iter_primitive_vectors(k: int, height_cap: int) -> Iterator[tuple]:
    """Primitive integer vectors up to sign, ordered by (height, lex)."""
    for h in range(1, height_cap + 1):
        for vec in itertools.product(range(-h, h + 1), repeat=k):
            if max(abs(c) for c in vec) != h:
                continue
            nz = next((c for c in vec if c != 0), 0)
            if nz <= 0:
                continue
            if math.gcd(*[abs(c) for c in vec]) != 1:
                continue
            yield vec


def _iter_hnf_bases(k: int, j: int, height_cap: int) -> Iterator[np.ndarray]:
    """Row-style HNF bases (j x k) of saturated rank-j submodules of Z^k,
    entries bounded by height_cap, ordered by (height, pivot columns, lex)."""
    for h in range(1, height_cap + 1):
        for pivots in itertools.combinations(range(k), j):
            free_pos = []
            ranges = []
            for i in range(j):
                for c in range(pivots[i] + 1, k):
                    if c in pivots:
                        continue
                    free_pos.append((i, c))
            # pivot values 1..h, above-pivot entries in [0, pivot), free in [-h, h]
            above_pos = [(i2, pivots[i]) for i in range(j) for i2 in range(i)]
            for pivvals in itertools.product(range(1, h + 1), repeat=j):
                above_ranges = [range(0, pivvals[pivots.index(c)]) for (_i2, c) in above_pos]
                for above in itertools.product(*above_ranges):
                    for free in itertools.product(range(-h, h + 1), repeat=len(free_pos)):
                        mat = [[0] * k for _ in range(j)]
                        for i in range(j):
                            mat[i][pivots[i]] = pivvals[i]
                        for (pos, val) in zip(above_pos, above):
                            mat[pos[0]][pos[1]] = val
                        for (pos, val) in zip(free_pos, free):
                            mat[pos[0]][pos[1]] = val
                        height = max(abs(e) for row in mat for e in row)
                        if height != h:
                            continue
                        yield np.array(mat, dtype=object)


_SUBSPACE_CACHE: dict = {}


def enumerate_rational_subspaces(k: int, height_cap: int, *, dims=None,
                                 per_dim_budget: int = 2000) -> list:
    """Deterministic list of primitive rational subspaces of R^k.

    Ordered by (dimension, height, lex); each dimension is truncated at
    ``per_dim_budget`` entries.  Higher-dimensional subspaces are produced
    from Hermite-normal-form bases of saturated submodules, so each
    subspace appears exactly once.
    """
    if dims is None:
        dims = range(1, k)
    dims = tuple(dims)
    key = (k, height_cap, dims, per_dim_budget)
    if key in _SUBSPACE_CACHE:
        return _SUBSPACE_CACHE[key]
    out = []
    for j in dims:
        count = 0
        if j == 1:
            for vec in iter_primitive_vectors(k, height_cap):
                out.append(RationalSubspace(basis=np.array([[c] for c in vec], dtype=object)))
                count += 1
                if count >= per_dim_budget:
                    break
            continue
        for hnf in _iter_hnf_bases(k, j, height_cap):
            basis = hnf.T  # columns
            try:
                sub = RationalSubspace(basis=basis)
            except ValueError:
                continue  # not saturated / not primitive
            out.append(sub)
            count += 1
            if count >= per_dim_budget:
                break
    _SUBSPACE_CACHE[key] = out
    return out


def delta_upper_bound_via_subspaces(g: np.ndarray, height_cap: int, *,
                                    ctx: ScalarContext, dims=None,
                                    per_dim_budget: int = 2000):
    """E(k) * min over enumerated V of l_V(g)^(1/dim V).

    Valid upper bound for delta(g Z^k) whenever the minimizing subspace
    falls inside the enumeration; a small cap only weakens the bound.
    """
    k = g.shape[0]
    e_const = minkowski_constant(k, ctx)
    best = None
    with ctx.active():
        for sub in enumerate_rational_subspaces(k, height_cap, dims=dims,
                                                per_dim_budget=per_dim_budget):
            ell = subspace_covolume(sub, g, ctx=ctx)
            val = ell if sub.dim == 1 else gmpy2.root(ell, sub.dim)
            if best is None or val < best:
                best = val
        if best is None:
            raise ValueError("no subspaces enumerated")
        return e_const * best
