"""Formal maps: tuples of truncated series acting on n coordinates.

A FormalMap is an n-tuple of Series in n variables, each truncated at the
same degree N, with zero constant terms (maps fix the origin).  The group
operations (composition, inversion, conjugation) all work mod total degree
N+1, exactly.

Also here: exact small matrices over the scalar field, used for linear
parts, and the finite-order linearization by averaging.
"""

from __future__ import annotations

from .scalars import ONE, ZERO, Scalar, scalar
from .series import (
    Series,
    SeriesFormatError,
    TruncationMismatch,
    _parse_braced_terms,
    compose,
    format_series,
)


class Matrix:
    """A dense exact matrix over Q(i, r3)."""

    __slots__ = ("n", "rows")

    def __init__(self, rows):
        self.rows = tuple(tuple(scalar(x) for x in row) for row in rows)
        self.n = len(self.rows)
        for row in self.rows:
            if len(row) != self.n:
                raise ValueError("matrix must be square")

    @classmethod
    def identity(cls, n):
        return cls(
            [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        )

    @classmethod
    def diagonal(cls, entries):
        entries = list(entries)
        n = len(entries)
        return cls(
            [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)]
        )

    @classmethod
    def permutation(cls, perm):
        """Matrix of z -> (z_perm[0], ..., z_perm[n-1]) (0-based images)."""
        n = len(perm)
        if sorted(perm) != list(range(n)):
            raise ValueError(f"not a permutation: {perm}")
        return cls(
            [[1 if j == perm[i] else 0 for j in range(n)] for i in range(n)]
        )

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return "Matrix([" + ", ".join(
            "[" + ", ".join(str(x) for x in row) + "]" for row in self.rows
        ) + "])"

    def __mul__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        if self.n != other.n:
            raise ValueError("size mismatch")
        cols = list(zip(*other.rows))
        return Matrix(
            [
                [
                    sum((a * b for a, b in zip(row, col)), ZERO)
                    for col in cols
                ]
                for row in self.rows
            ]
        )

    def transpose(self):
        return Matrix(list(zip(*self.rows)))

    def det(self) -> Scalar:
        """Exact determinant by fraction-free-ish Gaussian elimination."""
        n = self.n
        rows = [list(r) for r in self.rows]
        det = ONE
        for col in range(n):
            pivot = next(
                (r for r in range(col, n) if not rows[r][col].is_zero()), None
            )
            if pivot is None:
                return ZERO
            if pivot != col:
                rows[col], rows[pivot] = rows[pivot], rows[col]
                det = -det
            p = rows[col][col]
            det = det * p
            inv = p.inverse()
            for r in range(col + 1, n):
                f = rows[r][col] * inv
                if f.is_zero():
                    continue
                rows[r] = [
                    x - f * y for x, y in zip(rows[r], rows[col])
                ]
        return det

    def inverse(self) -> "Matrix":
        n = self.n
        work = [
            list(row) + [ONE if i == j else ZERO for j in range(n)]
            for i, row in enumerate(self.rows)
        ]
        for col in range(n):
            pivot = next(
                (r for r in range(col, n) if not work[r][col].is_zero()), None
            )
            if pivot is None:
                raise ZeroDivisionError("matrix is singular")
            work[col], work[pivot] = work[pivot], work[col]
            inv = work[col][col].inverse()
            work[col] = [x * inv for x in work[col]]
            for r in range(n):
                if r == col:
                    continue
                f = work[r][col]
                if f.is_zero():
                    continue
                work[r] = [x - f * y for x, y in zip(work[r], work[col])]
        return Matrix([row[n:] for row in work])

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = Matrix.identity(self.n)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def entry(self, i, j) -> Scalar:
        return self.rows[i][j]

    def diagonal_entries(self):
        return tuple(self.rows[i][i] for i in range(self.n))

    def is_diagonal(self) -> bool:
        return all(
            self.rows[i][j].is_zero()
            for i in range(self.n)
            for j in range(self.n)
            if i != j
        )

    def is_upper_triangular(self) -> bool:
        return all(
            self.rows[i][j].is_zero()
            for i in range(self.n)
            for j in range(i)
        )

    def is_identity(self) -> bool:
        return self == Matrix.identity(self.n)

    def is_permutation(self) -> bool:
        for row in self.rows:
            ones = sum(1 for x in row if x.is_one())
            zeros = sum(1 for x in row if x.is_zero())
            if ones != 1 or zeros != self.n - 1:
                return False
        cols = list(zip(*self.rows))
        return all(
            sum(1 for x in col if x.is_one()) == 1 for col in cols
        )

    def eigenvalues(self):
        """Diagonal entries, for diagonal or distinct-diagonal triangular
        matrices only (exact eigenproblems beyond that are out of scope)."""
        if self.is_diagonal():
            return self.diagonal_entries()
        if self.is_upper_triangular() or self.transpose().is_upper_triangular():
            diag = self.diagonal_entries()
            if len(set(diag)) == self.n:
                return diag
        raise ValueError(
            "requires diagonal/distinct-eigenvalue triangular input"
        )


def is_linear_reversible(T: Matrix) -> bool:
    """Whether a linear map is reversible: the multiset of eigenvalues
    different from +-1 must be closed under inversion with multiplicity."""
    eig = T.eigenvalues()
    minus_one = -ONE
    counts: dict = {}
    for v in eig:
        if v == ONE or v == minus_one:
            continue
        counts[v] = counts.get(v, 0) + 1
    return all(counts.get(v.inverse(), 0) == c for v, c in counts.items())


# ---------------------------------------------------------------------------


class FormalMap:
    """An origin-preserving formal map of n variables mod degree N+1."""

    __slots__ = ("nvars", "trunc", "comps")

    def __init__(self, comps):
        comps = tuple(comps)
        if not comps:
            raise ValueError("map needs at least one component")
        n = comps[0].nvars
        N = comps[0].trunc
        if len(comps) != n:
            raise ValueError(
                f"map in {n} variables needs {n} components, got {len(comps)}"
            )
        for c in comps:
            if c.nvars != n or c.trunc != N:
                raise TruncationMismatch(
                    "all components must share the same n and N"
                )
            if not c.constant_term().is_zero():
                raise ValueError("maps must fix the origin (no constant term)")
        self.nvars = n
        self.trunc = N
        self.comps = comps

    # -- constructors --------------------------------------------------

    @classmethod
    def identity(cls, n, N):
        return cls([Series.variable(n, N, j) for j in range(n)])

    @classmethod
    def from_linear(cls, M: Matrix, N: int):
        n = M.n
        return cls(
            [
                Series(
                    n,
                    N,
                    {
                        tuple(1 if k == j else 0 for k in range(n)): M.entry(i, j)
                        for j in range(n)
                        if not M.entry(i, j).is_zero()
                    },
                )
                for i in range(n)
            ]
        )

    @classmethod
    def diagonal(cls, entries, N: int):
        return cls.from_linear(Matrix.diagonal(entries), N)

    @classmethod
    def permutation(cls, perm, N: int):
        return cls.from_linear(Matrix.permutation(perm), N)

    # -- inspection ----------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, FormalMap):
            return NotImplemented
        return (
            self.nvars == other.nvars
            and self.trunc == other.trunc
            and self.comps == other.comps
        )

    def __hash__(self):
        return hash((self.nvars, self.trunc, self.comps))

    def __repr__(self):
        return f"<{format_map(self)}>"

    def is_identity(self) -> bool:
        return self == FormalMap.identity(self.nvars, self.trunc)

    def linear_part(self) -> Matrix:
        n = self.nvars
        units = [tuple(1 if k == j else 0 for k in range(n)) for j in range(n)]
        return Matrix(
            [[self.comps[i].coefficient(units[j]) for j in range(n)] for i in range(n)]
        )

    def homogeneous_part(self, d: int) -> "FormalMap":
        """The degree-d homogeneous piece (as a map with zero elsewhere)."""
        return FormalMap.__new_raw__(
            self.nvars,
            self.trunc,
            tuple(c.homogeneous_component(d) for c in self.comps),
        )

    def truncate(self, new_trunc: int) -> "FormalMap":
        """A copy truncated at a (usually lower) degree."""
        return FormalMap([c.truncate(new_trunc) for c in self.comps])

    @classmethod
    def __new_raw__(cls, n, N, comps):
        # internal constructor skipping validation (used for non-invertible
        # pieces like homogeneous parts)
        self = object.__new__(cls)
        self.nvars = n
        self.trunc = N
        self.comps = comps
        return self

    def is_tangent_to_identity(self) -> bool:
        return self.linear_part().is_identity()

    # -- group operations ----------------------------------------------

    def __matmul__(self, other):
        return map_compose(self, other)

    def inverse(self) -> "FormalMap":
        return map_invert(self)


def map_compose(F: FormalMap, G: FormalMap) -> FormalMap:
    """The composite F after G, sharing the substitution cache across
    components."""
    if F.nvars != G.nvars or F.trunc != G.trunc:
        raise TruncationMismatch("composition needs matching n and N")
    memo: dict = {}
    return FormalMap.__new_raw__(
        F.nvars,
        F.trunc,
        tuple(compose(c, G.comps, memo) for c in F.comps),
    )


def map_pow(F: FormalMap, k: int) -> FormalMap:
    if k < 0:
        return map_pow(map_invert(F), -k)
    out = FormalMap.identity(F.nvars, F.trunc)
    base = F
    while k:
        if k & 1:
            out = map_compose(out, base)
        base = map_compose(base, base)
        k >>= 1
    return out


def apply_linear(M: Matrix, F: FormalMap) -> FormalMap:
    """The map z -> M(F(z)) (matrix acting on components)."""
    comps = []
    for i in range(M.n):
        acc = Series.zero(F.nvars, F.trunc)
        for j in range(M.n):
            a = M.entry(i, j)
            if not a.is_zero():
                acc = acc + F.comps[j].scale(a)
        comps.append(acc)
    return FormalMap.__new_raw__(F.nvars, F.trunc, tuple(comps))


def map_invert(F: FormalMap) -> FormalMap:
    """Compositional inverse, degree by degree.

    Starts from the inverse of the linear part and cancels one degree per
    step: if F(G(z)) = z + E_d + O(d+1) then replacing G by
    G - L(F)^{-1} E_d cancels degree d without disturbing lower ones.
    """
    L = F.linear_part()
    try:
        Li = L.inverse()
    except ZeroDivisionError:
        raise ZeroDivisionError("not invertible: singular linear part")
    G = FormalMap.from_linear(Li, F.trunc)
    for d in range(2, F.trunc + 1):
        err = map_compose(F, G)
        E = err.homogeneous_part(d)
        if all(c.is_zero() for c in E.comps):
            continue
        corr = apply_linear(Li, E)
        G = FormalMap.__new_raw__(
            F.nvars,
            F.trunc,
            tuple(g - c for g, c in zip(G.comps, corr.comps)),
        )
    return G


def conjugate(F: FormalMap, K: FormalMap) -> FormalMap:
    """The conjugate K^{-1} after F after K."""
    return map_compose(map_invert(K), map_compose(F, K))


def is_involution(F: FormalMap) -> bool:
    return map_compose(F, F).is_identity()


def element_order(F: FormalMap, max_order: int):
    """Order of F in the truncated group, or None if it exceeds max_order."""
    P = F
    for d in range(1, max_order + 1):
        if P.is_identity():
            return d
        P = map_compose(P, F)
    return None


def linearize_finite_order(theta: FormalMap, order: int) -> FormalMap:
    """Conjugator onto the linear part for a finite-order map.

    Averages K = (1/r) * sum_j L^{-j} o theta^j, which is tangent to the
    identity and satisfies K o theta = L o theta... more precisely
    K o theta = L o K, i.e. theta = K^{-1} o L(theta) o K.

    Raises ValueError if theta does not have the stated order mod the
    truncation.
    """
    if order < 1:
        raise ValueError("order must be positive")
    if not map_pow(theta, order).is_identity():
        raise ValueError(f"map is not of order {order} mod truncation")
    L = theta.linear_part()
    Li = L.inverse()
    acc = None
    P = FormalMap.identity(theta.nvars, theta.trunc)  # theta^0
    Mi = Matrix.identity(theta.nvars)  # L^{-j}
    for _ in range(order):
        term = apply_linear(Mi, P)
        acc = term if acc is None else FormalMap.__new_raw__(
            theta.nvars,
            theta.trunc,
            tuple(a + b for a, b in zip(acc.comps, term.comps)),
        )
        P = map_compose(P, theta)
        Mi = Mi * Li
    r_inv = scalar(order).inverse()
    return FormalMap(tuple(c.scale(r_inv) for c in acc.comps))


# ---------------------------------------------------------------------------
# text format

def format_map(F: FormalMap) -> str:
    """Canonical text: ``map n=2 N=6 { comp1: { ... } ; comp2: { ... } }``."""
    parts = [
        f"comp{i + 1}: " + format_series(c, header=False)
        for i, c in enumerate(F.comps)
    ]
    return f"map n={F.nvars} N={F.trunc} " + "{ " + " ; ".join(parts) + " }"


def parse_map(text: str) -> FormalMap:
    """Parse the map text format (component series inherit n and N)."""
    s = text.strip()
    if not s.startswith("map"):
        raise SeriesFormatError("map text must start with 'map'")
    rest = s[len("map"):].strip()
    try:
        ntok, rest = rest.split(None, 1)
        dtok, rest = rest.split(None, 1)
        if not ntok.startswith("n=") or not dtok.startswith("N="):
            raise ValueError
        nvars = int(ntok[2:])
        trunc = int(dtok[2:])
    except ValueError as exc:
        raise SeriesFormatError("map header must look like 'map n=2 N=6'") from exc
    rest = rest.strip()
    if not (rest.startswith("{") and rest.endswith("}")):
        raise SeriesFormatError("map body must be braced")
    body = rest[1:-1]
    # split on ';' at brace depth zero (component bodies contain ';' too)
    chunks, depth, cur = [], 0, ""
    for ch in body:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                raise SeriesFormatError("unbalanced braces in map body")
        if ch == ";" and depth == 0:
            chunks.append(cur)
            cur = ""
        else:
            cur += ch
    if cur.strip():
        chunks.append(cur)
    if depth != 0:
        raise SeriesFormatError("unbalanced braces in map body")
    comps: dict[int, Series] = {}
    for chunk in chunks:
        chunk = chunk.strip()
        if not chunk:
            continue
        name, _, series_body = chunk.partition(":")
        name = name.strip()
        if not name.startswith("comp"):
            raise SeriesFormatError(f"expected compK label, got {name!r}")
        try:
            idx = int(name[4:])
        except ValueError as exc:
            raise SeriesFormatError(f"bad component label {name!r}") from exc
        if idx < 1 or idx > nvars:
            raise SeriesFormatError(f"component index {idx} out of range")
        if idx in comps:
            raise SeriesFormatError(f"duplicate component comp{idx}")
        comps[idx] = _parse_braced_terms(series_body.strip(), nvars, trunc)
    if len(comps) != nvars:
        raise SeriesFormatError(
            f"map needs components comp1..comp{nvars}, got {sorted(comps)}"
        )
    return FormalMap([comps[i + 1] for i in range(nvars)])
