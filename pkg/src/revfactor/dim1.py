"""One-variable building blocks for the factor pipelines.

Everything here works on FormalMap instances with a single variable.
The multiplier (linear coefficient) of the maps we split is 1 or -1;
those are the only values that can appear at the bottom of the pair
recursion.

The common engine is a degree-by-degree solver for coefficient
equations.  Tangent functional equations have no eigenvalue separation,
so instead of dividing by multiplier differences we *probe*: each
unknown coefficient enters the first equation it influences affinely,
and we detect that influence numerically rather than symbolically.
"""

from __future__ import annotations

from .maps import FormalMap, conjugate, is_involution, map_compose, map_invert
from .normalform import Obstruction, Witness, verify_witness
from .scalars import ONE, ZERO, Scalar, rat, reverser_seeds, scalar
from .series import Series

I_UNIT = Scalar(0, 1)


def poly1(coeffs: dict, N: int) -> FormalMap:
    """One-variable map from {degree: coefficient}."""
    data = {}
    for d, v in coeffs.items():
        if 1 <= d <= N:
            v = scalar(v)
            if not v.is_zero():
                data[(d,)] = v
    return FormalMap([Series(1, N, data)])


def coeff(g: FormalMap, d: int) -> Scalar:
    return g.comps[0].coefficient((d,))


def multiplier(g: FormalMap) -> Scalar:
    return coeff(g, 1)


def lowest_nonlinear_degree(g: FormalMap):
    """Smallest degree >= 2 carrying a coefficient, or None."""
    degs = [e[0] for e in g.comps[0].coeffs if e[0] >= 2]
    return min(degs) if degs else None


def flip(N: int) -> FormalMap:
    """The linear involution t -> -t."""
    return poly1({1: -ONE}, N)


def quarter_turn(N: int) -> FormalMap:
    """The order-four linear map t -> i t."""
    return poly1({1: I_UNIT}, N)


def mobius(beta, N: int) -> FormalMap:
    """The homography t / (1 - beta t), truncated."""
    beta = scalar(beta)
    return poly1({d: beta ** (d - 1) for d in range(1, N + 1)}, N)


def theta_invariant(g: FormalMap) -> Scalar:
    """Additive cubic invariant on the multiplier +-1 group.

    For tangent maps this is g3 - g2^2; it adds under composition and
    scales by c^2 under conjugation by a map with multiplier c.  For
    multiplier -1 we remove a linear flip first.  The invariant vanishes
    on every involution, so it obstructs involution products; a tangent
    map with nonzero invariant can only be reversed by a multiplier of
    order four.
    """
    lam = multiplier(g)
    if lam == -ONE:
        g = map_compose(flip(g.trunc), g)
    elif lam != ONE:
        raise ValueError("invariant defined for multiplier 1 or -1 only")
    return coeff(g, 3) - coeff(g, 2) ** 2


# ---------------------------------------------------------------------------
# the degree-by-degree probe solver

def _solve_degreewise(build, nparams: int, N: int, start: int = 2):
    """Drive the coefficients of build(params) in degrees start..N to zero.

    build returns a one-variable Series.  Parameters start at zero; at
    each degree the first free parameter that moves the coefficient (and
    whose affine estimate actually clears it) is consumed.  Parameters
    never consumed stay zero -- in a staggered system those are genuine
    free choices.  The solved parameter list is re-verified at the end,
    so a non-None return is a checked solution.
    """
    params = [ZERO] * nparams
    free = list(range(nparams))
    for d in range(start, N + 1):
        base = build(params).coefficient((d,))
        if base.is_zero():
            continue
        solved = False
        # Highest index first: a parameter's first (affine) influence
        # degree grows with its index, so at degree d the genuine unknown
        # is the highest-indexed one that moves the coefficient.  Lower
        # indices only echo nonlinearly; the two-point probe rejects them.
        for idx in reversed(free):
            probe = list(params)
            probe[idx] = probe[idx] + ONE
            v1 = build(probe).coefficient((d,))
            slope = v1 - base
            if slope.is_zero():
                continue
            probe[idx] = probe[idx] + ONE
            if build(probe).coefficient((d,)) - v1 != slope:
                continue
            cand = list(params)
            cand[idx] = params[idx] - base / slope
            if build(cand).coefficient((d,)).is_zero():
                params = cand
                free.remove(idx)
                solved = True
                break
        if not solved:
            return Obstruction(
                d, 1, (d,), base, ZERO,
                "no free coefficient controls this degree",
            )
    final = build(params)
    for d in range(start, N + 1):
        v = final.coefficient((d,))
        if not v.is_zero():
            return Obstruction(d, 1, (d,), v, ZERO, "solution failed recheck")
    return params


def _dressing(c: Scalar, params, N: int) -> FormalMap:
    data = {1: c}
    for k, v in enumerate(params, start=2):
        data[k] = v
    return poly1(data, N)


def reverser_search(g: FormalMap, seeds=None):
    """Search for h with h^-1 g h = g^-1, one linear seed at a time.

    Seeds default to the twelfth roots of unity compatible with the
    lowest coefficient of g.  Returns a verified Witness or None.
    """
    N = g.trunc
    lam = multiplier(g)
    if seeds is None:
        if lam == ONE:
            d = lowest_nonlinear_degree(g)
            if d is None:
                return Witness("involutive_reverser", flip(N), N)
            seeds = reverser_seeds(d - 1)
        else:
            seeds = [c for c in (ONE, -ONE, I_UNIT, -I_UNIT)]
    ginv = map_invert(g)
    for c in seeds:
        c = scalar(c)

        def build(params, c=c):
            h = _dressing(c, params, N)
            return map_compose(g, h).comps[0] - map_compose(h, ginv).comps[0]

        sol = _solve_degreewise(build, N - 1, N)
        if isinstance(sol, Obstruction):
            continue
        h = _dressing(c, sol, N)
        kind = (
            "involutive_reverser"
            if map_compose(h, h).is_identity()
            else "reverser"
        )
        w = Witness(kind, h, N)
        if verify_witness(g, w):
            return w
    return None


def conjugate_to(g: FormalMap, target: FormalMap, c=ONE):
    """h with h^-1 o g o h == target (multiplier of h is c), or None."""
    N = g.trunc
    c = scalar(c)

    def build(params):
        h = _dressing(c, params, N)
        return map_compose(g, h).comps[0] - map_compose(h, target).comps[0]

    sol = _solve_degreewise(build, N - 1, N)
    if isinstance(sol, Obstruction):
        return None
    return _dressing(c, sol, N)


def mobius_witness(g: FormalMap):
    """Involutive reverser for a map conjugate to a standard homography.

    Conjugates g to t/(1 - g2 t) and pulls the exact linear reverser -t
    back through the conjugacy.  Returns a Witness, or None when the
    cubic invariant blocks the conjugacy (the solver hits the
    inconsistent degree on its own; no separate test is needed).
    """
    N = g.trunc
    s = conjugate_to(g, mobius(coeff(g, 2), N))
    if s is None:
        return None
    h = map_compose(map_compose(s, flip(N)), map_invert(s))
    w = Witness("involutive_reverser", h, N)
    return w if verify_witness(g, w) else None


# ---------------------------------------------------------------------------
# the order-four reversed family

_family_cache: dict = {}


def quarter_family(c, N: int) -> FormalMap:
    """The odd map with cubic coefficient c reversed exactly by t -> i t.

    Solved from the defining equation A o h = h o A^-1; even-degree
    slots are forced to zero, odd slots are determined (the quintic
    coefficient comes out as 3/2 c^2).  Deterministic and cached.
    """
    c = scalar(c)
    key = (c, N)
    if key in _family_cache:
        return _family_cache[key]
    h = quarter_turn(N)

    def build(params):
        data = {1: ONE, 3: c}
        deg = [d for d in range(2, N + 1) if d != 3]
        for d, v in zip(deg, params):
            data[d] = v
        A = poly1(data, N)
        return map_compose(A, h).comps[0] - map_compose(h, map_invert(A)).comps[0]

    sol = _solve_degreewise(build, N - 1 - (1 if N >= 3 else 0), N)
    if isinstance(sol, Obstruction):  # pragma: no cover - equation is consistent
        raise AssertionError(f"family equation failed: {sol.note}")
    data = {1: ONE, 3: c}
    deg = [d for d in range(2, N + 1) if d != 3]
    for d, v in zip(deg, sol):
        data[d] = v
    A = poly1(data, N)
    _family_cache[key] = A
    return A


def quarter_witness(N: int) -> Witness:
    return Witness("reverser", quarter_turn(N), N)


def _dress(F: FormalMap, v: FormalMap) -> FormalMap:
    """v o F o v^-1."""
    return map_compose(map_compose(v, F), map_invert(v))


def _dress_witness(w: Witness, v: FormalMap) -> Witness:
    return Witness(w.kind, _dress(w.h, v), w.checked_degree)


def _class_member(c3: Scalar, c4: Scalar, N: int):
    """The order-four reversed map with prescribed cubic and quartic
    coefficients, plus its witness.  A quadratic dress of the odd family
    tunes the quartic slot; the quintic coefficient is then forced."""
    A = quarter_family(c3, N)
    if c4.is_zero():
        return A, quarter_witness(N)
    v = poly1({1: ONE, 2: c4 / c3}, N)
    return _dress(A, v), _dress_witness(quarter_witness(N), v)


# ---------------------------------------------------------------------------
# splitting into at most two reversible factors

def _p1_split(g: FormalMap):
    """Quadratic-led tangent map as (homography class) o (order-four class)."""
    N = g.trunc
    beta = coeff(g, 2)
    f = mobius(beta, N)
    sdegs = list(range(3, N))

    def parts(params):
        A = quarter_family(params[0], N)
        s = _dressing(ONE, [ZERO] + list(params[1:]), N)
        return _dress(f, s), A, s

    def build(params):
        F, A, _ = parts(params)
        return g.comps[0] - map_compose(F, A).comps[0]

    sol = _solve_degreewise(build, 1 + len(sdegs), N)
    if isinstance(sol, Obstruction):  # pragma: no cover - always solvable
        raise AssertionError(f"quadratic-led split failed: {sol.note}")
    F, A, s = parts(sol)
    wF = Witness(
        "involutive_reverser",
        map_compose(map_compose(s, flip(N)), map_invert(s)),
        N,
    )
    out = []
    if not F.is_identity():
        out.append((F, wF))
    if not A.is_identity():
        out.append((A, quarter_witness(N)))
    return out


def _p2_split(g: FormalMap):
    """Cubic-led tangent map as a product of two order-four reversed maps.

    After flattening the quartic slot by a quadratic dress, the quintic
    defect delta fixes a conic y^2 = (delta/a) x (a - x) relating the
    cubic coefficients x, a - x and the shared quartic coefficient y of
    the two factors; the line y = s x sweeps out rational points, so no
    square roots are needed.
    """
    N = g.trunc
    a = coeff(g, 3)

    def dressed(params):
        q = poly1({1: ONE, 2: params[0]}, N)
        return conjugate(g, q), q

    def build(params):
        gt, _ = dressed(params)
        out = Series(1, N, {(4,): coeff(gt, 4)})
        return out

    sol = _solve_degreewise(build, 1, N, start=4)
    if isinstance(sol, Obstruction):  # pragma: no cover - slope is a != 0
        raise AssertionError("quartic flattening failed")
    gt, q = dressed(sol)
    delta = coeff(gt, 5) - rat(3, 2) * a * a
    if delta.is_zero():
        x, y = 2 * a, ZERO
    else:
        s = ONE
        if (a * s * s + delta).is_zero():
            s = scalar(2)
        x = delta * a / (a * s * s + delta)
        y = s * x
    F, wF = _class_member(x, y, N)
    G = map_compose(map_invert(F), gt)
    wG = reverser_search(G, seeds=(I_UNIT, -I_UNIT))
    if wG is None:  # pragma: no cover - invariant bookkeeping guarantees it
        raise AssertionError("cofactor left the order-four class")
    return [(_dress(F, q), _dress_witness(wF, q)),
            (_dress(G, q), _dress_witness(wG, q))]


def _shift_split(g: FormalMap):
    """Tangent map with no quadratic or cubic term: shift by the standard
    homography; the cofactor inherits a zero cubic invariant and lands in
    the homography class."""
    N = g.trunc
    F = mobius(ONE, N)
    G = map_compose(map_invert(F), g)
    wG = mobius_witness(G)
    if wG is None:  # pragma: no cover - invariant is additive
        raise AssertionError("shift cofactor lost the homography class")
    return [(F, Witness("involutive_reverser", flip(N), N)), (G, wG)]


def split_reversibles(g: FormalMap, seeds=None):
    """A one-variable map with multiplier +-1 as at most two reversible
    factors, each with a verified reversing witness.

    Returns a list of (factor, Witness) pairs whose left-to-right
    composition is exactly g.  ``seeds`` overrides the linear seeds the
    reverser search tries first.
    """
    N = g.trunc
    lam = multiplier(g)
    if lam == ONE:
        if g.is_identity():
            return []
        d = lowest_nonlinear_degree(g)
        p = d - 1
        if p == 1:
            w = mobius_witness(g)
            if w is not None:
                return [(g, w)]
            out = _p1_split(g)
        elif p == 2:
            w = reverser_search(g, seeds=seeds or (I_UNIT, -I_UNIT))
            out = [(g, w)] if w is not None else _p2_split(g)
        else:
            w = reverser_search(g, seeds=seeds)
            out = [(g, w)] if w is not None else _shift_split(g)
    elif lam == -ONE:
        if is_involution(g):
            return [(g, Witness("involution_self", g, N))]
        w = reverser_search(g, seeds=seeds)
        if w is not None:
            out = [(g, w)]
        else:
            out = _flip_split(g)
    else:
        raise ValueError("one-variable splitter needs multiplier 1 or -1")
    prod = FormalMap.identity(1, N)
    for m, _ in out:
        prod = map_compose(prod, m)
    if prod != g:  # pragma: no cover - each branch is exact
        raise AssertionError("one-variable split failed to recompose")
    return out


def _flip_split(g: FormalMap):
    """Multiplier -1, not reversible on its own: peel an order-four
    reversed factor carrying the full cubic invariant; the cofactor is
    tangent with invariant zero and a tuned quadratic term, hence in the
    homography class."""
    N = g.trunc
    c = theta_invariant(g)
    u2 = ZERO if not coeff(g, 2).is_zero() else rat(1, 2)
    for _ in range(3):
        u = poly1({1: ONE, 2: u2}, N)
        core = map_compose(flip(N), quarter_family(c, N))
        R = _dress(core, u)
        B = map_compose(map_invert(R), g)
        if B.is_identity() or not coeff(B, 2).is_zero():
            break
        u2 = u2 + ONE
    if is_involution(R):
        wR = Witness("involution_self", R, N)
    else:
        wR = _dress_witness(quarter_witness(N), u)
        if not verify_witness(R, wR):  # pragma: no cover
            raise AssertionError("flip factor lost its witness")
    if B.is_identity():
        return [(R, wR)]
    wB = mobius_witness(B)
    if wB is None:  # pragma: no cover - invariant was transferred to R
        raise AssertionError("flip cofactor lost the homography class")
    return [(R, wR), (B, wB)]


# ---------------------------------------------------------------------------
# splitting into involutions

def involution_pair(X: FormalMap, w: Witness):
    """Split a map with an involutive reversing witness into two
    involutions: X = (X o h) o h."""
    if w.kind not in ("involutive_reverser", "involution_self"):
        raise ValueError("need an involutive witness to pair-split")
    h = w.h
    I1 = map_compose(X, h)
    if not (is_involution(I1) and is_involution(h)):
        raise AssertionError("pair split produced a non-involution")
    return [I1, h]


def split_involutions(g: FormalMap):
    """A tangent one-variable map as at most four exact involutions.

    The additive cubic invariant vanishes on involutions, so a map with
    nonzero invariant admits no such product; that case is returned as
    an Obstruction rather than an answer.
    """
    N = g.trunc
    if g.is_identity():
        return []
    if multiplier(g) != ONE:
        raise ValueError("involution splitter expects a tangent map")
    th = theta_invariant(g)
    if not th.is_zero():
        return Obstruction(
            3, 1, (3,), th, ZERO,
            "additive cubic invariant obstructs an involution product",
        )
    d = lowest_nonlinear_degree(g)
    if d == 2:
        w = mobius_witness(g)
        if w is None:  # pragma: no cover - invariant vanishes
            raise AssertionError("homography conjugacy failed")
        return involution_pair(g, w)
    parts = _shift_split(g)
    out = []
    for m, w in parts:
        out += involution_pair(m, w)
    prod = FormalMap.identity(1, N)
    for m in out:
        prod = map_compose(prod, m)
    if prod != g:  # pragma: no cover
        raise AssertionError("involution split failed to recompose")
    return out
