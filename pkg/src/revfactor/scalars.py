"""Exact arithmetic in the degree-4 field Q(i, r3).

Every coefficient in this package lives in the fixed field Q(i, sqrt(3)),
represented as a 4-dimensional vector space over Q with basis

    1,  i,  r3 = sqrt(3),  i*r3.

The field contains exactly the 12th roots of unity (it is the 12th
cyclotomic field), which is what the factorization pipelines need for
reverser seeds; nothing here ever falls back to floating point.

Rationals are gmpy2.mpq when gmpy2 is importable, fractions.Fraction
otherwise.  Both are exact and interoperate with int transparently.
"""

from __future__ import annotations

import math

try:
    from gmpy2 import mpq as Rat
except ImportError:  # pragma: no cover - exercised only without gmpy2
    from fractions import Fraction as Rat

from fractions import Fraction

_RAT_TYPES = (int, Fraction, type(Rat(0)))

_R0 = Rat(0)
_R1 = Rat(1)


class FieldExtensionError(ValueError):
    """Raised when a result would leave Q(i, r3)."""


def rat(p, q=1):
    """Build an exact rational."""
    return Rat(p, q)


def _is_rat(x) -> bool:
    return isinstance(x, _RAT_TYPES)


def _rat_sqrt(r):
    """Exact square root of a nonnegative rational, or None."""
    if r < 0:
        return None
    if r == 0:
        return _R0
    p, q = r.numerator, r.denominator
    sp, sq = math.isqrt(int(p)), math.isqrt(int(q))
    if sp * sp == p and sq * sq == q:
        return Rat(sp, sq)
    return None


def _qi_sqrt(p, q):
    """Square root of p + q*i inside Q(i), as a (re, im) pair, or None.

    Solving (u + v*i)^2 = p + q*i needs u^2 = (p + n)/2 with
    n = sqrt(p^2 + q^2); the root exists in Q(i) iff n and then u are
    rational, with v = q/(2u).
    """
    if q == 0:
        s = _rat_sqrt(p)
        if s is not None:
            return (s, _R0)
        s = _rat_sqrt(-p)
        if s is not None:
            return (_R0, s)
        return None
    n = _rat_sqrt(p * p + q * q)
    if n is None:
        return None
    u = _rat_sqrt((p + n) / 2)
    if u is None or u == 0:
        return None
    v = q / (2 * u)
    return (u, v)


class Scalar:
    """An element a + b*i + c*r3 + d*i*r3 of Q(i, r3).

    Parameters
    ----------
    a, b, c, d :
        Rational coordinates with respect to the basis (1, i, r3, i*r3).
        Anything accepted by the rational constructor works.

    Notes
    -----
    Instances are immutable and normalized (the rational type keeps
    numerator/denominator reduced), so equality and hashing are structural.
    Arithmetic with plain ints, Fractions and mpq values is supported and
    produces Scalars.
    """

    __slots__ = ("a", "b", "c", "d", "_rational")

    def __init__(self, a=0, b=0, c=0, d=0):
        object.__setattr__(self, "a", Rat(a))
        object.__setattr__(self, "b", Rat(b))
        object.__setattr__(self, "c", Rat(c))
        object.__setattr__(self, "d", Rat(d))
        object.__setattr__(
            self, "_rational", self.b == 0 and self.c == 0 and self.d == 0
        )

    @classmethod
    def _new(cls, a, b, c, d):
        # internal fast path: trusts that the arguments are already Rat
        self = object.__new__(cls)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "_rational", b == 0 and c == 0 and d == 0)
        return self

    def __setattr__(self, name, value):
        raise AttributeError("Scalar is immutable")

    # -- predicates ----------------------------------------------------

    def is_zero(self) -> bool:
        return self.a == 0 and self._rational

    def is_one(self) -> bool:
        return self.a == 1 and self._rational

    def is_rational(self) -> bool:
        return self._rational

    def rational(self):
        """Return self as a bare rational; raises if the imaginary or
        radical parts are nonzero."""
        if not self._rational:
            raise FieldExtensionError(f"{self} is not rational")
        return self.a

    # -- arithmetic ----------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Scalar):
            return other
        if _is_rat(other):
            return Scalar._new(Rat(other), _R0, _R0, _R0)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Scalar._new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Scalar._new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Scalar._new(-self.a, -self.b, -self.c, -self.d)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self._rational:
            r = self.a
            return Scalar._new(r * o.a, r * o.b, r * o.c, r * o.d)
        if o._rational:
            r = o.a
            return Scalar._new(self.a * r, self.b * r, self.c * r, self.d * r)
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = o.a, o.b, o.c, o.d
        # (a+bi+cr+dir)(e+fi+gr+hir) with i^2=-1, r^2=3
        return Scalar._new(
            a * e - b * f + 3 * (c * g - d * h),
            a * f + b * e + 3 * (c * h + d * g),
            a * g + c * e - b * h - d * f,
            a * h + d * e + b * g + c * f,
        )

    __rmul__ = __mul__

    def conj_i(self) -> "Scalar":
        """Galois conjugate sending i to -i."""
        return Scalar._new(self.a, -self.b, self.c, -self.d)

    def conj_r3(self) -> "Scalar":
        """Galois conjugate sending r3 to -r3."""
        return Scalar._new(self.a, self.b, -self.c, -self.d)

    def inverse(self) -> "Scalar":
        """Multiplicative inverse via the field norm.

        The product of all four Galois conjugates is rational, so the
        inverse is (product of the other three conjugates) / norm.
        """
        if self.is_zero():
            raise ZeroDivisionError("inverse of 0 in Q(i, r3)")
        if self._rational:
            return Scalar._new(_R1 / self.a, _R0, _R0, _R0)
        g1 = self.conj_i()
        g2 = self.conj_r3()
        g3 = g1.conj_r3()
        num = g1 * g2 * g3
        norm = (self * num).rational()
        inv_norm = _R1 / norm
        return Scalar._new(
            num.a * inv_norm, num.b * inv_norm, num.c * inv_norm, num.d * inv_norm
        )

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o._rational:
            if o.a == 0:
                raise ZeroDivisionError("division by 0 in Q(i, r3)")
            r = _R1 / o.a
            return Scalar._new(self.a * r, self.b * r, self.c * r, self.d * r)
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- comparison ----------------------------------------------------

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.a == o.a and self.b == o.b and self.c == o.c and self.d == o.d

    def __hash__(self):
        if self._rational:
            return hash(self.a)
        return hash((self.a, self.b, self.c, self.d))

    # -- conversion ----------------------------------------------------

    def __repr__(self):
        return f"Scalar({format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)

    def __complex__(self):
        r3 = math.sqrt(3.0)
        return complex(
            float(Fraction(self.a.numerator, self.a.denominator))
            + r3 * float(Fraction(self.c.numerator, self.c.denominator)),
            float(Fraction(self.b.numerator, self.b.denominator))
            + r3 * float(Fraction(self.d.numerator, self.d.denominator)),
        )

    # -- roots ---------------------------------------------------------

    def sqrt(self):
        """An exact square root in Q(i, r3), or None if there is none.

        Writes self as A + B*r3 with A, B in Q(i) and reduces to square
        roots in Q(i).  The returned root is sign-normalized so that its
        first nonzero coordinate is positive.
        """
        if self.is_zero():
            return ZERO
        A = (self.a, self.b)
        B = (self.c, self.d)
        root = None
        if B == (0, 0):
            z = _qi_sqrt(*A)
            if z is not None:
                root = Scalar._new(z[0], z[1], _R0, _R0)
            else:
                # maybe the root has the shape beta*r3 with beta in Q(i)
                z = _qi_sqrt(A[0] / 3, A[1] / 3)
                if z is not None:
                    root = Scalar._new(_R0, _R0, z[0], z[1])
        else:
            # alpha^2 + 3 beta^2 = A and 2 alpha beta = B force alpha^2 to
            # satisfy 4 s^2 - 4 A s + 3 B^2 = 0 over Q(i).
            Da = A[0] * A[0] - A[1] * A[1] - 3 * (B[0] * B[0] - B[1] * B[1])
            Db = 2 * A[0] * A[1] - 6 * B[0] * B[1]
            w = _qi_sqrt(Da, Db)
            if w is not None:
                for sgn in (1, -1):
                    sa = (A[0] + sgn * w[0]) / 2
                    sb = (A[1] + sgn * w[1]) / 2
                    alpha = _qi_sqrt(sa, sb)
                    if alpha is None or alpha == (0, 0):
                        continue
                    # beta = B / (2 alpha) in Q(i)
                    den = 2 * (alpha[0] * alpha[0] + alpha[1] * alpha[1])
                    br = (B[0] * alpha[0] + B[1] * alpha[1]) / den
                    bi = (B[1] * alpha[0] - B[0] * alpha[1]) / den
                    cand = Scalar._new(alpha[0], alpha[1], br, bi)
                    if cand * cand == self:
                        root = cand
                        break
        if root is None:
            return None
        for coord in (root.a, root.b, root.c, root.d):
            if coord > 0:
                return root
            if coord < 0:
                return -root
        return root


ZERO = Scalar(0)
ONE = Scalar(1)
I = Scalar(0, 1)
R3 = Scalar(0, 0, 1)


def scalar(x) -> Scalar:
    """Coerce a rational-like or Scalar to Scalar."""
    if isinstance(x, Scalar):
        return x
    return Scalar(x)


# ---------------------------------------------------------------------------
# roots of unity

# zeta = (r3 + i)/2 is a primitive 12th root of unity; the field contains
# exactly the 12th roots and no others.
ZETA12 = Scalar(0, Rat(1, 2), Rat(1, 2), 0)

TWELFTH_ROOTS = tuple(ZETA12**k for k in range(12))


def root_of_unity_order(x: Scalar):
    """The multiplicative order of x if it is a root of unity, else None."""
    if not isinstance(x, Scalar):
        x = scalar(x)
    if x.is_zero():
        return None
    p = x
    for d in range(1, 13):
        if p.is_one():
            return d
        p = p * x
    return None


def is_root_of_unity(x: Scalar) -> bool:
    return root_of_unity_order(x) is not None


def reverser_seeds(p: int):
    """All 12th roots of unity c with c**p == -1, in a fixed order.

    These are the admissible linear parts for a reverser of a 1-variable
    map t + a*t**(p+1) + ...; for p divisible by 4 the list is empty
    because the needed roots live outside Q(i, r3).
    """
    minus_one = -ONE
    return [c for c in TWELFTH_ROOTS if c**p == minus_one]


# ---------------------------------------------------------------------------
# parsing and printing

_UNITS = {"": (0,), "i": (1,), "r3": (2,), "i*r3": (3,)}
_UNIT_NAMES = ("", "i", "r3", "i*r3")


class ScalarFormatError(ValueError):
    """Raised for malformed scalar text."""


def _format_rat(r) -> str:
    return str(r)


def format_scalar(x: Scalar) -> str:
    """Canonical text form: terms in basis order 1, i, r3, i*r3.

    Examples: ``1/2``, ``-1/2*i``, ``1 + 1*i``, ``-3/6 + 1/6*r3``  (the
    last would of course print reduced as ``-1/2 + 1/6*r3``).
    """
    parts = []
    for coord, unit in zip((x.a, x.b, x.c, x.d), _UNIT_NAMES):
        if coord == 0:
            continue
        body = _format_rat(coord if coord > 0 else -coord)
        if unit:
            body += "*" + unit
        parts.append(("-" if coord < 0 else "+", body))
    if not parts:
        return "0"
    sign, body = parts[0]
    out = ("-" if sign == "-" else "") + body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def _parse_term(term: str):
    pieces = [p.strip() for p in term.split("*")]
    if not pieces or not pieces[0]:
        raise ScalarFormatError(f"empty term in scalar: {term!r}")
    head = pieces[0]
    if head in ("i", "r3"):
        coeff = _R1
        units = pieces
    else:
        try:
            coeff = Rat(head)
        except (ValueError, ZeroDivisionError) as exc:
            raise ScalarFormatError(f"bad rational {head!r}") from exc
        units = pieces[1:]
    unit = "*".join(units)
    if unit not in ("", "i", "r3", "i*r3", "r3*i"):
        raise ScalarFormatError(f"unknown unit {unit!r} in term {term!r}")
    idx = {"": 0, "i": 1, "r3": 2, "i*r3": 3, "r3*i": 3}[unit]
    return idx, coeff


def parse_scalar(text: str) -> Scalar:
    """Parse the textual scalar format.

    Accepts sums of terms ``p/q``, ``p/q*i``, ``p/q*r3``, ``p/q*i*r3``
    joined by + and -; bare ``i`` and ``r3`` are allowed as terms.
    """
    s = text.strip()
    if not s:
        raise ScalarFormatError("empty scalar text")
    coords = [_R0, _R0, _R0, _R0]
    # split into signed terms at top level
    terms = []
    sign = 1
    cur = ""
    for ch in s:
        if ch in "+-" and cur.strip():
            terms.append((sign, cur.strip()))
            sign = 1 if ch == "+" else -1
            cur = ""
        elif ch in "+-" and not cur.strip():
            # leading sign of the next (or first) term
            if ch == "-":
                sign = -sign
        else:
            cur += ch
    if cur.strip():
        terms.append((sign, cur.strip()))
    elif not terms:
        raise ScalarFormatError(f"no terms in scalar {text!r}")
    for sg, term in terms:
        idx, coeff = _parse_term(term)
        coords[idx] += sg * coeff
    return Scalar(*coords)


# ---------------------------------------------------------------------------
# quadratics

def scalar_arith(op: str, x, y) -> Scalar:
    """Tiny dispatch wrapper (used by the CLI): op in +, -, *, /."""
    x, y = scalar(x), scalar(y)
    if op == "+":
        return x + y
    if op == "-":
        return x - y
    if op == "*":
        return x * y
    if op == "/":
        return x / y
    raise ValueError(f"unknown op {op!r}")


def solve_quadratic(a, b, c):
    """Exact roots of a*x^2 + b*x + c = 0 over Q(i, r3).

    Returns the pair ((-b + s)/(2a), (-b - s)/(2a)) where s is the
    sign-normalized square root of the discriminant.  Raises
    FieldExtensionError when the discriminant has no square root in the
    field, naming the discriminant in the message.
    """
    a, b, c = scalar(a), scalar(b), scalar(c)
    if a.is_zero():
        raise ValueError("leading coefficient is zero; not a quadratic")
    disc = b * b - 4 * a * c
    s = disc.sqrt()
    if s is None:
        raise FieldExtensionError(
            f"field extension required: discriminant {format_scalar(disc)} "
            "has no square root in Q(i, r3)"
        )
    inv2a = (2 * a).inverse()
    return ((-b + s) * inv2a, (-b - s) * inv2a)
