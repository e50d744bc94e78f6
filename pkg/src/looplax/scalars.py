"""Scalar backends for series coefficients.

Three backends are supported throughout the package:

* :class:`GaussianRational` -- exact elements of Q(i), used for frames and
  exact dressing computations.
* Python ``complex`` -- the numeric backend used by the factorization solver.
* :class:`DiffPoly` -- a differential polynomial ring: Q(i)-linear
  combinations of monomials in derivative-indexed indeterminates, with a
  commuting family of derivations indexed by :class:`DerivationSymbol`.

All three coerce against plain ``int`` and :class:`fractions.Fraction`, so
matrix code can seed accumulators with ``0`` and identity entries with ``1``
without knowing the backend.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, NamedTuple

from .errors import ResourceExceeded, UnboundDerivative

__all__ = [
    "GaussianRational",
    "I",
    "DerivationSymbol",
    "Indeterminate",
    "DiffPoly",
    "encode_scalar",
    "decode_scalar",
    "set_term_cap",
    "get_term_cap",
]


# ---------------------------------------------------------------------------
# Gaussian rationals
# ---------------------------------------------------------------------------

class GaussianRational:
    """An exact element ``re + i*im`` of Q(i), with ``i**2 == -1``.

    Immutable and hashable.  Arithmetic coerces ``int`` and ``Fraction``
    operands; everything else is left to the other operand's reflected
    methods (which is how :class:`DiffPoly` absorbs these values).
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    # -- coercion ----------------------------------------------------------

    @staticmethod
    def _coerce(x):
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Fraction)):
            return GaussianRational(x)
        return None

    # -- ring structure ----------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )

    __rmul__ = __mul__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def inverse(self) -> "GaussianRational":
        d = self.re * self.re + self.im * self.im
        if d == 0:
            raise ZeroDivisionError("inverse of zero in Q(i)")
        return GaussianRational(self.re / d, -self.im / d)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out = GaussianRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    # -- comparisons and conversions ----------------------------------------

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        # Matches hash(Fraction) on the real axis so GR(2) == 2 hashes alike.
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def __repr__(self):
        return f"GaussianRational({self.re!r}, {self.im!r})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"

    # -- JSON ----------------------------------------------------------------

    def to_obj(self):
        return [str(self.re), str(self.im)]

    @classmethod
    def from_obj(cls, obj) -> "GaussianRational":
        re, im = obj
        return cls(Fraction(re), Fraction(im))


#: The imaginary unit of Q(i).
I = GaussianRational(0, 1)


# ---------------------------------------------------------------------------
# Derivation symbols and indeterminates
# ---------------------------------------------------------------------------

class DerivationSymbol(NamedTuple):
    """The derivation attached to the flow of degree ``m`` and frame index
    ``alpha``.  Symbols are totally ordered by ``(m, alpha)`` and commute
    pairwise as derivations."""

    m: int
    alpha: int

    def __str__(self):
        return f"d({self.m},{self.alpha})"

    def key(self) -> str:
        return f"{self.m},{self.alpha}"

    @classmethod
    def parse(cls, text: str) -> "DerivationSymbol":
        m, alpha = text.split(",")
        return cls(int(m), int(alpha))


class Indeterminate(NamedTuple):
    """A named generator carrying a derivative multi-index.

    ``derivs`` is a sorted tuple of ``(DerivationSymbol, count)`` pairs; the
    indeterminate represents the formal derivative of ``name`` by those
    symbols.  Each distinct multi-index is a first-class generator, so no
    rewriting beyond multi-index bookkeeping ever happens.
    """

    name: str
    derivs: tuple = ()

    def derived(self, sym: DerivationSymbol) -> "Indeterminate":
        d = dict(self.derivs)
        d[sym] = d.get(sym, 0) + 1
        return Indeterminate(self.name, tuple(sorted(d.items())))

    def order(self) -> int:
        return sum(c for _, c in self.derivs)

    def __str__(self):
        if not self.derivs:
            return self.name
        parts = []
        for sym, c in self.derivs:
            parts.append(str(sym) if c == 1 else f"{sym}^{c}")
        return "".join(parts) + f"[{self.name}]"

    def to_obj(self):
        return [self.name, [[s.key(), c] for s, c in self.derivs]]

    @classmethod
    def from_obj(cls, obj) -> "Indeterminate":
        name, derivs = obj
        return cls(
            name,
            tuple(sorted((DerivationSymbol.parse(k), int(c)) for k, c in derivs)),
        )


# Monomials are sorted tuples of (Indeterminate, power) with power >= 1.
Monomial = tuple

_ONE_MONO: Monomial = ()

_TERM_CAP = 10**6


def set_term_cap(cap: int) -> None:
    """Set the global expanded-term cap for DiffPoly products."""
    global _TERM_CAP
    _TERM_CAP = int(cap)


def get_term_cap() -> int:
    return _TERM_CAP


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for ind, p in b:
        d[ind] = d.get(ind, 0) + p
    return tuple(sorted(d.items()))


# ---------------------------------------------------------------------------
# Differential polynomials
# ---------------------------------------------------------------------------

class DiffPoly:
    """Element of the differential polynomial ring over Q(i).

    The canonical form is a mapping from monomials to nonzero
    :class:`GaussianRational` coefficients; two polynomials are equal iff the
    mappings are.  Every :class:`DerivationSymbol` acts as a derivation
    (Leibniz rule), and any two derivations commute on every element.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, GaussianRational] | None = None):
        cleaned = {}
        if terms:
            for mono, coef in terms.items():
                c = GaussianRational._coerce(coef)
                if c is None:
                    raise TypeError(f"bad coefficient {coef!r}")
                if c:
                    cleaned[mono] = c
        self._terms = cleaned

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, c) -> "DiffPoly":
        return cls({_ONE_MONO: c})

    @classmethod
    def indeterminate(cls, name: str, *syms: DerivationSymbol) -> "DiffPoly":
        ind = Indeterminate(name)
        for s in syms:
            ind = ind.derived(s)
        return cls({((ind, 1),): GaussianRational(1)})

    @classmethod
    def zero(cls) -> "DiffPoly":
        return cls()

    @classmethod
    def one(cls) -> "DiffPoly":
        return cls.constant(1)

    # -- queries ---------------------------------------------------------------

    @property
    def terms(self):
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == _ONE_MONO for m in self._terms)

    def constant_value(self) -> GaussianRational:
        if not self.is_constant():
            raise ValueError("not a constant polynomial")
        return self._terms.get(_ONE_MONO, GaussianRational(0))

    def indeterminates(self) -> set:
        out = set()
        for mono in self._terms:
            for ind, _ in mono:
                out.add(ind)
        return out

    # -- coercion ----------------------------------------------------------------

    @staticmethod
    def _coerce(x):
        if isinstance(x, DiffPoly):
            return x
        c = GaussianRational._coerce(x)
        if c is not None:
            return DiffPoly.constant(c)
        return None

    # -- ring structure -------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self._terms)
        for mono, coef in o._terms.items():
            s = out.get(mono, GaussianRational(0)) + coef
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        p = DiffPoly.__new__(DiffPoly)
        p._terms = out
        return p

    __radd__ = __add__

    def __neg__(self):
        p = DiffPoly.__new__(DiffPoly)
        p._terms = {m: -c for m, c in self._terms.items()}
        return p

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if len(self._terms) * len(o._terms) > _TERM_CAP:
            raise ResourceExceeded(
                f"product would expand {len(self._terms)}x{len(o._terms)} terms"
            )
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in o._terms.items():
                mono = _mono_mul(m1, m2)
                c = c1 * c2
                s = out.get(mono)
                s = c if s is None else s + c
                if s:
                    out[mono] = s
                else:
                    out.pop(mono, None)
        if len(out) > _TERM_CAP:
            raise ResourceExceeded(f"result has {len(out)} terms")
        p = DiffPoly.__new__(DiffPoly)
        p._terms = out
        return p

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = DiffPoly.one()
        for _ in range(k):
            out = out * self
        return out

    def inverse(self) -> "DiffPoly":
        """Reciprocal; defined only for nonzero constants (the units)."""
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero polynomial")
        if not self.is_constant():
            raise ValueError("only constant polynomials are invertible")
        return DiffPoly.constant(self.constant_value().inverse())

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    # -- derivations ---------------------------------------------------------------

    def derive(self, sym: DerivationSymbol) -> "DiffPoly":
        """Apply the derivation ``sym`` (Leibniz rule on every monomial)."""
        out = DiffPoly.zero()
        for mono, coef in self._terms.items():
            factors = list(mono)
            for idx, (ind, power) in enumerate(factors):
                rest = factors[:idx] + factors[idx + 1 :]
                if power > 1:
                    rest = rest + [(ind, power - 1)]
                base = tuple(sorted(rest))
                dmono = _mono_mul(base, ((ind.derived(sym), 1),))
                out = out + DiffPoly({dmono: coef * power})
        return out

    def substitute(self, bindings: Mapping[Indeterminate, "DiffPoly"]) -> "DiffPoly":
        """Simultaneous substitution followed by canonicalization.

        A derivative indeterminate with no direct binding is resolved by
        differentiating the binding of its bare name.  If the bare name is
        bound only in some other derived form, :class:`UnboundDerivative`
        is raised; names untouched by the bindings map to themselves.
        """
        bindings = {k: DiffPoly._coerce(v) for k, v in bindings.items()}
        bound_names = {ind.name for ind in bindings}
        cache: dict = {}

        def resolve(ind: Indeterminate) -> DiffPoly:
            if ind in cache:
                return cache[ind]
            if ind in bindings:
                val = bindings[ind]
            elif ind.name not in bound_names:
                val = DiffPoly({((ind, 1),): GaussianRational(1)})
            else:
                base = Indeterminate(ind.name)
                if base not in bindings:
                    raise UnboundDerivative(
                        f"no binding for {ind} and no base binding for {ind.name}"
                    )
                val = bindings[base]
                for sym, count in ind.derivs:
                    for _ in range(count):
                        val = val.derive(sym)
            cache[ind] = val
            return val

        out = DiffPoly.zero()
        for mono, coef in self._terms.items():
            term = DiffPoly.constant(coef)
            for ind, power in mono:
                term = term * resolve(ind) ** power
            out = out + term
        return out

    # -- comparisons ---------------------------------------------------------------

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._terms == o._terms

    __hash__ = None

    def __bool__(self):
        return bool(self._terms)

    # -- display and JSON ------------------------------------------------------------

    def _sorted_terms(self):
        return sorted(self._terms.items(), key=lambda kv: kv[0])

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono, coef in self._sorted_terms():
            factors = []
            for ind, power in mono:
                factors.append(str(ind) if power == 1 else f"{ind}^{power}")
            body = "*".join(factors)
            if not body:
                parts.append(str(coef))
            elif coef == 1:
                parts.append(body)
            elif coef == -1:
                parts.append(f"-{body}")
            else:
                parts.append(f"({coef})*{body}")
        return " + ".join(parts)

    __repr__ = __str__

    def to_obj(self):
        terms = []
        for mono, coef in self._sorted_terms():
            factors = []
            for ind, power in mono:
                factors.extend([ind.to_obj()] * power)
            terms.append({"coef": coef.to_obj(), "mono": factors})
        return {"sum": terms}

    @classmethod
    def from_obj(cls, obj) -> "DiffPoly":
        out = cls.zero()
        for term in obj["sum"]:
            coef = GaussianRational.from_obj(term["coef"])
            mono: dict = {}
            for fac in term["mono"]:
                ind = Indeterminate.from_obj(fac)
                mono[ind] = mono.get(ind, 0) + 1
            out = out + cls({tuple(sorted(mono.items())): coef})
        return out


# ---------------------------------------------------------------------------
# Backend-generic scalar JSON encoding
# ---------------------------------------------------------------------------

def encode_scalar(x):
    """Encode a backend scalar for JSON: Q(i) as ["p/q","p/q"], complex as
    [re, im] floats, DiffPoly as its expression tree."""
    if isinstance(x, GaussianRational):
        return x.to_obj()
    if isinstance(x, DiffPoly):
        return x.to_obj()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (int, float)):
        return [float(x), 0.0]
    if isinstance(x, Fraction):
        return GaussianRational(x).to_obj()
    raise TypeError(f"cannot encode scalar {x!r}")


def decode_scalar(obj, backend: str):
    """Inverse of :func:`encode_scalar` for a named backend
    ("rational" | "complex" | "diffpoly")."""
    if backend == "rational":
        return GaussianRational.from_obj(obj)
    if backend == "complex":
        return complex(obj[0], obj[1])
    if backend == "diffpoly":
        return DiffPoly.from_obj(obj)
    raise ValueError(f"unknown backend {backend!r}")
