"""Formal Steinberg-symbol sums over exact function data.

A SymbolSum is a Z-linear combination of pairs {left, right}.  Each side
is an Entry: a product of lazy constants (exact rationals or exact
torsion-point evaluations) and at most one sigma-product function.
Composite entries stay composite; normal_form expands them bilinearly,
orients each atomic pair by a canonical key using antisymmetry, and
merges coefficients, which is what structural comparisons run on.

Tame certificates: for a function pair with vanishing orders m, n at P
the tame value is (-1)^(m n) lead(left)^n lead(right)^(-m); order-(0,0)
pairs contribute the exact integer 1 without touching numerics.  For
the assembled Euler-system sums every tame value must be a root of
unity, so the certified claim is modulus one within tolerance, with the
root-of-unity order reported as a bounded diagnostic.
"""

from __future__ import annotations

from math import lcm

import mpmath as mp

from .analytic import AnalyticLattice
from .divisors import (
    ConstAtom,
    Divisor,
    EllFunction,
    build_g_a,
    build_g_l,
    build_s_point,
    build_t_gamma,
)
from .qfield import QuadField, QuadIdeal, ResidueRing
from .torsion import (
    TorsionPoint,
    TorsionSystem,
    division_point,
    torsion_of_integer,
)


class Entry:
    """Multiplicative side of a symbol: const atoms times an optional function."""

    __slots__ = ("consts", "fn")

    def __init__(self, consts: tuple = (), fn=None):
        self.consts = tuple(consts)
        self.fn = fn
        assert self.consts or self.fn is not None, "empty entry"

    @staticmethod
    def of_fn(fn) -> "Entry":
        return Entry((), fn)

    @staticmethod
    def of_const(atom: ConstAtom) -> "Entry":
        return Entry((atom,), None)

    def order_at(self, P: TorsionPoint) -> int:
        return self.fn.order_at(P) if self.fn is not None else 0

    def leading_at(self, lat: AnalyticLattice, P: TorsionPoint):
        with lat.context():
            out = mp.mpc(1)
            for atom in self.consts:
                out = out * atom.evaluate(lat)
            if self.fn is not None:
                out = out * self.fn.leading_at(lat, P)
            return out

    def support(self):
        return self.fn.divisor.support() if self.fn is not None else []

    def signature(self) -> tuple:
        return (tuple(sorted(a.signature() for a in self.consts)),
                self.fn.signature() if self.fn is not None else None)

    def map_points(self, pm) -> "Entry":
        return Entry(tuple(_map_atom(a, pm) for a in self.consts),
                     _map_fn(self.fn, pm) if self.fn is not None else None)

    def __eq__(self, other):
        return isinstance(other, Entry) and other.signature() == self.signature()

    def __hash__(self):
        return hash(self.signature())

    def __repr__(self):
        bits = [repr(a) for a in self.consts]
        if self.fn is not None:
            bits.append(repr(self.fn))
        return "*".join(bits)


def _map_fn(fn: EllFunction, pm) -> EllFunction:
    D = Divisor(fn.field, {pm(P): m for P, m in fn.divisor.points.items()})
    extra = tuple(_map_atom(a, pm) for a in fn.extra)
    return EllFunction.from_divisor(D, extra=extra)


def _map_atom(atom: ConstAtom, pm) -> ConstAtom:
    if atom.fn is None:
        return atom  # exact rationals and tagged lazies carry no torsion data
    return ConstAtom(fn=_map_fn(atom.fn, pm), point=pm(atom.point),
                     exponent=atom.exponent)


class SymbolSum:
    """Integer combination of {Entry, Entry} pairs with level metadata."""

    def __init__(self, field: QuadField, terms, meta: dict | None = None):
        self.field = field
        self.terms = tuple((int(c), L, R) for c, L, R in terms if c != 0)
        self.meta = dict(meta or {})

    def __add__(self, other: "SymbolSum") -> "SymbolSum":
        assert other.field == self.field
        return SymbolSum(self.field, self.terms + other.terms, self.meta)

    def scale(self, k: int) -> "SymbolSum":
        return SymbolSum(self.field, [(k * c, L, R) for c, L, R in self.terms], self.meta)

    def __sub__(self, other: "SymbolSum") -> "SymbolSum":
        return self + other.scale(-1)

    def map_points(self, pm) -> "SymbolSum":
        return SymbolSum(self.field,
                         [(c, L.map_points(pm), R.map_points(pm)) for c, L, R in self.terms],
                         self.meta)

    def support_points(self) -> list[TorsionPoint]:
        seen = set()
        for _c, L, R in self.terms:
            for side in (L, R):
                seen.update(side.support())
        return sorted(seen, key=TorsionPoint.key)

    def term_count(self) -> int:
        return len(self.terms)

    def __repr__(self):
        return f"SymbolSum[{len(self.terms)} terms, meta={self.meta.get('kind')}]"


# --- normal form ----------------------------------------------------------------


def _entry_atoms(entry: Entry) -> list:
    atoms: list = list(entry.consts)
    if entry.fn is not None:
        atoms.extend(entry.fn.extra)
        core = entry.fn
        if core.extra:
            core = EllFunction(core.field, core.divisor, core.lifts, ())
        atoms.append(core)
    return atoms


def _atom_key(atom) -> tuple:
    if isinstance(atom, ConstAtom):
        return (0, repr(atom.signature()))
    return (1, repr(atom.signature()))


def normal_form(sym: SymbolSum) -> list:
    """Bilinear expansion into atomic pairs, oriented and merged.

    Orientation uses antisymmetry: an atomic pair is swapped (with a sign
    flip) when its key order is reversed, so equal sums in scrambled
    presentations collide to identical normal forms.
    """
    bucket: dict = {}
    for c, L, R in sym.terms:
        for aL in _entry_atoms(L):
            for aR in _entry_atoms(R):
                kL, kR = _atom_key(aL), _atom_key(aR)
                if kR < kL:
                    first, second, kL, kR = aR, aL, kR, kL
                    coeff = -c
                else:
                    first, second = aL, aR
                    coeff = c
                key = (kL, kR)
                if key not in bucket:
                    bucket[key] = [0, first, second]
                bucket[key][0] += coeff
    out = []
    for key in sorted(bucket):
        c, aL, aR = bucket[key]
        if c != 0:
            out.append((c, aL, aR))
    return out


def difference_atoms(sym_a: SymbolSum, sym_b: SymbolSum) -> list:
    return normal_form(sym_a - sym_b)


def difference_is_constant(sym_a: SymbolSum, sym_b: SymbolSum) -> tuple[bool, list]:
    """True when the normal-form difference only involves pairs with a
    constant on at least one side."""
    left = difference_atoms(sym_a, sym_b)
    bad = [t for t in left
           if isinstance(t[1], EllFunction) and isinstance(t[2], EllFunction)]
    return (not bad, left)


# --- tame symbols -----------------------------------------------------------------


def term_tame(lat: AnalyticLattice, P: TorsionPoint, L: Entry, R: Entry):
    """Tame value of one symbol at P; exact integer 1 when both orders vanish."""
    m = L.order_at(P)
    n = R.order_at(P)
    if m == 0 and n == 0:
        return 1
    with lat.context():
        sign = -1 if (m * n) % 2 else 1
        val = mp.mpc(sign)
        if n != 0:
            val = val * L.leading_at(lat, P) ** n
        if m != 0:
            val = val * R.leading_at(lat, P) ** (-m)
        return val


def tame_symbol_at(sym: SymbolSum, lat: AnalyticLattice, P: TorsionPoint):
    with lat.context():
        out = 1
        for c, L, R in sym.terms:
            t = term_tame(lat, P, L, R)
            if t == 1:
                continue
            out = out * t ** c
        return out


def unity_order(value, bound: int, tol) -> int | None:
    """Smallest k <= bound with value^k close to 1, else None (diagnostic)."""
    if value == 1:
        return 1
    v = mp.mpc(value)
    acc = mp.mpc(1)
    for k in range(1, bound + 1):
        acc = acc * v
        if abs(acc - 1) < tol:
            return k
    return None


def certify_tame_kernel(sym: SymbolSum, lat: AnalyticLattice, tol=None,
                        points=None) -> dict:
    """Check that every tame value of the sum is a root of unity.

    The certified inequality is |abs(value) - 1| < tol at every support
    point; the reported unity order (bounded by lcm(24, unit group)) is
    a diagnostic and never gates the result.
    """
    with lat.context():
        if tol is None:
            tol = mp.mpf(10) ** -25
        bound = lcm(24, sym.field.unit_order)
        if points is None:
            points = sym.support_points()
        rows = []
        ok = True
        for P in points:
            v = tame_symbol_at(sym, lat, P)
            if v == 1:
                rows.append({"point": str(P), "exact": True, "value": 1,
                             "modulus_deviation": 0, "unity_order": 1})
                continue
            dev = abs(abs(v) - 1)
            ok = ok and dev < tol
            rows.append({
                "point": str(P),
                "exact": False,
                "value": v,
                "modulus_deviation": dev,
                "unity_order": unity_order(v, bound, mp.sqrt(tol)),
            })
        return {"kind": "tame-kernel", "points": rows, "tolerance": tol,
                "unity_bound": bound, "pass": bool(ok)}


# --- builders ---------------------------------------------------------------------


def build_alpha_prime(sys: TorsionSystem, m: QuadIdeal, a: int, *,
                      scale: int | None = None, g_fn: EllFunction | None = None,
                      s_fn: EllFunction | None = None, t_builder=None,
                      y_point: TorsionPoint | None = None) -> SymbolSum:
    """The level-m element: a {g_a(y)^-1 g_a, s_m} - sum over nonzero
    gamma in E[a] of {s_m(gamma), t_gamma}.

    Keyword overrides exist for the choice-independence scans and for
    rebuilding the same shape at a twist point; defaults are the
    canonical builds at y_m.
    """
    field = sys.field
    y = y_point if y_point is not None else sys.y(m)
    k = scale if scale is not None else (m * sys.f_level).norm
    g = g_fn if g_fn is not None else build_g_a(field, a)
    s = s_fn if s_fn is not None else build_s_point(y, k)
    if g.order_at(y) != 0:
        raise ValueError(f"degenerate configuration: y_m = {y} lies in the "
                         f"divisor of the {a}-division function; pick a "
                         f"coprime to the level")
    gammas = [gm for gm in torsion_of_integer(field, a) if not gm.is_zero()]
    terms = []
    inv_at_y = ConstAtom(fn=g, point=y, exponent=-1)
    terms.append((a, Entry((inv_at_y,), g), Entry.of_fn(s)))
    for gm in gammas:
        if s.order_at(gm) != 0:
            raise ValueError(f"degenerate configuration: torsion point {gm} "
                             f"of the auxiliary level {a} meets the support "
                             f"of the two-point function at level {m}")
        t = t_builder(gm) if t_builder is not None else build_t_gamma(field, a, gm)
        terms.append((-1, Entry.of_const(ConstAtom(fn=s, point=gm)),
                      Entry.of_fn(t)))
    meta = {"kind": "alpha-prime", "level": str(m * sys.f_level),
            "m": str(m), "scale": k, "a": a, "y": str(y)}
    return SymbolSum(field, terms, meta)


def build_alpha(sys: TorsionSystem, m: QuadIdeal, a: int,
                p_ideal: QuadIdeal) -> dict:
    """Package the level-m element with its corestriction bookkeeping.

    When the distinguished prime divides m the element is the plain
    corestriction of the level-m sum; otherwise one extra twisted-norm
    layer from level m*p is recorded.  The inner sum is always the
    level-m construction; annotations say which case applies and along
    which map the pushforward runs.
    """
    inner = build_alpha_prime(sys, m, a)
    divides = p_ideal.divides(m)
    ann = {
        "case": "p-divides-m" if divides else "p-coprime-to-m",
        "norm_from_level": str(m * sys.f_level),
        "norm_to_level": str(m * sys.f_level) if divides
        else str(m * p_ideal * sys.f_level),
        "pushforward_by": str(sys.chi.evaluate(p_ideal)),
        "distinguished_prime": str(p_ideal),
    }
    return {"inner": inner, "annotations": ann}


def build_pair_A(field: QuadField, a: int, ell: QuadIdeal) -> SymbolSum:
    """a {g_a, g_ell} - sum over nonzero gamma in E[a] of {g_ell(gamma), t_gamma}."""
    g = build_g_a(field, a)
    gl = build_g_l(ell)
    terms = [(a, Entry.of_fn(g), Entry.of_fn(gl))]
    for gm in torsion_of_integer(field, a):
        if gm.is_zero():
            continue
        if gl.order_at(gm) != 0:
            raise ValueError(f"degenerate configuration: {gm} lies in E[ell]")
        terms.append((-1, Entry.of_const(ConstAtom(fn=gl, point=gm)),
                      Entry.of_fn(build_t_gamma(field, a, gm))))
    return SymbolSum(field, terms, {"kind": "pair-A", "a": a, "ell": str(ell)})


def build_pair_B(field: QuadField, a: int, ell: QuadIdeal,
                 u_scale: int | None = None) -> SymbolSum:
    """Sum over unit classes xi mod ell of a {g_a(xi c), U_xi}, where c
    generates E[ell] over the residue ring and U_xi is the scaled
    two-point function at xi c.  u_scale defaults to N(ell); a*N(ell) is
    the other supported convention."""
    if not ell.gen.norm() or ell.norm == 1:
        raise ValueError("ell must be a nontrivial ideal")
    k = u_scale if u_scale is not None else ell.norm
    g = build_g_a(field, a)
    c = division_point(ell.gen)
    assert c.annihilator() == ell
    ring = ResidueRing(ell)
    terms = []
    for xi in ring.units():
        point = c.act(xi)
        if g.order_at(point) != 0:
            raise ValueError(f"degenerate configuration: {point} meets E[{a}]")
        U = build_s_point(point, k)
        terms.append((a, Entry.of_const(ConstAtom(fn=g, point=point)),
                      Entry.of_fn(U)))
    return SymbolSum(field, terms,
                     {"kind": "pair-B", "a": a, "ell": str(ell), "u_scale": k})
