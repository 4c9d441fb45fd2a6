"""Exact torsion bookkeeping on K/O_K.

A torsion point is a pair of rationals (r, s) modulo 1, standing for
r + s*omega on the complex torus.  Integral elements act through the
multiplication formula of the field; annihilators are exact ideals.

The compatible system: x at level m is the class of 1/phi(m), built so
that the norm-compatibility [phi(l)] x_{ml} = x_m is an identity of
rational numbers rather than a constraint.  The shifted points y add the
conductor-level generator x_f twisted by the inverse residue of phi.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .hecke import HeckeCharacter
from .qfield import (
    QuadElement,
    QuadField,
    QuadIdeal,
    factor_ideal,
    gcd_elements,
    residue_invert,
)


def _mod1(v) -> Fraction:
    f = Fraction(v)
    return f - (f.numerator // f.denominator)


class TorsionPoint:
    __slots__ = ("field", "r", "s")

    def __init__(self, field: QuadField, r, s):
        self.field = field
        self.r = _mod1(r)
        self.s = _mod1(s)

    def is_zero(self) -> bool:
        return self.r == 0 and self.s == 0

    def key(self):
        """Lexicographic sort key; the canonical ordering of support points."""
        return (self.r, self.s)

    def __add__(self, other: "TorsionPoint") -> "TorsionPoint":
        assert other.field == self.field
        return TorsionPoint(self.field, self.r + other.r, self.s + other.s)

    def __sub__(self, other: "TorsionPoint") -> "TorsionPoint":
        assert other.field == self.field
        return TorsionPoint(self.field, self.r - other.r, self.s - other.s)

    def __neg__(self) -> "TorsionPoint":
        return TorsionPoint(self.field, -self.r, -self.s)

    def act(self, alpha) -> "TorsionPoint":
        """The point alpha * P for an integral field element (or integer)."""
        if isinstance(alpha, int):
            return TorsionPoint(self.field, alpha * self.r, alpha * self.s)
        if not alpha.is_integral():
            raise ValueError("only integral elements act on torsion")
        t, n = self.field.trace_omega, self.field.norm_omega
        x, y = alpha.x, alpha.y
        return TorsionPoint(
            self.field,
            x * self.r - n * y * self.s,
            x * self.s + y * self.r + t * y * self.s,
        )

    def annihilator(self) -> QuadIdeal:
        """The ideal of all elements sending the point to zero."""
        K = self.field
        if self.is_zero():
            return QuadIdeal(K.one())
        q = math.lcm(self.r.denominator, self.s.denominator)
        beta = K.element(int(self.r * q), int(self.s * q))
        g = gcd_elements(beta, K.element(q))
        return QuadIdeal(K.element(q).exact_div(g))

    def lift(self) -> QuadElement:
        """The canonical fractional lift r + s*omega as a field element."""
        return self.field.element(self.r, self.s)

    def __eq__(self, other):
        return (
            isinstance(other, TorsionPoint)
            and other.field == self.field
            and other.r == self.r
            and other.s == self.s
        )

    def __hash__(self):
        return hash((self.field.d, self.r, self.s))

    def __repr__(self):
        return f"[{self}]"

    def __str__(self):
        return f"{self.r}+{self.s}*w"


def torsion_from_element(field: QuadField, elem: QuadElement) -> TorsionPoint:
    """The class of a (possibly fractional) field element in K/O_K."""
    return TorsionPoint(field, elem.x, elem.y)


def division_point(alpha: QuadElement) -> TorsionPoint:
    """The class of 1/alpha; a generator of the alpha-torsion as O-module."""
    inv = alpha.field.one() / alpha
    return torsion_from_element(alpha.field, inv)


def torsion_subgroup(ideal: QuadIdeal) -> list[TorsionPoint]:
    """All N(I) points killed by the ideal: residues divided by the generator."""
    out = []
    for rep in ideal.residues():
        out.append(torsion_from_element(ideal.field, rep / ideal.gen))
    assert len(set(out)) == ideal.norm
    return sorted(out, key=TorsionPoint.key)


def torsion_of_integer(field: QuadField, a: int) -> list[TorsionPoint]:
    """E[a]: the a^2 points with both coordinates in (1/a)Z."""
    pts = [
        TorsionPoint(field, Fraction(i, a), Fraction(j, a))
        for i in range(a)
        for j in range(a)
    ]
    return sorted(pts, key=TorsionPoint.key)


def preimage_set(Q: TorsionPoint, alpha: QuadElement) -> list[TorsionPoint]:
    """All N(alpha) solutions u of alpha*u = Q, exactly."""
    if alpha.is_zero():
        raise ValueError("zero has no finite fibers")
    K = Q.field
    I = QuadIdeal(alpha)
    lift = Q.lift()
    pts = [torsion_from_element(K, (lift + rep) / alpha) for rep in I.residues()]
    assert len(set(pts)) == I.norm, "fiber points must be pairwise distinct"
    for u in pts:
        assert u.act(alpha) == Q
    return sorted(pts, key=TorsionPoint.key)


def crt_split(P: TorsionPoint, ell: QuadIdeal) -> tuple[TorsionPoint, TorsionPoint]:
    """(ell-primary component, prime-to-ell component) with sum P."""
    ann = P.annihilator()
    v = 0
    rest = ann
    while ell.divides(rest):
        rest = QuadIdeal(rest.gen.exact_div(ell.gen))
        v += 1
    if v == 0:
        return TorsionPoint(P.field, 0, 0), P
    lpart_gen = ell.gen ** v
    u = residue_invert(lpart_gen, rest) if not rest.is_one() else P.field.one()
    # u*l^v + (1 - u*l^v) = 1 with the second summand divisible by rest
    co = P.field.one() - u * lpart_gen
    P_l = P.act(co)          # killed by ell^v
    P_rest = P.act(u * lpart_gen)  # killed by rest
    assert P_l + P_rest == P
    assert P_l.annihilator() == QuadIdeal(lpart_gen)
    assert P_rest.annihilator() == rest
    return P_l, P_rest


def galois_conjugates(P: TorsionPoint, ell: QuadIdeal, kind: str) -> list[TorsionPoint]:
    """Orbit of P over the level-below layer at ell.

    multiplicative (ell exactly divides the annihilator once): scale the
    ell-component by the residue units, N(ell)-1 points.
    additive (ell divides at least twice): translate by the full
    ell-torsion, N(ell) points.  Both fix the prime-to-ell component.
    """
    ann = P.annihilator()
    v = 0
    rest = ann
    while ell.divides(rest):
        rest = QuadIdeal(rest.gen.exact_div(ell.gen))
        v += 1
    if kind == "multiplicative":
        if v != 1:
            raise ValueError(f"multiplicative orbit needs an exactly-once factor, got v={v}")
        P_l, P_rest = crt_split(P, ell)
        ring_units = [
            rep for rep in ell.residues()
            if gcd_elements(rep, ell.gen).norm() == 1 and not rep.is_zero()
        ]
        orbit = [P_rest + P_l.act(u) for u in ring_units]
        assert len(set(orbit)) == ell.norm - 1
        return sorted(orbit, key=TorsionPoint.key)
    if kind == "additive":
        if v < 2:
            raise ValueError(f"additive orbit needs the square to divide, got v={v}")
        orbit = [P + c for c in torsion_subgroup(ell)]
        assert len(set(orbit)) == ell.norm
        return sorted(orbit, key=TorsionPoint.key)
    raise ValueError(f"unknown orbit kind {kind!r}")


class TorsionSystem:
    """The compatible x/y system attached to a character and a fixed level f."""

    def __init__(self, chi: HeckeCharacter, f_level: QuadIdeal | None = None):
        self.chi = chi
        self.field = chi.field
        self.f_level = f_level if f_level is not None else chi.conductor
        self.g_f = self.f_level.gen
        self.x_f = division_point(self.g_f)

    def x(self, m: QuadIdeal) -> TorsionPoint:
        """Class of 1/phi(m); annihilator exactly m."""
        val = self.chi.evaluate(m)
        P = division_point(val)
        assert P.annihilator() == m
        return P

    def y(self, m: QuadIdeal) -> TorsionPoint:
        """x_m shifted by the inverse-phi twist of x_f; annihilator divides m*f."""
        if not m.is_coprime(self.f_level):
            raise ValueError(f"{m} is not coprime to the fixed level {self.f_level}")
        beta = residue_invert(self.chi.evaluate(m), self.f_level)
        P = self.x(m) + self.x_f.act(beta)
        assert P.annihilator().divides(m * self.f_level)
        return P

    def e2_point(self, m: QuadIdeal, ell: QuadIdeal) -> TorsionPoint:
        """The extra fiber point: y_m rescaled by phi(ell)^-1 mod m*f."""
        beta = residue_invert(self.chi.evaluate(ell), m * self.f_level)
        n = self.y(m).act(beta)
        assert n.annihilator().divides(m * self.f_level)
        return n
