"""Finite-field oracle: exhaustive point counts and Frobenius-vs-CM checks.

Everything here is deliberately naive (x-scans, square tables, repeated
addition) so it stays independent of the analytic and character layers
it cross-checks.  Desk-scale primes only.

The Frobenius comparison runs over E(F_{p^2}), not E(F_p): on E(F_p)
both candidate endomorphisms pi and pi-bar restrict to the identity
map (Frobenius fixes F_p-points), so the quadratic extension is the
smallest field that separates them.
"""

from __future__ import annotations

from .qfield import QuadElement, is_rational_prime


def count_points(p: int, a: int, b: int) -> int:
    """#E(F_p) for y^2 = x^3 + a x + b by exhaustive x-scan."""
    if not is_rational_prime(p):
        raise ValueError(f"{p} is not prime")
    if (4 * a ** 3 + 27 * b ** 2) % p == 0:
        raise ValueError(f"bad reduction at {p}")
    counts = [0] * p
    for y in range(p):
        counts[y * y % p] += 1
    total = 1  # infinity
    for x in range(p):
        total += counts[(x * x * x + a * x + b) % p]
    return total


def sqrt_mod_p(a: int, p: int):
    """A square root of a mod p, or None. Brute scan; p is desk-scale."""
    a %= p
    for r in range((p + 1) // 2 + 1):
        if r * r % p == a:
            return r
    return None


class Fp2:
    """F_p(s) with s^2 = nr, nr the least quadratic nonresidue mod p."""

    def __init__(self, p: int):
        assert is_rational_prime(p) and p > 2
        self.p = p
        nr = 2
        while pow(nr, (p - 1) // 2, p) == 1:
            nr += 1
        self.nr = nr

    def make(self, a: int, b: int = 0):
        return (a % self.p, b % self.p)

    def add(self, x, y):
        return ((x[0] + y[0]) % self.p, (x[1] + y[1]) % self.p)

    def sub(self, x, y):
        return ((x[0] - y[0]) % self.p, (x[1] - y[1]) % self.p)

    def neg(self, x):
        return (-x[0] % self.p, -x[1] % self.p)

    def mul(self, x, y):
        # (a + bs)(c + ds) = ac + bd*nr + (ad + bc)s
        return (
            (x[0] * y[0] + x[1] * y[1] * self.nr) % self.p,
            (x[0] * y[1] + x[1] * y[0]) % self.p,
        )

    def inv(self, x):
        # conjugate over F_p: norm = a^2 - nr b^2
        n = (x[0] * x[0] - self.nr * x[1] * x[1]) % self.p
        if n == 0:
            raise ZeroDivisionError("inverting zero in F_p^2")
        ninv = pow(n, self.p - 2, self.p)
        return (x[0] * ninv % self.p, -x[1] * ninv % self.p)

    def frobenius(self, x):
        # x -> x^p; s^p = -s since nr^((p-1)/2) = -1
        return (x[0], -x[1] % self.p)

    def elements(self):
        for a in range(self.p):
            for b in range(self.p):
                yield (a, b)

    def in_prime_field(self, x):
        return x[1] == 0


class CurveOverFp2:
    """y^2 = x^3 + A x + B with A, B in the prime subfield; group law over F_p^2."""

    INF = None

    def __init__(self, p: int, a: int, b: int):
        if (4 * a ** 3 + 27 * b ** 2) % p == 0:
            raise ValueError(f"bad reduction at {p}")
        self.F = Fp2(p)
        self.a = self.F.make(a)
        self.b = self.F.make(b)

    def on_curve(self, P) -> bool:
        if P is None:
            return True
        F, (x, y) = self.F, P
        lhs = F.mul(y, y)
        rhs = F.add(F.add(F.mul(F.mul(x, x), x), F.mul(self.a, x)), self.b)
        return lhs == rhs

    def neg(self, P):
        if P is None:
            return None
        return (P[0], self.F.neg(P[1]))

    def add(self, P, Q):
        F = self.F
        if P is None:
            return Q
        if Q is None:
            return P
        x1, y1 = P
        x2, y2 = Q
        if x1 == x2:
            if F.add(y1, y2) == F.make(0):
                return None
            # doubling
            num = F.add(F.mul(F.make(3), F.mul(x1, x1)), self.a)
            den = F.mul(F.make(2), y1)
        else:
            num = F.sub(y2, y1)
            den = F.sub(x2, x1)
        lam = F.mul(num, F.inv(den))
        x3 = F.sub(F.sub(F.mul(lam, lam), x1), x2)
        y3 = F.sub(F.mul(lam, F.sub(x1, x3)), y1)
        return (x3, y3)

    def smul(self, k: int, P):
        if k < 0:
            return self.neg(self.smul(-k, P))
        R = None
        Q = P
        while k:
            if k & 1:
                R = self.add(R, Q)
            Q = self.add(Q, Q)
            k >>= 1
        return R

    def points_ext(self):
        """All points of E(F_p^2), exhaustively."""
        F = self.F
        sq: dict = {}
        for e in F.elements():
            sq.setdefault(F.mul(e, e), []).append(e)
        pts = [None]
        for a in range(F.p):
            for b in range(F.p):
                x = (a, b)
                rhs = F.add(F.add(F.mul(F.mul(x, x), x), F.mul(self.a, x)), self.b)
                for y in sq.get(rhs, []):
                    pts.append((x, y))
        return pts

    def points_prime(self):
        """E(F_p) as the Frobenius-fixed subgroup (b-coordinates zero)."""
        return [
            P for P in self.points_ext()
            if P is None or (P[0][1] == 0 and P[1][1] == 0)
        ]

    def frobenius(self, P):
        if P is None:
            return None
        return (self.F.frobenius(P[0]), self.F.frobenius(P[1]))


def cm_i_value(p: int) -> int:
    """The canonical square root of -1 mod p (the smaller of the two)."""
    r = sqrt_mod_p(p - 1, p)
    if r is None:
        raise ValueError(f"-1 is not a square mod {p}; p is not split")
    return min(r, p - r)


def cm_apply(pi: QuadElement, P, curve: CurveOverFp2, i_val: int | None = None):
    """[x + y*i]P on a j=1728 curve (B = 0): [i](x,y) = (-x, i*y)."""
    if pi.field.d != -4:
        raise ValueError("CM automorphism shortcut implemented for d = -4 only")
    if curve.b != curve.F.make(0):
        raise ValueError("the (-x, iy) automorphism needs B = 0")
    if i_val is None:
        i_val = cm_i_value(curve.F.p)
    if P is None:
        return None
    iP = ((curve.F.neg(P[0])), curve.F.mul(curve.F.make(i_val), P[1]))
    assert curve.on_curve(iP)
    return curve.add(curve.smul(pi.x, P), curve.smul(pi.y, iP))


def frobenius_equals_cm(p: int, a: int, b: int, pi: QuadElement) -> dict:
    """Exhaustively compare Frobenius with [pi] and [pi-bar] on E(F_p^2).

    Returns a report naming which endomorphism matched.  Exactly one of
    the two must match on the full extension group; matching over F_p
    alone would be vacuous (both act as the identity there).
    """
    curve = CurveOverFp2(p, a, b)
    i_val = cm_i_value(p)
    pts = curve.points_ext()
    report = {
        "p": p,
        "i_mod_p": i_val,
        "ext_count": len(pts),
        "prime_count": len(curve.points_prime()),
    }
    for tag, cand in (("pi", pi), ("pi_bar", pi.conjugate())):
        ok = True
        for P in pts:
            if curve.frobenius(P) != cm_apply(cand, P, curve, i_val):
                ok = False
                break
        report[tag + "_matches"] = ok
    report["exactly_one"] = report["pi_matches"] != report["pi_bar_matches"]
    if report["pi_matches"]:
        matched = pi
    elif report["pi_bar_matches"]:
        matched = pi.conjugate()
    else:
        matched = None
    if matched is not None:
        report["matched_trace"] = matched.trace()
        report["norm_of_pi_minus_1"] = (matched - 1).norm()
    return report
