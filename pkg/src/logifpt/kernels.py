"""Coefficient tables and building-block series for the crossing transforms.

Everything here expands pieces of the closed-form Laplace transforms around
the origin of the Laplace variable.  Writing ``s(z) = sqrt(1 + a z)`` (with
``a`` the scaling from :class:`~logifpt.model.DerivedParams` and ``z`` the
Laplace variable), the three coefficient families are defined by

    <1 - 2u s(z)>_n  = sum_k  plain(n, k)  (a z)^k / k!
    <u (1 - s(z))>_n = sum_m  tilde(n, m)  (a z)^m / m!
    <u (1 + s(z))>_n = sum_m  bar(n, m)    (a z)^m / m!

where ``<x>_n`` is the rising factorial.  Each family is evaluated through
explicit sums over unsigned Stirling numbers of the first kind (the image of
``t^j`` under the k-th falling power of the halved Euler operator ``t d/dt``
is ``(j/2)_k t^j``, which turns the rising-factorial polynomials into the
finite sums implemented below).

From these, ``m_coeff`` gives the expansion of the ratio
``<u(1-s)>_n / <1-2us>_n`` and ``mbar_coeff`` of the product
``<u(1-s)>_n <u(1+s)>_n``.  Note the product is symmetric under ``s -> -s``
and hence a polynomial of degree n in z: ``mbar_coeff(n, m) = 0`` for
``m > n`` identically, which the code exploits.

The upcrossing building blocks (``q_series``, ``l_series``, ``t_series``)
are convergent sums over n and are truncated by a stagnation rule; the
downcrossing blocks (``lbar_series``) are asymptotic sums in ``1/(v y)``
summed by optimal truncation (stop at the smallest term, report the first
omitted term as the error estimate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
from mpmath import mp, mpf

from .errors import NoConvergence
from .model import DerivedParams
from .series import ExpSeries, falling_factorial, stirling1_unsigned

N_MAX_DEFAULT = 256
M_MAX_DEFAULT = 64
L_SERIES_TOL = mpf("1e-30")
# consecutive negligible terms required before a convergent sum is cut
_STAGNATION_RUN = 5
# sustained-growth factor that ends term generation in an asymptotic sum
_GROWTH_STOP = 10.0


@lru_cache(maxsize=None)
def _half_falling_exact(j: int, k: int) -> Fraction:
    """(j/2)_k as an exact rational."""
    return falling_factorial(Fraction(j, 2), k)


@lru_cache(maxsize=None)
def _euler_weight(m: int, j: int, alternating: bool) -> Fraction:
    """sum_i (+-1)^i C(j,i) (i/2)_m, the t=1 value of the m-th halved-Euler
    falling power applied to (1 -+ t)^j.

    The alternating variant vanishes for j > m (alternating binomial sums
    annihilate polynomials of degree < j).
    """
    tot = Fraction(0)
    for i in range(j + 1):
        w = math.comb(j, i) * _half_falling_exact(i, m)
        tot += -w if (alternating and i % 2) else w
    return tot


def _frac_to_mpf(fr: Fraction):
    return mpf(fr.numerator) / fr.denominator


class KernelTable:
    """Memoized coefficient tables for a fixed drift index u.

    Entries are computed at the precision carried by the derived parameters
    and cached; the table is immutable from the caller's perspective and
    safe to share once built.
    """

    def __init__(self, d: DerivedParams, n_max: int = N_MAX_DEFAULT,
                 m_max: int = M_MAX_DEFAULT):
        self.u = d.u
        self.precision = d.precision
        self.n_max = n_max
        self.m_max = m_max
        self._plain = {}
        self._tilde = {}
        self._bar = {}
        self._ratio = {}
        self._prod = {}
        with mp.workprec(self.precision):
            self._u_pow = [mpf(1)]
            self._m2u_pow = [mpf(1)]

    def _check(self, n: int, m: int):
        if n < 0 or m < 0:
            raise IndexError(f"indices must be >= 0, got ({n}, {m})")
        if n > self.n_max or m > self.m_max:
            raise IndexError(
                f"({n}, {m}) outside table bounds (n_max={self.n_max}, m_max={self.m_max})"
            )

    def _powers(self, n: int):
        while len(self._u_pow) <= n + 1:
            self._u_pow.append(self._u_pow[-1] * self.u)
            self._m2u_pow.append(self._m2u_pow[-1] * (-2 * self.u))

    def lambda_plain(self, n: int, k: int):
        """Coefficient of (a z)^k / k! in <1 - 2u s(z)>_n.

        lambda_plain(n, 0) equals the rising factorial <1-2u>_n exactly.
        """
        self._check(n, k)
        key = (n, k)
        if key not in self._plain:
            with mp.workprec(self.precision):
                self._powers(n)
                tot = mpf(0)
                for j in range(n + 1):
                    ff = _half_falling_exact(j, k)
                    if ff:
                        tot += (stirling1_unsigned(n + 1, j + 1)
                                * self._m2u_pow[j] * _frac_to_mpf(ff))
                self._plain[key] = tot
        return self._plain[key]

    def lambda_tilde(self, n: int, m: int):
        """Coefficient of (a z)^m / m! in <u (1 - s(z))>_n.

        Zero for n >= 1, m = 0 since <0>_n = 0 (the constant term of the
        expanded rising factorial vanishes).
        """
        self._check(n, m)
        key = (n, m)
        if key not in self._tilde:
            with mp.workprec(self.precision):
                self._powers(n)
                tot = mpf(0)
                for j in range(min(n, m) + 1):
                    w = _euler_weight(m, j, alternating=True)
                    if w:
                        tot += (stirling1_unsigned(n, j)
                                * self._u_pow[j] * _frac_to_mpf(w))
                self._tilde[key] = tot
        return self._tilde[key]

    def lambda_bar(self, n: int, m: int):
        """Coefficient of (a z)^m / m! in <u (1 + s(z))>_n.

        lambda_bar(n, 0) equals <2u>_n.
        """
        self._check(n, m)
        key = (n, m)
        if key not in self._bar:
            with mp.workprec(self.precision):
                self._powers(n)
                tot = mpf(0)
                for j in range(n + 1):
                    w = _euler_weight(m, j, alternating=False)
                    if w:
                        tot += (stirling1_unsigned(n, j)
                                * self._u_pow[j] * _frac_to_mpf(w))
                self._bar[key] = tot
        return self._bar[key]

    def m_coeff(self, n: int, m: int):
        """Coefficient of (a z)^m / m! in <u(1-s)>_n / <1-2us>_n.

        m_coeff(n, 0) = 0 for n >= 1; the denominator constant <1-2u>_n is
        never zero in the persistent regime (u < 0).
        """
        self._check(n, m)
        key = (n, m)
        if key not in self._ratio:
            with mp.workprec(self.precision):
                if n == 0:
                    val = mpf(1) if m == 0 else mpf(0)
                else:
                    tot = self.lambda_tilde(n, m)
                    for k in range(1, m + 1):
                        tot -= (math.comb(m, k) * self.lambda_plain(n, k)
                                * self.m_coeff(n, m - k))
                    val = tot / self.lambda_plain(n, 0)
                self._ratio[key] = val
        return self._ratio[key]

    def mbar_coeff(self, n: int, m: int):
        """Coefficient of (a z)^m / m! in <u(1-s)>_n <u(1+s)>_n.

        Exactly zero for m > n (degree bound) and for n >= 1, m = 0.
        """
        self._check(n, m)
        key = (n, m)
        if key not in self._prod:
            with mp.workprec(self.precision):
                if n == 0:
                    val = mpf(1) if m == 0 else mpf(0)
                elif m > n:
                    val = mpf(0)
                else:
                    val = mpf(0)
                    for k in range(m + 1):
                        val += (math.comb(m, k) * self.lambda_tilde(n, k)
                                * self.lambda_bar(n, m - k))
                self._prod[key] = val
        return self._prod[key]


@dataclass
class SeriesDiagnostics:
    """Per-coefficient truncation bookkeeping.

    trunc_index[k] is the last n-term included for coefficient k;
    error_estimate[k] is zero for convergent sums and the magnitude of the
    first omitted term for asymptotic ones.
    """

    trunc_index: list = field(default_factory=list)
    error_estimate: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "trunc_index": list(self.trunc_index),
            "error_estimate": [float(e) for e in self.error_estimate],
        }

    @staticmethod
    def merge(a: "SeriesDiagnostics", b: "SeriesDiagnostics") -> "SeriesDiagnostics":
        n = max(len(a.trunc_index), len(b.trunc_index))

        def pad(xs, fill):
            return list(xs) + [fill] * (n - len(xs))

        return SeriesDiagnostics(
            trunc_index=[max(x, y) for x, y in zip(pad(a.trunc_index, 0), pad(b.trunc_index, 0))],
            error_estimate=[x + y for x, y in zip(pad(a.error_estimate, mpf(0)),
                                                  pad(b.error_estimate, mpf(0)))],
        )


def convergent_sum(term_fn, tol, n_max: int, n_start: int = 1):
    """Sum term_fn(n) for n >= n_start until the stagnation rule fires.

    The sum is cut once _STAGNATION_RUN consecutive terms fall below tol
    times the running partial sum; raises NoConvergence when n_max is hit
    first.  Returns (value, last_included_n).
    """
    partial = mpf(0)
    run = 0
    n = n_start - 1
    while True:
        n += 1
        if n > n_max:
            raise NoConvergence(f"sum still changing at n_max = {n_max}")
        term = term_fn(n)
        partial += term
        scale = abs(partial) if partial != 0 else abs(term)
        if abs(term) <= tol * scale:
            run += 1
            if run >= _STAGNATION_RUN:
                return partial, n
        else:
            run = 0


def asymptotic_sum(term_fn, n_start: int, n_max: int):
    """Optimal truncation of the (generally divergent) sum of term_fn(n).

    Terms are generated from n_start until their magnitude envelope has
    clearly turned upward (or n_max is reached).  The cut n* minimizes the
    envelope max(|T_n|, |T_{n+1}|), which is robust to isolated exact zeros
    in the term sequence; ties resolve to the smaller n.  Returns
    (value, first_omitted_magnitude, last_included_n).
    """
    terms = []
    min_env = mpmath.inf
    n = n_start - 1
    while n < n_max:
        n += 1
        terms.append(term_fn(n))
        if len(terms) >= 2:
            env = max(abs(terms[-1]), abs(terms[-2]))
            if env < min_env:
                min_env = env
            elif env > _GROWTH_STOP * min_env and abs(terms[-1]) > abs(terms[-2]):
                break
    if len(terms) == 1:
        return terms[0], abs(terms[0]), n_start
    best = min(range(len(terms) - 1),
               key=lambda i: max(abs(terms[i]), abs(terms[i + 1])))
    value = sum(terms[: best + 1], mpf(0))
    return value, abs(terms[best + 1]), n_start + best


def q_series(y, order: int, d: DerivedParams) -> ExpSeries:
    """Expansion of y^(u (1 - s(z))) in the Laplace variable z.

    q_0 = 1 and q_k = -u log(y) sum_j C(k-1, j-1) (1/2)_j a^j q_{k-j};
    collapses to the identity series at y = 1.
    """
    with mp.workprec(d.precision):
        logy = mpmath.log(mpf(y))
        half = mpf(1) / 2
        w = [mpf(0)]
        apow = mpf(1)
        for j in range(1, order + 1):
            apow *= d.a
            w.append(-d.u * logy * falling_factorial(half, j) * apow)
        q = [mpf(1)]
        for k in range(1, order + 1):
            tot = mpf(0)
            for j in range(1, k + 1):
                tot += math.comb(k - 1, j - 1) * w[j] * q[k - j]
            q.append(tot)
    return ExpSeries(tuple(q))


def l_series(y, order: int, d: DerivedParams, tol=L_SERIES_TOL,
             table: KernelTable | None = None):
    """Expansion coefficients l_k(y) of the regular hypergeometric factor.

    l_0 = 1 and l_k = a^k sum_{n>=1} m_coeff(n, k) (v y)^n / n!.  The n-sum
    converges factorially; it is cut once five consecutive terms fall below
    tol times the running partial sum.  Raises NoConvergence if the table
    bound is hit first.  Returns (series, diagnostics).
    """
    if table is None:
        table = KernelTable(d, m_max=max(M_MAX_DEFAULT, order))
    diag = SeriesDiagnostics(trunc_index=[0], error_estimate=[mpf(0)])
    with mp.workprec(d.precision):
        vy = d.v * mpf(y)
        tol = mpf(tol)
        out = [mpf(1)]
        apow = mpf(1)
        for k in range(1, order + 1):
            apow *= d.a

            def term(n, _k=k):
                return table.m_coeff(n, _k) * vy ** n / mpmath.factorial(n)

            try:
                partial, n_cut = convergent_sum(term, tol, table.n_max)
            except NoConvergence as exc:
                raise NoConvergence(
                    f"l-series order {k} at v*y = {float(vy)}: {exc}") from exc
            out.append(apow * partial)
            diag.trunc_index.append(n_cut)
            diag.error_estimate.append(mpf(0))
    return ExpSeries(tuple(out)), diag


def t_series(y, order: int, d: DerivedParams, tol=L_SERIES_TOL,
             table: KernelTable | None = None):
    """Upcrossing coefficients t_m(y): Cauchy product of l- and q-series."""
    ls, diag = l_series(y, order, d, tol=tol, table=table)
    qs = q_series(y, order, d)
    with mp.workprec(d.precision):
        out = []
        for m_ in range(order + 1):
            tot = mpf(0)
            for k in range(m_ + 1):
                tot += math.comb(m_, k) * ls[m_ - k] * qs[k]
            out.append(tot)
    return ExpSeries(tuple(out)), diag


def lbar_series(y, order: int, d: DerivedParams,
                table: KernelTable | None = None):
    """Downcrossing coefficients lbar_m(y) with per-order error estimates.

    lbar_0 = 1 and lbar_m = a^m sum_{n>=m} (-1)^n mbar_coeff(n, m)
    / ((v y)^n n!).  The n-sum is asymptotic in 1/(v y); it is summed by
    optimal truncation: terms are generated until their magnitude envelope
    has clearly turned upward, the cut n* minimizes the envelope
    max(|T_n|, |T_{n+1}|) (robust to the structural zeros at small n; ties
    resolve to the smaller n), and the first omitted term is reported as
    the error estimate.  Returns (series, diagnostics).
    """
    if table is None:
        table = KernelTable(d, m_max=max(M_MAX_DEFAULT, order))
    diag = SeriesDiagnostics(trunc_index=[0], error_estimate=[mpf(0)])
    with mp.workprec(d.precision):
        vy = d.v * mpf(y)
        out = [mpf(1)]
        apow = mpf(1)
        for m_ in range(1, order + 1):
            apow *= d.a

            def term(n, _m=m_):
                sign = -1 if n % 2 else 1
                return sign * table.mbar_coeff(n, _m) / (vy ** n * mpmath.factorial(n))

            value, est, n_cut = asymptotic_sum(term, m_, table.n_max)
            out.append(apow * value)
            diag.trunc_index.append(n_cut)
            diag.error_estimate.append(apow * est)
    return ExpSeries(tuple(out)), diag
