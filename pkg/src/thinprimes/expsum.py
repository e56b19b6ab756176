"""Prime exponential sums: direct, Vaughan-decomposed, and their bounds.

All sums carry phases exp(2*pi*i*(xi*W(k) + m*phi(k))) with an integer
polynomial W.  The xi*W(k) part is reduced mod 1 exactly (integer W(k),
binary-rational xi); the m*phi(k) part goes through a two-product and is
escalated to mpmath once |m*phi(k)| crosses 2^40.  Sums are accumulated
with math.fsum so that split/recombine residuals measure the identity, not
the accumulator.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import mpmath as mp
import numpy as np

from ._num import (
    e2pi,
    frac_mul_int_vec,
    fsum_complex,
    two_prod,
)
from .errors import (
    HypothesisViolated,
    ParameterOutOfRange,
    RangeBeyondTable,
    RegimeViolation,
)
from .sieve import PrimeTable, ThinPrimeSet
from .thinfn import NEAR_INT_GUARD, ThinFunction

# |m*phi(k)| above which the product is formed in extended precision
EXTENDED_PHASE_LIMIT = float(2 ** 40)


class IntPolynomial:
    """Integer-coefficient polynomial, constant coefficient first.

    Values W(k) are computed in exact (arbitrary width) integer arithmetic;
    the vector path uses int64 only when a bound check proves no overflow.
    """

    def __init__(self, coefficients):
        coeffs = [int(c) for c in coefficients]
        if len(coeffs) < 2 or coeffs[-1] == 0:
            raise ParameterOutOfRange(
                "polynomial needs degree >= 1 with nonzero leading coefficient")
        self.coeffs = tuple(coeffs)
        self.degree = len(coeffs) - 1

    def __call__(self, k: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * k + c
        return acc

    def abs_bound(self, kmax: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * kmax + abs(c)
        return acc

    def eval_vec(self, k: np.ndarray):
        """Exact values; int64 array when safe, else list of Python ints."""
        k = np.asarray(k, dtype=np.int64)
        kmax = int(np.abs(k).max(initial=0))
        if self.abs_bound(kmax) < 2 ** 62:
            acc = np.zeros_like(k)
            for c in reversed(self.coeffs):
                acc = acc * k + c
            return acc
        return [self(int(v)) for v in k]

    def __repr__(self):
        return f"IntPolynomial({list(self.coeffs)})"


@dataclass(frozen=True)
class PhaseSpec:
    """Phase data xi*W(k) + m*phi(k) on the dyadic-ish range (P, P1]."""
    xi: float
    W: IntPolynomial
    m: int
    tf: ThinFunction
    P: int
    P1: int

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise ParameterOutOfRange("xi must lie in [0, 1]")
        if not self.P < self.P1 <= 2 * self.P:
            raise ParameterOutOfRange("need P < P1 <= 2P")


def _frac_m_phi(tf: ThinFunction, m: int, ks: np.ndarray) -> np.ndarray:
    """Fractional parts of m*phi(k), escalating big products to mpmath."""
    phis = tf.phi_vec(ks.astype(np.float64))
    p, e = two_prod(np.float64(m), phis)
    f = ((p % 1.0) + (e % 1.0)) % 1.0
    big = np.flatnonzero(np.abs(p) > EXTENDED_PHASE_LIMIT)
    for i in big:
        with mp.workdps(40):
            v = mp.mpf(m) * tf.phi_mp(int(ks[i]))
            f[i] = float(v - mp.floor(v))
    return f


def phase_fracs(xi: float, W: IntPolynomial, m: int, tf: ThinFunction,
                ks: np.ndarray) -> np.ndarray:
    """{xi*W(k) + m*phi(k)} for an integer array k, in [0, 1)."""
    t = frac_mul_int_vec(xi, W.eval_vec(ks))
    if m != 0:
        t = (t + _frac_m_phi(tf, m, ks)) % 1.0
    return t


def phase_terms(spec: PhaseSpec, ks: np.ndarray) -> np.ndarray:
    return e2pi(phase_fracs(spec.xi, spec.W, spec.m, spec.tf, ks))


def default_v(P1: int, q: int) -> float:
    """Split point of the decomposition: P1^((2^(q+1)-2)/(2^(2q+1)+2^q-2))."""
    return float(P1) ** ((2 ** (q + 1) - 2) / (2 ** (2 * q + 1) + 2 ** q - 2))


def default_epsilon(chi: float, q: int) -> float:
    """Interior point of the open constraint 0 < eps < chi/(100(2^(q+2)-1))."""
    return chi / (200 * (2 ** (q + 2) - 1))


def default_M(tf: ThinFunction, P: int, q: int, chi: float) -> float:
    """Sawtooth truncation M = P^(1+chi+eps) / phi(P)."""
    eps = default_epsilon(chi, q)
    return float(P) ** (1.0 + chi + eps) / tf.phi(float(P))


def lambda_exp_sum(pt: PrimeTable, spec: PhaseSpec) -> complex:
    """Direct sum of Lambda(k) e(xi W(k) + m phi(k)) over P < k <= P1."""
    if spec.P1 > pt.limit:
        raise RangeBeyondTable(f"P1={spec.P1} beyond table limit {pt.limit}")
    ks, lams = pt.prime_powers_in(spec.P, spec.P1)
    if ks.size == 0:
        return 0j
    return fsum_complex(lams * phase_terms(spec, ks))


def pi_v_array(pt: PrimeTable, v: float, upto: int) -> np.ndarray:
    """Pi_v(l) = sum over rs=l, r<=v, s<=v of Lambda(r) mu(s), for l <= upto."""
    out = np.zeros(upto + 1, dtype=np.float64)
    vi = int(v)
    if vi < 1:
        return out
    rs, lambdas = pt.prime_powers_in(0, min(vi, upto))
    mu = pt.mu_array(vi)
    svals = np.flatnonzero(mu != 0)
    musv = mu[svals].astype(np.float64)
    for r, lr in zip(rs, lambdas):
        prod = int(r) * svals
        mask = prod <= upto
        np.add.at(out, prod[mask], lr * musv[mask])
    return out


def xi_v_array(pt: PrimeTable, v: float, upto: int) -> np.ndarray:
    """Xi_v(l) = sum over d|l, d>v of mu(d), for l <= upto."""
    out = np.zeros(upto + 1, dtype=np.float64)
    mu = pt.mu_array(upto)
    for d in range(int(v) + 1, upto + 1):
        md = mu[d]
        if md:
            out[d::d] += md
    return out


class VaughanSplit(NamedTuple):
    S1: complex
    S21: complex
    S22: complex
    S3: complex
    residual: float


def vaughan_split(pt: PrimeTable, spec: PhaseSpec, v: float | None = None) -> VaughanSplit:
    """Four-way decomposition of the direct Lambda sum, with its residual.

    The identity behind the split holds pointwise for n > v (verified by
    brute force; the source statement's "v > n" is a typo), so the range
    (P, P1] is valid whenever P >= v; we require P > v.  residual is
    |direct - (S1 - S21 - S22 + S3)| and must sit at accumulation noise,
    <= 1e-8 * (1 + |direct|).
    """
    P, P1 = spec.P, spec.P1
    if P1 > pt.limit:
        raise RangeBeyondTable(f"P1={P1} beyond table limit {pt.limit}")
    q = spec.W.degree
    if v is None:
        v = default_v(P1, q)
    v = float(v)
    if v < 2:
        raise ParameterOutOfRange("v must be >= 2")
    if P <= v:
        raise RegimeViolation(f"P={P} <= v={v}: identity regime needs n > v")
    vi = int(v)
    lam = pt.lambda_array(P1)
    mu = pt.mu_array(vi)
    piv = pi_v_array(pt, v, min(vi * vi, P1))
    xiv = xi_v_array(pt, v, int(P1 / v))

    def krange(l, lo=None):
        a = int(P // l)
        if lo is not None:
            a = max(a, lo)
        b = int(P1 // l)
        return np.arange(a + 1, b + 1, dtype=np.int64)

    def terms_for(l, ks, coeffs):
        return coeffs * e2pi(
            phase_fracs(spec.xi, spec.W, spec.m, spec.tf, ks * l))

    s1_parts, s21_parts, s22_parts, s3_parts = [], [], [], []
    for l in range(1, vi + 1):
        ml = int(mu[l])
        pl = float(piv[l]) if l < piv.size else 0.0
        if ml == 0 and pl == 0.0:
            continue
        ks = krange(l)
        if ks.size == 0:
            continue
        base = e2pi(phase_fracs(spec.xi, spec.W, spec.m, spec.tf, ks * l))
        if ml != 0:
            s1_parts.append(ml * np.log(ks.astype(np.float64)) * base)
        if pl != 0.0:
            s21_parts.append(pl * base)
    for l in range(vi + 1, min(vi * vi, P1) + 1):
        pl = float(piv[l]) if l < piv.size else 0.0
        if pl == 0.0:
            continue
        ks = krange(l)
        if ks.size:
            s22_parts.append(terms_for(l, ks, pl))
    for l in range(vi + 1, int(P1 / v) + 1):
        xl = float(xiv[l]) if l < xiv.size else 0.0
        if xl == 0.0:
            continue
        ks = krange(l, lo=vi)
        if ks.size == 0:
            continue
        coeffs = lam[ks]
        nz = coeffs != 0.0
        if not nz.any():
            continue
        s3_parts.append(terms_for(l, ks[nz], xl * coeffs[nz]))

    def total(parts):
        if not parts:
            return 0j
        return fsum_complex(np.concatenate(parts))

    S1, S21, S22, S3 = (total(p) for p in (s1_parts, s21_parts, s22_parts, s3_parts))
    direct = lambda_exp_sum(pt, spec)
    residual = abs(direct - (S1 - S21 - S22 + S3))
    return VaughanSplit(S1, S21, S22, S3, residual)


def vaughan_moment_check(pt: PrimeTable, v: float, L: int) -> tuple[float, float]:
    """Normalized second moments of Pi_v and Xi_v over (L, 2L].

    Returns (sum |Pi_v|^2 / (L log^2 L), sum |Xi_v|^2 / (L log^3 L)); both
    are bounded by the convolution moment estimates.
    """
    if 2 * L > pt.limit:
        raise RangeBeyondTable(f"2L={2*L} beyond table limit {pt.limit}")
    if L < 2:
        raise ParameterOutOfRange("L must be >= 2")
    piv = pi_v_array(pt, v, 2 * L)[L + 1:]
    xiv = xi_v_array(pt, v, 2 * L)[L + 1:]
    lg = math.log(L)
    m_pi = float(np.sum(piv * piv)) / (L * lg ** 2)
    m_xi = float(np.sum(xiv * xiv)) / (L * lg ** 3)
    return m_pi, m_xi


class VdcCheck(NamedTuple):
    sum_abs: float
    bound: float
    constant: float


def vdc_bound_check(F: Callable, N: int, k: int, eta: float, r: float) -> VdcCheck:
    """Measured |sum_{1<=n<=N} e(F(n))| against the k-th derivative bound.

    The caller certifies eta <= |F^(k)| <= r*eta on [1, N].  bound is
    r*N*(eta^(1/(2^k-2)) + N^(-2/2^k) + (N^k eta)^(-2/2^k)) with implied
    constant 1; constant = sum_abs / bound is the empirical constant.
    """
    if k < 2:
        raise ParameterOutOfRange("k must be >= 2")
    if not eta > 0:
        raise ParameterOutOfRange("eta must be positive (derivative bracket)")
    if r < 1:
        raise ParameterOutOfRange("r must be >= 1")
    ns = np.arange(1, N + 1, dtype=np.float64)
    vals = np.asarray(F(ns), dtype=np.float64)
    s = fsum_complex(e2pi(vals % 1.0))
    sum_abs = abs(s)
    bound = r * N * (eta ** (1.0 / (2 ** k - 2)) + N ** (-2.0 / 2 ** k)
                     + (float(N) ** k * eta) ** (-2.0 / 2 ** k))
    return VdcCheck(sum_abs, bound, sum_abs / bound)


class BilinearBound(NamedTuple):
    value: complex
    bound: float
    constant: float


def bilinear_sum_bound(delta1: np.ndarray, delta2: np.ndarray,
                       spec: PhaseSpec) -> BilinearBound:
    """Bilinear form over (L,2L] x (K,2K] restricted to P < kl <= P1.

    delta1 lives on l = L+1..2L (so L = len(delta1)), delta2 on
    k = K+1..2K.  The two size hypotheses and the moment conditions of the
    bilinear estimate are checked numerically before summation and a
    HypothesisViolated names the failing one with both sides.
    """
    delta1 = np.asarray(delta1, dtype=np.complex128)
    delta2 = np.asarray(delta2, dtype=np.complex128)
    L, K = len(delta1), len(delta2)
    if L < 2 or K < 2:
        raise ParameterOutOfRange("need L, K >= 2")
    q = spec.W.degree
    m, tf = spec.m, spec.tf
    if m == 0:
        raise HypothesisViolated("m=0: the bilinear estimate needs m != 0")
    mn = min(K, L)
    e1 = (2 ** (2 * q + 1) + 2 ** q - 2) / (2 ** (q + 1) - 2)
    phiKL = tf.phi(float(K) * L)
    if not phiKL <= mn ** e1:
        raise HypothesisViolated(
            f"phi(KL)={phiKL:.6g} > min(K,L)^{e1:.6g}={mn ** e1:.6g}")
    e2 = (2 ** (q + 1) - 2) / 2 ** q
    sKL = tf.sigma(float(K) * L) * phiKL
    lhs2, rhs2 = abs(m) * mn ** e2, sKL ** e2
    if not lhs2 <= rhs2:
        raise HypothesisViolated(
            f"|m| min^((2^(q+1)-2)/2^q)={lhs2:.6g} > (sigma phi)^(...)={rhs2:.6g}")
    mom1 = float(np.sum(np.abs(delta1) ** 2))
    mom2 = float(np.sum(np.abs(delta2) ** 2))
    cap1, cap2 = 100 * L * math.log(L) ** 3, 100 * K * math.log(K) ** 3
    if mom1 > cap1:
        raise HypothesisViolated(f"sum|Delta1|^2={mom1:.6g} > 100 L log^3 L={cap1:.6g}")
    if mom2 > cap2:
        raise HypothesisViolated(f"sum|Delta2|^2={mom2:.6g} > 100 K log^3 K={cap2:.6g}")

    ls = np.arange(L + 1, 2 * L + 1, dtype=np.int64)
    ks = np.arange(K + 1, 2 * K + 1, dtype=np.int64)
    parts = []
    for i, l in enumerate(ls):
        prod = ks * int(l)
        mask = (prod > spec.P) & (prod <= spec.P1)
        if not mask.any():
            continue
        phases = e2pi(phase_fracs(spec.xi, spec.W, m, tf, prod[mask]))
        parts.append(delta1[i] * delta2[mask] * phases)
    value = fsum_complex(np.concatenate(parts)) if parts else 0j
    e3 = (2 ** (q + 1) - 2) / (2 ** q * (2 ** (q + 2) - 2))
    bound = (abs(m) ** (1.0 / (2 ** (q + 2) - 2)) * math.log(L) ** 2
             * math.log(K) ** 2 * sKL ** (-e3) * mn ** e3 * K * L)
    return BilinearBound(value, bound, abs(value) / bound)


class Sawtooth(NamedTuple):
    phi_exact: float
    phi_trunc: float
    err_bound: float


def sawtooth(t: float, M: int) -> Sawtooth:
    """Sawtooth {t} - 1/2, its M-term Fourier truncation, and the error cap.

    err_bound = min(1, 1/(M * ||t||)) with ||t|| the distance of t to the
    nearest integer.
    """
    if M < 1:
        raise ParameterOutOfRange("M must be >= 1")
    frac = float(t) % 1.0
    exact = frac - 0.5
    ms = np.arange(1, M + 1, dtype=np.float64)
    trunc = -math.fsum(np.sin(2.0 * np.pi * ms * frac) / (np.pi * ms))
    dist = min(frac, 1.0 - frac)
    err = 1.0 if dist == 0.0 else min(1.0, 1.0 / (M * dist))
    return Sawtooth(exact, trunc, err)


def weighted_prime_sums(tps: ThinPrimeSet, pt: PrimeTable, W: IntPolynomial,
                        xi: float, N: int) -> tuple[complex, complex]:
    """(G_tilde, F_tilde): weighted thin-prime and log-weighted full sums.

    G_tilde = sum over thin p <= N of w(p) e(xi W(p)); F_tilde the same
    with log p over all primes <= N.  Ascending p, fsum accumulation.
    """
    if N > tps.limit or N > pt.limit:
        raise RangeBeyondTable(f"N={N} beyond enumerated or sieved limit")
    thin_p, thin_w = tps.prefix(N)
    g = 0j
    if thin_p.size:
        g = fsum_complex(thin_w * e2pi(frac_mul_int_vec(xi, W.eval_vec(thin_p))))
    full_p = pt.primes_in(1, N)
    f = 0j
    if full_p.size:
        logs = np.log(full_p.astype(np.float64))
        f = fsum_complex(logs * e2pi(frac_mul_int_vec(xi, W.eval_vec(full_p))))
    return g, f


@dataclass
class DecayProfile:
    """Sup-over-xi gap between the two prime sums at dyadic N, with a fit."""
    entries: list              # (N, gap, gap / N)
    fitted_exponent: float | None
    xi_grid_size: int

    @property
    def exact_zero(self) -> bool:
        return all(gap == 0.0 for _, gap, _ in self.entries)

    def gap_at(self, N: int) -> float:
        for n, gap, _ in self.entries:
            if n == N:
                return gap
        raise KeyError(N)

    def csv_rows(self):
        for n, gap, norm in self.entries:
            yield n, gap, norm


def xi_grid(size: int) -> np.ndarray:
    """Equispaced grid in [0, 1): includes 0, excludes 1."""
    return np.arange(size, dtype=np.float64) / size


DYADIC_START = 16


def formlem_decay(tf: ThinFunction, pt: PrimeTable, W: IntPolynomial,
                  xi_grid_size: int, N_max: int, threads: int = 1,
                  tps: ThinPrimeSet | None = None) -> DecayProfile:
    """gap(N) = sup over the xi grid of |G_tilde - F_tilde|, N dyadic.

    Dyadic N runs from 16 to N_max.  Per xi the cumulative term sums are
    evaluated once over all primes <= N_max and read off at the dyadic
    cutoffs; the xi loop is parallelized and reduced by pointwise max,
    which is order independent, so results do not depend on thread count.
    """
    if xi_grid_size < 64:
        raise ParameterOutOfRange("xi grid must have at least 64 points")
    if N_max > pt.limit:
        raise RangeBeyondTable(f"N_max={N_max} beyond table limit {pt.limit}")
    if N_max < DYADIC_START or N_max & (N_max - 1):
        raise ParameterOutOfRange("N_max must be a power of two >= 16")
    if tps is None:
        from .sieve import enumerate_thin_primes
        tps = enumerate_thin_primes(tf, pt, N_max)
    dyadic = []
    n = DYADIC_START
    while n <= N_max:
        dyadic.append(n)
        n *= 2
    thin_p, thin_w = tps.primes, tps.weights
    full_p = pt.primes_in(1, N_max)
    full_w = np.log(full_p.astype(np.float64))
    cut_thin = np.searchsorted(thin_p, dyadic, side="right")
    cut_full = np.searchsorted(full_p, dyadic, side="right")
    Wthin = W.eval_vec(thin_p)
    Wfull = W.eval_vec(full_p)

    def gaps_for(xi: float) -> np.ndarray:
        cum_thin = np.cumsum(thin_w * e2pi(frac_mul_int_vec(xi, Wthin)))
        cum_full = np.cumsum(full_w * e2pi(frac_mul_int_vec(xi, Wfull)))
        g = np.empty(len(dyadic))
        for j in range(len(dyadic)):
            a = cum_thin[cut_thin[j] - 1] if cut_thin[j] > 0 else 0j
            b = cum_full[cut_full[j] - 1] if cut_full[j] > 0 else 0j
            g[j] = abs(a - b)
        return g

    grid = xi_grid(xi_grid_size)
    sup = np.zeros(len(dyadic))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for g in pool.map(gaps_for, grid):
                sup = np.maximum(sup, g)
    else:
        for x in grid:
            sup = np.maximum(sup, gaps_for(float(x)))
    entries = [(n, float(g), float(g) / n) for n, g in zip(dyadic, sup)]
    pos = [(n, g) for n, g, _ in entries if g > 0.0]
    fitted = None
    if len(pos) >= 2:
        lx = np.log([n for n, _ in pos])
        ly = np.log([g for _, g in pos])
        fitted = float(np.polyfit(lx, ly, 1)[0])
    return DecayProfile(entries, fitted, xi_grid_size)


def phi_error_sum(tf: ThinFunction, pt: PrimeTable, W: IntPolynomial,
                  xi: float, N: int) -> complex:
    """Direct value of the sawtooth error sum attached to the floor counts.

    sum over k <= N of (1/phi'(k)) (Phi(-phi(k+1)) - Phi(-phi(k)))
    Lambda(k) e(xi W(k)), Phi(t) = {t} - 1/2.  Terms below h(x0) (where
    phi is undefined) do not occur for the families with h(x0) <= 2 and are
    skipped otherwise.
    """
    if N + 1 > pt.limit:
        raise RangeBeyondTable(f"N+1={N + 1} beyond table limit {pt.limit}")
    k_lo = max(1, math.ceil(tf.h_x0) - 1)
    ks, lams = pt.prime_powers_in(k_lo, N)
    if ks.size == 0:
        return 0j
    if tf.is_identity:
        return 0j  # integer sawtooth arguments: every increment vanishes
    f0 = _phi_frac_neg(tf, ks)
    f1 = _phi_frac_neg(tf, ks + 1)
    inv_phi1 = tf.h1_vec(tf.phi_vec(ks.astype(np.float64)))
    terms = inv_phi1 * (f1 - f0) * lams * e2pi(
        frac_mul_int_vec(xi, W.eval_vec(ks)))
    return fsum_complex(terms)


def _phi_frac_neg(tf: ThinFunction, ks: np.ndarray) -> np.ndarray:
    """{-phi(k)} with near-integer entries recomputed in extended precision."""
    phis = tf.phi_vec(ks.astype(np.float64))
    f = (-phis) % 1.0
    suspect = np.flatnonzero(np.minimum(f, 1.0 - f) < NEAR_INT_GUARD)
    for i in suspect:
        with mp.workdps(40):
            v = -tf.phi_mp(int(ks[i]))
            f[i] = float(v - mp.floor(v))
    return f
