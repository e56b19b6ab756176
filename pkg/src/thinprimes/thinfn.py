"""Smooth function families generating thin prime sets, and their inverses.

A ThinFunction is one concrete member h of the admissible family: strictly
increasing, strictly convex, of the shape h(x) = Ch * x^c * (slowly varying).
Six families are supported:

    power : h(x) = Ch * x^(1/gamma)          (gamma in (1/2, 1])
    h1    : h(x) = Ch * x^c * log(x)^A
    h2    : h(x) = Ch * x^c * exp(A * log(x)^B)
    h3    : h(x) = Ch * x * log(x)^C
    h4    : h(x) = Ch * x * exp(C * log(x)^B)
    h5    : h(x) = Ch * x * l_m(x),  l_1 = log, l_{m+1} = log o l_m

Derivatives up to order 4 are pre-differentiated symbolically per family at
construction time and compiled to vectorized numpy callables plus an
mpmath twin for the extended-precision floor decisions.  The inverse phi is
closed-form for the power family and a bracketed Newton elsewhere.

The degenerate member power(gamma=1) is the identity h(x) = x.  It is kept
as exact ground truth: every derived quantity short-circuits to its exact
value and all floor decisions are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple

import mpmath as mp
import numpy as np
import sympy as sp

from .errors import (
    DomainError,
    MonotonicityUnattainable,
    NoConvergence,
    ParameterOutOfRange,
    PrecisionExhausted,
)

FAMILIES = ("power", "h1", "h2", "h3", "h4", "h5")

# Distance to the nearest integer below which a binary64 floor decision is
# escalated to mpmath, and below which even mpmath refuses to decide.
NEAR_INT_GUARD = 1e-9
MP_GUARD = 1e-25
MP_DPS = 40

_X = sp.symbols("x", positive=True)


def _family_expr(family: str, c: float, A, B, Cc, m, Ch) -> sp.Expr:
    L = sp.log(_X)
    if family == "power":
        return Ch * _X ** c
    if family == "h1":
        return Ch * _X ** c * L ** A
    if family == "h2":
        return Ch * _X ** c * sp.exp(A * L ** B)
    if family == "h3":
        return Ch * _X * L ** Cc
    if family == "h4":
        return Ch * _X * sp.exp(Cc * L ** B)
    if family == "h5":
        lm = L
        for _ in range(m - 1):
            lm = sp.log(lm)
        return Ch * _X * lm
    raise ParameterOutOfRange(f"unknown family {family!r}")


def _vartheta_func(family: str, c: float, A, B, Cc, m) -> Callable:
    """Closed-form vartheta(x) = x*h'(x)/h(x) - c, per family."""
    if family == "power":
        return lambda x: np.zeros_like(np.asarray(x, dtype=float)) + 0.0
    if family == "h1":
        return lambda x: A / np.log(x)
    if family == "h2":
        return lambda x: A * B * np.log(x) ** (B - 1.0)
    if family == "h3":
        return lambda x: Cc / np.log(x)
    if family == "h4":
        return lambda x: Cc * B * np.log(x) ** (B - 1.0)
    if family == "h5":
        def vt(x):
            x = np.asarray(x, dtype=float)
            prod = np.log(x)
            cur = prod
            for _ in range(m - 1):
                cur = np.log(cur)
                prod = prod * cur
            return 1.0 / prod
        return vt
    raise ParameterOutOfRange(f"unknown family {family!r}")


def _domain_floor(family: str, m) -> float:
    """Smallest x where the family expression is defined and positive."""
    if family == "power":
        return 1.0
    if family == "h5":
        lo = 1.0
        for _ in range(m - 1):
            lo = math.exp(lo)
        return lo * (1.0 + 1e-12)
    return 1.0 + 1e-12


class ThinFunction:
    """One member h of the thin-prime generating family.

    Parameters are binary64; the object they define is h with exactly those
    float parameters, and all escalated-precision paths evaluate that same
    function.  Instances are immutable after construction and safe for
    concurrent read access (the phi memo cache is a plain dict; concurrent
    writes at worst recompute a value).
    """

    def __init__(self, family: str, c: float, gamma: float, A=None, B=None,
                 Cc=None, m=None, Ch: float = 1.0, x0: float = None):
        self.family = family
        self.c = float(c)
        self.gamma = float(gamma)
        self.A = None if A is None else float(A)
        self.B = None if B is None else float(B)
        self.Cc = None if Cc is None else float(Cc)
        self.m = None if m is None else int(m)
        self.Ch = float(Ch)
        self.is_identity = family == "power" and self.gamma == 1.0 and self.Ch == 1.0

        expr = _family_expr(family, self.c, self.A, self.B, self.Cc, self.m, self.Ch)
        derivs = [expr]
        for _ in range(4):
            derivs.append(sp.diff(derivs[-1], _X))
        self._h_np = [sp.lambdify(_X, d, modules="numpy") for d in derivs]
        self._h_mp = [sp.lambdify(_X, d, modules="mpmath") for d in derivs]
        self._vartheta = _vartheta_func(family, self.c, self.A, self.B, self.Cc, self.m)

        if x0 is None:
            x0 = self._select_x0()
        else:
            x0 = float(x0)
            self._verify_x0(x0)
        self.x0 = x0
        self.h_x0 = float(self._h_np[0](x0)) if not self.is_identity else x0
        self._phi_cache: dict = {}

    # -- construction helpers -------------------------------------------

    def _grid_ok(self, grid: np.ndarray) -> np.ndarray:
        """Per-point check of h>0, h'>0, h''>0 (and vartheta behavior at c=1)."""
        with np.errstate(all="ignore"):
            h0 = np.asarray(self._h_np[0](grid), dtype=float)
            h1 = np.asarray(self._h_np[1](grid), dtype=float)
            h2 = np.asarray(self._h_np[2](grid), dtype=float)
        ok = np.isfinite(h0) & np.isfinite(h1) & np.isfinite(h2)
        ok &= (h0 > 0) & (h1 > 0)
        if self.is_identity:
            return ok  # h''=0 for the exact identity; blessed degenerate case
        ok &= h2 > 0
        if self.c == 1.0:
            with np.errstate(all="ignore"):
                vt = np.asarray(self._vartheta(grid), dtype=float)
            ok &= np.isfinite(vt) & (vt > 0)
            # nonincreasing from this point on
            dec = np.empty_like(ok)
            dec[:-1] = vt[:-1] >= vt[1:] - 1e-15
            dec[-1] = True
            ok &= dec
        return ok

    def _scan_grid(self) -> np.ndarray:
        lo = _domain_floor(self.family, self.m)
        return np.geomspace(lo, 1e6, 10_000)

    def _select_x0(self) -> float:
        if self.is_identity:
            return 1.0
        grid = self._scan_grid()
        ok = self._grid_ok(grid)
        with np.errstate(all="ignore"):
            h0 = np.asarray(self._h_np[0](grid), dtype=float)
        ok &= np.isfinite(h0) & (h0 >= 1.0)
        # first index from which every later grid point passes
        good_suffix = np.flip(np.cumprod(np.flip(ok.astype(bool))))
        idx = np.flatnonzero(good_suffix)
        if idx.size == 0:
            raise MonotonicityUnattainable(
                f"no x0 <= 1e6 satisfies the growth checks for {self.family}")
        return float(grid[idx[0]])

    def _verify_x0(self, x0: float) -> None:
        if self.is_identity and x0 == 1.0:
            return
        lo = _domain_floor(self.family, self.m)
        if x0 < lo:
            raise ParameterOutOfRange(f"x0={x0} below the domain of {self.family}")
        grid = np.geomspace(x0, max(1e6, 4 * x0), 2_000)
        if not bool(self._grid_ok(grid).all()):
            raise MonotonicityUnattainable(
                f"given x0={x0} violates the growth checks for {self.family}")
        if float(self._h_np[0](x0)) < 1.0 - 1e-12:
            raise ParameterOutOfRange(f"h(x0)={self._h_np[0](x0)} < 1")

    # -- forward side -----------------------------------------------------

    def h(self, x: float) -> float:
        if x < self.x0:
            raise DomainError(f"x={x} below x0={self.x0}")
        if self.is_identity:
            return float(x)
        return float(self._h_np[0](x))

    def h_vec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.is_identity:
            return x.copy()
        return np.asarray(self._h_np[0](x), dtype=np.float64)

    def h_deriv(self, x: float, n: int = 1) -> float:
        if not 0 <= n <= 4:
            raise ParameterOutOfRange("h derivatives supported to order 4")
        if x < self.x0:
            raise DomainError(f"x={x} below x0={self.x0}")
        if self.is_identity:
            return float(x) if n == 0 else (1.0 if n == 1 else 0.0)
        return float(self._h_np[n](x))

    def h1_vec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.is_identity:
            return np.ones_like(x)
        return np.asarray(self._h_np[1](x), dtype=np.float64)

    def ell_h(self, x: float) -> float:
        if x < self.x0:
            raise DomainError(f"x={x} below x0={self.x0}")
        return self.h(x) / (self.Ch * x ** self.c)

    def vartheta(self, x) -> float:
        if np.min(x) < self.x0:
            raise DomainError("argument below x0")
        v = self._vartheta(x)
        return float(v) if np.isscalar(x) else np.asarray(v, dtype=float)

    # -- inverse side ------------------------------------------------------

    def phi(self, x: float) -> float:
        """Inverse of h, memoized per instance."""
        if x < self.h_x0 * (1 - 1e-12):
            raise DomainError(f"x={x} below h(x0)={self.h_x0}")
        if self.is_identity:
            return float(x)
        cached = self._phi_cache.get(x)
        if cached is not None:
            return cached
        if self.family == "power":
            y = (x / self.Ch) ** self.gamma
        else:
            y = self._phi_scalar(float(x))
        self._phi_cache[x] = y
        return y

    def _phi_scalar(self, x: float) -> float:
        h0, h1 = self._h_np[0], self._h_np[1]
        lo = self.x0
        hi = max(2.0 * lo, (x / self.Ch) ** self.gamma * 2.0)
        grow = 0
        while float(h0(hi)) < x:
            hi *= 2.0
            grow += 1
            if grow > 200:
                raise NoConvergence(f"no bracket for phi({x})")
        y = min(max((x / self.Ch) ** self.gamma, lo), hi)
        for _ in range(200):
            fy = float(h0(y)) - x
            if abs(fy) <= 1e-14 * x:
                return y
            if fy > 0:
                hi = y
            else:
                lo = y
            step = fy / float(h1(y))
            ynew = y - step
            if not (lo < ynew < hi):
                ynew = 0.5 * (lo + hi)
            y = ynew
        raise NoConvergence(f"phi({x}) did not reach tolerance in 200 iterations")

    def phi_vec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < self.h_x0 * (1 - 1e-12)):
            raise DomainError("argument below h(x0)")
        if self.is_identity:
            return x.copy()
        if self.family == "power":
            return (x / self.Ch) ** self.gamma
        y = np.maximum((x / self.Ch) ** self.gamma, self.x0)
        h0, h1 = self._h_np[0], self._h_np[1]
        for _ in range(80):
            with np.errstate(all="ignore"):
                res = np.asarray(h0(y), dtype=float) - x
                y = np.maximum(y - res / np.asarray(h1(y), dtype=float), self.x0)
            if np.all(np.abs(res) <= 1e-13 * x):
                break
        res = np.abs(np.asarray(h0(y), dtype=float) - x)
        bad = np.flatnonzero(res > 1e-13 * x)
        for i in bad:
            y[i] = self._phi_scalar(float(x[i]))
        return y

    def phi_deriv(self, x: float, n: int = 1) -> float:
        if not 1 <= n <= 3:
            raise ParameterOutOfRange("phi derivatives supported to order 3")
        y = self.phi(x)
        if self.is_identity:
            return 1.0 if n == 1 else 0.0
        d1 = float(self._h_np[1](y))
        if n == 1:
            return 1.0 / d1
        d2 = float(self._h_np[2](y))
        if n == 2:
            return -d2 / d1 ** 3
        d3 = float(self._h_np[3](y))
        return (3.0 * d2 * d2 - d3 * d1) / d1 ** 5

    def weight_vec(self, p: np.ndarray) -> np.ndarray:
        """Canonical per-prime weight h'(phi(p)) * log(p) = log(p)/phi'(p)."""
        p = np.asarray(p, dtype=np.float64)
        logp = np.log(p)
        if self.is_identity:
            return logp
        return self.h1_vec(self.phi_vec(p)) * logp

    def theta(self, x: float) -> float:
        if self.is_identity:
            return 0.0
        return 1.0 / (self.c + float(self._vartheta(self.phi(x)))) - self.gamma

    def sigma(self, x: float) -> float:
        """Decay weight of the inverse-side bounds: -theta for c=1, else 1."""
        if self.c > 1.0:
            return 1.0
        return -self.theta(x)

    # -- extended-precision floor decisions -------------------------------

    def h_mp(self, x) -> mp.mpf:
        with mp.workdps(MP_DPS):
            return self._h_mp[0](mp.mpf(x))

    def phi_mp(self, x) -> mp.mpf:
        with mp.workdps(MP_DPS):
            xm = mp.mpf(x)
            if self.is_identity:
                return xm
            if self.family == "power":
                return (xm / self.Ch) ** mp.mpf(self.gamma)
            y = mp.mpf(self.phi(float(x)))
            h0, h1 = self._h_mp[0], self._h_mp[1]
            for _ in range(60):
                res = h0(y) - xm
                if abs(res) <= mp.mpf(10) ** (-(MP_DPS - 5)) * xm:
                    break
                y = y - res / h1(y)
            return y

    def floor_h(self, n: int) -> int:
        """floor(h(n)) with the near-integer escalation path."""
        if self.is_identity:
            return int(n)
        v = self.h(float(n))
        if abs(v - round(v)) >= NEAR_INT_GUARD:
            return math.floor(v)
        with mp.workdps(MP_DPS):
            vm = self.h_mp(n)
            if abs(vm - mp.nint(vm)) < MP_GUARD:
                raise PrecisionExhausted(
                    f"h({n}) within {MP_GUARD} of an integer at {MP_DPS} digits")
            return int(mp.floor(vm))

    def floor_neg_phi(self, x: float) -> int:
        """floor(-phi(x)) with the near-integer escalation path."""
        if self.is_identity:
            return -int(x) if float(x) == int(x) else math.floor(-x)
        v = self.phi(x)
        if abs(v - round(v)) >= NEAR_INT_GUARD:
            return math.floor(-v)
        with mp.workdps(MP_DPS):
            vm = self.phi_mp(x)
            if abs(vm - mp.nint(vm)) < MP_GUARD:
                raise PrecisionExhausted(
                    f"phi({x}) within {MP_GUARD} of an integer at {MP_DPS} digits")
            return int(mp.floor(-vm))

    # -- config round trip -------------------------------------------------

    def to_config_text(self) -> str:
        pairs = [("family", self.family)]
        if self.family == "power":
            pairs.append(("gamma", repr(self.gamma)))
        else:
            pairs.append(("c", repr(self.c)))
        for key, val in (("A", self.A), ("B", self.B), ("C", self.Cc), ("m", self.m)):
            if val is not None:
                pairs.append((key, repr(val)))
        pairs.append(("Ch", repr(self.Ch)))
        pairs.append(("x0", repr(self.x0)))
        return "\n".join(f"{k}={v}" for k, v in pairs)

    def __repr__(self):
        return (f"ThinFunction({self.family}, c={self.c:.6g}, gamma={self.gamma:.6g}, "
                f"x0={self.x0:.6g})")


def make_thin_function(family: str, *, gamma=None, c=None, A=None, B=None,
                       Cc=None, m=None, Ch=1.0, x0=None) -> ThinFunction:
    """Validate family parameters and construct the ThinFunction.

    For the power family pass gamma (c is forced to 1/gamma); h1/h2 take c
    directly; h3/h4/h5 have c = 1.  x0=None auto-selects the smallest left
    endpoint on a log grid where the growth checks hold.
    """
    family = family.lower()
    if family not in FAMILIES:
        raise ParameterOutOfRange(f"unknown family {family!r}")
    if Ch <= 0:
        raise ParameterOutOfRange("Ch must be positive")
    if family == "power":
        if gamma is None:
            if c is None:
                raise ParameterOutOfRange("power family needs gamma (or c)")
            gamma = 1.0 / c
        c = 1.0 / gamma
        if not 1.0 <= c < 2.0:
            raise ParameterOutOfRange(f"c=1/gamma={c} outside [1, 2)")
        return ThinFunction(family, c, gamma, Ch=Ch, x0=x0)
    if family in ("h1", "h2"):
        if c is None:
            raise ParameterOutOfRange(f"{family} needs the exponent c")
        if not 1.0 <= c < 2.0:
            raise ParameterOutOfRange(f"c={c} outside [1, 2)")
        if A is None:
            raise ParameterOutOfRange(f"{family} needs A")
        if family == "h2":
            if B is None or not 0.0 < B < 1.0:
                raise ParameterOutOfRange("h2 needs B in (0, 1)")
        return ThinFunction(family, c, 1.0 / c, A=A, B=B, Ch=Ch, x0=x0)
    if family == "h3":
        if Cc is None or Cc <= 0:
            raise ParameterOutOfRange("h3 needs C > 0")
        return ThinFunction(family, 1.0, 1.0, Cc=Cc, Ch=Ch, x0=x0)
    if family == "h4":
        if Cc is None or Cc <= 0:
            raise ParameterOutOfRange("h4 needs C > 0")
        if B is None or not 0.0 < B < 1.0:
            raise ParameterOutOfRange("h4 needs B in (0, 1)")
        return ThinFunction(family, 1.0, 1.0, B=B, Cc=Cc, Ch=Ch, x0=x0)
    # h5
    if m is None or int(m) < 1:
        raise ParameterOutOfRange("h5 needs iterated-log depth m >= 1")
    return ThinFunction(family, 1.0, 1.0, m=int(m), Ch=Ch, x0=x0)


def thin_function_from_config(text: str) -> ThinFunction:
    """Parse the flat key=value block emitted by to_config_text."""
    kv = {}
    for token in text.replace(", ", "\n").splitlines():
        token = token.strip()
        if not token or token.startswith("#"):
            continue
        if "=" not in token:
            raise ParameterOutOfRange(f"malformed entry {token!r}")
        k, v = token.split("=", 1)
        kv[k.strip()] = v.strip()
    family = kv.pop("family", "power")
    conv = {"gamma": float, "c": float, "A": float, "B": float, "C": float,
            "m": int, "Ch": float, "x0": float}
    kwargs = {}
    for k, v in kv.items():
        if k not in conv:
            raise ParameterOutOfRange(f"unknown thin-function key {k!r}")
        kwargs["Cc" if k == "C" else k] = conv[k](v)
    return make_thin_function(family, **kwargs)


QUANTITIES = ("h", "h_deriv", "phi", "phi_deriv", "ell_h", "vartheta",
              "theta", "sigma")


def evaluate(tf: ThinFunction, quantity: str, x: float, n: int = 1) -> float:
    """Uniform scalar access to h, phi, their derivatives and diagnostics."""
    if quantity == "h":
        return tf.h(x)
    if quantity == "h_deriv":
        return tf.h_deriv(x, n)
    if quantity == "phi":
        return tf.phi(x)
    if quantity == "phi_deriv":
        return tf.phi_deriv(x, n)
    if quantity == "ell_h":
        return tf.ell_h(x)
    if quantity == "vartheta":
        return tf.vartheta(x)
    if quantity == "theta":
        return tf.theta(x)
    if quantity == "sigma":
        return tf.sigma(x)
    raise ParameterOutOfRange(f"unknown quantity {quantity!r}")


class RatioRow(NamedTuple):
    x: float
    side: str       # "h" or "phi"
    n: int
    ratio: float
    limit: float


def _falling(base: float, n: int) -> float:
    out = 1.0
    for j in range(n):
        out *= base - j
    return out


def derivative_ratio_report(tf: ThinFunction, n: int, grid) -> list[RatioRow]:
    """Measured derivative ratios against their limiting constants.

    c > 1: x^n h^(n)/h -> c(c-1)...(c-n+1) and x^n phi^(n)/phi -> gamma(...).
    c = 1, n >= 2: x^n h^(n)/(vartheta*h) and x^n phi^(n)/(theta*phi), both
    with limit (-1)^(n-2) (n-2)!.  For c = 1, n = 1 the h row reports the
    exact identity x h'/(h (1+vartheta)) against 1 and the phi row reports
    x phi'/phi against 1 (slow approach, not asserted).
    """
    if not 1 <= n <= 4:
        raise ParameterOutOfRange("n must be in 1..4")
    grid = [float(x) for x in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterOutOfRange("grid must be strictly increasing")
    rows = []
    for x in grid:
        if x < tf.x0:
            raise DomainError(f"grid point {x} below x0")
        hn = tf.h_deriv(x, n)
        h0 = tf.h(x)
        if tf.c > 1.0:
            rows.append(RatioRow(x, "h", n, x ** n * hn / h0, _falling(tf.c, n)))
        elif n == 1:
            vt = tf.vartheta(x)
            rows.append(RatioRow(x, "h", n, x * hn / (h0 * (1.0 + vt)), 1.0))
        else:
            vt = tf.vartheta(x)
            lim = float((-1) ** (n - 2) * math.factorial(n - 2))
            rows.append(RatioRow(x, "h", n, x ** n * hn / (vt * h0), lim))
        if n <= 3 and x >= tf.h_x0:
            pn = tf.phi_deriv(x, n)
            p0 = tf.phi(x)
            if tf.c > 1.0:
                rows.append(RatioRow(x, "phi", n, x ** n * pn / p0,
                                     _falling(tf.gamma, n)))
            elif n == 1:
                rows.append(RatioRow(x, "phi", n, x * pn / p0, 1.0))
            elif not tf.is_identity:
                th = tf.theta(x)
                lim = float((-1) ** (n - 2) * math.factorial(n - 2))
                rows.append(RatioRow(x, "phi", n, x ** n * pn / (th * p0), lim))
    return rows


@dataclass(frozen=True)
class AdmissibleParams:
    """Exponent bookkeeping for a polynomial degree q and density gamma."""
    q: int
    gamma: float
    chi_max: float
    c_q: Fraction = field(compare=False)


def admissible_params(q: int, gamma: float) -> AdmissibleParams:
    """Largest chi with (2^(2q+2)+2^q-2)(1-gamma) + 2^q(2^(q+3)-2) chi < 1."""
    if q < 1:
        raise ParameterOutOfRange("q must be >= 1")
    if not 0.0 < gamma <= 1.0:
        raise ParameterOutOfRange("gamma must lie in (0, 1]")
    a = 2 ** (2 * q + 2) + 2 ** q - 2
    b = 2 ** q * (2 ** (q + 3) - 2)
    chi = (1.0 - a * (1.0 - gamma)) / b
    c_q = Fraction(a, a - 1)
    return AdmissibleParams(q, gamma, max(chi, 0.0), c_q)
