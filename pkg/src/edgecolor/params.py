"""Parameter set for the online coloring algorithm.

All derived quantities are recomputed from (delta, eps) plus the constant
overrides; overrides exist so desk-scale tests can force the bad/dangerous
branches, which the default constants put far out of reach for small delta.

Palette weights live on an exact grid: every stored P value is an integer
numerator over D = delta**10.  Threshold comparisons (badness, danger, the
scale-up cap A, sums against 1) are done in exact rational arithmetic, never
with float tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction


class ParamError(ValueError):
    pass


def _frac(x) -> Fraction:
    # str() round-trips a float's shortest repr, giving a stable exact value.
    if isinstance(x, Fraction):
        return x
    return Fraction(str(x))


@dataclass
class Params:
    delta: int
    eps: float
    c_eps: float = 10.0
    c_A: float = 4.0
    c_K: float | None = None  # default 35 * c_A**2
    alpha: float | None = None  # default eps**3 / 100

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise ParamError(f"eps must be in (0,1), got {self.eps}")
        if self.delta < 1:
            raise ParamError(f"delta must be >= 1, got {self.delta}")
        if self.c_K is None:
            self.c_K = 35.0 * self.c_A**2
        if self.alpha is None:
            self.alpha = self.eps**3 / 100.0
        self.eps_frac = _frac(self.eps)
        self.alpha_frac = _frac(self.alpha)
        self.c_K_frac = _frac(self.c_K)
        self.c_A_frac = _frac(self.c_A)
        # Exact grid: P values are numerators over D.
        self.D = self.delta**10
        # A = c_A / (eps^2 * delta); scale-ups apply only to P <= A.
        self.A = self.c_A_frac / (self.eps_frac**2 * self.delta)
        self.cap_num = self._floor_times_D(self.A)
        # Initial weight (1 - eps)/delta rounded to the nearest grid point.
        self.initial_num = self._round_times_D((1 - self.eps_frac) / self.delta)
        # badness(v) >= bad_threshold makes v bad; baddeg >= danger_threshold
        # makes it dangerous.
        self.bad_threshold = 2 * self.c_K_frac * self.eps_frac * self.delta
        self.danger_threshold = self.alpha_frac * self.delta
        self.ck_eps = self.c_K_frac * self.eps_frac

    def _round_times_D(self, x: Fraction) -> int:
        y = x * self.D
        return int((y.numerator * 2 + y.denominator) // (2 * y.denominator))

    def _floor_times_D(self, x: Fraction) -> int:
        y = x * self.D
        return y.numerator // y.denominator

    def grid(self, num: int) -> Fraction:
        return Fraction(num, self.D)

    def regime_ok(self, n: int) -> bool:
        """Whether (delta, eps, n) satisfies eps >= c_eps*(sqrt(ln n)/delta)^(1/16).

        Outside the regime the guarantees degrade but the library still runs;
        callers are expected to report this flag, not refuse."""
        if n < 3:
            return True
        return self.eps >= self.c_eps * (math.sqrt(math.log(n)) / self.delta) ** (1 / 16)

    def regime_report(self, n: int) -> dict:
        need = self.c_eps * (math.sqrt(math.log(max(n, 3))) / self.delta) ** (1 / 16)
        return {"n": n, "eps": self.eps, "eps_required": need, "in_regime": self.regime_ok(n)}

    def overrides_used(self) -> bool:
        return (
            self.c_eps != 10.0
            or self.c_A != 4.0
            or self.c_K != 35.0 * self.c_A**2
            or self.alpha != self.eps**3 / 100.0
        )
