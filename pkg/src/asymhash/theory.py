"""Collision probabilities and rho exponents for the competing schemes.

``rho = log p1 / log p2`` governs the ``O(n^rho)`` query cost of a
(K, L)-bucketed index; smaller is better. All functions are scalar and pure.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence


class DomainError(ValueError):
    """Parameters fall outside the region where a rho exponent is defined."""


class InfeasibleError(ValueError):
    """No grid point satisfies the optimization constraints."""


DEFAULT_RATIOS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)
DEFAULT_C_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))

MH_ALSH = "mh-alsh"
SIGN = "sign"
SIGN_ALSH = "sign-alsh"
L2_ALSH = "l2-alsh"
CURVE_SCHEMES = (MH_ALSH, SIGN, SIGN_ALSH, L2_ALSH)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def f_r(d: float, r: float) -> float:
    """Collision probability of L2LSH with bucket width ``r`` at distance ``d``."""
    if r <= 0:
        raise ValueError("r must be positive")
    if d < 0:
        raise ValueError("distance must be non-negative")
    if d == 0:
        return 1.0
    z = r / d
    return (1.0 - 2.0 * normal_cdf(-z)
            - 2.0 / (math.sqrt(2.0 * math.pi) * z) * -math.expm1(-z * z / 2.0))


def srp_collision(cosine: float) -> float:
    return 1.0 - math.acos(max(-1.0, min(1.0, cosine))) / math.pi


def resemblance(a: int, f_x: int, f_y: int) -> float:
    """Minhash collision probability ``a / (f_x + f_y - a)``."""
    union = f_x + f_y - a
    return a / union if union > 0 else 1.0


def mh_alsh_collision(a: int, M: int) -> float:
    """Collision probability under the double padding: ``a / (2M - a)``."""
    return a / (2 * M - a)


def mh_alsh_prime_collision(a: int, M: int, f_q: int) -> float:
    """Collision probability under the single padding: ``a / (M + f_q - a)``."""
    return a / (M + f_q - a)


def hs_collision(a: int, D: int, N: int = 2 ** 31) -> float:
    """Sampling-hash collision probability ``a/D + (1 - a/D)/N``."""
    return a / D + (1.0 - a / D) / N


def binary_cosine(a: int, f_x: int, f_y: int) -> float:
    return a / math.sqrt(f_x * f_y) if f_x and f_y else 0.0


def _ratio_check(ratio: float, c: float):
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio {ratio} outside (0, 1]")
    if not 0 < c < 1:
        raise ValueError(f"c {c} outside (0, 1)")


def _rho(p1: float, p2: float) -> float:
    if p1 == 1.0 and 0 < p2 < 1:
        return 0.0
    if not (0 < p1 < 1 and 0 < p2 < 1):
        raise DomainError(f"collision probabilities ({p1}, {p2}) must lie in (0, 1)")
    return math.log(p1) / math.log(p2)


def rho_mh_alsh(ratio: float, c: float) -> float:
    """Asymmetric minhash exponent in terms of ``S0 / M``."""
    _ratio_check(ratio, c)
    if ratio == 1.0:
        # p1 = 1: log p1 = 0
        return 0.0
    return _rho(ratio / (2.0 - ratio), c * ratio / (2.0 - c * ratio))


def rho_sign(ratio: float, c: float) -> float:
    """Signed-random-projection ALSH exponent in terms of ``S0 / V^2``."""
    _ratio_check(ratio, c)
    if ratio == 1.0:
        return 0.0
    return _rho(srp_collision(ratio), srp_collision(c * ratio))


def _q_check(S0, c, f_q, M):
    if not 0 < c < 1:
        raise ValueError(f"c {c} outside (0, 1)")
    if S0 <= 0 or f_q <= 0 or M <= 0:
        raise ValueError("S0, f_q and M must be positive")
    if S0 >= f_q + M:
        raise DomainError("precondition violated: S0 must be < f_q + M")


def rho_minhash_q(S0: float, c: float, f_q: int, M: int) -> float:
    """Plain minhash exponent for a query of known size ``f_q``.

    Unlike the asymmetric exponents this can exceed 1.
    """
    _q_check(S0, c, f_q, M)
    if c * S0 >= f_q:
        raise DomainError("precondition violated: c * S0 must be < f_q")
    return _rho(S0 / (f_q + M - S0), c * S0 / f_q)


def rho_mh_alsh_q(S0: float, c: float, f_q: int, M: int) -> float:
    """Asymmetric minhash (single padding) exponent for a query of size ``f_q``."""
    _q_check(S0, c, f_q, M)
    return _rho(S0 / (f_q + M - S0), c * S0 / (f_q + M - c * S0))


def rho_hs(S0: float, c: float, D: int, N: int = 2 ** 31) -> float:
    """Exponent of the coordinate-sampling LSH for binary inner products."""
    if not 0 < c < 1:
        raise ValueError(f"c {c} outside (0, 1)")
    if S0 <= 0 or S0 > D:
        raise ValueError("S0 must lie in (0, D]")
    keep = (N - 1) / N
    p1 = keep * S0 / D + 1 / N
    p2 = keep * c * S0 / D + 1 / N
    if p1 >= 1:
        return 0.0
    return _rho(p1, p2)


def sign_alsh_zstar(m: int) -> float:
    """Upper bound ``z*`` on the query-side cosine used by the Sign-ALSH bound."""
    a = m - m * 2.0 ** (m - 1)
    z = (a + math.sqrt(a * a + m * m * (2.0 ** m - 1))) / (4.0 * (2.0 ** m - 1))
    return z ** (2.0 ** -m)


U_GRID = tuple(round(0.01 * k, 2) for k in range(1, 100))
M_GRID = (1, 2, 3, 4, 5)
R_GRID = tuple(round(0.5 + 0.1 * k, 1) for k in range(46))


@dataclass(frozen=True)
class L2AlshOptimum:
    rho: float
    U: float
    m: int
    r: float


@dataclass(frozen=True)
class SignAlshOptimum:
    rho: float
    U: float
    m: int


def l2alsh_feasible(S0: float, c: float, V: float, U: float, m: int) -> bool:
    return U ** (2 ** (m + 1) - 2) * V * V / S0 < 1 - c


def optimize_rho_l2alsh(S0: float, c: float, V: float, U_grid=U_GRID, m_grid=M_GRID,
                        r_grid=R_GRID) -> L2AlshOptimum:
    """Grid minimum of the L2-ALSH exponent; ties keep the lexicographically first (U, m, r)."""
    if not 0 < c < 1:
        raise ValueError(f"c {c} outside (0, 1)")
    if S0 <= 0 or V <= 0:
        raise ValueError("S0 and V must be positive")
    best = None
    for U in U_grid:
        su = S0 * U * U / (V * V)
        for m in m_grid:
            if not l2alsh_feasible(S0, c, V, U, m):
                continue
            near = m / 2 - 2 * su + 2 * U ** (2 ** (m + 1))
            far = m / 2 - 2 * c * su
            if near <= 0 or far <= 0:
                continue
            for r in r_grid:
                p1, p2 = f_r(math.sqrt(near), r), f_r(math.sqrt(far), r)
                if not (0 < p2 < p1 < 1):
                    continue
                rho = math.log(p1) / math.log(p2)
                if best is None or rho < best.rho:
                    best = L2AlshOptimum(rho, U, m, r)
    if best is None:
        raise InfeasibleError(f"no feasible L2-ALSH parameters for S0={S0}, c={c}, V={V}")
    return best


def optimize_rho_signalsh(S0: float, c: float, V: float, U_grid=U_GRID,
                          m_grid=M_GRID) -> SignAlshOptimum:
    """Grid minimum of the Sign-ALSH exponent over ``(U, m)``."""
    if not 0 < c < 1:
        raise ValueError(f"c {c} outside (0, 1)")
    if S0 <= 0 or V <= 0:
        raise ValueError("S0 and V must be positive")
    best = None
    for U in U_grid:
        su = S0 * U * U / (V * V)
        for m in m_grid:
            near = su / (m / 4 + U ** (2 ** (m + 1)))
            far = min(c * su, sign_alsh_zstar(m))
            if not -1 <= near <= 1:
                continue
            p1, p2 = srp_collision(near), srp_collision(far)
            if not (0 < p2 < p1 < 1):
                continue
            rho = math.log(p1) / math.log(p2)
            if best is None or rho < best.rho:
                best = SignAlshOptimum(rho, U, m)
    if best is None:
        raise InfeasibleError(f"no feasible Sign-ALSH parameters for S0={S0}, c={c}, V={V}")
    return best


@dataclass(frozen=True)
class RhoCurve:
    scheme: str
    ratio: float
    points: tuple[tuple[float, float], ...]


def _curve_value(scheme: str, ratio: float, c: float) -> float:
    if scheme == MH_ALSH:
        return rho_mh_alsh(ratio, c)
    if scheme == SIGN:
        return rho_sign(ratio, c)
    # optimized schemes take S0 / V^2 = ratio with V = 1
    if scheme == SIGN_ALSH:
        return optimize_rho_signalsh(ratio, c, 1.0).rho
    if scheme == L2_ALSH:
        return optimize_rho_l2alsh(ratio, c, 1.0).rho
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {CURVE_SCHEMES}")


def emit_rho_curves(ratios: Sequence[float] = DEFAULT_RATIOS,
                    c_grid: Sequence[float] = DEFAULT_C_GRID,
                    schemes: Iterable[str] = (MH_ALSH, SIGN)) -> list[RhoCurve]:
    """rho-versus-c curves; infeasible points of optimized schemes are skipped."""
    for r in ratios:
        if not 0 < r <= 1:
            raise ValueError(f"ratio {r} outside (0, 1]")
    cs = sorted(set(float(c) for c in c_grid))
    for c in cs:
        if not 0 < c < 1:
            raise ValueError(f"c {c} outside (0, 1)")
    curves = []
    for scheme in schemes:
        if scheme not in CURVE_SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; expected one of {CURVE_SCHEMES}")
        for ratio in ratios:
            pts = []
            for c in cs:
                try:
                    pts.append((c, _curve_value(scheme, ratio, c)))
                except (InfeasibleError, DomainError):
                    continue
            curves.append(RhoCurve(scheme, float(ratio), tuple(pts)))
    return curves


def curves_to_csv(curves: Sequence[RhoCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "ratio", "c", "rho"])
    for cv in curves:
        for c, rho in cv.points:
            w.writerow([cv.scheme, f"{cv.ratio:.6g}", f"{c:.6g}", f"{rho:.6g}"])
    return buf.getvalue()
