"""Randomised checks of the discrete product rules, summation-by-parts
formulas and the norm inequalities used in the stability analysis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import PeriodicGrid

IDENTITY_RTOL = 1e-12


@dataclass(frozen=True)
class Operators:
    """First differences used by the checks. Swappable so a deliberately
    broken operator can serve as a negative control."""

    dplus: callable = None
    dminus: callable = None

    def __post_init__(self):
        if self.dplus is None:
            object.__setattr__(self, "dplus", lambda a, dx: (np.roll(a, -1) - a) / dx)
        if self.dminus is None:
            object.__setattr__(self, "dminus", lambda a, dx: (a - np.roll(a, 1)) / dx)


@dataclass
class CheckResult:
    name: str
    kind: str  # "identity" or "inequality"
    worst: float = 0.0  # max relative residual, or max relative violation
    tolerance: float = IDENTITY_RTOL

    @property
    def passed(self) -> bool:
        if self.kind == "identity":
            return self.worst <= self.tolerance
        return self.worst <= 0.0


@dataclass
class IdentityReport:
    J: int
    trials: int
    seed: int
    results: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failures(self):
        return [r for r in self.results.values() if not r.passed]


def _rel(lhs, rhs, scale):
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    num = float(np.max(np.abs(lhs - rhs)))
    if num == 0.0:
        return 0.0
    den = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))), float(np.max(scale)))
    return num / den


def _checks(a, b, dx, dt, ops):
    """Yield (name, kind, value) for one pair of sequences."""
    S = lambda u, ell: np.roll(u, -ell)
    Dp = lambda u: ops.dplus(u, dx)
    Dm = lambda u: ops.dminus(u, dx)
    D = lambda u: (Dp(u) + Dm(u)) / 2
    ip = lambda u, w: dx * float(np.dot(u, w))
    ipa = lambda u, w: dx * float(np.sum(np.abs(u * w)))  # cancellation-free scale
    n2 = lambda u: np.sqrt(ip(u, u))
    ninf = lambda u: float(np.max(np.abs(u)))
    n4 = lambda u: float((dx * np.sum(u**4)) ** 0.25)

    def ident(name, lhs, rhs, *terms):
        scale = max([0.0] + [float(np.max(np.abs(t))) for t in terms])
        yield name, "identity", _rel(lhs, rhs, scale)

    def ineq(name, lhs, rhs, *terms):
        scale = max([abs(lhs), abs(rhs)] + [abs(t) for t in terms])
        yield name, "inequality", 0.0 if scale == 0.0 else (lhs - rhs) / scale

    # pointwise product rules
    yield from ident("dpdm_commute", Dp(Dm(a)), Dm(Dp(a)))
    yield from ident("leibniz_dplus", Dp(a * b), S(a, 1) * Dp(b) + b * Dp(a),
                     S(a, 1) * Dp(b), b * Dp(a))
    yield from ident("leibniz_dminus", Dm(a * b), S(a, -1) * Dm(b) + b * Dm(a),
                     S(a, -1) * Dm(b), b * Dm(a))
    yield from ident("leibniz_center", D(a * b), D(a) * S(b, 1) + S(a, -1) * D(b),
                     D(a) * S(b, 1), S(a, -1) * D(b))
    yield from ident("leibniz_center_split", D(a * b),
                     b * D(a) + S(a, 1) / 2 * Dp(b) + S(a, -1) / 2 * Dm(b),
                     b * D(a), S(a, 1) / 2 * Dp(b), S(a, -1) / 2 * Dm(b))
    yield from ident("square_dplus", a * Dp(a), Dp(a * a) / 2 - dx / 2 * Dp(a) ** 2,
                     Dp(a * a) / 2, dx / 2 * Dp(a) ** 2)
    yield from ident("square_dminus", a * Dm(a), Dm(a * a) / 2 + dx / 2 * Dm(a) ** 2,
                     Dm(a * a) / 2, dx / 2 * Dm(a) ** 2)

    # norm identities
    yield from ident("norm_dplus_dminus", n2(Dp(a)), n2(Dm(a)))
    yield from ident("norm_center_square", n2(D(a * a / 2)),
                     n2(D(a) * (S(a, 1) + S(a, -1)) / 2))
    t1, t2 = 4 / dx**2 * n2(Dp(a)) ** 2, 4 / dx**2 * n2(D(a)) ** 2
    yield from ident("norm_second_difference", n2(Dp(Dm(a))) ** 2, t1 - t2, t1, t2)
    t1, t2 = 4 / dx**2 * n2(Dp(Dm(a))) ** 2, 4 / dx**2 * n2(Dp(D(a))) ** 2
    yield from ident("norm_third_difference", n2(Dp(Dp(Dm(a)))) ** 2, t1 - t2, t1, t2)

    # summation by parts and cubic identities
    yield from ident("sbp_dplus", ip(Dp(a), b), -ip(a, Dm(b)),
                     ipa(Dp(a), b), ipa(a, Dm(b)))
    yield from ident("sbp_center", ip(D(a), b), -ip(a, D(b)),
                     ipa(D(a), b), ipa(a, D(b)))
    yield from ident("sbp_self_dplus", ip(a, Dp(a)), -dx / 2 * n2(Dp(a)) ** 2,
                     ipa(a, Dp(a)))
    yield from ident("sbp_dplus_shift_product", ip(Dp(a), a * S(a, 1)),
                     -dx**2 / 3 * ip(Dp(a), Dp(a) ** 2),
                     ipa(Dp(a), a * S(a, 1)), dx**2 / 3 * ipa(Dp(a), Dp(a) ** 2))
    yield from ident("sbp_center_shift_product", ip(D(a), S(a, -1) * S(a, 1)),
                     -4 * dx**2 / 3 * ip(D(a), D(a) ** 2),
                     ipa(D(a), S(a, -1) * S(a, 1)), 4 * dx**2 / 3 * ipa(D(a), D(a) ** 2))
    yield from ident("sbp_product_center", ip(a, D(a * b)), ip(Dp(b), a * S(a, 1) / 2),
                     ipa(a, D(a * b)), ipa(Dp(b), a * S(a, 1) / 2))
    t1 = -1 / dx**2 * ip(Dp(b), a * S(a, 1))
    t2 = 1 / dx**2 * ip(D(b), S(a, -1) * S(a, 1))
    yield from ident("sbp_second_difference_product", ip(Dp(Dm(a)), D(a * b)), t1 + t2,
                     ipa(Dp(Dm(a)), D(a * b)), 1 / dx**2 * ipa(Dp(b), a * S(a, 1)),
                     1 / dx**2 * ipa(D(b), S(a, -1) * S(a, 1)))
    yield from ident("cubic_energy", ip(a, D(a * a / 2)),
                     -dx**2 / 12 * ip(Dp(a), Dp(a) ** 2),
                     ipa(a, D(a * a / 2)), dx**2 / 12 * ipa(Dp(a), Dp(a) ** 2))
    t1, t2 = ip(Dp(a), Dp(a) ** 2) / 6, 2 / 3 * ip(D(a), D(a) ** 2)
    yield from ident("cubic_second_difference", ip(D(a * a / 2), Dp(Dm(a))), t1 - t2,
                     ipa(D(a * a / 2), Dp(Dm(a))), ipa(Dp(a), Dp(a) ** 2) / 6,
                     2 / 3 * ipa(D(a), D(a) ** 2))
    t1 = ip(D(a) ** 2, (S(a, 1) * S(b, 1) + S(a, -1) * S(b, -1)) / 2)
    t2 = 4 * dx**2 / 3 * ip(D(b), D(a) ** 3)
    t3 = ip(D(D(b)), a**3) / 3
    yield from ident("cubic_mixed_center", ip(D(a * b), D(a * a / 2)), t1 - t2 - t3,
                     ipa(D(a * b), D(a * a / 2)),
                     ipa(D(a) ** 2, (S(a, 1) * S(b, 1) + S(a, -1) * S(b, -1)) / 2),
                     4 * dx**2 / 3 * ipa(D(b), D(a) ** 3), ipa(D(D(b)), a**3) / 3)

    # inequalities
    yield from ineq("interpolation_dplus", n2(Dp(a)) ** 2, n2(a) * n2(Dp(Dm(a))))
    yield from ineq("gagliardo_nirenberg_l4", n4(Dp(a)), np.sqrt(3 * ninf(a) * n2(Dp(Dm(a)))))
    lhs = n2(D(a * b)) ** 2
    rhs = ip(b * b + dt / 2 * (Dp(b) ** 2 + Dm(b) ** 2), D(a) ** 2) + 0.5 * ip(
        (S(b, -1) ** 2 + S(b, 1) ** 2) / dt + 0.75 * Dp(b) ** 2 + 0.75 * Dm(b) ** 2, a * a)
    yield from ineq("product_center_bound", lhs, rhs)
    d3a = Dp(Dp(Dm(a)))
    for sig in (0, 1):
        lhs = ip(d3a, D(a * b))
        rhs = (dt / 4 * ip(np.abs(Dp(b)) + np.abs(Dm(b)), d3a**2)
               + 1 / (4 * dt) * ip(np.abs(Dm(b)) + np.abs(Dp(b)), a * a)
               + 0.5 * ip(ninf(Dp(b)) ** sig - dx / 2 * Dm(b), Dp(Dm(a)) ** 2)
               + 0.5 * ninf(Dp(b)) ** (2 - sig) * n2(Dp(a)) ** 2
               - ip(b, Dp(D(a)) ** 2))
        yield from ineq(f"third_difference_product_bound_sigma{sig}", lhs, rhs,
                        ipa(d3a, D(a * b)), ipa(b, Dp(D(a)) ** 2))
        for nu in (0.0, 0.5, 1.0):
            lhs = ip(d3a, b * D(a))
            rhs = (0.5 * ip(dx**nu * np.abs(Dm(b)) ** sig - dx / 2 * Dm(b), Dp(Dm(a)) ** 2)
                   + 1 / (2 * dx**nu) * ip(np.abs(Dp(b)) ** (2 - sig), Dp(a) ** 2)
                   - ip(b, Dp(D(a)) ** 2))
            yield from ineq(f"third_difference_weighted_bound_sigma{sig}_nu{nu:g}", lhs, rhs,
                            ipa(d3a, b * D(a)), ipa(b, Dp(D(a)) ** 2))
    for gamma in (0.0, 0.25, 0.49):
        lhs = ip(d3a, D(a * a / 2))
        ia = ninf(a)
        rhs = ((dx ** (0.5 - gamma) + ia + 9 * ia**2 * dx ** (gamma - 0.5)) / 2
               * n2(Dp(Dm(a))) ** 2 + ia * n2(Dp(D(a))) ** 2)
        yield from ineq(f"third_difference_square_bound_gamma{gamma:g}", lhs, rhs,
                        ipa(d3a, D(a * a / 2)))


def check_discrete_identities(trials: int, seed: int, J: int = 64, L: float = 1.0,
                              ops: Operators | None = None,
                              zero: bool = False) -> IdentityReport:
    """Evaluate every identity and inequality on ``trials`` seeded random pairs.

    Sequences are uniform on [-1, 1]; the auxiliary time step for the
    bounds that involve one is drawn log-uniformly in [dx^3, 10 dx].
    ``zero=True`` replaces the random sequences by zeros.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = PeriodicGrid(L, J)
    dx = grid.dx
    ops = ops or Operators()
    rng = np.random.default_rng(seed)
    report = IdentityReport(J=J, trials=trials, seed=seed)
    for _ in range(trials):
        a = rng.uniform(-1, 1, J)
        b = rng.uniform(-1, 1, J)
        dt = dx * 10 ** rng.uniform(np.log10(dx**2), 1)
        if zero:
            a = np.zeros(J)
            b = np.zeros(J)
        for name, kind, value in _checks(a, b, dx, dt, ops):
            r = report.results.get(name)
            if r is None:
                report.results[name] = CheckResult(name, kind, value)
            else:
                r.worst = max(r.worst, value)
    return report
