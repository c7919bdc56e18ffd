"""Diagram-by-diagram Born series for delta, delta-comb and square-wall targets.

Amplitudes are the coefficients of the momentum-conserving channel
delta(p_b - p_a) (``t``) and the momentum-reversing channel delta(p_b + p_a)
(``r``) once one energy delta has been traded for m/p. Vertex phases follow
exp(i (p_b - p_a) z), so a scatterer at ``z`` contributes exp(-2 i p z) to
``r``. In the usual exp(+i p x) picture this ``r`` is the reflection amplitude
for a wave arriving from the right; ``t`` is the same from either side.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy import interpolate

from .propagator import Kinematics

MAX_ORDER = 64

# |1 + i Lambda| below this is treated as sitting on the pole
POLE_TOL = 1e-12
# Shanks denominator floor
SHANKS_TOL = 1e-14
# cond(I - K) above 1/COMB_TOL counts as singular
COMB_TOL = 1e-12


class PoleError(ArithmeticError):
    """The resummed amplitude sits on a pole (1 + i Lambda = 0)."""


class ResonancePoleError(PoleError):
    """The comb site system I - K is numerically singular."""


class AccelerationDegenerateError(ArithmeticError):
    """Shanks denominator vanishes; the partial sums have already converged."""


# --- potentials -----------------------------------------------------------

@dataclass(frozen=True)
class Delta:
    """V(x) = alpha * delta(x - position)."""

    alpha: float
    position: float = 0.0


@dataclass(frozen=True)
class DeltaComb:
    """Finite sum of deltas with strictly increasing positions."""

    alphas: tuple
    positions: tuple

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "positions", tuple(float(a) for a in self.positions))
        if not self.alphas:
            raise ValueError("delta comb needs at least one site")
        if len(self.alphas) != len(self.positions):
            raise ValueError("alphas and positions differ in length")
        if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
            raise ValueError("comb positions must be strictly increasing")

    @classmethod
    def from_sites(cls, sites: Sequence[tuple]) -> "DeltaComb":
        alphas, positions = zip(*sites)
        return cls(alphas, positions)

    def __len__(self):
        return len(self.alphas)


@dataclass(frozen=True)
class Barrier:
    """V(x) = height on [start, start + width], zero elsewhere."""

    height: float
    width: float
    start: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"barrier width must be positive, got {self.width}")


PotentialSpec = Union[Delta, DeltaComb, Barrier]


def mirror(pot: PotentialSpec) -> PotentialSpec:
    """Reflect the potential through x = 0."""
    if isinstance(pot, Delta):
        return Delta(pot.alpha, -pot.position)
    if isinstance(pot, DeltaComb):
        return DeltaComb(pot.alphas[::-1], tuple(-a for a in pot.positions[::-1]))
    if isinstance(pot, Barrier):
        return Barrier(pot.height, pot.width, -pot.start - pot.width)
    raise TypeError(f"unknown potential {pot!r}")


def translate(pot: PotentialSpec, d: float) -> PotentialSpec:
    if isinstance(pot, Delta):
        return Delta(pot.alpha, pot.position + d)
    if isinstance(pot, DeltaComb):
        return DeltaComb(pot.alphas, tuple(a + d for a in pot.positions))
    if isinstance(pot, Barrier):
        return Barrier(pot.height, pot.width, pot.start + d)
    raise TypeError(f"unknown potential {pot!r}")


# --- series data ----------------------------------------------------------

@dataclass(frozen=True)
class SeriesKernel:
    """Ratio of successive diagrams.

    Order n contributes ``(-i lam)**n`` to ``t`` and
    ``(-i lam)**n * reflection_factor`` to ``r`` (n >= 1).
    """

    lam: complex
    reflection_factor: complex
    potential: PotentialSpec
    kin: Kinematics
    form: str = "delta"

    @property
    def convergent(self) -> bool:
        return bool(abs(self.lam) < 1.0)


def with_paper_sign(kernel: SeriesKernel) -> SeriesKernel:
    """Flip lam -> -lam, turning 1/(1 + i lam) into the opposite-sign 1/(1 - i lam)."""
    return replace(kernel, lam=-kernel.lam)


@dataclass(frozen=True)
class OrderTerm:
    order: int
    t: complex
    r: complex


@dataclass(frozen=True)
class ScatteringAmplitudes:
    t: complex
    r: complex

    @property
    def T(self) -> float:
        return abs(self.t) ** 2

    @property
    def R(self) -> float:
        return abs(self.r) ** 2

    @property
    def unitarity_residual(self) -> float:
        return abs(self.T + self.R - 1.0)


@dataclass(frozen=True)
class SeriesReport:
    kernel: Optional[SeriesKernel]
    terms: tuple
    partial_sums: tuple
    closed_form: Optional[ScatteringAmplitudes]
    divergent: bool
    accelerated: Optional[ScatteringAmplitudes] = None
    method: Optional[str] = None
    ratio: float = field(default=np.nan)

    @property
    def max_order(self) -> int:
        return len(self.terms) - 1


# --- kernels --------------------------------------------------------------

def delta_kernel(kin: Kinematics, pot: Delta) -> SeriesKernel:
    lam = kin.mass * pot.alpha / kin.momentum
    phase = np.exp(-2j * kin.momentum * pot.position)
    return SeriesKernel(lam=complex(lam), reflection_factor=complex(phase),
                        potential=pot, kin=kin, form="delta")


def inside_momentum(kin: Kinematics, height: float) -> complex:
    """q = sqrt(2 m (E - V)), on the +i branch when E < V."""
    d = 2.0 * kin.mass * (kin.energy - height)
    return complex(np.sqrt(d)) if d >= 0 else 1j * np.sqrt(-d)


def _expm1_over(z: complex) -> complex:
    """(exp(z) - 1) / z, stable near z = 0."""
    if abs(z) < 1e-3:
        return 1.0 + z / 2.0 + z * z / 6.0 + z**3 / 24.0 + z**4 / 120.0
    return np.expm1(z) / z


def barrier_kernel(kin: Kinematics, pot: Barrier) -> SeriesKernel:
    """Printed wall kernel ``V0 (exp(2 i q a) - 1) / (4 sqrt(E (E - V0)))``.

    With k = sqrt(2 m E) this equals m V0 (exp(2 i q a) - 1) / (2 k q). Within
    ``1e-8 * max(E, V0)`` of E = V0 the 0/0 form is replaced by its expansion
    i m V0 a / k * (1 + i q a + ...). The phase is carried inside ``lam``;
    only a shifted ``start`` adds an exp(-2 i k start) reflection factor.
    """
    m, k, E = kin.mass, kin.momentum, kin.energy
    V0, a = pot.height, pot.width
    q = inside_momentum(kin, V0)
    if abs(E - V0) < 1e-8 * max(abs(E), abs(V0)):
        lam = 1j * m * V0 * a / k * _expm1_over(2j * q * a)
    else:
        lam = m * V0 * (np.exp(2j * q * a) - 1.0) / (2.0 * k * q)
    return SeriesKernel(lam=complex(lam), reflection_factor=complex(np.exp(-2j * k * pot.start)),
                        potential=pot, kin=kin, form="printed")


def wall_integral(dp: float, a: float) -> complex:
    """int_0^a exp(i dp z) dz."""
    return a * _expm1_over(1j * dp * a)


def barrier_first_order(kin: Kinematics, pot: Barrier, channel: str) -> complex:
    """First diagram of the wall, -i V0 (m/p) int exp(i dp z) dz over the support.

    ``channel`` is ``"transmit"`` (dp = 0) or ``"reflect"`` (dp = -2p).
    """
    p, m = kin.momentum, kin.mass
    if channel == "transmit":
        dp = 0.0
    elif channel == "reflect":
        dp = -2.0 * p
    else:
        raise ValueError(f"channel must be 'transmit' or 'reflect', got {channel!r}")
    integral = wall_integral(dp, pot.width) * np.exp(1j * dp * pot.start)
    return complex(-1j * pot.height * (m / p) * integral)


def barrier_channel_kernel(kin: Kinematics, pot: Barrier) -> SeriesKernel:
    """Wall series built from the per-channel first diagram raised to the nth power.

    lam = m V0 a / p reproduces the transmit-channel F_1 = -i lam; the
    reflection factor is F_1(reflect) / F_1(transmit), the wall average of
    exp(-2 i p z). For a -> 0 with V0 a fixed this reduces to the delta kernel.
    """
    p = kin.momentum
    lam = kin.mass * pot.height * pot.width / p
    rho = wall_integral(-2.0 * p, pot.width) / pot.width * np.exp(-2j * p * pot.start)
    return SeriesKernel(lam=complex(lam), reflection_factor=complex(rho),
                        potential=pot, kin=kin, form="series")


# --- series ---------------------------------------------------------------

def order_term(kernel: SeriesKernel, n: int) -> OrderTerm:
    if n < 0:
        raise ValueError("order must be non-negative")
    if n == 0:
        return OrderTerm(0, 1.0 + 0j, 0j)
    x = -1j * kernel.lam
    w = 1.0 + 0j
    for _ in range(n):
        w = w * x
    return OrderTerm(n, w, w * kernel.reflection_factor)


def resum_closed(kernel: SeriesKernel) -> ScatteringAmplitudes:
    """Geometric resummation: t = 1/(1 + i lam), r = -i lam/(1 + i lam) * factor."""
    den = 1.0 + 1j * kernel.lam
    if abs(den) < POLE_TOL:
        raise PoleError(f"1 + i*Lambda = 0 at Lambda = {kernel.lam} (bound-state pole)")
    t = 1.0 / den
    return ScatteringAmplitudes(t=t, r=-1j * kernel.lam * t * kernel.reflection_factor)


def _partial(terms):
    sums, st, sr = [], 0j, 0j
    for term in terms:
        st += term.t
        sr += term.r
        sums.append(ScatteringAmplitudes(st, sr))
    return tuple(sums)


def partial_sum(kernel: SeriesKernel, N: int, acceleration: Optional[str] = None) -> SeriesReport:
    """Diagrams 0..N, their running sums and the closed form."""
    if not 0 <= N <= MAX_ORDER:
        raise ValueError(f"order must lie in [0, {MAX_ORDER}]")
    # repeated multiplication keeps the growth exactly geometric
    x = -1j * kernel.lam
    terms = [OrderTerm(0, 1.0 + 0j, 0j)]
    w = 1.0 + 0j
    for n in range(1, N + 1):
        w = w * x
        terms.append(OrderTerm(n, w, w * kernel.reflection_factor))
    try:
        closed = resum_closed(kernel)
    except PoleError:
        closed = None
    report = SeriesReport(kernel=kernel, terms=tuple(terms), partial_sums=_partial(terms),
                          closed_form=closed, divergent=not kernel.convergent,
                          ratio=abs(kernel.lam))
    if acceleration and acceleration != "none":
        report = replace(report, accelerated=accelerate(report, acceleration), method=acceleration)
    return report


def comb_matrices(kin: Kinematics, pot: DeltaComb):
    """Site-to-site kernel K and the incoming/outgoing phase vectors."""
    p, m = kin.momentum, kin.mass
    a = np.asarray(pot.positions)
    alpha = np.asarray(pot.alphas)
    K = -1j * (m * alpha[None, :] / p) * np.exp(1j * p * np.abs(a[:, None] - a[None, :]))
    return K, np.exp(1j * p * a), np.exp(-1j * p * a)


def comb_solve(kin: Kinematics, pot: DeltaComb) -> ScatteringAmplitudes:
    """All-orders resummation on the comb sites via one N x N linear solve.

    Site amplitudes solve (I - K) c = u, with K_jk = -i (m alpha_k / p)
    exp(i p |a_j - a_k|). ``t`` uses the left-incident drive u = exp(i p a);
    ``r`` uses the diagram-phase drive exp(-i p a) so that it matches the
    single-delta exp(-2 i p a) convention.
    """
    if isinstance(pot, Delta):
        pot = DeltaComb((pot.alpha,), (pot.position,))
    p, m = kin.momentum, kin.mass
    K, e_plus, e_minus = comb_matrices(kin, pot)
    A = np.eye(len(pot)) - K
    if np.linalg.cond(A) > 1.0 / COMB_TOL:
        raise ResonancePoleError(f"comb site system singular at p = {p}")
    c = np.linalg.solve(A, np.column_stack([e_plus, e_minus]))
    alpha = np.asarray(pot.alphas)
    t = 1.0 - 1j * (m / p) * np.sum(alpha * e_minus * c[:, 0])
    r = -1j * (m / p) * np.sum(alpha * e_minus * c[:, 1])
    return ScatteringAmplitudes(t=complex(t), r=complex(r))


def comb_series(kin: Kinematics, pot: DeltaComb, N: int, acceleration: Optional[str] = None) -> SeriesReport:
    """Order-by-order diagram sum for a comb: order n walks n - 1 internal lines.

    t_n = -i (m/p) sum_j alpha_j e^{-i p a_j} (K^{n-1} u)_j. Convergence is
    governed by the spectral radius of K, reported as ``ratio``.
    """
    if not 0 <= N <= MAX_ORDER:
        raise ValueError(f"order must lie in [0, {MAX_ORDER}]")
    p, m = kin.momentum, kin.mass
    K, e_plus, e_minus = comb_matrices(kin, pot)
    wgt = -1j * (m / p) * np.asarray(pot.alphas) * e_minus
    terms = [OrderTerm(0, 1.0 + 0j, 0j)]
    vt, vr = e_plus.astype(complex), e_minus.astype(complex)
    for n in range(1, N + 1):
        terms.append(OrderTerm(n, complex(wgt @ vt), complex(wgt @ vr)))
        vt, vr = K @ vt, K @ vr
    radius = float(np.max(np.abs(np.linalg.eigvals(K))))
    try:
        closed = comb_solve(kin, pot)
    except ResonancePoleError:
        closed = None
    report = SeriesReport(kernel=None, terms=tuple(terms), partial_sums=_partial(terms),
                          closed_form=closed, divergent=radius >= 1.0, ratio=radius)
    if acceleration and acceleration != "none":
        report = replace(report, accelerated=accelerate(report, acceleration), method=acceleration)
    return report


# --- acceleration ---------------------------------------------------------

def shanks(s0: complex, s1: complex, s2: complex) -> complex:
    """One Shanks step (S2 S0 - S1^2) / (S2 + S0 - 2 S1), in difference form."""
    d1, d2 = s1 - s0, s2 - s1
    den = d2 - d1
    if abs(den) < SHANKS_TOL:
        raise AccelerationDegenerateError(f"Shanks denominator {abs(den):.3e} below {SHANKS_TOL}")
    return s2 - d2 * d2 / den


def _shanks_index(values, divergent: bool) -> int:
    """Centre k of the triple (S_{k-1}, S_k, S_{k+1}) to transform.

    Divergent sequences use the first triple, where rounding is smallest;
    convergent ones the latest triple whose denominator is still resolvable.
    """
    if divergent:
        return 1
    for k in range(len(values) - 2, 0, -1):
        if abs(values[k + 1] - 2 * values[k] + values[k - 1]) >= SHANKS_TOL:
            return k
    return len(values) - 2


def _pade_at_one(coeffs) -> complex:
    """Diagonal Pade of sum c_n z^n evaluated at z = 1.

    The smallest [L/L] whose Taylor expansion reproduces every remaining
    coefficient is used; an exactly geometric series stops at [1/1] and an
    N-site comb at [N/N].
    """
    c = np.asarray(coeffs, dtype=complex)
    if not np.any(c):
        return 0j
    Lmax = (len(c) - 1) // 2
    best = None
    for L in range(1, Lmax + 1):
        try:
            num, den = interpolate.pade(c[: 2 * L + 1], L, L)
        except np.linalg.LinAlgError:
            continue
        a, b = num.coeffs[::-1], den.coeffs[::-1]
        if abs(b[0]) == 0:
            continue
        pred = np.zeros(len(c), dtype=complex)
        for n in range(len(c)):
            acc = a[n] if n < len(a) else 0.0
            for j in range(1, min(n, len(b) - 1) + 1):
                acc -= b[j] * pred[n - j]
            pred[n] = acc / b[0]
        resid = np.max(np.abs(pred - c) / np.maximum(np.abs(c), np.finfo(float).tiny))
        best = (num, den)
        if resid < 1e-8:
            break
    if best is None:
        return complex(np.sum(c))
    dv = best[1](1.0)
    if abs(dv) < POLE_TOL:
        raise PoleError("Pade denominator vanishes at z = 1")
    return complex(best[0](1.0) / dv)


def accelerate(report: SeriesReport, method: str = "shanks", k: Optional[int] = None) -> ScatteringAmplitudes:
    """Estimate the all-orders sum from partial sums (``shanks``) or terms (``pade``)."""
    if len(report.partial_sums) < 3:
        raise ValueError("acceleration needs at least three partial sums")
    if method == "shanks":
        ts = [s.t for s in report.partial_sums]
        rs = [s.r for s in report.partial_sums]
        kt = _shanks_index(ts, report.divergent) if k is None else k
        kr = _shanks_index(rs, report.divergent) if k is None else k
        t = shanks(ts[kt - 1], ts[kt], ts[kt + 1])
        try:
            r = shanks(rs[kr - 1], rs[kr], rs[kr + 1])
        except AccelerationDegenerateError:
            if any(abs(x) > 0 for x in rs):
                raise
            r = 0j
        return ScatteringAmplitudes(t, r)
    if method == "pade":
        return ScatteringAmplitudes(_pade_at_one([o.t for o in report.terms]),
                                    _pade_at_one([o.r for o in report.terms]))
    raise ValueError(f"unknown acceleration method {method!r}")
