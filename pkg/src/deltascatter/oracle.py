"""Exact reference solvers: transfer matrices and a fourth-order ODE integrator.

Both work on the same piecewise description of the target: constant-height
intervals plus delta junctions (psi continuous, psi' jumps by 2 m alpha psi).
Plane-wave coefficients (A, B) of exp(+ipx), exp(-ipx) are referenced to the
point where a matrix acts, so free travel over a length L is
diag(exp(ipL), exp(-ipL)) and matrices compose by plain multiplication.

Amplitudes are read off the origin-referenced matrix M (left to right):
t = 1/M22 for either incidence side, r = M12/M22 (incidence from the right,
the diagram-phase convention used in :mod:`deltascatter.born`) and
r_left = -M21/M22.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .born import Barrier, Delta, DeltaComb, PotentialSpec, inside_momentum
from .propagator import Kinematics

TM_POLE_TOL = 1e-14


class TransmissionPoleError(ArithmeticError):
    pass


class CompositionError(ValueError):
    pass


class OdeAccuracyError(ValueError):
    """Step size violates p*h < 0.1; ``estimate`` is the step-halving error."""

    def __init__(self, message: str, estimate: float = np.nan):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class TransferMatrix:
    matrix: np.ndarray
    p_left: float
    p_right: float

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))


@dataclass(frozen=True)
class OracleResult:
    t: complex
    r: complex
    r_left: complex
    method: str
    error: float = 0.0

    @property
    def T(self) -> float:
        return abs(self.t) ** 2

    @property
    def R(self) -> float:
        return abs(self.r) ** 2


def _wave_basis(p: float) -> np.ndarray:
    """(psi, psi') = W (A, B) at the reference point."""
    return np.array([[1.0, 1.0], [1j * p, -1j * p]])


def _to_wave_basis(T: np.ndarray, p: float) -> np.ndarray:
    W = _wave_basis(p)
    return np.linalg.solve(W, T @ W)


def _sin_over(q: complex, L: float) -> complex:
    """sin(qL)/q, with its small-argument series."""
    x = q * L
    if abs(x) < 1e-4:
        return L * (1.0 - x * x / 6.0 + x**4 / 120.0)
    return np.sin(x) / q


def _segment_psi(kin: Kinematics, V: float, L: float) -> np.ndarray:
    """Exact (psi, psi') propagator across a constant-V interval.

    Entries are even in q, so the branch of q never matters.
    """
    q = inside_momentum(kin, V)
    c = np.cos(q * L)
    so = _sin_over(q, L)
    return np.array([[c, so], [-q * q * so, c]], dtype=complex)


def tm_delta_junction(kin: Kinematics, alpha: float) -> TransferMatrix:
    lam = kin.mass * alpha / kin.momentum
    M = np.array([[1 - 1j * lam, -1j * lam], [1j * lam, 1 + 1j * lam]], dtype=complex)
    return TransferMatrix(M, kin.momentum, kin.momentum)


def tm_uniform_segment(kin: Kinematics, V: float, length: float) -> TransferMatrix:
    """Transfer across [x0, x0 + length] at height V, referenced at both ends."""
    if length < 0:
        raise ValueError("segment length must be non-negative")
    return _shift(kin, length, V)


def _shift(kin: Kinematics, length: float, V: float = 0.0) -> TransferMatrix:
    if V == 0.0:
        p = kin.momentum
        M = np.diag([np.exp(1j * p * length), np.exp(-1j * p * length)]).astype(complex)
    else:
        M = _to_wave_basis(_segment_psi(kin, V, length), kin.momentum)
    return TransferMatrix(M, kin.momentum, kin.momentum)


def tm_compose(ms: Sequence[TransferMatrix]) -> TransferMatrix:
    """Product of matrices listed left to right along x."""
    ms = list(ms)
    if not ms:
        raise CompositionError("nothing to compose")
    out = ms[0].matrix
    for prev, nxt in zip(ms, ms[1:]):
        if not np.isclose(prev.p_right, nxt.p_left, rtol=1e-12, atol=0.0):
            raise CompositionError(
                f"momentum mismatch: {prev.p_right} then {nxt.p_left}"
            )
        out = nxt.matrix @ out
    return TransferMatrix(out, ms[0].p_left, ms[-1].p_right)


def tm_amplitudes(M: TransferMatrix) -> OracleResult:
    m = M.matrix
    if abs(m[1, 1]) < TM_POLE_TOL:
        raise TransmissionPoleError("M22 vanishes")
    t = 1.0 / m[1, 1]
    return OracleResult(t=complex(t), r=complex(m[0, 1] * t), r_left=complex(-m[1, 0] * t),
                        method="transfer_matrix")


# --- piecewise description -------------------------------------------------

Target = Union[PotentialSpec, Sequence[PotentialSpec]]


@dataclass(frozen=True)
class Profile:
    """Breakpoints x_0 < ... < x_n, heights on each gap, delta strength at each point."""

    points: tuple
    heights: tuple
    jumps: tuple


def profile(target: Target) -> Profile:
    """Superpose deltas, combs and walls into one piecewise profile."""
    parts: Iterable[PotentialSpec] = [target] if not isinstance(target, (list, tuple)) else target
    deltas: dict = {}
    walls = []
    for pot in parts:
        if isinstance(pot, Delta):
            deltas[pot.position] = deltas.get(pot.position, 0.0) + pot.alpha
        elif isinstance(pot, DeltaComb):
            for a, x in zip(pot.alphas, pot.positions):
                deltas[x] = deltas.get(x, 0.0) + a
        elif isinstance(pot, Barrier):
            if pot.height == 0.0:
                continue  # identically zero, no support
            walls.append((pot.start, pot.start + pot.width, pot.height))
        else:
            raise TypeError(f"unknown potential {pot!r}")
    pts = sorted(set(deltas) | {w[0] for w in walls} | {w[1] for w in walls})
    if not pts:
        return Profile((0.0,), (), (0.0,))
    heights = []
    for lo, hi in zip(pts, pts[1:]):
        mid = 0.5 * (lo + hi)
        heights.append(sum(h for s, e, h in walls if s <= mid <= e))
    return Profile(tuple(pts), tuple(heights), tuple(deltas.get(x, 0.0) for x in pts))


def tm_chain(kin: Kinematics, target: Target) -> TransferMatrix:
    """Origin-referenced transfer matrix of a whole target."""
    prof = profile(target)
    ms = [_shift(kin, prof.points[0])]
    for i, x in enumerate(prof.points):
        if prof.jumps[i] != 0.0:
            ms.append(tm_delta_junction(kin, prof.jumps[i]))
        if i < len(prof.heights):
            ms.append(_shift(kin, prof.points[i + 1] - x, prof.heights[i]))
    ms.append(_shift(kin, -prof.points[-1]))
    return tm_compose(ms)


def tm_solve(kin: Kinematics, target: Target) -> OracleResult:
    return tm_amplitudes(tm_chain(kin, target))


# --- ODE integration -------------------------------------------------------

def _rk4_segment(kin: Kinematics, V: float, L: float, h: float) -> np.ndarray:
    """Classical RK4 for (psi, psi')' = A (psi, psi') across one interval.

    On a constant-coefficient linear system one RK4 step is exactly the
    matrix 1 + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24, so n steps are its nth power.
    """
    if L == 0:
        return np.eye(2, dtype=complex)
    n = max(1, int(np.ceil(L / h - 1e-9)))
    hs = L / n
    A = np.array([[0.0, 1.0], [2.0 * kin.mass * (V - kin.energy), 0.0]], dtype=complex) * hs
    A2 = A @ A
    step = np.eye(2) + A + A2 / 2.0 + A2 @ A / 6.0 + A2 @ A2 / 24.0
    return np.linalg.matrix_power(step, n)


def _ode_fundamental(kin: Kinematics, prof: Profile, h: float) -> np.ndarray:
    F = np.eye(2, dtype=complex)
    for i, x in enumerate(prof.points):
        if prof.jumps[i] != 0.0:
            F = np.array([[1.0, 0.0], [2.0 * kin.mass * prof.jumps[i], 1.0]]) @ F
        if i < len(prof.heights):
            F = _rk4_segment(kin, prof.heights[i], prof.points[i + 1] - x, h) @ F
    return F


def _max_wavenumber(kin: Kinematics, prof: Profile) -> float:
    ks = [kin.momentum] + [abs(inside_momentum(kin, V)) for V in prof.heights]
    return max(ks)


def ode_solve(kin: Kinematics, target: Target, h: float | None = None) -> OracleResult:
    """Integrate -psi''/2m + V psi = E psi across the support with RK4.

    Deltas enter as exact derivative jumps. The result uses step ``h`` and its
    error estimate is the change against step 2h, which bounds the error of
    the finer run for a fourth-order method.
    """
    prof = profile(target)
    kmax = _max_wavenumber(kin, prof)
    if h is None:
        h = 0.01 / kmax
    if kmax * h >= 0.1:
        raise OdeAccuracyError(f"step {h} too coarse: k*h = {kmax * h:.3g} >= 0.1")

    p = kin.momentum
    W0 = _wave_basis(p) * np.exp([1j * p * prof.points[0], -1j * p * prof.points[0]])
    W1 = _wave_basis(p) * np.exp([1j * p * prof.points[-1], -1j * p * prof.points[-1]])

    def amplitudes(step):
        M = np.linalg.solve(W1, _ode_fundamental(kin, prof, step) @ W0)
        return tm_amplitudes(TransferMatrix(M, p, p))

    fine = amplitudes(h)
    coarse = amplitudes(2.0 * h)
    est = max(abs(fine.t - coarse.t), abs(fine.r - coarse.r), abs(fine.r_left - coarse.r_left))
    return OracleResult(t=fine.t, r=fine.r, r_left=fine.r_left, method="ode_integration",
                        error=float(est))
