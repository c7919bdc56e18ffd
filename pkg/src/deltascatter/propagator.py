"""Free-particle Green functions and quadrature free propagation.

Units: hbar = 1 throughout. Plane waves carry the phase exp(i(p x - E t)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# kinematic consistency tolerance (relative) for p^2 = 2 m E
_KIN_RTOL = 1e-12


class QuadratureAccuracyError(ValueError):
    """Raised when a propagation grid cannot meet its accuracy contract.

    ``bound`` carries the estimated error the requested grid would incur.
    """

    def __init__(self, message: str, bound: float):
        super().__init__(f"{message} (estimated error bound {bound:.3e})")
        self.bound = bound


@dataclass(frozen=True)
class Kinematics:
    """Mass, energy and asymptotic momentum of the scattered particle."""

    mass: float
    energy: float
    momentum: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.energy > 0:
            raise ValueError(f"energy must be positive, got {self.energy}")
        p = np.sqrt(2.0 * self.mass * self.energy)
        if self.momentum is None:
            object.__setattr__(self, "momentum", float(p))
        elif abs(self.momentum**2 - 2.0 * self.mass * self.energy) > _KIN_RTOL * 2.0 * self.mass * self.energy:
            raise ValueError(
                f"momentum {self.momentum} inconsistent with sqrt(2 m E) = {p}"
            )

    @classmethod
    def from_momentum(cls, momentum: float, mass: float = 1.0) -> "Kinematics":
        if not momentum > 0:
            raise ValueError(f"momentum must be positive, got {momentum}")
        return cls(mass=mass, energy=momentum**2 / (2.0 * mass), momentum=float(momentum))

    @property
    def p(self) -> float:
        return self.momentum


def green_time(x, t: float, m: float):
    """Time-domain free propagator ``sqrt(m/(2 pi i t)) exp(i m x^2 / 2t)``.

    The square root is taken on the principal branch, so ``t > 0`` gives the
    Fresnel phase ``exp(-i pi/4)``. Accepts scalar or array ``x``.
    """
    if t == 0:
        raise ValueError("green_time is singular at t = 0; use the identity limit instead")
    x = np.asarray(x, dtype=float)
    pref = np.sqrt(complex(m / (2.0 * np.pi * 1j * t)))
    out = pref * np.exp(1j * m * x**2 / (2.0 * t))
    return out[()] if out.ndim == 0 else out


def green_energy(x, kin: Kinematics):
    """Outgoing-wave energy-domain Green function ``(m/(i p)) exp(i p |x|)``."""
    x = np.asarray(x, dtype=float)
    out = kin.mass / (1j * kin.momentum) * np.exp(1j * kin.momentum * np.abs(x))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class GaussianPacket:
    """Gaussian wave packet at t = 0.

    psi(x, 0) = N exp(-(x - center)^2 / (2 width^2) + i momentum x) with
    N = (pi width^2)^(-1/4), so the packet is unit-normalised.
    """

    center: float = 0.0
    width: float = 1.0
    momentum: float = 0.0
    mass: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    @property
    def normalization(self) -> complex:
        return complex((np.pi * self.width**2) ** -0.25)

    def complex_width2(self, t: float) -> complex:
        """s(t)^2 = width^2 + i t / m."""
        return self.width**2 + 1j * t / self.mass

    def spread(self, t: float) -> float:
        """Real spatial width of |psi(x, t)|: sqrt(width^2 + (t / (m width))^2)."""
        return float(np.hypot(self.width, t / (self.mass * self.width)))

    def center_at(self, t: float) -> float:
        return self.center + self.momentum * t / self.mass

    def evaluate(self, x, t: float = 0.0):
        """Analytically evolved packet psi(x, t)."""
        x = np.asarray(x, dtype=float)
        s2 = self.complex_width2(t)
        k, m = self.momentum, self.mass
        xi = x - self.center - k * t / m
        amp = self.normalization * np.sqrt(self.width**2 / s2)
        return amp * np.exp(-(xi**2) / (2.0 * s2) + 1j * k * x - 1j * k**2 * t / (2.0 * m))


@dataclass(frozen=True)
class Propagated:
    """Samples of a propagated wave function with quadrature diagnostics."""

    x: np.ndarray
    values: np.ndarray
    points_per_oscillation: float
    truncation_bound: float


def propagate_samples(y, psi_y, x, dt: float, m: float, *, min_ppo: float = 16.0) -> Propagated:
    """Trapezoidal convolution ``psi(x) = int dy G0(x - y, dt) psi(y)``.

    ``y`` must be a uniform grid. The kernel phase m (x-y)^2 / 2dt is checked
    for at least ``min_ppo`` samples per local oscillation over the range of
    (x, y) pairs; undersampling raises :class:`QuadratureAccuracyError`.
    """
    y = np.asarray(y, dtype=float)
    psi_y = np.asarray(psi_y, dtype=complex)
    x = np.asarray(x, dtype=float)
    if dt == 0:
        raise ValueError("dt = 0 is the identity; no quadrature needed")
    h = y[1] - y[0]
    if not np.allclose(np.diff(y), h, rtol=1e-9, atol=0.0):
        raise ValueError("quadrature grid must be uniform")

    dist = max(abs(x.max() - y.min()), abs(y.max() - x.min()))
    ppo = 2.0 * np.pi * abs(dt) / (m * dist * h) if dist > 0 else np.inf
    edge = float(max(abs(psi_y[0]), abs(psi_y[-1])))
    # tail mass beyond the window for a Gaussian-like decay, times the kernel modulus
    bound = edge * np.sqrt(m / (2.0 * np.pi * abs(dt))) * (y[-1] - y[0])
    if ppo < min_ppo:
        raise QuadratureAccuracyError(
            f"kernel phase undersampled: {ppo:.2f} points per oscillation < {min_ppo}", bound
        )

    w = np.full(y.size, h)
    w[0] = w[-1] = h / 2.0
    kern = green_time(x[:, None] - y[None, :], dt, m)
    values = kern @ (w * psi_y)
    return Propagated(x=x, values=values, points_per_oscillation=float(ppo), truncation_bound=float(bound))


def reproduce(packet: GaussianPacket, t_from: float, t_to: float, x=None, *,
              window: float | None = None, n_quad: int | None = None) -> Propagated:
    """Freely propagate ``packet`` from ``t_from`` to ``t_to`` by quadrature.

    The packet is sampled analytically at ``t_from`` on a uniform grid of
    half-width ``window`` about its centre (default 8 spreads) and convolved
    with :func:`green_time`. ``t_to == t_from`` returns the input samples.
    """
    m = packet.mass
    if x is None:
        c, s = packet.center_at(t_to), packet.spread(t_to)
        x = np.linspace(c - 8.0 * s, c + 8.0 * s, 257)
    x = np.asarray(x, dtype=float)
    if t_to == t_from:
        return Propagated(x=x, values=packet.evaluate(x, t_from),
                          points_per_oscillation=np.inf, truncation_bound=0.0)
    if t_to < t_from:
        raise ValueError("t_to must not precede t_from")

    dt = t_to - t_from
    c0, s0 = packet.center_at(t_from), packet.spread(t_from)
    half = 8.0 * s0 if window is None else float(window)
    if half < 8.0 * s0:
        edge = abs(packet.evaluate(c0 + half, t_from))
        raise QuadratureAccuracyError(
            f"window half-width {half:.3g} < 8 spreads ({8.0 * s0:.3g})",
            float(edge * np.sqrt(m / (2.0 * np.pi * dt)) * s0),
        )
    if n_quad is None:
        dist = max(abs(x.max() - (c0 - half)), abs((c0 + half) - x.min()))
        h_max = 2.0 * np.pi * dt / (16.0 * m * dist)
        n_quad = int(np.ceil(2.0 * half / h_max)) + 1
    y = np.linspace(c0 - half, c0 + half, n_quad)
    return propagate_samples(y, packet.evaluate(y, t_from), x, dt, m)
