"""Closed-form physics of electrons on a 1D ring in noncommutative phase space.

The linear map to canonical operators turns the free ring Hamiltonian into
one with an effective mass m* = m/alpha and an effective magnetic flux
phi_nc generated by the momentum-momentum commutator scale theta_tilde.
Everything downstream is computed in reduced units:

* energies in units of  epsilon0 = hbar^2 / (2 m* R^2)
* currents in units of  j0 = (e/h) epsilon0
* magnetic flux in units of the flux quantum phi0 = h/e

SI conversion happens only at the I/O boundary (see :mod:`ncring.dataio`).
Scalar-or-array inputs are accepted wherever it is natural; scalars come
back as plain floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from ncring.constants import CODATA2018, PhysConstants
from ncring.errors import ZeroFlux

Parity = Literal["odd", "even"]

__all__ = [
    "Parity",
    "SwParams",
    "RingSystem",
    "check_sw_constraint",
    "effective_field",
    "noncommutative_flux",
    "reduce_to_zone",
    "eigenenergy",
    "ground_state_energy",
    "persistent_current",
    "lambda_signature",
    "sigma_signature",
    "energy_to_si",
    "current_to_si",
    "flux_to_reduced",
    "flux_to_si",
]


@dataclass(frozen=True)
class SwParams:
    """Parameters of the linear map between noncommutative and canonical operators.

    alpha is the dimensionless scaling of the map; theta is the
    position-position commutator scale (kg m^2 s^-1 m); theta_tilde is the
    momentum-momentum commutator scale (kg^2 m^2 s^-2).  theta enters only
    the map constraint, not the ring observables.
    """

    alpha: float = 1.0
    theta: float = 0.0
    theta_tilde: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.theta < 0.0:
            raise ValueError(f"theta must be non-negative, got {self.theta}")
        if self.theta_tilde < 0.0:
            raise ValueError(
                f"theta_tilde must be non-negative, got {self.theta_tilde}"
            )


def check_sw_constraint(
    sw: SwParams, tol: float, constants: PhysConstants = CODATA2018
) -> bool:
    """True iff alpha^2 + theta*theta_tilde / (2 alpha^2 hbar^2) == 1 within tol."""
    if not tol > 0.0:
        raise ValueError("tol must be strictly positive")
    hbar = constants.hbar
    lhs = sw.alpha**2 + sw.theta * sw.theta_tilde / (2.0 * sw.alpha**2 * hbar**2)
    return abs(lhs - 1.0) <= tol


def effective_field(sw: SwParams, constants: PhysConstants = CODATA2018) -> float:
    """Effective magnetic field B_z = theta_tilde / (e alpha^2 hbar) in tesla.

    Uses the charge magnitude; the returned value is the field an electron
    inside the ring would appear to see, taken positive along +z.
    """
    return sw.theta_tilde / (constants.e_charge * sw.alpha**2 * constants.hbar)


@dataclass(frozen=True)
class RingSystem:
    """A 1D ring of N electrons with map parameters attached.

    All derived scales are recomputed from the stored fields on access, so
    they can never drift out of sync with the inputs.
    """

    radius: float
    n_electrons: int
    sw: SwParams
    mass: float = CODATA2018.m_electron
    constants: PhysConstants = CODATA2018

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"radius must be strictly positive, got {self.radius}")
        if not (isinstance(self.n_electrons, (int, np.integer)) and self.n_electrons >= 1):
            raise ValueError(f"n_electrons must be a positive integer, got {self.n_electrons}")
        if not self.mass > 0.0:
            raise ValueError(f"mass must be strictly positive, got {self.mass}")

    @classmethod
    def from_f_nc(
        cls,
        n_electrons: int,
        f_nc: float,
        radius: float = 1e-6,
        alpha: float = 1.0,
        mass: float | None = None,
        constants: PhysConstants = CODATA2018,
    ) -> "RingSystem":
        """Build a ring whose reduced noncommutative flux is (up to rounding) f_nc.

        Convenience for sweeps parameterized directly by f_nc; inverts
        f_nc = R^2 theta_tilde / (hbar^2 alpha^2).
        """
        if f_nc < 0.0:
            raise ValueError(f"f_nc must be non-negative, got {f_nc}")
        theta_tilde = f_nc * (constants.hbar * alpha / radius) ** 2
        return cls(
            radius=radius,
            n_electrons=n_electrons,
            sw=SwParams(alpha=alpha, theta_tilde=theta_tilde),
            mass=constants.m_electron if mass is None else mass,
            constants=constants,
        )

    @property
    def parity(self) -> Parity:
        return "odd" if self.n_electrons % 2 else "even"

    @property
    def m_star(self) -> float:
        """Effective mass m* = m / alpha in kg."""
        return self.mass / self.sw.alpha

    @property
    def epsilon0(self) -> float:
        """Natural energy scale hbar^2 / (2 m* R^2) in J."""
        return self.constants.hbar**2 / (2.0 * self.m_star * self.radius**2)

    @property
    def j0(self) -> float:
        """Natural current scale (e/h) epsilon0 in A (magnitude convention)."""
        return self.constants.e_charge * self.epsilon0 / self.constants.h_planck

    @property
    def f_nc(self) -> float:
        """Reduced flux R^2 theta_tilde / (hbar^2 alpha^2) generated by theta_tilde."""
        return (
            self.radius**2
            * self.sw.theta_tilde
            / (self.constants.hbar * self.sw.alpha) ** 2
        )

    @property
    def phi_nc(self) -> float:
        """Absolute noncommutative flux f_nc * phi0 in Wb."""
        return self.f_nc * self.constants.flux_quantum

    @property
    def b_eff(self) -> float:
        """Effective field theta_tilde / (e alpha^2 hbar) in T."""
        return effective_field(self.sw, self.constants)


def noncommutative_flux(ring: RingSystem) -> float:
    """Reduced effective flux f_nc of the ring (phi_nc/phi0); see RingSystem.f_nc."""
    return ring.f_nc


def _maybe_scalar(out: np.ndarray, scalar: bool):
    return float(out) if scalar else out


def reduce_to_zone(x, parity: Parity):
    """Reduce a flux offset to the fundamental zone of its parity.

    odd  -> [-1/2, 1/2), via x - floor(x + 1/2)
    even -> [0, 1),      via x - floor(x)

    Both conventions are half-open so that a value sitting exactly on a
    level crossing is mapped deterministically to the left branch.
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    if parity == "odd":
        y = arr - np.floor(arr + 0.5)
        # guard the one-ulp spill that floor(x + 0.5) can produce at the edges
        y = np.where(y >= 0.5, y - 1.0, y)
        y = np.where(y < -0.5, y + 1.0, y)
    elif parity == "even":
        y = arr - np.floor(arr)
        y = np.where(y >= 1.0, y - 1.0, y)
        y = np.where(y < 0.0, y + 1.0, y)
    else:
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    return _maybe_scalar(y, scalar)


def eigenenergy(ring: RingSystem, n, f):
    """Single-particle energy (n + f - f_nc)^2 - (3/4) f_nc^2 in units of epsilon0.

    No zone reduction is applied: the spectrum as a whole is periodic under
    f -> f + 1 through the relabeling n -> n - 1.
    """
    n_arr = np.asarray(n, dtype=float)
    f_arr = np.asarray(f, dtype=float)
    scalar = n_arr.ndim == 0 and f_arr.ndim == 0
    u = n_arr + (f_arr - ring.f_nc)
    out = u * u - 0.75 * ring.f_nc**2
    return _maybe_scalar(out, scalar)


def ground_state_energy(ring: RingSystem, f):
    """Ground-state energy of the N-electron ring in units of epsilon0.

    With x = f - f_nc reduced to the fundamental zone:

    odd  N: (N^3 - N)/12 + N [x^2 - (3/4) f_nc^2],  x in [-1/2, 1/2)
    even N: (N^3 + 2N)/12 - N x + N [x^2 - (3/4) f_nc^2],  x in [0, 1)

    Continuous except at the zone-boundary level crossings.
    """
    n = ring.n_electrons
    f_arr = np.asarray(f, dtype=float)
    scalar = f_arr.ndim == 0
    x = np.asarray(reduce_to_zone(f_arr - ring.f_nc, ring.parity))
    offset = 0.75 * ring.f_nc**2
    if ring.parity == "odd":
        out = (n**3 - n) / 12.0 + n * (x * x - offset)
    else:
        out = (n**3 + 2 * n) / 12.0 - n * x + n * (x * x - offset)
    return _maybe_scalar(out, scalar)


def persistent_current(ring: RingSystem, f):
    """Equilibrium current -dE_g/df in units of j0.

    With x = f - f_nc reduced to the fundamental zone: odd N gives -2 N x,
    even N gives N - 2 N x, each extended periodically by the reduction.
    """
    n = ring.n_electrons
    f_arr = np.asarray(f, dtype=float)
    scalar = f_arr.ndim == 0
    x = np.asarray(reduce_to_zone(f_arr - ring.f_nc, ring.parity))
    if ring.parity == "odd":
        out = (-2.0 * n) * x
    else:
        out = n - (2.0 * n) * x
    return _maybe_scalar(out, scalar)


def _check_nonzero_flux(f_arr: np.ndarray):
    if np.any(f_arr == 0.0):
        raise ZeroFlux("signatures diverge at f = 0; exclude that point")


def lambda_signature(ring: RingSystem, f):
    """First detection signature, d/df of J/f, in reduced units.

    odd  N: -2 N f_nc / f^2
    even N: -N (1 + 2 f_nc) / f^2

    Valid on the principal branch of the current (f - f_nc inside the
    fundamental zone without wrapping).  Raises ZeroFlux at f = 0.
    """
    n = ring.n_electrons
    f_arr = np.asarray(f, dtype=float)
    scalar = f_arr.ndim == 0
    _check_nonzero_flux(f_arr)
    if ring.parity == "odd":
        out = (-2.0 * n * ring.f_nc) / (f_arr * f_arr)
    else:
        out = (-n * (1.0 + 2.0 * ring.f_nc)) / (f_arr * f_arr)
    return _maybe_scalar(out, scalar)


def sigma_signature(ring: RingSystem, f):
    """Second detection signature, d/df of (J - N)/f, in reduced units.

    odd  N: N (1 - 2 f_nc) / f^2
    even N: -2 N f_nc / f^2

    Same validity domain as :func:`lambda_signature`.
    """
    n = ring.n_electrons
    f_arr = np.asarray(f, dtype=float)
    scalar = f_arr.ndim == 0
    _check_nonzero_flux(f_arr)
    if ring.parity == "odd":
        out = (n * (1.0 - 2.0 * ring.f_nc)) / (f_arr * f_arr)
    else:
        out = (-2.0 * n * ring.f_nc) / (f_arr * f_arr)
    return _maybe_scalar(out, scalar)


def energy_to_si(ring: RingSystem, e_reduced):
    """Convert an energy from units of epsilon0 to joules."""
    return e_reduced * ring.epsilon0


def current_to_si(ring: RingSystem, j_reduced):
    """Convert a current from units of j0 to amperes."""
    return j_reduced * ring.j0


def flux_to_reduced(phi_wb, constants: PhysConstants = CODATA2018):
    """Convert an absolute flux in Wb to flux-quantum units."""
    return phi_wb / constants.flux_quantum


def flux_to_si(f, constants: PhysConstants = CODATA2018):
    """Convert a reduced flux to Wb."""
    return f * constants.flux_quantum
