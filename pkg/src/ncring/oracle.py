"""Brute-force reference implementations used to validate the closed forms.

Nothing here is a performance path: levels are enumerated, sorted and summed
explicitly so that the closed-form spectrum, ground-state energy, current
and signatures can all be checked against an independent construction.
The sweep helpers at the bottom back both the test suite and the `verify`
CLI subcommand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ncring.errors import NearDegeneracy, WindowTooSmall
from ncring.model import (
    RingSystem,
    persistent_current,
    ground_state_energy,
    lambda_signature,
    sigma_signature,
    reduce_to_zone,
)

__all__ = [
    "LevelFilling",
    "default_window",
    "ground_state_by_filling",
    "current_by_finite_difference",
    "signature_by_finite_difference",
    "boundary_distance",
    "SweepResult",
    "zone_flux_grid",
    "ground_state_sweep",
    "current_sweep",
    "signature_sweep",
]


@dataclass(frozen=True)
class LevelFilling:
    """Result of filling the N lowest ring levels at fixed flux.

    occupied lists the quantum numbers n in the order they were filled
    (ascending energy, ties broken by smaller |n|, then negative n first).
    total_energy is in units of epsilon0.
    """

    occupied: tuple[int, ...]
    total_energy: float
    window: int


def default_window(n_electrons: int) -> int:
    """A window comfortably larger than the filled shell."""
    return n_electrons // 2 + 5


def ground_state_by_filling(
    ring: RingSystem, f: float, window: int | None = None
) -> LevelFilling:
    """Occupy the N lowest levels among n in [-window, window] and sum them.

    The tie-break at degeneracies (smaller |n| first, then negative n) is
    arbitrary but total-ordered, so identical inputs always produce the
    identical filling.  Raises WindowTooSmall if the window cannot hold the
    filling or if the filled set touches the enumeration boundary.
    """
    n_el = ring.n_electrons
    m = default_window(n_el) if window is None else int(window)
    if m < n_el / 2 + 2:
        raise WindowTooSmall(
            f"window {m} too small for {n_el} electrons; need >= N/2 + 2"
        )
    x = float(f) - ring.f_nc
    offset = 0.75 * ring.f_nc**2
    levels = [((n + x) ** 2 - offset, n) for n in range(-m, m + 1)]
    levels.sort(key=lambda t: (t[0], abs(t[1]), t[1] >= 0))
    filled = levels[:n_el]
    if any(abs(n) == m for _, n in filled):
        raise WindowTooSmall(
            f"filling touches the enumeration boundary +-{m}; enlarge the window"
        )
    return LevelFilling(
        occupied=tuple(n for _, n in filled),
        total_energy=math.fsum(e for e, _ in filled),
        window=m,
    )


def current_by_finite_difference(
    ring: RingSystem, f: float, h: float = 1e-6, window: int | None = None
) -> float:
    """Central difference -[E_g(f+h) - E_g(f-h)] / (2h) from the filling oracle.

    Because every occupied level is a quadratic in the flux, the difference
    of the two level sums telescopes exactly:

        E(f+h) - E(f-h) = (xp - xm) * sum_n (2n + xp + xm)

    with xp/xm the level arguments at the two flux points.  Evaluating the
    telescoped quotient instead of subtracting two O(N^3) totals avoids the
    catastrophic cancellation that would otherwise swamp the O(N) signal.
    Raises NearDegeneracy if the occupation changes between f-h and f+h.
    """
    if not h > 0.0:
        raise ValueError("h must be strictly positive")
    fill_p = ground_state_by_filling(ring, f + h, window)
    fill_m = ground_state_by_filling(ring, f - h, window)
    if sorted(fill_p.occupied) != sorted(fill_m.occupied):
        raise NearDegeneracy(
            f"occupation changes across f = {f} +- {h}; move away from the crossing"
        )
    xp = (f + h) - ring.f_nc
    xm = (f - h) - ring.f_nc
    return -math.fsum(2.0 * n + xp + xm for n in fill_p.occupied)


def boundary_distance(ring: RingSystem, f: float) -> float:
    """Distance in f from the nearest ground-state level crossing."""
    x = reduce_to_zone(float(f) - ring.f_nc, ring.parity)
    if ring.parity == "odd":
        return 0.5 - abs(x)
    return min(x, 1.0 - x)


def signature_by_finite_difference(
    ring: RingSystem, f: float, h: float = 1e-7
) -> tuple[float, float]:
    """Central differences of J/f and (J - N)/f built on the closed-form current.

    The step is caller-chosen: relative accuracy of the difference degrades
    like eps*|J/f|/(2h) at large f, so sweeps scale h with f.  Requires
    f - h > 0 and at least 10h of clearance from any level crossing
    (NearDegeneracy otherwise).
    """
    if not h > 0.0:
        raise ValueError("h must be strictly positive")
    if not f - h > 0.0:
        raise ValueError(f"need f - h > 0, got f={f}, h={h}")
    if boundary_distance(ring, f) <= 10.0 * h:
        raise NearDegeneracy(
            f"f = {f} is within 10h of a level crossing; differences are invalid"
        )
    n = ring.n_electrons
    fp, fm = f + h, f - h
    jp = persistent_current(ring, fp)
    jm = persistent_current(ring, fm)
    lam = (jp / fp - jm / fm) / (2.0 * h)
    sig = ((jp - n) / fp - (jm - n) / fm) / (2.0 * h)
    return lam, sig


# ---------------------------------------------------------------------------
# sweeps shared by the test suite and the `verify` CLI subcommand


@dataclass(frozen=True)
class SweepResult:
    label: str
    n_points: int
    max_dev: float
    tol: float
    worst: tuple[int, float, float]  # (N, f_nc, f)

    @property
    def passed(self) -> bool:
        return self.max_dev <= self.tol

    def summary(self) -> str:
        n, f_nc, f = self.worst
        status = "OK" if self.passed else "FAIL"
        return (
            f"{self.label}: max dev {self.max_dev:.3e} (tol {self.tol:.0e}) over "
            f"{self.n_points} points, worst at N={n}, f_nc={f_nc:g}, f={f:g}  [{status}]"
        )


def zone_flux_grid(n_points: int = 101) -> np.ndarray:
    """n_points flux values strictly inside (-1, 1)."""
    return np.linspace(-1.0, 1.0, n_points + 2)[1:-1]


DEFAULT_N_VALUES = tuple(range(1, 61))
DEFAULT_F_NC_VALUES = (0.0, 1e-5, 0.01, 0.3)


def _sweep_rings(
    n_values: Iterable[int], f_nc_values: Iterable[float]
) -> Iterable[RingSystem]:
    for n in n_values:
        for f_nc in f_nc_values:
            yield RingSystem.from_f_nc(n_electrons=n, f_nc=f_nc)


def ground_state_sweep(
    n_values: Sequence[int] = DEFAULT_N_VALUES,
    f_nc_values: Sequence[float] = DEFAULT_F_NC_VALUES,
    n_flux: int = 101,
    exclusion: float = 1e-4,
    tol: float = 1e-12,
) -> SweepResult:
    """Max of |E_g(closed) - E_g(oracle)| / max(1, |E_g|) over the standard sweep."""
    grid = zone_flux_grid(n_flux)
    max_dev, worst, count = 0.0, (0, 0.0, 0.0), 0
    for ring in _sweep_rings(n_values, f_nc_values):
        for f in grid:
            if boundary_distance(ring, f) <= exclusion:
                continue
            e_closed = ground_state_energy(ring, f)
            e_oracle = ground_state_by_filling(ring, f).total_energy
            dev = abs(e_closed - e_oracle) / max(1.0, abs(e_closed))
            count += 1
            if dev > max_dev:
                max_dev, worst = dev, (ring.n_electrons, ring.f_nc, float(f))
    return SweepResult("ground-state closed form vs filling oracle", count, max_dev, tol, worst)


def current_sweep(
    n_values: Sequence[int] = DEFAULT_N_VALUES,
    f_nc_values: Sequence[float] = DEFAULT_F_NC_VALUES,
    n_flux: int = 101,
    exclusion: float = 1e-4,
    h: float = 1e-6,
    tol: float = 1e-10,
) -> SweepResult:
    """Max of |J(closed) + dE_g/df(oracle)| / max(1, |J|) over the standard sweep."""
    grid = zone_flux_grid(n_flux)
    max_dev, worst, count = 0.0, (0, 0.0, 0.0), 0
    for ring in _sweep_rings(n_values, f_nc_values):
        for f in grid:
            if boundary_distance(ring, f) <= max(exclusion, 10.0 * h):
                continue
            j_closed = persistent_current(ring, f)
            j_oracle = current_by_finite_difference(ring, f, h=h)
            dev = abs(j_closed - j_oracle) / max(1.0, abs(j_closed))
            count += 1
            if dev > max_dev:
                max_dev, worst = dev, (ring.n_electrons, ring.f_nc, float(f))
    return SweepResult("current closed form vs -dE/df oracle", count, max_dev, tol, worst)


def signature_sweep(
    n_values: Sequence[int] = (3, 4),
    f_nc_values: Sequence[float] = (0.0, 1e-5, 1e-2),
    f_lo: float = 1e-3,
    f_hi: float = 0.4,
    n_flux: int = 40,
    tol: float = 1e-6,
) -> SweepResult:
    """Max relative deviation of the signature closed forms from finite differences.

    Each signature is compared at relative tolerance where its closed form
    is nonzero; an identically-zero closed form (the commutative limit of
    one signature per parity) is instead required to vanish to tol of the
    dominant signature scale N/f^2.  Even-parity points below f_nc sit on
    the wrapped branch of the current where the closed forms do not apply
    and are skipped.  The step is scaled with f to balance truncation
    against rounding.
    """
    grid = np.geomspace(f_lo, f_hi, n_flux)
    max_dev, worst, count = 0.0, (0, 0.0, 0.0), 0
    for ring in _sweep_rings(n_values, f_nc_values):
        n = ring.n_electrons
        for f in grid:
            f = float(f)
            h = max(1e-7, 1e-4 * f)
            if ring.parity == "even" and f <= ring.f_nc + 10.0 * h:
                continue
            lam_fd, sig_fd = signature_by_finite_difference(ring, f, h=h)
            scale = n / f**2
            for fd, closed in (
                (lam_fd, lambda_signature(ring, f)),
                (sig_fd, sigma_signature(ring, f)),
            ):
                if closed == 0.0:
                    dev = abs(fd) / scale
                else:
                    dev = abs(fd - closed) / abs(closed)
                count += 1
                if dev > max_dev:
                    max_dev, worst = dev, (n, ring.f_nc, f)
    return SweepResult("signature closed forms vs finite differences", count, max_dev, tol, worst)
