"""Shooting construction of closed planar curves and revolution surfaces.

Solutions of kappa = <x,n>/2 + lambda (curves) and of the profile ODE for
rotationally symmetric surfaces with H = <x,n>/2 + lambda are found by
integrating the arclength ODE with classical fixed-step RK4 and root-finding
on a single launch parameter.  Everything runs in plain Python floats so a
given (lambda, guess, step) triple reproduces bitwise.

Numerical notes:

* Axis starts and arrivals of revolution profiles are singular for the ODE
  (the sin(theta)/rho term); both ends are handled by a fourth-order series
  in arclength.  At the launch the series supplies the first arc; at the
  arrival the integration stops on the section theta = pi - SECTION_TILT and
  the remaining arc is fitted by the reflected series, whose angle mismatch
  is the closure defect.  The section sits far enough from the axis that the
  ODE is still tame there.
* The sphere defect function is extended continuously past geometry
  failures (profile pinching off the axis, or wandering far from any
  regular arrival) so that coarse scans bracket robustly.  Those fallback
  branches meet the genuine branch in spurious sign changes, so a bisected
  root is only accepted when its defect is below DEFECT_TOL; genuine roots
  land many orders below it.
* Closed-curve search uses a dihedral symmetry sector: launch perpendicular
  on a symmetry axis and integrate to the first crossing of polar angle
  pi/m, where the tangent of a closed m-symmetric curve must again be
  perpendicular (mod pi) to the radial direction.  Every accepted sector
  root is re-verified by integrating the full period and measuring the
  position+angle gap at the launch section.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .mesh import TriMesh, circle_radius, sphere_radius

__all__ = [
    "ShootingError",
    "PlanarCurveState",
    "ProfileState",
    "ShootResult",
    "integrate_curve",
    "integrate_profile",
    "shoot_closed_curve",
    "shoot_revolution",
    "noncircular_search",
    "curve_invariants",
    "revolve_profile",
    "write_trajectory_csv",
]

SERIES_ARC = 1e-2       # arclength covered by the axis-launch series
SECTION_TILT = 0.05     # matching section for sphere arrivals: theta = pi - tilt
PINCH_FLOOR = 4e-3      # rho below which integration refuses to continue
DEFECT_TOL = 1e-6       # acceptance threshold for bisected roots
STEP_CAP = 1e-3
_MAX_TURN = math.pi / 8.0
# secant stopping tolerance: just above the defect functions' roundoff
# floor (a few 1e-9), far under DEFECT_TOL
_SOLVE_TOL = 1e-8
_CIRCLE_VARIANCE = 1e-8


class ShootingError(RuntimeError):
    """Shooting failed: bad step, no bracket, divergence, or open result."""


@dataclass(frozen=True)
class PlanarCurveState:
    """Point on a planar curve: position, tangent angle, arclength."""
    x: float
    y: float
    theta: float
    s: float = 0.0


@dataclass(frozen=True)
class ProfileState:
    """Point on a revolution profile: axis distance, height, angle, arclength."""
    rho: float
    z: float
    theta: float
    s: float = 0.0


@dataclass
class ShootResult:
    """Outcome of a shooting solve.

    trajectory rows are (s, x, y, theta, kappa); for revolution profiles the
    second and third columns hold (rho, z).  classification is one of
    "circle", "closed_noncircular", "open".
    """
    kind: str
    lam: float
    parameter: float
    trajectory: np.ndarray
    closure_defect: float
    classification: str
    curvature_stats: dict
    iterations: int = 0
    winding_number: int | None = None
    mode: str | None = None
    guess: float | None = None

    @property
    def closed(self):
        return self.classification != "open"

    def as_dict(self):
        return {
            "lambda": self.lam,
            "mode": self.mode if self.mode is not None else self.kind,
            "guess": self.guess,
            "parameter": self.parameter,
            "defect": self.closure_defect,
            "classification": self.classification,
            "curvature_stats": dict(self.curvature_stats),
            "winding_number": self.winding_number,
            "iterations": self.iterations,
        }


# -- right-hand sides ------------------------------------------------------

def _curve_rhs(x, y, th, lam, alpha=1.0):
    s, c = math.sin(th), math.cos(th)
    return c, s, (x * s - y * c) / (2.0 * alpha * alpha) + lam / alpha


def _rk4_curve(x, y, th, lam, h, alpha=1.0):
    k1 = _curve_rhs(x, y, th, lam, alpha)
    if abs(k1[2]) * h > _MAX_TURN:
        raise ShootingError(
            f"step {h:g} turns the tangent by more than pi/8; reduce it")
    k2 = _curve_rhs(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1],
                    th + 0.5 * h * k1[2], lam, alpha)
    k3 = _curve_rhs(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1],
                    th + 0.5 * h * k2[2], lam, alpha)
    k4 = _curve_rhs(x + h * k3[0], y + h * k3[1], th + h * k3[2], lam, alpha)
    return (x + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            y + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            th + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]))


def _prof_rhs(rho, z, th, lam):
    s, c = math.sin(th), math.cos(th)
    return c, s, (rho * s - z * c) / 2.0 + lam - s / rho


def _rk4_prof(rho, z, th, lam, h):
    k1 = _prof_rhs(rho, z, th, lam)
    if abs(k1[2]) * h > _MAX_TURN:
        raise ShootingError(
            f"step {h:g} turns the tangent by more than pi/8; reduce it")
    k2 = _prof_rhs(rho + 0.5 * h * k1[0], z + 0.5 * h * k1[1],
                   th + 0.5 * h * k1[2], lam)
    k3 = _prof_rhs(rho + 0.5 * h * k2[0], z + 0.5 * h * k2[1],
                   th + 0.5 * h * k2[2], lam)
    k4 = _prof_rhs(rho + h * k3[0], z + h * k3[1], th + h * k3[2], lam)
    return (rho + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            z + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            th + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]))


def _wrap(a, period=2.0 * math.pi):
    return (a + period / 2.0) % period - period / 2.0


def default_step(lam, kind="curve"):
    """Fixed RK4 step: STEP_CAP or a 4096th of the round solution's period."""
    r = circle_radius(lam) if kind == "curve" else sphere_radius(lam)
    return min(STEP_CAP, 2.0 * math.pi * r / 4096.0)


# -- public integrators ----------------------------------------------------

def integrate_curve(init, lam, length, step, alpha=1.0):
    """RK4 trajectory of the planar curve ODE, rows (s, x, y, theta, kappa).

    alpha integrates the parabolically rescaled equation
    kappa = <x,n>/(2 alpha^2) + lambda/alpha; alpha = 1 is the standard one.
    """
    if step <= 0:
        raise ShootingError("step must be positive")
    if length < 0:
        raise ShootingError("length must be nonnegative")
    x, y, th = init.x, init.y, init.theta
    s = init.s
    rows = [(s, x, y, th, _curve_rhs(x, y, th, lam, alpha)[2])]
    n = max(1, math.ceil(length / step - 1e-12)) if length > 0 else 0
    for i in range(n):
        h = step if i < n - 1 else length - (n - 1) * step
        x, y, th = _rk4_curve(x, y, th, lam, h, alpha)
        s += h
        rows.append((s, x, y, th, _curve_rhs(x, y, th, lam, alpha)[2]))
    return np.asarray(rows, dtype=np.float64)


def _series_state(z0, lam, s):
    """Fourth-order series for a profile leaving the axis at height z0."""
    k0 = (lam - z0 / 2.0) / 2.0
    b3 = (k0 + z0 * k0 * k0) / 16.0
    rho = s - k0 * k0 * s ** 3 / 6.0
    z = z0 + k0 * s * s / 2.0 + (b3 - k0 ** 3 / 6.0) * s ** 4 / 4.0
    th = k0 * s + b3 * s ** 3
    return rho, z, th


def _series_kappa(z0, lam, s):
    k0 = (lam - z0 / 2.0) / 2.0
    b3 = (k0 + z0 * k0 * k0) / 16.0
    return k0 + 3.0 * b3 * s * s


def integrate_profile(init, lam, length, step):
    """RK4 trajectory of the revolution-profile ODE.

    Returns (samples, truncated): rows (s, rho, z, theta, kappa) where kappa
    is the profile curvature d(theta)/ds.  An on-axis start (rho = 0)
    requires theta = 0 and is carried over the first SERIES_ARC of arclength
    by the series expansion.  The integration refuses to cross rho = 0 (the
    ODE is singular there): when rho drops under PINCH_FLOOR before the
    requested length is covered, the trajectory is truncated and flagged.
    The shooting solvers never reach the floor; they hand arrivals over to
    the series fit at the matching section well away from the axis.
    """
    if step <= 0:
        raise ShootingError("step must be positive")
    rows = []
    truncated = False
    s = init.s
    if abs(init.rho) < 1e-14:
        if abs(_wrap(init.theta)) > 1e-9:
            raise ShootingError("axis starts must launch with theta = 0")
        z0 = init.z
        arc = min(SERIES_ARC, length)
        n_sub = 8
        for k in range(n_sub + 1):
            si = arc * k / n_sub
            r_, z_, t_ = _series_state(z0, lam, si)
            rows.append((s + si, r_, z_, t_, _series_kappa(z0, lam, si)))
        if arc >= length:
            return np.asarray(rows, dtype=np.float64), False
        s += arc
        rho, z, th = rows[-1][1], rows[-1][2], rows[-1][3]
        remaining = length - arc
    else:
        rho, z, th = init.rho, init.z, init.theta
        rows.append((s, rho, z, th, _prof_rhs(rho, z, th, lam)[2]))
        remaining = length
    n = max(1, math.ceil(remaining / step - 1e-12))
    for i in range(n):
        h = step if i < n - 1 else remaining - (n - 1) * step
        r2, z2, t2 = _rk4_prof(rho, z, th, lam, h)
        if r2 <= PINCH_FLOOR:
            truncated = True
            break
        rho, z, th = r2, z2, t2
        s += h
        rows.append((s, rho, z, th, _prof_rhs(rho, z, th, lam)[2]))
    return np.asarray(rows, dtype=np.float64), truncated


# -- root helpers ----------------------------------------------------------

def _bisect(fun, lo, hi, flo, fhi, iters=60):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if fm is None:
            return None
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi)


def _secant(fun, x0, max_iter=8):
    """Derivative-free Newton from a single guess; (root, iterations) or None."""
    f0 = fun(x0)
    if f0 is None:
        return None
    if abs(f0) < _SOLVE_TOL:
        return x0, 0
    x1 = x0 + 1e-3 * (1.0 + abs(x0))
    f1 = fun(x1)
    if f1 is None:
        return None
    for it in range(1, max_iter + 1):
        if abs(f1) < _SOLVE_TOL:
            return x1, it
        if f1 == f0:
            return None
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        cap = 0.5 * (1.0 + abs(x1))
        if abs(x2 - x1) > cap:
            x2 = x1 + math.copysign(cap, x2 - x1)
        x0, f0 = x1, f1
        x1 = x2
        f1 = fun(x1)
        if f1 is None:
            return None
    return (x1, max_iter) if abs(f1) < DEFECT_TOL else None


# -- closed planar curves --------------------------------------------------

def _sector_defect(d, lam, m, h, max_len=60.0):
    """Perpendicularity defect (mod pi) at the first crossing of polar
    angle pi/m, for a launch at (d, 0) pointing +y.  None if the crossing
    is never reached."""
    beta = math.pi / m
    x, y, th = d, 0.0, math.pi / 2.0
    phi = 0.0
    for _ in range(int(max_len / h)):
        x2, y2, th2 = _rk4_curve(x, y, th, lam, h)
        phi2 = phi + _wrap(math.atan2(y2, x2) - math.atan2(y, x))
        if phi2 >= beta:
            lo, hi = 0.0, h
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                xm, ym, thm = _rk4_curve(x, y, th, lam, mid)
                if phi + _wrap(math.atan2(ym, xm) - math.atan2(y, x)) >= beta:
                    hi = mid
                else:
                    lo = mid
            xm, ym, thm = _rk4_curve(x, y, th, lam, 0.5 * (lo + hi))
            return _wrap(thm - beta - math.pi / 2.0, math.pi)
        x, y, th, phi = x2, y2, th2, phi2
    return None


def _full_curve_closure(d, lam, h, max_len=150.0):
    """Integrate one full polar revolution from the perpendicular launch at
    (d, 0).  Returns (gap, winding, samples, stats) or None when the
    revolution never completes."""
    x, y, th = d, 0.0, math.pi / 2.0
    phi = 0.0
    s = 0.0
    kmin, kmax, ksum, ksq, nk = math.inf, -math.inf, 0.0, 0.0, 0
    rows = []
    for _ in range(int(max_len / h)):
        k = _curve_rhs(x, y, th, lam)[2]
        rows.append((s, x, y, th, k))
        kmin, kmax = min(kmin, k), max(kmax, k)
        ksum += k
        ksq += k * k
        nk += 1
        x2, y2, th2 = _rk4_curve(x, y, th, lam, h)
        phi2 = phi + _wrap(math.atan2(y2, x2) - math.atan2(y, x))
        if phi2 >= 2.0 * math.pi:
            lo, hi = 0.0, h
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                xm, ym, thm = _rk4_curve(x, y, th, lam, mid)
                if phi + _wrap(math.atan2(ym, xm) - math.atan2(y, x)) >= 2.0 * math.pi:
                    hi = mid
                else:
                    lo = mid
            hm = 0.5 * (lo + hi)
            xm, ym, thm = _rk4_curve(x, y, th, lam, hm)
            rows.append((s + hm, xm, ym, thm, _curve_rhs(xm, ym, thm, lam)[2]))
            gap = math.hypot(xm - d, ym) + abs(_wrap(thm - math.pi / 2.0))
            winding = int(round((thm - math.pi / 2.0) / (2.0 * math.pi)))
            mean = ksum / nk
            stats = {"min": kmin, "max": kmax,
                     "variance": max(ksq / nk - mean * mean, 0.0)}
            return gap, winding, np.asarray(rows, dtype=np.float64), stats
        x, y, th, phi = x2, y2, th2, phi2
        s += h
    return None


def _curve_result(d, lam, h, iterations, guess):
    full = _full_curve_closure(d, lam, h)
    if full is None:
        raise ShootingError(
            f"launch distance {d:.6f} never completes a revolution")
    gap, winding, rows, stats = full
    if gap < DEFECT_TOL:
        kind = ("circle" if stats["variance"] < _CIRCLE_VARIANCE
                else "closed_noncircular")
    else:
        kind = "open"
    return ShootResult(kind="curve", lam=lam, parameter=d, trajectory=rows,
                       closure_defect=gap, classification=kind,
                       curvature_stats=stats, iterations=iterations,
                       winding_number=winding, guess=guess)


def shoot_closed_curve(lam, symmetry_order=2, guess=None, step=None,
                       sweep=(0.5, 5.0), sweep_points=37):
    """Find a closed planar solution by shooting on the launch distance.

    With a guess, a secant iteration (at most 8 steps) drives the symmetry
    sector defect to zero; without one, or when the secant fails, the sweep
    interval is scanned for sign changes and every bracket is bisected.
    Verified non-circular solutions are preferred over the round one when a
    sweep finds both.  Raises ShootingError when no launch closes.
    """
    m = int(symmetry_order)
    if m < 1:
        raise ShootingError("symmetry_order must be a positive integer")
    h = default_step(lam) if step is None else float(step)
    fun = lambda d: _sector_defect(d, lam, m, h)

    if guess is not None:
        hit = _secant(fun, float(guess))
        if hit is not None and abs(fun(hit[0])) < DEFECT_TOL:
            return _curve_result(hit[0], lam, h, hit[1], float(guess))
        # fall back to a local scan around the guess
        lo = max(0.05, 0.7 * float(guess))
        hi = 1.3 * float(guess)
        grid = np.linspace(lo, hi, 15)
    else:
        grid = np.linspace(sweep[0], sweep[1], sweep_points)

    vals = [fun(float(g)) for g in grid]
    roots = []
    for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
        if fa is not None and fb is not None and fa * fb < 0:
            r = _bisect(fun, float(a), float(b), fa, fb)
            if r is not None and abs(fun(r)) < DEFECT_TOL:
                roots.append(r)
    if not roots:
        raise ShootingError(
            f"no accepted sector root for lambda={lam}, m={m} in "
            f"[{grid[0]:.3f}, {grid[-1]:.3f}]")
    results = []
    for r in roots:
        try:
            results.append(_curve_result(r, lam, h, 60, guess))
        except ShootingError:
            continue
    if not results:
        raise ShootingError(
            f"all sector roots failed full-period verification for "
            f"lambda={lam}, m={m}")
    for res in results:
        if res.classification == "closed_noncircular":
            return res
    for res in results:
        if res.classification == "circle":
            return res
    return results[0]


def noncircular_search(lam_values=(-0.5, -0.75, -1.0, -1.25, -1.5, -1.75, -2.0),
                       symmetry_order=2, step=None):
    """Scan a lambda grid for a verified closed non-circular solution.

    Returns the first (lambda, ShootResult) hit, or None when the whole grid
    yields only circles; the existence range is discovered, not prescribed.
    """
    for lam in lam_values:
        try:
            res = shoot_closed_curve(lam, symmetry_order=symmetry_order,
                                     step=step)
        except ShootingError:
            continue
        if res.classification == "closed_noncircular":
            return float(lam), res
    return None


# -- revolution profiles ---------------------------------------------------

def _axis_fit(rho, z, lam):
    """Fit (arc, axis height) of a regular axis arrival passing through
    (rho, z) after reflection; None when too far off-axis for the series."""
    rt, zt = rho, -z
    if rt > 0.35:
        return None
    z0t = zt
    st = rt
    for _ in range(4):
        k0 = (lam - z0t / 2.0) / 2.0
        b3 = (k0 + z0t * k0 * k0) / 16.0
        st = rt * (1.0 + k0 * k0 * rt * rt / 6.0)
        z0t = zt - k0 * st * st / 2.0 - (b3 - k0 ** 3 / 6.0) * st ** 4 / 4.0
    return st, z0t


def _sphere_shoot(z0, lam, h, want_traj=False, max_len=40.0):
    """Closure defect of an axis launch at height z0, measured on the section
    theta = pi - SECTION_TILT by the reflected-series angle mismatch.
    Pinching and far-off-axis sections fall back to continuous surrogate
    defects so scans can bracket; those never pass the acceptance filter."""
    rho, z, th = _series_state(z0, lam, SERIES_ARC)
    traj = [(0.0, 0.0, z0, 0.0, _series_kappa(z0, lam, 0.0))]
    if want_traj:
        n_sub = 8
        for k in range(1, n_sub + 1):
            si = SERIES_ARC * k / n_sub
            r_, z_, t_ = _series_state(z0, lam, si)
            traj.append((si, r_, z_, t_, _series_kappa(z0, lam, si)))
    s_acc = SERIES_ARC
    sect = math.pi - SECTION_TILT
    for _ in range(int(max_len / h)):
        r2, z2, t2 = _rk4_prof(rho, z, th, lam, h)
        if t2 >= sect:
            lo, hi = 0.0, h
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                rm, zm, tm = _rk4_prof(rho, z, th, lam, mid)
                if tm >= sect:
                    hi = mid
                else:
                    lo = mid
            hm = 0.5 * (lo + hi)
            rm, zm, tm = _rk4_prof(rho, z, th, lam, hm)
            fit = _axis_fit(rm, zm, lam)
            if fit is None:
                kap = max((lam + abs(zm) / 2.0) / 2.0, 0.1)
                return kap * rm - SECTION_TILT, None
            st, z0t = fit
            k0 = (lam - z0t / 2.0) / 2.0
            b3 = (k0 + z0t * k0 * k0) / 16.0
            defect = (k0 * st + b3 * st ** 3) - SECTION_TILT
            if not want_traj:
                return defect, None
            s_acc += hm
            traj.append((s_acc, rm, zm, tm, _prof_rhs(rm, zm, tm, lam)[2]))
            npt = 10
            for k in range(1, npt + 1):
                si = st * (npt - k) / npt
                r_, z_, t_ = _series_state(z0t, lam, si)
                traj.append((s_acc + (st - si), r_, -z_, math.pi - t_,
                             _series_kappa(z0t, lam, si)))
            return defect, np.asarray(traj, dtype=np.float64)
        if r2 <= PINCH_FLOOR:
            return -(sect - t2), None
        rho, z, th = r2, z2, t2
        s_acc += h
        if want_traj:
            traj.append((s_acc, rho, z, th, _prof_rhs(rho, z, th, lam)[2]))
    return None, None


def _torus_defect(rho0, lam, h, max_len=40.0):
    """Perpendicularity defect (mod pi) at the first return to z = 0 of a
    perpendicular equatorial launch at axis distance rho0."""
    rho, z, th = rho0, 0.0, math.pi / 2.0
    for i in range(int(max_len / h)):
        r2, z2, t2 = _rk4_prof(rho, z, th, lam, h)
        if i > 10 and z2 <= 0.0:
            lo, hi = 0.0, h
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                rm, zm, tm = _rk4_prof(rho, z, th, lam, mid)
                if zm <= 0.0:
                    hi = mid
                else:
                    lo = mid
            rm, zm, tm = _rk4_prof(rho, z, th, lam, 0.5 * (lo + hi))
            return _wrap(tm - math.pi / 2.0, math.pi)
        if r2 <= PINCH_FLOOR:
            return None
        rho, z, th = r2, z2, t2
    return None


def _full_torus_closure(rho0, lam, h, max_len=60.0):
    """Full-period integration (second z = 0 crossing in the launch
    direction); returns (gap, winding, samples, stats) or None."""
    rho, z, th = rho0, 0.0, math.pi / 2.0
    s = 0.0
    crossings = 0
    kmin, kmax, ksum, ksq, nk = math.inf, -math.inf, 0.0, 0.0, 0
    rows = []
    for _ in range(int(max_len / h)):
        k = _prof_rhs(rho, z, th, lam)[2]
        rows.append((s, rho, z, th, k))
        kmin, kmax = min(kmin, k), max(kmax, k)
        ksum += k
        ksq += k * k
        nk += 1
        r2, z2, t2 = _rk4_prof(rho, z, th, lam, h)
        if (z > 0 >= z2) or (z < 0 <= z2):
            crossings += 1
            if crossings == 2:
                lo, hi = 0.0, h
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    rm, zm, tm = _rk4_prof(rho, z, th, lam, mid)
                    if (z < 0) == (zm < 0):
                        lo = mid
                    else:
                        hi = mid
                hm = 0.5 * (lo + hi)
                rm, zm, tm = _rk4_prof(rho, z, th, lam, hm)
                rows.append((s + hm, rm, zm, tm, _prof_rhs(rm, zm, tm, lam)[2]))
                gap = abs(rm - rho0) + abs(_wrap(tm - math.pi / 2.0))
                winding = int(round((tm - math.pi / 2.0) / (2.0 * math.pi)))
                mean = ksum / nk
                stats = {"min": kmin, "max": kmax,
                         "variance": max(ksq / nk - mean * mean, 0.0)}
                return gap, winding, np.asarray(rows, dtype=np.float64), stats
        rho, z, th = r2, z2, t2
        s += h
    return None


def shoot_revolution(lam, mode="sphere_like", guess=None, step=None,
                     level=3, n_phi=None):
    """Close a revolution profile by shooting, then revolve it into a mesh.

    sphere_like solves for the axis-launch height (guess is a radius
    estimate); torus_like solves for the equatorial launch distance.
    Returns (ShootResult, TriMesh); the mesh uses 12 * 2**level profile
    rings and, by default, twice that many azimuthal segments.
    """
    if mode not in ("sphere_like", "torus_like"):
        raise ShootingError(f"unknown mode {mode!r}")
    h = default_step(lam, kind="profile") if step is None else float(step)
    n_rings = 12 * 2 ** level
    if n_phi is None:
        n_phi = 2 * n_rings

    if mode == "sphere_like":
        fun = lambda z0: _sphere_shoot(z0, lam, h)[0]
        iterations = None
        if guess is not None:
            hit = _secant(fun, -abs(float(guess)))
            if hit is not None and abs(fun(hit[0])) < DEFECT_TOL:
                root, iterations = hit
        if iterations is None:
            rl = sphere_radius(lam)
            grid = np.linspace(-rl - 0.1, -rl + 0.1, 26)
            vals = [fun(float(g)) for g in grid]
            root = None
            for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
                if fa is not None and fb is not None and fa * fb < 0:
                    r = _bisect(fun, float(a), float(b), fa, fb)
                    if r is not None and abs(fun(r)) < DEFECT_TOL:
                        root = r
                        break
            if root is None:
                raise ShootingError(
                    f"no accepted axis-launch root for lambda={lam}")
            iterations = 60
        defect, rows = _sphere_shoot(root, lam, h, want_traj=True)
        kap = rows[:, 4]
        stats = {"min": float(kap.min()), "max": float(kap.max()),
                 "variance": float(max(kap.var(), 0.0))}
        kind = "circle" if stats["variance"] < _CIRCLE_VARIANCE else \
            "closed_noncircular"
        result = ShootResult(kind="revolution", lam=lam, parameter=-root,
                             trajectory=rows, closure_defect=abs(defect),
                             classification=kind, curvature_stats=stats,
                             iterations=iterations, winding_number=None,
                             mode=mode, guess=guess)
        mesh = revolve_profile(rows, n_rings, n_phi, periodic=False)
        return result, mesh

    fun = lambda r0: _torus_defect(r0, lam, h)
    iterations = None
    if guess is not None:
        hit = _secant(fun, abs(float(guess)))
        if hit is not None and abs(fun(hit[0])) < DEFECT_TOL:
            root, iterations = hit
    if iterations is None:
        grid = np.linspace(0.3, 1.9, 33)
        vals = [fun(float(g)) for g in grid]
        root = None
        for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
            if fa is not None and fb is not None and fa * fb < 0:
                r = _bisect(fun, float(a), float(b), fa, fb)
                if r is not None and abs(fun(r)) < DEFECT_TOL:
                    root = r
                    break
        if root is None:
            raise ShootingError(
                f"no accepted equatorial root for lambda={lam}")
        iterations = 60
    full = _full_torus_closure(root, lam, h)
    if full is None:
        raise ShootingError(
            f"equatorial root {root:.6f} never completes a period")
    gap, winding, rows, stats = full
    kind = "open" if gap >= DEFECT_TOL else (
        "circle" if stats["variance"] < _CIRCLE_VARIANCE
        else "closed_noncircular")
    result = ShootResult(kind="revolution", lam=lam, parameter=root,
                         trajectory=rows, closure_defect=gap,
                         classification=kind, curvature_stats=stats,
                         iterations=iterations, winding_number=winding,
                         mode=mode, guess=guess)
    mesh = revolve_profile(rows, n_rings, n_phi, periodic=True)
    return result, mesh


# -- meshing ---------------------------------------------------------------

def revolve_profile(samples, n_rings, n_phi, periodic=False):
    """Revolve a profile trajectory about the z-axis into a TriMesh.

    samples rows are (s, rho, z, ...); they are resampled uniformly in
    arclength through a cubic spline.  Non-periodic profiles run axis to
    axis and are capped with pole vertices; periodic ones close into a ring.
    Faces are wound so the mesh encloses positive volume.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 3 or len(arr) < 4:
        raise ShootingError("profile samples must be rows (s, rho, z, ...)")
    s_raw = arr[:, 0]
    if np.any(np.diff(s_raw) <= 0):
        keep = np.concatenate([[True], np.diff(s_raw) > 0])
        arr = arr[keep]
        s_raw = arr[:, 0]
    spline_rho = CubicSpline(s_raw, arr[:, 1])
    spline_z = CubicSpline(s_raw, arr[:, 2])
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    cp, sp = np.cos(phi), np.sin(phi)

    if periodic:
        s_u = np.linspace(0.0, s_raw[-1], n_rings, endpoint=False)
        rho_u, z_u = spline_rho(s_u), spline_z(s_u)
        if np.any(rho_u <= 0):
            raise ShootingError("periodic profile touches the axis")
        verts = np.concatenate([
            np.column_stack([r * cp, r * sp, np.full(n_phi, z)])
            for r, z in zip(rho_u, z_u)])
        faces = []
        for k in range(n_rings):
            k2 = (k + 1) % n_rings
            for j in range(n_phi):
                a = k * n_phi + j
                b = k * n_phi + (j + 1) % n_phi
                c = k2 * n_phi + j
                d = k2 * n_phi + (j + 1) % n_phi
                faces.append([a, b, d])
                faces.append([a, d, c])
    else:
        s_u = np.linspace(0.0, s_raw[-1], n_rings + 1)
        rho_u, z_u = spline_rho(s_u), spline_z(s_u)
        if np.any(rho_u[1:-1] <= 0):
            raise ShootingError("profile touches the axis between its ends")
        verts = [np.array([[0.0, 0.0, z_u[0]]])]
        for k in range(1, n_rings):
            verts.append(np.column_stack([
                rho_u[k] * cp, rho_u[k] * sp, np.full(n_phi, z_u[k])]))
        verts.append(np.array([[0.0, 0.0, z_u[-1]]]))
        verts = np.concatenate(verts)

        def rid(k, j):
            return 1 + (k - 1) * n_phi + (j % n_phi)

        faces = []
        for j in range(n_phi):
            faces.append([0, rid(1, j + 1), rid(1, j)])
        for k in range(1, n_rings - 1):
            for j in range(n_phi):
                a, b = rid(k, j), rid(k, j + 1)
                c, d = rid(k + 1, j), rid(k + 1, j + 1)
                faces.append([a, b, d])
                faces.append([a, d, c])
        north = 1 + (n_rings - 1) * n_phi
        for j in range(n_phi):
            faces.append([north, rid(n_rings - 1, j), rid(n_rings - 1, j + 1)])

    faces = np.asarray(faces, dtype=np.int64)
    v0, v1, v2 = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    volume = np.einsum('ij,ij->', v0, np.cross(v1, v2)) / 6.0
    if volume < 0:
        faces = faces[:, [0, 2, 1]]
    return TriMesh(verts, faces)


# -- reporting -------------------------------------------------------------

def curve_invariants(result, lam):
    """Geometric sanity report for a closed shooting result.

    Any closed solution must straddle the round solution's radius: for
    curves min|x| <= sqrt(lam^2+2)-lam <= max|x|, for revolution surfaces
    the same with the surface radius sqrt(lam^2+4)-lam.  Raises on open
    trajectories.
    """
    if result.classification == "open":
        raise ShootingError("curve_invariants needs a closed result")
    arr = result.trajectory
    dist = np.hypot(arr[:, 1], arr[:, 2])
    if result.kind == "curve":
        target = circle_radius(lam)
    else:
        target = sphere_radius(lam)
    dmin, dmax = float(dist.min()), float(dist.max())
    tol = 1e-6 + 1e-3 * target
    straddles = (dmin <= target + tol) and (target <= dmax + tol)
    return {
        "kind": result.kind,
        "lambda": float(lam),
        "target_radius": target,
        "min_distance": dmin,
        "max_distance": dmax,
        "straddles_target": bool(straddles),
        "equality_case": bool(abs(dmin - target) < tol
                              and abs(dmax - target) < tol),
        "winding_number": result.winding_number,
        "curvature_stats": dict(result.curvature_stats),
    }


def write_trajectory_csv(samples, path):
    """Write trajectory rows as CSV with header s,x,y,theta,kappa."""
    arr = np.asarray(samples)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["s", "x", "y", "theta", "kappa"])
        for row in arr:
            writer.writerow([repr(float(v)) for v in row[:5]])
