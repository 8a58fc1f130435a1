"""Incident plane waves, probe points, and scattered-field evaluation.

The scattered field is the layer potential of the solved jump density:
single layer for the sound-soft problem, double layer for the sound-hard
one. Probe points live strictly away from the screen; the default set is
the eight corners of a cube four screen diameters wide, centered on the
screen, far enough out that the fields there are smooth and cheap to
integrate yet still in the near zone where differences show.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import (KernelConfig, build_scene, eval_potential,
                       point_triangle_distance)

_MIN_CLEARANCE = 1.0e-3      # in units of the screen diameter


def _unit_direction(direction) -> np.ndarray:
    d = np.asarray(direction, dtype=np.float64)
    if d.shape != (3,):
        raise ValueError("direction must be a 3-vector")
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise ValueError("direction must have unit length")
    return d


def plane_wave(direction, kappa: complex, point) -> np.ndarray:
    """exp(i kappa d.x) at one point or an (N, 3) batch."""
    d = _unit_direction(direction)
    pts = np.asarray(point, dtype=np.float64)
    single = pts.ndim == 1
    vals = np.exp(1j * complex(kappa) * np.atleast_2d(pts) @ d)
    return vals[0] if single else vals


def plane_wave_traces(direction, kappa: complex, point, normal):
    """(trace, normal-derivative trace) of the incident wave.

    The conormal trace of exp(i kappa d.x) is i kappa (d.n) times the
    trace itself; both are returned so excitation data for either problem
    comes from one call.
    """
    d = _unit_direction(direction)
    u = plane_wave(direction, kappa, point)
    n = np.asarray(normal, dtype=np.float64)
    dn = n @ d if n.ndim == 1 else (n * d).sum(axis=1)
    return u, 1j * complex(kappa) * dn * u


@dataclass(frozen=True)
class ProbeSet:
    """Off-screen evaluation points with a guaranteed clearance."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) == 0:
            raise ValueError("probes must be a nonempty (N, 3) array")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def clearance(self, space) -> float:
        """Smallest probe distance to the screen, in diameters."""
        scene = build_scene(space)
        dmin = min(point_triangle_distance(x, scene.coords).min()
                   for x in self.points)
        return float(dmin / scene.diameter)

    def check(self, space) -> "ProbeSet":
        c = self.clearance(space)
        if c <= _MIN_CLEARANCE:
            raise ValueError(
                f"probe clearance {c:.2e} diameters is below the "
                f"{_MIN_CLEARANCE:g} floor; move probes off the screen")
        return self


def default_probes(space) -> ProbeSet:
    """Corners of a cube of side four diameters, centered on the screen."""
    scene = build_scene(space)
    verts = scene.coords.reshape(-1, 3)
    center = 0.5 * (verts.min(axis=0) + verts.max(axis=0))
    half = 2.0 * scene.diameter
    signs = np.array([[sx, sy, sz] for sx in (-1, 1)
                      for sy in (-1, 1) for sz in (-1, 1)], dtype=np.float64)
    return ProbeSet(center + half * signs)


def scattered_field(report, space=None, problem: str = None,
                    kappa: complex = None, probes: ProbeSet = None,
                    quad_strength: int = 6) -> np.ndarray:
    """Scattered field at the probes from a solve report.

    space, problem and kappa default to what the report carries; probes
    default to the standard cube corners. Sound-soft densities radiate
    through the single-layer potential, sound-hard ones through the
    double layer.
    """
    space = space if space is not None else report.space
    problem = (problem or report.problem).lower()
    kappa = complex(kappa if kappa is not None else report.kappa)
    if problem not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown problem '{problem}'")
    probes = probes if probes is not None else default_probes(space)
    probes.check(space)
    layer = "single" if problem == "dirichlet" else "double"
    cfg = KernelConfig(kappa=kappa)
    coeffs = report.coefficients if hasattr(report, "coefficients") \
        else np.asarray(report)
    return eval_potential(coeffs, space, cfg, probes.points, layer,
                          strength=quad_strength)


def total_field(report, space=None, problem: str = None,
                kappa: complex = None, probes: ProbeSet = None) -> np.ndarray:
    """Incident plus scattered field at the probes."""
    space = space if space is not None else report.space
    probes = probes if probes is not None else default_probes(space)
    kappa = complex(kappa if kappa is not None else report.kappa)
    inc = plane_wave(report.direction, kappa, probes.points)
    return inc + scattered_field(report, space, problem, kappa, probes)
