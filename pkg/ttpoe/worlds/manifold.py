"""
Motion restricted to thin regions: a spherical shell and a sinusoidal band
"""
import numpy as np

from ttpoe.core.exceptions import ConfigurationError, InvalidInputError
from ttpoe.schemas.world import WorldKind
from ttpoe.worlds.base import MAX_LAYOUT_ATTEMPTS, TrialLayout, World

SHELL_INNER_RADIUS = 0.15
SHELL_OUTER_RADIUS = 0.20

BAND_AMPLITUDE = 0.1
BAND_WAVENUMBER = 4.0 * np.pi
BAND_HALF_WIDTH = 0.03
BAND_Y_LIMIT = 1.0


def band_center(y: np.ndarray) -> np.ndarray:
    return BAND_AMPLITUDE * np.sin(BAND_WAVENUMBER * np.asarray(y, dtype=np.float64))


def manifold_feasible(kind: WorldKind, x: np.ndarray, margin: float = 0.0) -> np.ndarray:
    """
    Membership of the region shrunk by `margin`

    Args:
        kind: WorldKind.SPHERE (x is (..., 3)) or WorldKind.SINUSOID (x is (..., 2) as (y, z))
        x: Points
        margin: Safety buffer removed from each boundary [m]
    """
    x = np.asarray(x, dtype=np.float64)
    if kind == WorldKind.SPHERE:
        r = np.linalg.norm(x, axis=-1)
        return (r >= SHELL_INNER_RADIUS + margin) & (r <= SHELL_OUTER_RADIUS - margin)
    if kind == WorldKind.SINUSOID:
        y, z = x[..., 0], x[..., 1]
        inside = np.abs(z - band_center(y)) <= BAND_HALF_WIDTH - margin
        return inside & (np.abs(y) <= BAND_Y_LIMIT)
    raise InvalidInputError(f"{kind} is not a manifold world")


class SphereShellWorld(World):
    """3D position between two concentric spheres"""

    kind = WorldKind.SPHERE

    @property
    def clearance_factor(self) -> float:
        return float(np.sqrt(3.0))

    def _hits(self, x: np.ndarray, margin: float) -> np.ndarray:
        return ~manifold_feasible(self.kind, x, margin)

    def sample_trial(self, rng: np.random.Generator) -> TrialLayout:
        """Start and goal on the mid shell, at least min_start_goal_distance apart"""
        radius = 0.5 * (SHELL_INNER_RADIUS + SHELL_OUTER_RADIUS)
        start = self._on_sphere(rng, radius)
        for _ in range(MAX_LAYOUT_ATTEMPTS):
            goal = self._on_sphere(rng, radius)
            if np.linalg.norm(goal - start) >= self.config.min_start_goal_distance:
                return TrialLayout(start=start, goal=goal)
        raise ConfigurationError(f"no goal found {self.config.min_start_goal_distance} m from the start")

    @staticmethod
    def _on_sphere(rng: np.random.Generator, radius: float) -> np.ndarray:
        v = rng.standard_normal(3)
        return radius * v / np.linalg.norm(v)


class SinusoidBandWorld(World):
    """(y, z) position inside z = 0.1 sin(4 pi y) +/- 0.03"""

    kind = WorldKind.SINUSOID

    @property
    def clearance_factor(self) -> float:
        # |dz| + max slope * |dy|
        return 1.0 + BAND_AMPLITUDE * BAND_WAVENUMBER

    def _hits(self, x: np.ndarray, margin: float) -> np.ndarray:
        return ~manifold_feasible(self.kind, x, margin)

    def sample_trial(self, rng: np.random.Generator) -> TrialLayout:
        """Start on the left end of the band, goal on the right end, both on the centerline"""
        reach = 0.9 * self.x_max
        y_start = rng.uniform(-reach, -0.6 * self.x_max)
        y_goal = rng.uniform(0.6 * self.x_max, reach)
        start = np.array([y_start, band_center(y_start)])
        goal = np.array([y_goal, band_center(y_goal)])
        return TrialLayout(start=start, goal=goal)
