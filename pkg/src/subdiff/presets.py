"""Ready-made problem builders shared by the CLI and the test suite."""

from __future__ import annotations

import numpy as np

from .kernels import TimeGrid, default_grading
from .mittag_leffler import mittag_leffler
from .solver import ProblemSpec
from .spatial import SpatialGrid, build_grid, constant_law, porous_law

__all__ = ["PRESETS", "build_preset", "eigenmode_exact", "first_eigenvalue"]


def _box(dimension: int, extents, resolution: int) -> SpatialGrid:
    if extents is None:
        extents = tuple((0.0, float(np.pi)) for _ in range(dimension))
    else:
        flat = np.asarray(extents, dtype=float).ravel()
        if flat.size == 2:
            extents = tuple((flat[0], flat[1]) for _ in range(dimension))
        elif flat.size == 2 * dimension:
            extents = tuple((flat[2 * d], flat[2 * d + 1]) for d in range(dimension))
        else:
            raise ValueError(
                f"extents needs 2 or {2 * dimension} numbers for dimension {dimension}, got {flat.size}"
            )
    return build_grid(dimension, extents, resolution)


def _product_sine(grid: SpatialGrid) -> np.ndarray:
    """First Dirichlet eigenfunction of the box, nodal values."""
    pts = grid.points()
    vals = np.ones(grid.n_nodes)
    for d in range(grid.dim):
        a, b = grid.extents[d]
        vals *= np.sin(np.pi * (pts[:, d] - a) / (b - a))
    return vals


def first_eigenvalue(grid: SpatialGrid) -> float:
    """Principal Dirichlet eigenvalue sum((pi / L_d)^2) of the box."""
    return float(sum((np.pi / (b - a)) ** 2 for a, b in grid.extents))


def _time_grid(alpha: float, horizon: float, steps: int, grading) -> TimeGrid:
    r = default_grading(alpha) if grading is None else float(grading)
    if r == 1.0:
        return TimeGrid.uniform(horizon, steps)
    return TimeGrid.graded(horizon, steps, r)


def eigenmode(
    alpha: float = 0.5,
    dimension: int = 1,
    extents=None,
    resolution: int = 128,
    horizon: float = 1.0,
    steps: int = 256,
    grading=None,
) -> ProblemSpec:
    """Constant-coefficient decay of the first box eigenfunction.

    The exact solution is separable, so this is the workhorse accuracy
    benchmark: see :func:`eigenmode_exact`.
    """
    grid = _box(dimension, extents, resolution)
    return ProblemSpec(
        alpha=alpha,
        time_grid=_time_grid(alpha, horizon, steps, grading),
        grid=grid,
        law=constant_law(1.0),
        u0=_product_sine(grid),
        label="eigenmode",
    )


def porous(
    alpha: float = 0.5,
    dimension: int = 1,
    extents=None,
    resolution: int = 65,
    horizon: float = 50.0,
    steps: int = 512,
    grading=None,
) -> ProblemSpec:
    """Quasilinear run with the porous-type law a(u) = 1 + u^2 / (2 (1 + u^2)).

    Same sine initial data, zero forcing and boundary values; exercises the
    solution-dependent coefficient path and the long-horizon decay
    certificates (the law has nu = 1).
    """
    grid = _box(dimension, extents, resolution)
    return ProblemSpec(
        alpha=alpha,
        time_grid=_time_grid(alpha, horizon, steps, grading),
        grid=grid,
        law=porous_law(),
        u0=_product_sine(grid),
        label="porous",
    )


def zero(
    alpha: float = 0.5,
    dimension: int = 1,
    extents=None,
    resolution: int = 33,
    horizon: float = 1.0,
    steps: int = 64,
    grading=None,
) -> ProblemSpec:
    """All-zero data; the trajectory must stay identically zero."""
    grid = _box(dimension, extents, resolution)
    return ProblemSpec(
        alpha=alpha,
        time_grid=_time_grid(alpha, horizon, steps, grading),
        grid=grid,
        law=porous_law(),
        u0=np.zeros(grid.n_nodes),
        label="zero",
    )


PRESETS = {
    "eigenmode": eigenmode,
    "porous": porous,
    "zero": zero,
}


def build_preset(name: str, **overrides) -> ProblemSpec:
    """Build a preset, applying only the overrides that are not None."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    kwargs = {k: v for k, v in overrides.items() if v is not None}
    return PRESETS[name](**kwargs)


def eigenmode_exact(spec: ProblemSpec):
    """Exact solution ``t -> field`` for a constant-law eigenmode problem.

    Requires the law to be constant (nu == lam); the rate is the eigenvalue
    of the box scaled by the conductivity.
    """
    if spec.law.nu != spec.law.lam:
        raise ValueError("the eigenmode reference needs a constant diffusion law")
    rate = spec.law.nu * first_eigenvalue(spec.grid)
    u0 = _product_sine(spec.grid)
    alpha = spec.alpha

    def exact(t: float) -> np.ndarray:
        if t == 0.0:
            return u0.copy()
        return mittag_leffler(alpha, -rate * t**alpha).value * u0

    return exact
