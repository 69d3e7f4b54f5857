"""Implicit L1 stepping for quasilinear subdiffusion problems.

Each time step solves the nonlinear system

    w_nn (u_n - u_{n-1}) + H_n - div_h(a(u_n) grad_h u_n) = f(t_n)

on interior nodes, with ``H_n`` the lagged part of the L1 derivative and
Dirichlet data held on boundary rows.  Two inner iterations are available:
Picard (coefficient frozen at the previous iterate, the discrete analogue of
the linearized fixed-point map behind the existence theory) and Newton with
the analytic Jacobian including the a'(u) terms.  Both start from the
previous time level, run undamped, and halve the damping factor on divergence
up to three times before giving up.

Trajectories are bitwise deterministic: no randomness, ordered reductions,
direct sparse factorizations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .kernels import CompressedHistory, L1Weights, TimeGrid, compress_history
from .spatial import DiffusionLaw, SpatialGrid, assemble_quasilinear_operator, ellipticity_check, newton_jacobian

__all__ = [
    "ProblemSpec",
    "SolverOptions",
    "Trajectory",
    "StepFailure",
    "nonlinear_step",
    "run_trajectory",
]


@dataclass(frozen=True)
class ProblemSpec:
    """A complete subdiffusion problem instance.

    ``source`` is None (zero forcing), a callable ``f(t, points) -> values``
    over the flattened node set, or a precomputed array of shape
    ``(steps + 1, n_nodes)``.  ``boundary`` is the time-constant Dirichlet
    datum: a scalar or an array over the boundary nodes (in flattened node
    order).  The initial state must match it on the boundary; ``validate``
    checks that compatibility condition and the declared ellipticity range.
    """

    alpha: float
    time_grid: TimeGrid
    grid: SpatialGrid
    law: DiffusionLaw
    u0: np.ndarray
    source: object = None
    boundary: object = 0.0
    label: str = "custom"

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        u0 = np.asarray(self.u0, dtype=float).ravel()
        if u0.size != self.grid.n_nodes:
            raise ValueError("u0 does not match the grid")
        if not np.all(np.isfinite(u0)):
            raise ValueError("u0 contains non-finite values")
        object.__setattr__(self, "u0", u0)

    def boundary_values(self) -> np.ndarray:
        """Dirichlet data expanded over the boundary nodes."""
        n_bdry = int(self.grid.boundary_mask.sum())
        g = np.asarray(self.boundary, dtype=float).ravel()
        if g.size == 1:
            return np.full(n_bdry, float(g[0]))
        if g.size != n_bdry:
            raise ValueError(f"boundary data has {g.size} values for {n_bdry} boundary nodes")
        return g

    def source_at(self, n: int, points: np.ndarray) -> np.ndarray | None:
        if self.source is None:
            return None
        if callable(self.source):
            t = float(self.time_grid.nodes[n])
            vals = np.asarray(self.source(t, points), dtype=float).ravel()
            if vals.size != self.grid.n_nodes:
                raise ValueError("source callable returned the wrong number of values")
            return vals
        arr = np.asarray(self.source, dtype=float)
        if arr.shape != (self.time_grid.steps + 1, self.grid.n_nodes):
            raise ValueError(
                "source array must have shape (steps + 1, n_nodes) = "
                f"({self.time_grid.steps + 1}, {self.grid.n_nodes}), got {arr.shape}"
            )
        return arr[n]

    def has_zero_data(self) -> bool:
        """True when f == 0 and g == 0 (the decay-theory setting)."""
        g_zero = bool(np.all(self.boundary_values() == 0.0))
        if self.source is None:
            return g_zero
        if callable(self.source):
            return False
        return g_zero and bool(np.all(np.asarray(self.source) == 0.0))

    def validate(self) -> None:
        """Compatibility and ellipticity preconditions for a run."""
        g = self.boundary_values()
        mismatch = float(np.max(np.abs(self.u0[self.grid.boundary_mask] - g), initial=0.0))
        scale = max(1.0, float(np.max(np.abs(self.u0))), float(np.max(np.abs(g), initial=0.0)))
        if mismatch > 1e-12 * scale:
            raise ValueError(
                f"initial state and boundary data disagree on the boundary "
                f"(max mismatch {mismatch:.3e}); the compatibility condition fails"
            )
        lo = min(float(self.u0.min()), float(g.min(initial=0.0)))
        hi = max(float(self.u0.max()), float(g.max(initial=0.0)))
        pad = 0.5 * (hi - lo) + 1.0
        report = ellipticity_check(self.law, (lo - pad, hi + pad))
        if not report.passed:
            raise ValueError(
                f"diffusion law '{self.law.tag}' leaves its declared bounds "
                f"[{self.law.nu}, {self.law.lam}] on [{report.y_range[0]:.3g}, "
                f"{report.y_range[1]:.3g}]: observed [{report.min_a:.6g}, {report.max_a:.6g}]"
            )


@dataclass(frozen=True)
class SolverOptions:
    mode: str = "picard"  # "picard" | "newton"
    tol: float = 1e-10
    max_iter: int = 50
    history: str = "direct"  # "direct" | "compressed"
    eps_compress: float = 1e-8

    def __post_init__(self) -> None:
        if self.mode not in ("picard", "newton"):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if self.history not in ("direct", "compressed"):
            raise ValueError(f"unknown history mode {self.history!r}")
        if self.tol <= 0.0 or self.max_iter < 1 or self.eps_compress <= 0.0:
            raise ValueError("tol and eps_compress must be positive, max_iter >= 1")


class StepFailure(RuntimeError):
    """The inner iteration failed; carries the state needed for a report."""

    def __init__(self, step: int, t: float, residual: float, iterations: int, last_iterate: np.ndarray, message: str):
        super().__init__(message)
        self.step = step
        self.t = t
        self.residual = residual
        self.iterations = iterations
        self.last_iterate = last_iterate


@dataclass
class Trajectory:
    """Fields at every time node plus per-step solver bookkeeping."""

    spec: ProblemSpec
    options: SolverOptions
    fields: np.ndarray  # (steps + 1, n_nodes)
    iterations: np.ndarray  # (steps + 1,), [0] == 0
    residuals: np.ndarray  # (steps + 1,), [0] == 0
    timings: dict
    attachments: dict = dc_field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.spec.time_grid.nodes


def _interior_diag(grid: SpatialGrid, value: float) -> sp.csr_matrix:
    d = np.where(grid.boundary_mask, 0.0, value)
    return sp.diags(d).tocsr()


def _step_system(spec, w_nn, memory, u_prev, f_n, interior, g_vals):
    """Right-hand side shared by both inner iterations."""
    rhs = np.empty_like(u_prev)
    rhs[interior] = w_nn * u_prev[interior] - memory[interior]
    if f_n is not None:
        rhs[interior] += f_n[interior]
    rhs[~interior] = g_vals
    return rhs


def _residual(A, v, w_nn, memory, u_prev, f_n, interior):
    r = w_nn * (v - u_prev) + memory + A @ v
    if f_n is not None:
        r = r - f_n
    return float(np.max(np.abs(r[interior])))


def _solve_step(spec, grid, law, w_nn, memory, u_prev, f_n, options, timers, n):
    interior = ~grid.boundary_mask
    g_vals = spec.boundary_values()
    rhs = _step_system(spec, w_nn, memory, u_prev, f_n, interior, g_vals)
    mass = _interior_diag(grid, w_nn)
    theta = 1.0
    halvings = 0
    v = u_prev.copy()
    t0 = time.perf_counter()
    A_v = assemble_quasilinear_operator(grid, law, v)
    timers["assembly"] += time.perf_counter() - t0
    best_res = np.inf
    best_v = v
    last_res = np.inf
    for it in range(1, options.max_iter + 1):
        if options.mode == "picard":
            t0 = time.perf_counter()
            v_new = spsolve((A_v + mass).tocsc(), rhs)
            timers["linear_solve"] += time.perf_counter() - t0
        else:
            t0 = time.perf_counter()
            J = newton_jacobian(grid, law, v)
            timers["assembly"] += time.perf_counter() - t0
            r_vec = w_nn * (v - u_prev) + memory + A_v @ v
            if f_n is not None:
                r_vec = r_vec - f_n
            r_vec[~interior] = 0.0
            t0 = time.perf_counter()
            delta = spsolve((J + mass).tocsc(), -r_vec)
            timers["linear_solve"] += time.perf_counter() - t0
            v_new = v + delta
        if theta < 1.0:
            v_new = (1.0 - theta) * v + theta * v_new
        t0 = time.perf_counter()
        A_new = assemble_quasilinear_operator(grid, law, v_new)
        timers["assembly"] += time.perf_counter() - t0
        res = _residual(A_new, v_new, w_nn, memory, u_prev, f_n, interior)
        last_res = res
        if res <= options.tol:
            # pin the Dirichlet data on the accepted field; the factorization
            # returns it only up to solver roundoff
            v_new[~interior] = g_vals
            return v_new, it, res
        if res >= best_res:
            halvings += 1
            if halvings > 3:
                raise StepFailure(
                    step=n,
                    t=float(spec.time_grid.nodes[n]),
                    residual=res,
                    iterations=it,
                    last_iterate=best_v,
                    message=(
                        f"step {n}: inner iteration diverged after {halvings - 1} "
                        f"damping reductions (residual {res:.3e} > tol {options.tol:g})"
                    ),
                )
            theta *= 0.5
            v, A_v = best_v, assemble_quasilinear_operator(grid, law, best_v)
        else:
            best_res, best_v = res, v_new
            v, A_v = v_new, A_new
    raise StepFailure(
        step=n,
        t=float(spec.time_grid.nodes[n]),
        residual=last_res,
        iterations=options.max_iter,
        last_iterate=best_v if np.isfinite(best_res) else v,
        message=f"step {n}: no convergence in {options.max_iter} iterations (residual {last_res:.3e})",
    )


def nonlinear_step(
    spec: ProblemSpec,
    weights: L1Weights,
    history: np.ndarray,
    n: int,
    options: SolverOptions | None = None,
) -> tuple[np.ndarray, int, float]:
    """Solve time step ``n`` given the fields ``history[0..n-1]``.

    Standalone entry point (the trajectory driver inlines the same logic so
    it can swap in the compressed memory term).  Returns the new field, the
    iteration count, and the final residual.
    """
    options = options or SolverOptions()
    history = np.asarray(history, dtype=float)
    if history.shape[0] < n:
        raise ValueError(f"need fields 0..{n - 1} to take step {n}")
    w_row = weights.row(n)
    if n > 1:
        memory = np.tensordot(w_row[: n - 1], np.diff(history[:n], axis=0), axes=(0, 0))
    else:
        memory = np.zeros(spec.grid.n_nodes)
    timers = {"assembly": 0.0, "linear_solve": 0.0}
    points = spec.grid.points()
    f_n = spec.source_at(n, points)
    return _solve_step(
        spec, spec.grid, spec.law, float(w_row[n - 1]), memory, history[n - 1], f_n, options, timers, n
    )


def run_trajectory(spec: ProblemSpec, options: SolverOptions | None = None) -> Trajectory:
    """March the full trajectory.

    The memory term is accumulated either directly (O(M^2) total, any grid)
    or through the sum-of-exponentials state (uniform grids only).  Timings
    for assembly, memory accumulation, and linear solves are recorded
    separately so the two history paths can be compared honestly.
    """
    options = options or SolverOptions()
    spec.validate()
    tg = spec.time_grid
    grid = spec.grid
    M = tg.steps
    n_nodes = grid.n_nodes
    weights = L1Weights(alpha=spec.alpha, grid=tg)

    timers = {"assembly": 0.0, "memory": 0.0, "linear_solve": 0.0, "compression_build": 0.0, "total": 0.0}
    compressed: CompressedHistory | None = None
    if options.history == "compressed":
        if not tg.is_uniform():
            raise ValueError("compressed history requires a uniform time grid")
        t0 = time.perf_counter()
        compressed = compress_history(weights, options.eps_compress)
        compressed.reset((n_nodes,))
        timers["compression_build"] = time.perf_counter() - t0

    t_start = time.perf_counter()
    points = grid.points()
    g_vals = spec.boundary_values()
    U = np.empty((M + 1, n_nodes))
    U[0] = spec.u0
    U[0][grid.boundary_mask] = g_vals
    dU = np.empty((M + 1, n_nodes)) if compressed is None else None
    iterations = np.zeros(M + 1, dtype=int)
    residuals = np.zeros(M + 1)
    uniform_b = weights._uniform_b

    for n in range(1, M + 1):
        t0 = time.perf_counter()
        if compressed is not None:
            memory = compressed.memory_term() if n > 1 else np.zeros(n_nodes)
        elif n > 1:
            if uniform_b is not None:
                memory = np.dot(uniform_b[n - 1 : 0 : -1], dU[1:n])
            else:
                memory = np.dot(weights.row(n)[: n - 1], dU[1:n])
        else:
            memory = np.zeros(n_nodes)
        timers["memory"] += time.perf_counter() - t0

        f_n = spec.source_at(n, points)
        u_n, iterations[n], residuals[n] = _solve_step(
            spec, grid, spec.law, weights.diag(n), memory, U[n - 1], f_n, options, timers, n
        )
        U[n] = u_n

        t0 = time.perf_counter()
        if compressed is not None:
            compressed.push(U[n] - U[n - 1])
        else:
            dU[n] = U[n] - U[n - 1]
        timers["memory"] += time.perf_counter() - t0

    timers["total"] = time.perf_counter() - t_start + timers["compression_build"]
    if compressed is not None:
        timers["compression_modes"] = compressed.n_modes
    return Trajectory(
        spec=spec,
        options=options,
        fields=U,
        iterations=iterations,
        residuals=residuals,
        timings=timers,
    )
