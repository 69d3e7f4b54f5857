"""Scalar fractional relaxation: the decay envelope and its discrete twin.

The model problem ``(D^a (V - V0))(t) + mu V(t) = 0`` has the closed-form
solution ``V(t) = V0 E_a(-mu t^a)``.  Discretized with the same L1 weights the
solver uses, its solution dominates every discrete sub-solution: if

    (D^a W)_n + mu W_n <= 0  for all n,   W_0 <= V_0,

then ``W_n <= V_n`` (positivity and monotonicity of the weights make the
induction go through).  That comparison principle is what turns an energy
inequality into the decay certificates in :mod:`subdiff.diagnostics`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import L1Weights, TimeGrid
from .mittag_leffler import mittag_leffler

__all__ = [
    "relaxation_solution",
    "solve_relaxation_l1",
    "DecayCertificate",
    "comparison_check",
    "random_subsolution",
]

_EPS = float(np.finfo(float).eps)


def relaxation_solution(alpha: float, mu: float, v0: float, t):
    """Exact envelope ``V(t) = V0 E_a(-mu t^a)``.

    ``t`` may be a scalar or an array; ``mu`` must be nonnegative.
    """
    if mu < 0.0:
        raise ValueError(f"decay rate mu must be nonnegative, got {mu}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("relaxation_solution requires t >= 0")
    out = np.array([v0 * mittag_leffler(alpha, -mu * ti**alpha).value for ti in t.ravel()])
    out = out.reshape(t.shape)
    return float(out) if out.ndim == 0 else out


def solve_relaxation_l1(alpha: float, mu: float, v0: float, grid: TimeGrid) -> np.ndarray:
    """March the L1 discretization of the relaxation equation.

    Step n solves ``w_nn (V_n - V_{n-1}) + H_n + mu V_n = 0`` where ``H_n`` is
    the lagged part of the derivative.  Returns all M+1 node values.
    """
    if mu < 0.0:
        raise ValueError(f"decay rate mu must be nonnegative, got {mu}")
    weights = L1Weights(alpha=alpha, grid=grid)
    M = grid.steps
    V = np.empty(M + 1)
    V[0] = v0
    dV = np.empty(M + 1)
    for n in range(1, M + 1):
        w = weights.row(n)
        lagged = float(w[: n - 1] @ dV[1:n]) if n > 1 else 0.0
        V[n] = (w[n - 1] * V[n - 1] - lagged) / (w[n - 1] + mu)
        dV[n] = V[n] - V[n - 1]
    return V


@dataclass(frozen=True)
class DecayCertificate:
    """Verdict of an observed decay history against its relaxation envelope.

    ``passed`` iff ``W_n <= slack * V(t_n)`` at every node ``n >= 1`` with
    ``V(t) = W0 E_a(-mu t^a)``.  ``margins`` stores ``slack * V - W``.

    ``tail_exponent`` is the fitted decay exponent of the L2 *norm*, i.e.
    half the log-log slope of W over the trailing factor-3 window of the
    horizon (W itself decays at twice the norm rate); for f = g = 0 problems
    it approaches ``-alpha``.  The window deliberately avoids the crossover
    zone where the stretched-exponential regime still bends the slope.  NaN
    when the window has fewer than five usable nodes.
    """

    alpha: float
    mu: float
    w0: float
    slack: float
    times: np.ndarray
    observed: np.ndarray
    envelope: np.ndarray
    margins: np.ndarray
    passed: bool
    tail_exponent: float


def _fit_tail_exponent(times: np.ndarray, w: np.ndarray) -> float:
    sel = (times >= times[-1] / 3.0) & (w > 1e-290)
    if int(sel.sum()) < 5:
        return float("nan")
    slope = np.polyfit(np.log(times[sel]), np.log(w[sel]), 1)[0]
    return 0.5 * float(slope)


def comparison_check(
    observed: np.ndarray,
    grid: TimeGrid,
    alpha: float,
    mu: float,
    w0: float,
    slack: float = 1.05,
) -> DecayCertificate:
    """Certify ``observed`` against the envelope ``w0 E_a(-mu t^a)``.

    ``observed`` holds W at every grid node (including t = 0).  ``slack``
    must be >= 1; the envelope is evaluated through the Mittag-Leffler
    module, never through the discrete marcher, so the two routes stay
    independent.
    """
    if slack < 1.0:
        raise ValueError(f"slack factor must be >= 1, got {slack}")
    observed = np.asarray(observed, dtype=float)
    if observed.shape != (grid.steps + 1,):
        raise ValueError("observed history must have one value per grid node")
    times = grid.nodes
    envelope = relaxation_solution(alpha, mu, w0, times)
    margins = slack * envelope[1:] - observed[1:]
    passed = bool(np.all(margins >= 0.0))
    return DecayCertificate(
        alpha=alpha,
        mu=mu,
        w0=w0,
        slack=slack,
        times=times.copy(),
        observed=observed.copy(),
        envelope=envelope,
        margins=margins,
        passed=passed,
        tail_exponent=_fit_tail_exponent(times[1:], observed[1:]),
    )


def random_subsolution(
    alpha: float,
    mu: float,
    grid: TimeGrid,
    rng: np.random.Generator,
    w0: float = 1.0,
) -> np.ndarray:
    """Draw a random admissible sub-solution of the discrete relaxation.

    Builds W with ``(D^a W)_n + mu W_n = -s_n`` for nonnegative random slacks
    ``s_n`` and ``W_0 <= w0`` — exactly the hypotheses of the comparison
    principle.  Used by property tests and the CLI property sweeps.
    """
    weights = L1Weights(alpha=alpha, grid=grid)
    M = grid.steps
    W = np.empty(M + 1)
    W[0] = w0 - abs(rng.normal(scale=0.1 * abs(w0) + 0.01))
    dW = np.empty(M + 1)
    scale = abs(w0) + 1.0
    for n in range(1, M + 1):
        w = weights.row(n)
        lagged = float(w[: n - 1] @ dW[1:n]) if n > 1 else 0.0
        s_n = abs(rng.normal(scale=0.3 * scale)) * rng.random()
        W[n] = (w[n - 1] * W[n - 1] - lagged - s_n) / (w[n - 1] + mu)
        dW[n] = W[n] - W[n - 1]
    return W
