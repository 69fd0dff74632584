"""Module providing the l-infinity path-following solver behind anti-sparse coding

The solver minimizes J_h(x) = ||Ax - y||^2 / 2 + h ||x||_inf by following the
piecewise-affine solution path from h_1 = ||A^T y||_1 (where x leaves 0) down
to the target h_t. Between breakpoints the coordinates split into a saturated
set (|x_i| = ||x||_inf, sign sigma_i) and a free set, and with t = ||x||_inf:

    x_free = xi + zeta * t
    h * v_sat = nu - mu * t
    h = eta - upsilon * t

All coefficients come from the split optimality conditions through the
orthogonal projector P onto the complement of range(A_free).
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from antisparse_ann.lib.errors.errors import DegenerateInstanceError, DimensionError, NonConvergenceError
from antisparse_ann.lib.frames.projection import ProjectionMatrix

logger = logging.getLogger(__name__)

DEFAULT_H = 1.0
SATURATION_RTOL = 1e-9
EVENT_RTOL = 1e-12
PINV_RTOL = 1e-10
QR_RTOL = 1e-8
UPSILON_RTOL = 1e-12
ITERATION_CAP_FACTOR = 10


class BreakpointEvent(str, enum.Enum):
    """What changed the index partition at a breakpoint"""
    PATH_START = "path_start"
    SUBGRADIENT_VANISHED = "subgradient_vanished"
    COMPONENT_SATURATED = "component_saturated"


@dataclass(frozen=True)
class PathBreakpoint:
    """Penalty value at which the partition changes, and the partition after it"""
    h_k: float
    event: BreakpointEvent
    index: Optional[int]
    sign: int
    linf_at_break: float
    saturated: Tuple[int, ...]
    free: Tuple[int, ...]

    @property
    def partition_after(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        return self.saturated, self.free

    def to_dict(self) -> Dict[str, Any]:
        return {
            "h_k": self.h_k,
            "event": self.event.value,
            "index": self.index,
            "linf": self.linf_at_break,
            "partition_after": {"saturated": list(self.saturated), "free": list(self.free)},
        }


@dataclass(frozen=True)
class IterationCoefficients:
    """Affine laws valid on one interval [h_{k+1}, h_k]; nu and mu are pre-multiplied by h"""
    xi: np.ndarray
    zeta: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    eta: float
    upsilon: float
    degenerate: bool = False

    def h_at(self, linf: float) -> float:
        return self.eta - self.upsilon * linf

    def linf_at(self, h: float) -> float:
        return (self.eta - h) / self.upsilon


@dataclass(frozen=True)
class SpreadRepresentation:
    """Solver output: x with its scale, index partition and diagnostic trace"""
    x: np.ndarray
    linf: float
    h_target: float
    saturated: Tuple[int, ...]
    free: Tuple[int, ...]
    breakpoints: Tuple[PathBreakpoint, ...] = field(default=())
    h1: float = 0.0
    n_iterations: int = 0
    degenerate: bool = False


@dataclass(frozen=True)
class OptimalityReport:
    """Result of checking 0 in dJ_h(x) with the candidate subgradient v = -A^T(Ax - y)/h"""
    passed: bool
    objective: float
    v_l1: float
    worst_violation: float
    v: np.ndarray


def _as_entries(matrix: ProjectionMatrix | np.ndarray) -> np.ndarray:
    if isinstance(matrix, ProjectionMatrix):
        return matrix.entries
    return np.asarray(matrix, dtype=np.float64)


def _check_inputs(entries: np.ndarray, y: np.ndarray, h: float) -> np.ndarray:
    vector = np.asarray(y, dtype=np.float64)
    if entries.ndim != 2 or vector.shape != (entries.shape[0],):
        raise DimensionError(f"y must have shape ({entries.shape[0]},), got {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise DimensionError("y has non-finite entries")
    if not (np.isfinite(h) and h > 0):
        raise DimensionError(f"Penalty h must be a positive finite real, got {h}")
    return vector


def saturated_indices(x: np.ndarray, rtol: float = SATURATION_RTOL) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Split indices into (|x_i| >= ||x||_inf (1 - rtol), rest); nothing is saturated at x = 0."""
    magnitudes = np.abs(x)
    linf = float(magnitudes.max()) if magnitudes.size else 0.0
    if linf == 0.0:
        return (), tuple(range(x.shape[0]))
    mask = magnitudes >= linf * (1.0 - rtol)
    return tuple(int(i) for i in np.flatnonzero(mask)), tuple(int(i) for i in np.flatnonzero(~mask))


def objective(matrix: ProjectionMatrix | np.ndarray, y: np.ndarray, h: float, x: np.ndarray) -> float:
    """J_h(x) = ||Ax - y||^2 / 2 + h ||x||_inf"""
    entries = _as_entries(matrix)
    residual = entries @ np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    linf = float(np.max(np.abs(x))) if np.size(x) else 0.0
    return 0.5 * float(residual @ residual) + h * linf


def _least_squares(a_free: np.ndarray, rhs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Minimum-norm solutions of a_free @ c = rhs, an orthonormal basis of range(a_free), and a rank-drop flag.

    Well-conditioned blocks with no more columns than rows use a QR factorization;
    everything else goes through the truncated SVD pseudo-inverse.
    """
    rows, cols = a_free.shape
    if cols <= rows:
        basis, upper = np.linalg.qr(a_free)
        diag = np.abs(np.diag(upper))
        if diag.min() * diag.min() > QR_RTOL * diag.max() * diag.max():
            return basis, np.linalg.solve(upper, basis.T @ rhs), False
    left, singular, right_t = np.linalg.svd(a_free, full_matrices=False)
    keep = singular * singular > PINV_RTOL * singular[0] * singular[0]
    left, singular, right_t = left[:, keep], singular[keep], right_t[keep]
    return left, right_t.T @ ((left.T @ rhs) / singular[:, None]), not bool(keep.all())


def _coefficients(entries: np.ndarray, y: np.ndarray, sat_idx: np.ndarray,
                  free_idx: np.ndarray, sigma: np.ndarray) -> IterationCoefficients:
    a_sat = entries[:, sat_idx]
    u = a_sat @ sigma
    degenerate = False
    if free_idx.size:
        rhs = np.column_stack((y, u))
        basis, solution, degenerate = _least_squares(entries[:, free_idx], rhs)
        xi = solution[:, 0]
        zeta = -solution[:, 1]
        projected = rhs - basis @ (basis.T @ rhs)
        proj_y, proj_u = projected[:, 0], projected[:, 1]
    else:
        xi = np.zeros(0)
        zeta = np.zeros(0)
        proj_y, proj_u = y, u
    return IterationCoefficients(
        xi=xi,
        zeta=zeta,
        nu=a_sat.T @ proj_y,
        mu=a_sat.T @ proj_u,
        eta=float(u @ proj_y),
        upsilon=float(proj_u @ proj_u),
        degenerate=degenerate,
    )


def _next_event(coeffs: IterationCoefficients, sat_idx: np.ndarray, free_idx: np.ndarray,
                sigma: np.ndarray, linf: float, last_moved: Optional[int]
                ) -> Optional[Tuple[float, int, BreakpointEvent, int]]:
    """Earliest partition change at ||x||_inf >= linf, or None when the partition holds forever."""
    floor = linf * (1.0 + EVENT_RTOL)
    moved = -1 if last_moved is None else last_moved

    # Saturated side: sigma_i (nu_i - mu_i t) reaches 0
    slope = sigma * coeffs.mu
    slope_tol = EVENT_RTOL * float(np.max(np.abs(coeffs.mu))) if coeffs.mu.size else 0.0
    vanish = np.flatnonzero(slope > slope_tol)
    vanish_t = np.maximum(coeffs.nu[vanish] / coeffs.mu[vanish], linf)
    vanish_idx = sat_idx[vanish]
    keep = ~((vanish_idx == moved) & (vanish_t <= floor))
    vanish_t, vanish_idx = vanish_t[keep], vanish_idx[keep]

    # Free side: xi_i + zeta_i t reaches +t or -t
    rising = coeffs.zeta > 1.0 + EVENT_RTOL
    falling = coeffs.zeta < -1.0 - EVENT_RTOL
    hits = np.flatnonzero(rising | falling)
    xi, zeta = coeffs.xi[hits], coeffs.zeta[hits]
    up = rising[hits]
    hit_t = np.maximum(np.where(up, xi / (1.0 - zeta), -xi / (1.0 + zeta)), linf)
    hit_idx = free_idx[hits]
    hit_sign = np.where(up, 1, -1)
    keep = ~((hit_idx == moved) & (hit_t <= floor))
    hit_t, hit_idx, hit_sign = hit_t[keep], hit_idx[keep], hit_sign[keep]

    times = np.concatenate((vanish_t, hit_t))
    if times.size == 0:
        return None
    indices = np.concatenate((vanish_idx, hit_idx))
    signs = np.concatenate((np.zeros(vanish_t.size, dtype=int), hit_sign))
    t_min = float(times.min())
    tie_limit = t_min * (1.0 + EVENT_RTOL) if t_min > 0 else 0.0
    tied = np.flatnonzero(times <= tie_limit)
    pick = int(tied[np.argmin(indices[tied])])
    kind = BreakpointEvent.SUBGRADIENT_VANISHED if pick < vanish_t.size else BreakpointEvent.COMPONENT_SATURATED
    return float(times[pick]), int(indices[pick]), kind, int(signs[pick])


def _follow_path(matrix: ProjectionMatrix | np.ndarray, y: np.ndarray, h_t: float
                 ) -> Tuple[np.ndarray, List[PathBreakpoint], float, int, bool]:
    entries = _as_entries(matrix)
    vector = _check_inputs(entries, y, h_t)
    m = entries.shape[1]
    correlations = entries.T @ vector
    h1 = float(np.sum(np.abs(correlations)))
    if h1 == 0.0 or h_t >= h1:
        return np.zeros(m), [], h1, 0, False

    # sign(0) = +1 picks the first-segment direction
    sigma_all = np.where(correlations >= 0, 1.0, -1.0)
    saturated = np.ones(m, dtype=bool)
    linf = 0.0
    all_indices = tuple(range(m))
    trace: List[PathBreakpoint] = [
        PathBreakpoint(h1, BreakpointEvent.PATH_START, None, 0, 0.0, all_indices, ())
    ]
    logger.debug("path start: h1=%.6g, m=%d", h1, m)
    last_moved: Optional[int] = None
    degenerate = False
    cap = ITERATION_CAP_FACTOR * m
    changes = 0

    while True:
        sat_idx = np.flatnonzero(saturated)
        free_idx = np.flatnonzero(~saturated)
        sigma = sigma_all[sat_idx]
        coeffs = _coefficients(entries, vector, sat_idx, free_idx, sigma)
        degenerate = degenerate or coeffs.degenerate
        if sat_idx.size == 0 or coeffs.upsilon <= UPSILON_RTOL * float(np.sum(entries[:, sat_idx] ** 2)):
            raise DegenerateInstanceError(
                f"Partition cannot move (upsilon={coeffs.upsilon:.3e})",
                [int(i) for i in sat_idx], [int(i) for i in free_idx],
            )

        event = _next_event(coeffs, sat_idx, free_idx, sigma, linf, last_moved)
        h_next = coeffs.h_at(event[0]) if event is not None else -np.inf
        if h_next < h_t:
            linf_final = coeffs.linf_at(h_t)
            x = np.zeros(m)
            x[sat_idx] = sigma * linf_final
            x[free_idx] = coeffs.xi + coeffs.zeta * linf_final
            return x, trace, h1, changes, degenerate

        changes += 1
        if changes > cap:
            raise NonConvergenceError(f"Path exceeded {cap} partition changes before h={h_t}", trace)
        t_hit, index, kind, sign = event
        if kind is BreakpointEvent.SUBGRADIENT_VANISHED:
            saturated[index] = False
        else:
            saturated[index] = True
            sigma_all[index] = float(sign)
        linf = t_hit
        last_moved = index
        sat_after = tuple(np.flatnonzero(saturated).tolist())
        free_after = tuple(np.flatnonzero(~saturated).tolist())

        previous = trace[-1]
        if previous.h_k - h_next <= EVENT_RTOL * abs(previous.h_k):
            # Zero-length segment: fold into the previous record so h stays strictly decreasing
            trace[-1] = replace(previous, saturated=sat_after, free=free_after,
                                linf_at_break=max(previous.linf_at_break, t_hit))
            logger.debug("merged %s of index %d into breakpoint at h=%.6g", kind.value, index, previous.h_k)
            continue
        trace.append(PathBreakpoint(float(h_next), kind, index, sign, float(t_hit), sat_after, free_after))
        logger.debug("breakpoint h=%.6g linf=%.6g %s index=%d |sat|=%d",
                     h_next, t_hit, kind.value, index, len(sat_after))


def solve(matrix: ProjectionMatrix | np.ndarray, y: np.ndarray, h_t: float = DEFAULT_H) -> SpreadRepresentation:
    """Minimize J_{h_t} along the regularization path and return the spread representation."""
    x, trace, h1, iterations, degenerate = _follow_path(matrix, y, h_t)
    saturated, free = saturated_indices(x)
    linf = float(np.max(np.abs(x))) if x.size else 0.0
    x.setflags(write=False)
    return SpreadRepresentation(
        x=x,
        linf=linf,
        h_target=float(h_t),
        saturated=saturated,
        free=free,
        breakpoints=tuple(trace),
        h1=h1,
        n_iterations=iterations,
        degenerate=degenerate,
    )


def solve_path(matrix: ProjectionMatrix | np.ndarray, y: np.ndarray, h_t: float = DEFAULT_H) -> Tuple[PathBreakpoint, ...]:
    """Breakpoint trace of the path from h_1 down to h_t."""
    _, trace, _, _, _ = _follow_path(matrix, y, h_t)
    return tuple(trace)


def trace_to_json(breakpoints: Tuple[PathBreakpoint, ...] | List[PathBreakpoint]) -> List[Dict[str, Any]]:
    return [bp.to_dict() for bp in breakpoints]


def check_optimality(matrix: ProjectionMatrix | np.ndarray, y: np.ndarray, h: float,
                     x: np.ndarray, tol: float) -> OptimalityReport:
    """Certify 0 in dJ_h(x) using v = -A^T(Ax - y)/h against the l-inf sub-differential."""
    entries = _as_entries(matrix)
    vector = np.asarray(y, dtype=np.float64)
    point = np.asarray(x, dtype=np.float64)
    v = -(entries.T @ (entries @ point - vector)) / h
    v_l1 = float(np.sum(np.abs(v)))
    linf = float(np.max(np.abs(point))) if point.size else 0.0

    if linf == 0.0:
        worst = max(0.0, v_l1 - 1.0)
    else:
        sat, free = saturated_indices(point)
        worst = abs(v_l1 - 1.0)
        if free:
            worst = max(worst, float(np.max(np.abs(v[list(free)]))))
        v_inf = float(np.max(np.abs(v)))
        if sat and v_inf > 0:
            alignment = v[list(sat)] * point[list(sat)] / (v_inf * linf)
            worst = max(worst, float(np.max(-alignment)))
    v.setflags(write=False)
    return OptimalityReport(
        passed=bool(worst <= tol),
        objective=objective(entries, vector, h, point),
        v_l1=v_l1,
        worst_violation=float(worst),
        v=v,
    )


def reconstruct(matrix: ProjectionMatrix | np.ndarray, x: np.ndarray) -> np.ndarray:
    """y_hat = A x"""
    entries = _as_entries(matrix)
    point = np.asarray(x, dtype=np.float64)
    if point.shape != (entries.shape[1],):
        raise DimensionError(f"x must have shape ({entries.shape[1]},), got {point.shape}")
    return entries @ point
