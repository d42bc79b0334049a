"""Box-constrained quasi-Newton ascent on symmetry fitness.

Both methods share the same evaluation accounting: every expressed genome
costs one evaluation, so a central finite-difference derivative costs 32.

``gauss-newton`` (default)
    The 32 probes already produce every boundary sample of every perturbed
    shape, so they yield the Jacobian of the full symmetry residual vector
    (sample plus opposite sample) at no extra cost. Its normal matrix is the
    Hessian model. The symmetry residuals are positively homogeneous in the
    radii, so the undamped model step would simply shrink the shape to a
    point; steps are therefore restricted to the complement of the radial
    scaling direction. Steps are Levenberg-Marquardt damped, limited to a
    trust radius in units of the gene range, and bound constraints are
    handled with an active set.
``lbfgs``
    Projected limited-memory BFGS on the scalar symmetry error with
    backtracking line search.

A trial point is accepted only if it lowers the symmetry error, so fitness
along the trajectory never decreases.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import geometry as geo

N_SAMPLES = geo.N_BOUNDARY_SAMPLES


def symmetry_residuals(genomes) -> np.ndarray:
    """Per-sample symmetry residuals, shape (n, N_SAMPLES // 2, 2)."""
    polys = geo.express_batch(genomes)
    out = np.zeros((len(polys), N_SAMPLES // 2, 2))
    live = ~np.all(polys == 0.0, axis=(1, 2))
    if np.any(live):
        s = geo._boundary_samples_batch(polys[live], N_SAMPLES)
        out[live] = s[:, : N_SAMPLES // 2] + s[:, N_SAMPLES // 2 :]
    return out


def _error(residuals) -> np.ndarray:
    return np.linalg.norm(residuals, axis=-1).sum(axis=-1)


@dataclass
class LocalSearchResult:
    genome: np.ndarray
    fitness: float
    n_evals: int
    n_iter: int
    trajectory: list = field(default_factory=list)
    message: str = ""


def local_search(
    start,
    bounds,
    rho: float = 0.065,
    max_evals: int = 1000,
    method: str = "gauss-newton",
    fd_step: float = 1e-4,
    gtol: float = 1e-6,
    ftol: float = 1e-10,
) -> LocalSearchResult:
    """Climb symmetry fitness from ``start`` without leaving ``bounds``.

    ``rho`` is the initial step of the ``lbfgs`` method as a fraction of each
    gene's range; the Gauss-Newton model supplies its own step length.
    Stops when the projected gradient norm drops below ``gtol``, the relative
    improvement of an accepted step drops below ``ftol``, no improving step
    is found, or ``max_evals`` is exhausted. The best point found is always
    returned.
    """
    bounds = geo.get_bounds(bounds)
    x = geo.check_genomes(start, bounds)[0].copy()
    if method == "gauss-newton":
        return _gauss_newton(x, bounds, rho, max_evals, fd_step, gtol, ftol)
    if method == "lbfgs":
        return _lbfgs(x, bounds, rho, max_evals, fd_step, gtol, ftol)
    raise ValueError(f"unknown method {method!r}")


def _probes(bounds, fd_step):
    h = fd_step * bounds.span
    return h, np.vstack([np.diag(h), -np.diag(h)])


def _projected_gradient(x, g, lower, upper):
    pg = g.copy()
    pg[(x <= lower) & (g > 0)] = 0.0
    pg[(x >= upper) & (g < 0)] = 0.0
    return pg


def _gauss_newton(x, bounds, rho, max_evals, fd_step, gtol, ftol):
    lower, upper, span = bounds.lower, bounds.upper, bounds.span
    h, probes = _probes(bounds, fd_step)
    dim = x.size

    res = symmetry_residuals(x[None])[0].ravel()
    fx = float(_error(res.reshape(-1, 2)))
    n_evals, n_iter = 1, 0
    trajectory = [1.0 / (1.0 + fx)]
    radius = 1.0
    damping = 1e-3
    message = "max evaluations"

    while n_evals + 2 * dim <= max_evals:
        if fx == 0.0:
            message = "converged: exact symmetry"
            break
        r_probe = symmetry_residuals(x + probes).reshape(2 * dim, -1)
        n_evals += 2 * dim
        jac = ((r_probe[:dim] - r_probe[dim:]) / (2.0 * h[:, None])).T

        # gradient of the summed sample distances (not of the squared model)
        norms = np.linalg.norm(res.reshape(-1, 2), axis=1)
        unit = np.divide(res.reshape(-1, 2), norms[:, None], out=np.zeros((norms.size, 2)),
                         where=norms[:, None] > 0).ravel()
        grad = jac.T @ unit
        if np.linalg.norm(_projected_gradient(x, grad, lower, upper)) < gtol:
            message = "converged: gradient"
            break

        # The residuals are positively homogeneous in the radii, so the plain
        # Gauss-Newton step is exactly the collapse of the shape to a point.
        # Steps are taken in the complement of the radial scaling direction.
        accepted = False
        while n_evals < max_evals:
            step = _bounded_step(x, jac, res, damping, lower, upper)
            reach = np.max(np.abs(step) / span)
            truncated = reach > radius
            if truncated:
                step *= radius / reach
            x_new = np.clip(x + step, lower, upper)
            res_new = symmetry_residuals(x_new[None])[0].ravel()
            f_new = float(_error(res_new.reshape(-1, 2)))
            n_evals += 1
            if f_new < fx:
                accepted = True
                break
            damping *= 10.0
            radius *= 0.5
            if radius < 1e-14:
                break
        if not accepted:
            message = "converged: no improving step"
            break

        n_iter += 1
        improvement = fx - f_new
        fx_old = fx
        x, res, fx = x_new, res_new, f_new
        trajectory.append(1.0 / (1.0 + fx))
        damping = max(damping / 10.0, 1e-9)
        if truncated:
            radius = min(4.0 * radius, 1.0)
        if improvement <= ftol * fx_old:
            message = "converged: relative improvement"
            break

    return LocalSearchResult(x, 1.0 / (1.0 + fx), n_evals, n_iter, trajectory, message)


def _bounded_step(x, jac, res, damping, lower, upper) -> np.ndarray:
    """Damped Gauss-Newton step with an active set for the box.

    Genes whose step would leave the box are pinned at the bound and the
    remaining genes are re-solved with the pinned contribution folded in.
    """
    dim = x.size
    fixed = np.zeros(dim, dtype=bool)
    pinned = np.zeros(dim)
    step = np.zeros(dim)
    for _ in range(dim):
        free = ~fixed
        if not np.any(free):
            break
        radial = np.zeros_like(x)
        radial[:8] = x[:8]
        basis = _complement(radial[free])
        jq = jac[:, free] @ basis
        normal = jq.T @ jq
        rhs = jq.T @ (res + jac[:, fixed] @ pinned[fixed])
        scale = np.diag(normal) + 1e-12
        step = np.zeros(dim)
        step[free] = -basis @ np.linalg.solve(normal + damping * np.diag(scale), rhs)
        step[fixed] = pinned[fixed]
        target = x + step
        out = free & ((target < lower) | (target > upper))
        if not np.any(out):
            break
        pinned[out] = np.clip(target[out], lower[out], upper[out]) - x[out]
        fixed |= out
    return step


def _complement(v) -> np.ndarray:
    """Orthonormal basis (m, m-1) of the complement of ``v``; identity if ``v`` is 0."""
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return np.eye(v.size)
    q, _ = np.linalg.qr(np.column_stack([v / norm, np.eye(v.size)]))
    return q[:, 1 : v.size]


def _lbfgs(x, bounds, rho, max_evals, fd_step, gtol, ftol, memory=10, max_backtracks=30):
    lower, upper, span = bounds.lower, bounds.upper, bounds.span
    h, probes = _probes(bounds, fd_step)
    dim = x.size

    def objective(points):
        return _error(symmetry_residuals(points))

    def gradient(point):
        vals = objective(point + probes)
        return (vals[:dim] - vals[dim:]) / (2.0 * h)

    fx = float(objective(x[None])[0])
    n_evals, n_iter = 1, 0
    trajectory = [1.0 / (1.0 + fx)]
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    message = "max evaluations"
    g = None
    while n_evals + 2 * dim <= max_evals:
        if fx == 0.0:
            message = "converged: exact symmetry"
            break
        if g is None:
            g = gradient(x)
            n_evals += 2 * dim
        pg = _projected_gradient(x, g, lower, upper)
        if np.linalg.norm(pg) < gtol:
            message = "converged: gradient"
            break

        d = -_two_loop(pg, s_hist, y_hist) if s_hist else -pg
        if d @ pg >= 0:
            d = -pg
            s_hist.clear()
            y_hist.clear()
        d[((x <= lower) & (d < 0)) | ((x >= upper) & (d > 0))] = 0.0
        alpha = 1.0 if s_hist else rho / max(np.max(np.abs(d) / span), 1e-300)

        accepted = False
        for _ in range(max_backtracks):
            if n_evals >= max_evals:
                break
            x_new = np.clip(x + alpha * d, lower, upper)
            f_new = float(objective(x_new[None])[0])
            n_evals += 1
            if f_new < fx and f_new <= fx + 1e-4 * (g @ (x_new - x)):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if s_hist:
                # retry once along the plain gradient
                s_hist.clear()
                y_hist.clear()
                continue
            message = "converged: no improving step"
            break

        n_iter += 1
        improvement = fx - f_new
        x_old, fx_old = x, fx
        x, fx = x_new, f_new
        trajectory.append(1.0 / (1.0 + fx))
        if improvement <= ftol * fx_old:
            message = "converged: relative improvement"
            break
        if n_evals + 2 * dim > max_evals:
            break
        g_new = gradient(x)
        n_evals += 2 * dim
        s, y = x - x_old, g_new - g
        if s @ y > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
        g = g_new

    return LocalSearchResult(x, 1.0 / (1.0 + fx), n_evals, n_iter, trajectory, message)


def _two_loop(g, s_hist, y_hist):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        a = (s @ q) / (y @ s)
        alphas.append(a)
        q -= a * y
    s, y = s_hist[-1], y_hist[-1]
    q *= (s @ y) / (y @ y)
    for (s, y), a in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = (y @ q) / (y @ s)
        q += (a - b) * s
    return q
