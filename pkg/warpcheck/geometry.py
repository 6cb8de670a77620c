"""
Chart-level tensor calculus computed from raw metric components.

Nothing here knows about warped products: these routines are the oracle the
closed-form formulas in ``warped``, ``spacetime`` and ``soliton`` are
certified against. Curvature uses R^a_{bcd} = ∂_c Γ^a_{db} - ∂_d Γ^a_{cb}
+ Γ^a_{ce} Γ^e_{db} - Γ^a_{de} Γ^e_{cb} and Ric_{bd} = R^a_{bad}, which
gives Ric = g on the unit round sphere.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Dict

import numpy as np

from configs.config import TOLERANCE
from .errors import GeometryError, LieFormMismatchError, SingularMetricError
from .expr import ZERO, Point, as_expr, diff, evaluate, variables
from .logger import logger
from .reports import ClassificationReport, sample_table, witness_of
from .sampling import draw_points, map_samples, probe_vectors, spread


def _env(p):
    return p.values if isinstance(p, Point) else p


class Chart:
    """
    A coordinate patch with a symmetric metric.

    Only the upper triangle of ``metric`` is read. Entries may be expressions,
    numbers or expression strings.
    """

    def __init__(self, name, coords, metric, signature=None, constants=None):
        self.name = name
        self.coords = tuple(coords)
        if len(set(self.coords)) != len(self.coords):
            raise GeometryError(f"chart {name}: repeated coordinate names")
        n = len(self.coords)
        if n < 1:
            raise GeometryError(f"chart {name}: dimension must be positive")
        rows = list(metric)
        if len(rows) != n or any(len(row) != n for row in rows):
            raise GeometryError(f"chart {name}: metric must be {n}x{n}")
        self._upper = {
            (i, j): as_expr(rows[i][j], constants)
            for i in range(n) for j in range(i, n)
        }
        self.signature = tuple(signature) if signature else tuple([1] * n)

    @classmethod
    def diagonal(cls, name, coords, entries, signature=None, constants=None):
        n = len(entries)
        rows = [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)]
        return cls(name, coords, rows, signature, constants)

    @property
    def dim(self):
        return len(self.coords)

    def component(self, i, j):
        return self._upper[(i, j) if i <= j else (j, i)]

    @cached_property
    def _first_derivatives(self):
        return {
            (k, i, j): diff(self._upper[(i, j)], self.coords[k])
            for k in range(self.dim) for (i, j) in self._upper
        }

    @cached_property
    def _second_derivatives(self):
        first = self._first_derivatives
        return {
            (l, k, i, j): diff(first[(k, i, j)], self.coords[l])
            for l in range(self.dim) for (k, i, j) in first
        }

    def variables(self):
        names = set()
        for e in self._upper.values():
            names |= variables(e)
        return names

    def at(self, p):
        """Per-point evaluation cache."""
        return LocalGeometry(self, _env(p))

    def point(self, **values):
        return Point(self.name, values)

    def __repr__(self):
        return f"Chart({self.name!r}, {self.coords!r})"


class LocalGeometry:
    """Metric, connection and curvature of a chart at one point."""

    def __init__(self, chart, env):
        self.chart = chart
        self.env = env

    @cached_property
    def g(self):
        n = self.chart.dim
        out = np.zeros((n, n))
        for (i, j), e in self.chart._upper.items():
            out[i, j] = out[j, i] = evaluate(e, self.env)
        return out

    @cached_property
    def det(self):
        return float(np.linalg.det(self.g))

    @cached_property
    def ginv(self):
        if abs(self.det) <= TOLERANCE['det_floor']:
            raise SingularMetricError(self.det, dict(self.env))
        return np.linalg.inv(self.g)

    @cached_property
    def dg(self):
        """dg[k, i, j] = ∂_k g_ij"""
        n = self.chart.dim
        out = np.zeros((n, n, n))
        for (k, i, j), e in self.chart._first_derivatives.items():
            out[k, i, j] = out[k, j, i] = evaluate(e, self.env)
        return out

    @cached_property
    def ddg(self):
        """ddg[l, k, i, j] = ∂_l ∂_k g_ij"""
        n = self.chart.dim
        out = np.zeros((n, n, n, n))
        for (l, k, i, j), e in self.chart._second_derivatives.items():
            out[l, k, i, j] = out[l, k, j, i] = evaluate(e, self.env)
        return out

    @cached_property
    def christoffel_lower(self):
        # Γ_{lij} = ½(∂_i g_lj + ∂_j g_li - ∂_l g_ij)
        dg = self.dg
        return 0.5 * (np.einsum('ilj->lij', dg) + np.einsum('jli->lij', dg) - dg)

    @cached_property
    def christoffel(self):
        """Γ[k, i, j] = Γ^k_{ij}"""
        return np.einsum('kl,lij->kij', self.ginv, self.christoffel_lower)

    @cached_property
    def christoffel_derivative(self):
        """dΓ[m, k, i, j] = ∂_m Γ^k_{ij}"""
        ddg = self.ddg
        d_lower = 0.5 * (
            np.einsum('milj->mlij', ddg) + np.einsum('mjli->mlij', ddg) - ddg
        )
        d_ginv = -np.einsum('ka,mab,bl->mkl', self.ginv, self.dg, self.ginv)
        return (
            np.einsum('mkl,lij->mkij', d_ginv, self.christoffel_lower)
            + np.einsum('kl,mlij->mkij', self.ginv, d_lower)
        )

    @cached_property
    def riemann(self):
        """R[a, b, c, d] = R^a_{bcd}"""
        gamma = self.christoffel
        d_gamma = self.christoffel_derivative
        return (
            np.einsum('cadb->abcd', d_gamma)
            - np.einsum('dacb->abcd', d_gamma)
            + np.einsum('ace,edb->abcd', gamma, gamma)
            - np.einsum('ade,ecb->abcd', gamma, gamma)
        )

    @cached_property
    def ricci(self):
        return np.einsum('abad->bd', self.riemann)

    def scalar_derivatives(self, phi):
        """First and second coordinate derivatives of a scalar."""
        coords = self.chart.coords
        first = np.array([evaluate(diff(phi, x), self.env) for x in coords])
        second = np.array([
            [evaluate(diff(diff(phi, x), y), self.env) for y in coords] for x in coords
        ])
        return first, second


class VectorField:
    """Components over a chart's coordinates; absent components are zero."""

    def __init__(self, chart_name, components=None, constants=None):
        self.chart_name = chart_name
        self.components: Dict[str, object] = {
            name: as_expr(value, constants) for name, value in (components or {}).items()
        }
        self._jacobians = {}

    def component(self, name):
        return self.components.get(name, ZERO)

    def at(self, coords, p):
        env = _env(p)
        return np.array([evaluate(self.component(x), env) for x in coords])

    def jacobian(self, coords, p):
        """J[k, i] = ∂_i ζ^k"""
        coords = tuple(coords)
        table = self._jacobians.get(coords)
        if table is None:
            table = [[diff(self.component(xk), xi) for xi in coords] for xk in coords]
            self._jacobians[coords] = table
        env = _env(p)
        return np.array([[evaluate(e, env) for e in row] for row in table])

    def apply(self, coords, phi, p):
        """Directional derivative ζ(φ)."""
        env = _env(p)
        return float(sum(
            evaluate(self.component(x), env) * evaluate(diff(phi, x), env) for x in coords
        ))

    def scaled(self, factor):
        return VectorField(self.chart_name, {k: v * factor for k, v in self.components.items()})

    def is_zero(self):
        return all(e == ZERO for e in self.components.values())

    def __repr__(self):
        parts = ', '.join(f"{k}: {v}" for k, v in self.components.items())
        return f"VectorField({self.chart_name!r}, {{{parts}}})"


def coordinate_field(chart, name):
    return VectorField(chart.name, {name: 1.0})


@dataclass
class CurveState:
    chart: str
    position: Point
    velocity: np.ndarray

    def __post_init__(self):
        self.velocity = np.asarray(self.velocity, dtype=float)
        if not np.all(np.isfinite(self.velocity)):
            raise GeometryError("curve velocity is not finite")


@dataclass(frozen=True)
class ConformalEstimate:
    factor: float
    residual: float
    conformal: bool


def vector_at(c, X, p):
    """Numeric components of a field or a plain vector at ``p``."""
    if isinstance(X, VectorField):
        return X.at(c.coords, p)
    return np.asarray(X, dtype=float)


# --- metric ---------------------------------------------------------------

def metric_at(c, p):
    return c.at(p).g


def inverse_metric_at(c, p):
    return c.at(p).ginv


def christoffel(c, p):
    return c.at(p).christoffel


def riemann(c, p):
    return c.at(p).riemann


def ricci(c, p):
    return c.at(p).ricci


def bianchi_residual(c, p):
    """Max entry of R^l_{ijk} + R^l_{jki} + R^l_{kij}."""
    R = c.at(p).riemann
    cyclic = R + np.einsum('ljki->lijk', R) + np.einsum('lkij->lijk', R)
    return float(np.max(np.abs(cyclic)))


def metric_compatibility_residual(c, p):
    local = c.at(p)
    g, gamma = local.g, local.christoffel
    # ∂_k g_ij - Γ^l_{ki} g_lj - Γ^l_{kj} g_il
    residual = local.dg - np.einsum('lki,lj->kij', gamma, g) - np.einsum('lkj,il->kij', gamma, g)
    return float(np.max(np.abs(residual)))


# --- scalars --------------------------------------------------------------

def gradient(c, phi, p):
    local = c.at(p)
    first, _ = local.scalar_derivatives(as_expr(phi))
    return local.ginv @ first


def hessian(c, phi, p):
    local = c.at(p)
    first, second = local.scalar_derivatives(as_expr(phi))
    return second - np.einsum('kij,k->ij', local.christoffel, first)


def laplacian(c, phi, p):
    return float(np.einsum('ij,ij->', inverse_metric_at(c, p), hessian(c, phi, p)))


def norm_squared(c, X, p):
    v = vector_at(c, X, p)
    return float(v @ metric_at(c, p) @ v)


# --- vector fields ----------------------------------------------------------

def nabla_field(c, zeta, p):
    """A[k, i] = ∂_i ζ^k + Γ^k_{ij} ζ^j, so that D_X ζ = A @ X."""
    local = c.at(p)
    return zeta.jacobian(c.coords, p) + np.einsum('kij,j->ki', local.christoffel, zeta.at(c.coords, p))


def covariant_derivative(c, X, zeta, p):
    """(D_X ζ)^k = X^i (∂_i ζ^k + Γ^k_{ij} ζ^j)"""
    return nabla_field(c, zeta, p) @ vector_at(c, X, p)


def lie_bracket(c, zeta, V, p):
    """[ζ, V]^k = ζ^i ∂_i V^k - V^i ∂_i ζ^k"""
    return V.jacobian(c.coords, p) @ zeta.at(c.coords, p) - zeta.jacobian(c.coords, p) @ V.at(c.coords, p)


def lie_derivative_metric_coordinate(c, zeta, p):
    local = c.at(p)
    J = zeta.jacobian(c.coords, p)
    return np.einsum('k,kij->ij', zeta.at(c.coords, p), local.dg) + J.T @ local.g + local.g @ J


def lie_derivative_metric_covariant(c, zeta, p):
    """(L_ζ g)(X, Y) = g(D_X ζ, Y) + g(X, D_Y ζ)"""
    A = nabla_field(c, zeta, p)
    g = metric_at(c, p)
    return A.T @ g + g @ A


def lie_derivative_metric(c, zeta, p):
    """
    Lie derivative of the metric along ``zeta`` at ``p``.

    Both the coordinate form and the covariant form are computed and must
    agree within TOLERANCE['lie_forms'] relative to their size.

    Returns:
        np.ndarray: Symmetric matrix (L_ζ g)_ij, coordinate form

    Raises:
        LieFormMismatchError: The two forms disagree
    """
    coordinate = lie_derivative_metric_coordinate(c, zeta, p)
    covariant = lie_derivative_metric_covariant(c, zeta, p)
    gap = float(np.max(np.abs(coordinate - covariant))) if coordinate.size else 0.0
    scale = max(float(np.max(np.abs(coordinate))), float(np.max(np.abs(covariant)))) if coordinate.size else 0.0
    if gap > TOLERANCE['lie_forms'] * (1.0 + scale):
        logger.error(f"Lie derivative forms disagree by {gap:.3e} on {c.name}")
        raise LieFormMismatchError(gap, dict(_env(p)))
    return coordinate


def conformal_factor_estimate(c, zeta, p, tol=None):
    """
    Trace estimate ρ = tr(g⁻¹ L_ζ g) / n with residual max|L_ζ g - ρ g|.

    Returns:
        ConformalEstimate: factor, residual and the pointwise verdict
    """
    tol = TOLERANCE['default'] if tol is None else tol
    L = lie_derivative_metric(c, zeta, p)
    g = metric_at(c, p)
    rho = float(np.trace(inverse_metric_at(c, p) @ L) / c.dim)
    residual = float(np.max(np.abs(L - rho * g)))
    scale = max(float(np.max(np.abs(L))), abs(rho) * float(np.max(np.abs(g))))
    return ConformalEstimate(rho, residual, residual <= tol * (1.0 + scale))


# --- sampled classification -------------------------------------------------

def sample_points(c, plan, positive=()):
    """Seeded points on ``c`` with invertible metric and positive ``positive`` expressions."""
    def accept(point):
        if abs(c.at(point).det) <= TOLERANCE['det_floor']:
            return False
        return all(evaluate(e, point) > TOLERANCE['warp_floor'] for e in positive)

    return draw_points(c.name, c.coords, plan, accept)


def killing_check(c, zeta, plan):
    """
    Sampled Killing test: g(D_X ζ, X) = 0 for every probe X.

    Probes are the coordinate frame plus seeded random unit vectors.
    """
    points = sample_points(c, plan)
    probes = probe_vectors(c.dim, plan.seed)

    def measure(p):
        A = nabla_field(c, zeta, p)
        g = metric_at(c, p)
        gA = g @ A
        values = np.einsum('pi,ij,pj->p', probes, gA, probes)
        return float(np.max(np.abs(values))), float(np.max(np.abs(gA)))

    results = map_samples(measure, points)
    residuals = [r for r, _ in results]
    bounds = [plan.bound(s) for _, s in results]
    table = sample_table(
        points, c.coords,
        residual=residuals,
        bound=bounds,
    )
    passed = all(r <= b for r, b in zip(residuals, bounds))
    worst = max(residuals)
    logger.info(f"killing_check on {c.name}: worst residual {worst:.3e}")
    return ClassificationReport(
        operation='killing_check',
        verdict='killing' if passed else 'not killing',
        passed=passed,
        worst_residual=worst,
        witness=witness_of(points, residuals),
        table=table,
    )


def conformal_check(c, zeta, plan):
    """Sampled conformal classification of a chart field (L_ζ g = ρ g)."""
    points = sample_points(c, plan)
    estimates = map_samples(lambda p: conformal_factor_estimate(c, zeta, p, plan.tol), points)
    factors = [e.factor for e in estimates]
    residuals = [e.residual for e in estimates]
    table = sample_table(
        points, c.coords,
        factor=factors,
        residual=residuals,
    )
    passed = all(e.conformal for e in estimates)
    verdict = classify_factors(passed, factors, plan)
    return ClassificationReport(
        operation='conformal_check',
        verdict=verdict,
        passed=passed,
        worst_residual=max(residuals),
        witness=witness_of(points, residuals),
        derived={'rho': float(np.mean(factors)), 'rho_spread': float(spread(factors))},
        table=table,
    )


def classify_factors(conformal, factors, plan):
    """Name a conformal verdict from the sampled factors."""
    if not conformal:
        return 'not conformal'
    factors = np.asarray(factors, dtype=float)
    scale = float(np.max(np.abs(factors))) if factors.size else 0.0
    if scale <= plan.bound(0.0):
        return 'killing'
    if float(spread(factors)) <= plan.bound(scale):
        return 'homothetic'
    return 'conformal, non-homothetic'


def concurrent_check(c, zeta, plan):
    """
    Sampled concurrency test D_X ζ = X, with the conformal factor of ζ
    (2 for a concurrent field) reported alongside.
    """
    points = sample_points(c, plan)
    probes = probe_vectors(c.dim, plan.seed)
    identity = np.eye(c.dim)

    def measure(p):
        A = nabla_field(c, zeta, p)
        residual = float(np.max(np.abs(probes @ (A - identity).T)))
        estimate = conformal_factor_estimate(c, zeta, p, plan.tol)
        return residual, estimate.factor

    results = map_samples(measure, points)
    residuals = [r for r, _ in results]
    factors = [f for _, f in results]
    passed = all(r <= plan.bound(1.0) for r in residuals)
    table = sample_table(
        points, c.coords,
        residual=residuals,
        factor=factors,
    )
    return ClassificationReport(
        operation='concurrent_check',
        verdict='concurrent' if passed else 'not concurrent',
        passed=passed,
        worst_residual=max(residuals),
        witness=witness_of(points, residuals),
        derived={
            'rho': float(np.mean(factors)),
            'rho_deviation': max(abs(f - 2.0) for f in factors),
        },
        table=table,
    )


# --- geodesics --------------------------------------------------------------

def geodesic_acceleration(c, position, velocity):
    local = c.at(position)
    return -np.einsum('kij,i,j->k', local.christoffel, velocity, velocity)


def _shift(c, position, delta):
    values = dict(_env(position))
    for name, d in zip(c.coords, delta):
        values[name] = values[name] + float(d)
    return values


def geodesic_step(c, s, dt):
    """One classic RK4 step of ẍ^k + Γ^k_ij ẋ^i ẋ^j = 0."""
    if not dt > 0:
        raise GeometryError(f"step size must be positive, got {dt}")
    x0 = s.position
    v0 = s.velocity
    a1 = geodesic_acceleration(c, x0, v0)
    k1x, k1v = v0, a1
    x2 = _shift(c, x0, 0.5 * dt * k1x)
    k2x = v0 + 0.5 * dt * k1v
    k2v = geodesic_acceleration(c, x2, k2x)
    x3 = _shift(c, x0, 0.5 * dt * k2x)
    k3x = v0 + 0.5 * dt * k2v
    k3v = geodesic_acceleration(c, x3, k3x)
    x4 = _shift(c, x0, dt * k3x)
    k4x = v0 + dt * k3v
    k4v = geodesic_acceleration(c, x4, k4x)
    dx = dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
    dv = dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return CurveState(c.name, Point(c.name, _shift(c, x0, dx)), v0 + dv)


def integrate_geodesic(c, s, dt, steps):
    """Trajectory of ``steps`` RK4 steps, starting state included."""
    trajectory = [s]
    for _ in range(int(steps)):
        s = geodesic_step(c, s, dt)
        trajectory.append(s)
    return trajectory


def coordinate_line(c, s, dt, steps):
    """Straight coordinate line x(s) = x0 + s v with constant velocity."""
    return [
        CurveState(c.name, Point(c.name, _shift(c, s.position, k * dt * s.velocity)), s.velocity)
        for k in range(int(steps) + 1)
    ]


def speed_squared(c, s):
    return float(s.velocity @ metric_at(c, s.position) @ s.velocity)
