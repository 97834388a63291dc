"""Spacetimes as tetrad fields: metrics, connections, local Lorentz gauge moves.

A model evaluates, at any event of its single open chart:

* ``metric(coords)``        g_{mu nu}                      (4,4), row mu
* ``tetrad(coords)``        e^mu_I                         (4,4), row mu, column I
* ``inverse_tetrad(coords)``e^I_mu                         (4,4), row I, column mu
* ``connection(coords)``    omega_nu^I_J                   (4,4,4), [nu, I, J]

Natural units c = hbar = 1 throughout; all conversion happens at the CLI
boundary.  The connection is omega_nu^I_J = e^I_rho d_nu e^rho_J
+ Gamma^sigma_{nu rho} e^I_sigma e^rho_J; after lowering the I index with
eta it is antisymmetric in (I, J).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, QulineError
from .spin_algebra import ETA, LocalLorentz, minkowski_dot

# 4th-order central difference stencil; default step in chart units.
_FD_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_FD_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
DEFAULT_FD_STEP = 1e-5


@dataclass(frozen=True)
class Event:
    """A point of a chart: four coordinates plus the chart it lives on."""

    coords: np.ndarray
    chart_id: str

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).reshape(4)
        if not np.all(np.isfinite(c)):
            raise QulineError("event coordinates must be finite")
        object.__setattr__(self, "coords", c)

    def close_to(self, other, tol=1e-9):
        if self.chart_id != other.chart_id:
            return False
        scale = 1.0 + np.abs(self.coords).max() + np.abs(other.coords).max()
        return np.abs(self.coords - other.coords).max() <= tol * scale


def _coords_of(x):
    return x.coords if isinstance(x, Event) else np.asarray(x, dtype=float).reshape(4)


class SpacetimeModel:
    """Base class: a chart, a tetrad field and everything derived from it.

    Subclasses either provide analytic ``tetrad``/``metric``/``connection``
    or inherit the finite-difference fallbacks defined here (``metric`` from
    the inverse tetrad, ``connection`` from tetrad and metric derivatives).
    """

    name = "model"
    chart_id = "chart"
    connection_mode = "finite-difference"
    signature = "(+,-,-,-)"

    def __init__(self, fd_step=DEFAULT_FD_STEP):
        self.fd_step = float(fd_step)

    # -- mandatory surface -------------------------------------------------
    def tetrad(self, x):
        raise NotImplementedError

    def in_domain(self, coords):
        return True

    # -- derived surface ---------------------------------------------------
    def event(self, *coords):
        c = np.asarray(coords, dtype=float).reshape(4)
        self.check_domain(c)
        return Event(c, self.chart_id)

    def check_domain(self, x):
        c = _coords_of(x)
        if not self.in_domain(c):
            raise DomainError(f"{self.name}: coordinates {c.tolist()} outside chart domain")
        if isinstance(x, Event) and x.chart_id != self.chart_id:
            raise DomainError(f"event on chart {x.chart_id!r}, model uses {self.chart_id!r}")

    def inverse_tetrad(self, x):
        return np.linalg.inv(self.tetrad(x))

    def metric(self, x):
        einv = self.inverse_tetrad(x)
        return einv.T @ ETA @ einv

    def inverse_metric(self, x):
        e = self.tetrad(x)
        return e @ ETA @ e.T

    def connection(self, x):
        self.check_domain(x)
        return connection_finite_difference(self, _coords_of(x), self.fd_step)

    # -- small conveniences used throughout the library ---------------------
    def to_tetrad(self, x, v_coords):
        """Coordinate components V^mu -> tetrad components V^I."""
        return self.inverse_tetrad(x) @ np.asarray(v_coords)

    def to_coords(self, x, v_tetrad):
        """Tetrad components V^I -> coordinate components V^mu."""
        return self.tetrad(x) @ np.asarray(v_tetrad)

    def lower_coordinate(self, x, v_coords):
        return self.metric(x) @ np.asarray(v_coords)


def _partial_tetrad(model, coords, nu, step):
    d = np.zeros((4, 4))
    for off, w in zip(_FD_OFFSETS, _FD_WEIGHTS):
        c = coords.copy()
        c[nu] += off * step
        if not model.in_domain(c):
            raise DomainError(f"{model.name}: finite-difference stencil leaves chart domain")
        d += w * model.tetrad(c)
    return d / step


def _partial_metric(model, coords, nu, step):
    d = np.zeros((4, 4))
    for off, w in zip(_FD_OFFSETS, _FD_WEIGHTS):
        c = coords.copy()
        c[nu] += off * step
        d += w * model.metric(c)
    return d / step


def christoffel(model, coords, step=None):
    """Gamma^sigma_{nu rho} from the metric, by 4th-order central differences."""
    coords = np.asarray(coords, dtype=float).reshape(4)
    h = model.fd_step if step is None else step
    dg = np.stack([_partial_metric(model, coords, nu, h) for nu in range(4)])  # dg[nu, a, b]
    ginv = model.inverse_metric(coords)
    # Gamma^s_{nr} = 1/2 g^{sa}(d_n g_{ar} + d_r g_{an} - d_a g_{nr})
    return 0.5 * np.einsum("sa,nra->snr",
                           ginv,
                           np.einsum("nar->nra", dg)
                           + np.einsum("ran->nra", dg)
                           - np.einsum("anr->nra", dg))


def connection_finite_difference(model, coords, step=None):
    """omega_nu^I_J from finite differences of the tetrad and the metric.

    Used both as the generic evaluator for models without analytic
    connections and as the self-consistency oracle for the analytic ones.
    """
    coords = np.asarray(coords, dtype=float).reshape(4)
    h = model.fd_step if step is None else step
    e = model.tetrad(coords)             # e^mu_I
    einv = model.inverse_tetrad(coords)  # e^I_mu
    de = np.stack([_partial_tetrad(model, coords, nu, h) for nu in range(4)])  # de[nu, rho, J]
    gamma = christoffel(model, coords, step=h)
    omega = np.einsum("ir,nrj->nij", einv, de) + np.einsum("snr,is,rj->nij", gamma, einv, e)
    return omega


class MinkowskiModel(SpacetimeModel):
    name = "minkowski"
    chart_id = "minkowski-cartesian"
    connection_mode = "analytic"

    def tetrad(self, x):
        return np.eye(4)

    def metric(self, x):
        return ETA.copy()

    def inverse_metric(self, x):
        return ETA.copy()

    def connection(self, x):
        self.check_domain(x)
        return np.zeros((4, 4, 4))


class RindlerModel(SpacetimeModel):
    """Uniformly accelerated frame: g_00 = (1 + z g)^2, Cartesian (t, x, y, z).

    ``g`` is the proper acceleration at z = 0 in natural units (1/length).
    Stored explicitly so g_00 is evaluated exactly, never sampled.
    """

    name = "rindler"
    chart_id = "rindler-cartesian"
    connection_mode = "analytic"

    def __init__(self, g, fd_step=DEFAULT_FD_STEP):
        super().__init__(fd_step)
        if g <= 0:
            raise QulineError("Rindler acceleration must be positive")
        self.g = float(g)

    def in_domain(self, coords):
        return 1.0 + coords[3] * self.g > 1e-12

    def _f(self, coords):
        return 1.0 + coords[3] * self.g

    def tetrad(self, x):
        f = self._f(_coords_of(x))
        return np.diag([1.0 / f, 1.0, 1.0, 1.0])

    def inverse_tetrad(self, x):
        f = self._f(_coords_of(x))
        return np.diag([f, 1.0, 1.0, 1.0])

    def metric(self, x):
        f = self._f(_coords_of(x))
        return np.diag([f * f, -1.0, -1.0, -1.0])

    def inverse_metric(self, x):
        f = self._f(_coords_of(x))
        return np.diag([1.0 / (f * f), -1.0, -1.0, -1.0])

    def connection(self, x):
        self.check_domain(x)
        omega = np.zeros((4, 4, 4))
        omega[0, 0, 3] = self.g
        omega[0, 3, 0] = self.g
        return omega


class SchwarzschildModel(SpacetimeModel):
    """Static exterior chart (t, r, theta, phi) with the diagonal tetrad.

    Domain: r > 2M with a small margin, theta bounded away from the axis
    where the phi leg of the tetrad degenerates.
    """

    name = "schwarzschild"
    chart_id = "schwarzschild-polar"
    connection_mode = "analytic"
    _axis_margin = 1e-8

    def __init__(self, mass, fd_step=DEFAULT_FD_STEP):
        super().__init__(fd_step)
        if mass <= 0:
            raise QulineError("Schwarzschild mass must be positive")
        self.mass = float(mass)

    def in_domain(self, coords):
        r, th = coords[1], coords[2]
        return (r > 2.0 * self.mass * (1.0 + 1e-12)
                and self._axis_margin < th < np.pi - self._axis_margin)

    def _f(self, coords):
        return 1.0 - 2.0 * self.mass / coords[1]

    def tetrad(self, x):
        c = _coords_of(x)
        f, r, th = self._f(c), c[1], c[2]
        return np.diag([1.0 / np.sqrt(f), np.sqrt(f), 1.0 / r, 1.0 / (r * np.sin(th))])

    def inverse_tetrad(self, x):
        c = _coords_of(x)
        f, r, th = self._f(c), c[1], c[2]
        return np.diag([np.sqrt(f), 1.0 / np.sqrt(f), r, r * np.sin(th)])

    def metric(self, x):
        c = _coords_of(x)
        f, r, th = self._f(c), c[1], c[2]
        return np.diag([f, -1.0 / f, -r * r, -(r * np.sin(th)) ** 2])

    def inverse_metric(self, x):
        c = _coords_of(x)
        f, r, th = self._f(c), c[1], c[2]
        return np.diag([1.0 / f, -f, -1.0 / r**2, -1.0 / (r * np.sin(th)) ** 2])

    def connection(self, x):
        self.check_domain(x)
        c = _coords_of(x)
        f, r, th = self._f(c), c[1], c[2]
        sf = np.sqrt(f)
        m_r2 = self.mass / r**2
        omega = np.zeros((4, 4, 4))
        omega[0, 0, 1] = m_r2
        omega[0, 1, 0] = m_r2
        omega[2, 1, 2] = -sf
        omega[2, 2, 1] = sf
        omega[3, 1, 3] = -sf * np.sin(th)
        omega[3, 3, 1] = sf * np.sin(th)
        omega[3, 2, 3] = -np.cos(th)
        omega[3, 3, 2] = np.cos(th)
        return omega


class TabulatedModel(SpacetimeModel):
    """Custom model from tetrad samples e^mu_I on a rectangular grid.

    Multilinear interpolation between nodes; axes with a single node are
    treated as constant.  Connection is always finite-difference.
    """

    name = "tabulated"
    chart_id = "tabulated-grid"

    def __init__(self, axes, tetrads, fd_step=None):
        self.axes = [np.asarray(a, dtype=float) for a in axes]
        self.values = np.asarray(tetrads, dtype=float)
        if self.values.shape != tuple(len(a) for a in self.axes) + (4, 4):
            raise QulineError("tetrad table shape must be grid shape + (4, 4)")
        spans = [a[-1] - a[0] for a in self.axes if len(a) > 1]
        step = fd_step if fd_step is not None else min(spans) * 1e-4 if spans else DEFAULT_FD_STEP
        super().__init__(step)
        self._active = [i for i, a in enumerate(self.axes) if len(a) > 1]
        from scipy.interpolate import RegularGridInterpolator
        pts = [self.axes[i] for i in self._active]
        vals = self.values
        for i in reversed(range(4)):
            if i not in self._active:
                vals = vals.take(0, axis=i)
        self._interp = RegularGridInterpolator(pts, vals, method="linear") if pts else None
        self._const = vals if not pts else None

    def in_domain(self, coords):
        for i in self._active:
            a = self.axes[i]
            if not (a[0] <= coords[i] <= a[-1]):
                return False
        return True

    def tetrad(self, x):
        c = _coords_of(x)
        if self._interp is None:
            return self._const.copy()
        return self._interp(np.array([c[i] for i in self._active]))[0]


def make_builtin_model(name, params=()):
    """Construct one of the built-in model families.

    ``params``: [] for minkowski, [g] for rindler, [M] for schwarzschild,
    in natural units.
    """
    params = list(np.atleast_1d(np.asarray(params, dtype=float))) if len(params) else []
    if name == "minkowski":
        return MinkowskiModel()
    if name == "rindler":
        if len(params) != 1:
            raise QulineError("rindler takes exactly one parameter (acceleration g)")
        return RindlerModel(params[0])
    if name == "schwarzschild":
        if len(params) != 1:
            raise QulineError("schwarzschild takes exactly one parameter (mass M)")
        return SchwarzschildModel(params[0])
    raise QulineError(f"unknown model family {name!r}")


class TransformedModel(SpacetimeModel):
    """A model re-gauged by a local Lorentz field Lambda(x).

    Inverse tetrad transforms as e^I_mu -> Lambda^I_J e^J_mu; the metric is
    unchanged; the connection picks up the inhomogeneous Lambda dLambda term.
    If ``jacobian`` (event -> d_mu Lambda^I_J, shape (4,4,4)) is supplied and
    the base connection is analytic, the transformed connection is evaluated
    without finite differences.
    """

    def __init__(self, base, field, jacobian=None):
        super().__init__(base.fd_step)
        self.base = base
        self.field = field
        self.jacobian = jacobian
        self.name = base.name + "+lorentz"
        self.chart_id = base.chart_id
        self.connection_mode = (
            "analytic" if jacobian is not None and base.connection_mode == "analytic"
            else "finite-difference"
        )

    def in_domain(self, coords):
        return self.base.in_domain(coords)

    def _lambda(self, coords):
        lam = self.field(Event(coords, self.chart_id))
        if isinstance(lam, LocalLorentz):
            return lam.matrix
        lam = np.asarray(lam, dtype=float)
        LocalLorentz(lam)  # validates
        return lam

    def tetrad(self, x):
        c = _coords_of(x)
        lam = self._lambda(c)
        return self.base.tetrad(c) @ np.linalg.inv(lam)

    def inverse_tetrad(self, x):
        c = _coords_of(x)
        return self._lambda(c) @ self.base.inverse_tetrad(c)

    def metric(self, x):
        return self.base.metric(_coords_of(x))

    def inverse_metric(self, x):
        return self.base.inverse_metric(_coords_of(x))

    def connection(self, x):
        self.check_domain(x)
        c = _coords_of(x)
        if self.connection_mode != "analytic":
            return connection_finite_difference(self, c, self.fd_step)
        lam = self._lambda(c)
        lam_inv = np.linalg.inv(lam)
        base_omega = self.base.connection(c)
        dlam = np.asarray(self.jacobian(Event(c, self.chart_id)), dtype=float)
        omega = np.einsum("ik,nkl,lj->nij", lam, base_omega, lam_inv)
        # inhomogeneous term Lambda d_mu(Lambda^{-1}), with
        # d(Lambda^{-1}) = -Lambda^{-1} dLambda Lambda^{-1}
        dlam_inv = -np.einsum("ik,nkl,lj->nij", lam_inv, dlam, lam_inv)
        omega += np.einsum("ik,nkj->nij", lam, dlam_inv)
        return omega


def apply_local_lorentz(model, field, jacobian=None):
    """Re-gauge ``model`` by the local Lorentz field ``field`` (event -> Lambda)."""
    return TransformedModel(model, field, jacobian)


def connection_at(model, x):
    """omega_nu^I_J components at an event; shape (4, 4, 4) indexed [nu, I, J]."""
    return model.connection(x)


def lower_connection(omega):
    """omega_{nu I J} = eta_{IK} omega_nu^K_J; antisymmetric in (I, J)."""
    return np.einsum("ik,nkj->nij", ETA, omega)


def parallel_transport_vector(model, worldline, v0, tol=1e-11):
    """Parallel transport tetrad components V^I along a sampled worldline.

    Returns (params, vectors) with vectors[i] the transported V at params[i];
    eta-norm conservation is checked against ``tol`` and reported via
    :class:`ToleranceError` on failure.
    """
    from scipy.integrate import solve_ivp

    from .errors import ToleranceError

    v0 = np.asarray(v0, dtype=float).reshape(4)

    def rhs(lam, v):
        xdot = worldline.coordinate_velocity(lam)
        omega = model.connection(worldline.position(lam))
        return -np.einsum("n,nij,j->i", xdot, omega, v)

    t0, t1 = worldline.param_span
    sol = solve_ivp(rhs, (t0, t1), v0, method="RK45", rtol=tol, atol=tol,
                    dense_output=True)
    if not sol.success:
        raise QulineError(f"parallel transport failed: {sol.message}")
    params = np.linspace(t0, t1, 201)
    vectors = sol.sol(params).T
    n0 = minkowski_dot(v0, v0)
    drift = max(abs(minkowski_dot(v, v) - n0) for v in vectors)
    scale = 1.0 + abs(n0)
    if drift > 1000.0 * tol * scale * max(1.0, abs(t1 - t0)):
        raise ToleranceError("parallel transport norm drift exceeds budget",
                             achieved=drift, requested=tol)
    return params, vectors
