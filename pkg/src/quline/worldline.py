"""Worldlines: Lorentz-force trajectories, null geodesics, prescribed paths.

A worldline knows its model and exposes, for any value of its parameter
(proper time for timelike curves, an affine parameter for null ones):

* ``position(lam)``             chart coordinates x^mu
* ``coordinate_velocity(lam)``  dx^mu/dlam (coordinate components)
* ``velocity(lam)``             u^I (tetrad components)
* ``acceleration(lam)``         a^I = Du^I/Dlam (tetrad components)

Timelike velocities satisfy u.u = 1, null ones u.u = 0; normalization is
verified after integration, never re-imposed.
"""

from __future__ import annotations

import csv

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, QulineError, ToleranceError
from .geometry import Event
from .spin_algebra import ETA, minkowski_dot


class EMField:
    """External electromagnetic field.

    ``field``   event coords -> F_IJ, antisymmetric tetrad components.
    ``potential`` (optional) event coords -> A_mu, lower coordinate
    components, used only by phase integrals.
    """

    def __init__(self, field, potential=None):
        self._field = field
        self._potential = potential

    def tensor(self, coords):
        f = np.asarray(self._field(coords), dtype=float)
        if np.abs(f + f.T).max() > 1e-12 * (1.0 + np.abs(f).max()):
            raise QulineError("EM field tensor must be antisymmetric")
        return f

    def has_potential(self):
        return self._potential is not None

    def potential(self, coords):
        if self._potential is None:
            return np.zeros(4)
        return np.asarray(self._potential(coords), dtype=float)

    def consistency_residual(self, model, coords, step=1e-5):
        """|F_IJ - tetrad components of 2 grad_[mu A_nu]| at one event."""
        coords = np.asarray(coords, dtype=float).reshape(4)
        dA = np.zeros((4, 4))
        for mu in range(4):
            for off, w in zip((-2, -1, 1, 2), (1 / 12, -8 / 12, 8 / 12, -1 / 12)):
                c = coords.copy()
                c[mu] += off * step
                dA[mu] += w * self.potential(c)
        dA /= step
        f_coord = dA - dA.T          # F_{mu nu} = d_mu A_nu - d_nu A_mu
        e = model.tetrad(coords)     # e^mu_I
        f_tet = np.einsum("mi,nj,mn->ij", e, e, f_coord)
        return np.abs(f_tet - self.tensor(coords)).max()


def constant_magnetic_field(b_vector, potential=None):
    """Homogeneous magnetic field in the frame of the tetrad: F_ij = -eps_ijk B^k."""
    b = np.asarray(b_vector, dtype=float).reshape(3)
    f = np.zeros((4, 4))
    f[1, 2] = -b[2]
    f[2, 1] = b[2]
    f[2, 3] = -b[0]
    f[3, 2] = b[0]
    f[3, 1] = -b[1]
    f[1, 3] = b[1]
    return EMField(lambda coords: f, potential)


class Worldline:
    """Base class; see module docstring for the evaluation surface."""

    kind = "timelike"
    param_meaning = "proper_time"

    def __init__(self, model, span):
        self.model = model
        self.param_span = (float(span[0]), float(span[1]))

    # subclasses implement position / velocity / acceleration
    def position(self, lam):
        raise NotImplementedError

    def velocity(self, lam):
        raise NotImplementedError

    def acceleration(self, lam):
        raise NotImplementedError

    def coordinate_velocity(self, lam):
        return self.model.to_coords(self.position(lam), self.velocity(lam))

    def velocity_coordinate_derivative(self, lam):
        """du^I/dlam (ordinary derivative of the tetrad components)."""
        x = self.position(lam)
        u = self.velocity(lam)
        omega = self.model.connection(x)
        xdot = self.coordinate_velocity(lam)
        return self.acceleration(lam) - np.einsum("n,nij,j->i", xdot, omega, u)

    def event(self, lam):
        return Event(self.position(lam), self.model.chart_id)

    @property
    def start_event(self):
        return self.event(self.param_span[0])

    @property
    def end_event(self):
        return self.event(self.param_span[1])

    def sample_params(self, n=201):
        return np.linspace(self.param_span[0], self.param_span[1], n)

    def norm_audit(self, n=201):
        """Max |u.u - target| over n samples (target 1 timelike, 0 null)."""
        target = 1.0 if self.kind == "timelike" else 0.0
        return max(abs(minkowski_dot(self.velocity(l), self.velocity(l)) - target)
                   for l in self.sample_params(n))

    def to_csv(self, path, n=201):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["param"] + [f"x{m}" for m in range(4)]
                       + [f"u{i}" for i in range(4)] + [f"a{i}" for i in range(4)])
            for lam in self.sample_params(n):
                row = ([lam] + list(self.position(lam)) + list(self.velocity(lam))
                       + list(self.acceleration(lam)))
                w.writerow([f"{v:.17g}" for v in row])


class AnalyticWorldline(Worldline):
    """Worldline given by closed-form callables of the parameter."""

    def __init__(self, model, span, position, velocity, acceleration, kind="timelike",
                 param_meaning=None):
        super().__init__(model, span)
        self._position = position
        self._velocity = velocity
        self._acceleration = acceleration
        self.kind = kind
        self.param_meaning = param_meaning or ("proper_time" if kind == "timelike" else "affine")

    def position(self, lam):
        return np.asarray(self._position(lam), dtype=float)

    def velocity(self, lam):
        return np.asarray(self._velocity(lam), dtype=float)

    def acceleration(self, lam):
        return np.asarray(self._acceleration(lam), dtype=float)


class IntegratedWorldline(Worldline):
    """Worldline backed by an adaptive RK5(4) solution with dense output."""

    def __init__(self, model, sol, span, kind, accel_fn):
        super().__init__(model, span)
        self.kind = kind
        self.param_meaning = "proper_time" if kind == "timelike" else "affine"
        self._sol = sol
        self._accel = accel_fn

    def _state(self, lam):
        return self._sol(lam)

    def position(self, lam):
        return self._state(lam)[:4]

    def velocity(self, lam):
        return self._state(lam)[4:]

    def acceleration(self, lam):
        y = self._state(lam)
        return self._accel(y[:4], y[4:])


class SampledWorldline(Worldline):
    """Worldline replayed from tabulated samples, cubic-Hermite interpolated."""

    def __init__(self, model, params, positions, velocities, accelerations, kind="timelike"):
        super().__init__(model, (params[0], params[-1]))
        self.kind = kind
        self.param_meaning = "proper_time" if kind == "timelike" else "affine"
        from scipy.interpolate import CubicHermiteSpline
        params = np.asarray(params, dtype=float)
        positions = np.asarray(positions, dtype=float)
        velocities = np.asarray(velocities, dtype=float)
        self._acc = np.asarray(accelerations, dtype=float)
        xdot = np.array([model.to_coords(positions[i], velocities[i])
                         for i in range(len(params))])
        udot = np.array([
            self._acc[i] - np.einsum("n,nij,j->i", xdot[i],
                                     model.connection(positions[i]), velocities[i])
            for i in range(len(params))
        ])
        self._pos_spline = CubicHermiteSpline(params, positions, xdot)
        self._vel_spline = CubicHermiteSpline(params, velocities, udot)
        self._acc_spline = CubicHermiteSpline(params, self._acc,
                                              np.gradient(self._acc, params, axis=0))

    def position(self, lam):
        return self._pos_spline(lam)

    def velocity(self, lam):
        return self._vel_spline(lam)

    def acceleration(self, lam):
        return self._acc_spline(lam)


def worldline_from_csv(path, model, kind="timelike"):
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append([float(rec["param"])]
                        + [float(rec[f"x{m}"]) for m in range(4)]
                        + [float(rec[f"u{i}"]) for i in range(4)]
                        + [float(rec[f"a{i}"]) for i in range(4)])
    arr = np.asarray(rows)
    return SampledWorldline(model, arr[:, 0], arr[:, 1:5], arr[:, 5:9], arr[:, 9:13], kind)


def _lorentz_force_accel(model, em, charge_to_mass):
    if em is None or charge_to_mass == 0.0:
        return lambda x, u: np.zeros(4)

    def accel(x, u):
        f = em.tensor(x)
        return charge_to_mass * (ETA @ f @ u)

    return accel


def _integrate(model, x0, u0, span, tol, kind, accel_fn, max_step=np.inf):
    x0 = np.asarray(x0, dtype=float).reshape(4)
    u0 = np.asarray(u0, dtype=float).reshape(4)
    model.check_domain(x0)

    def rhs(lam, y):
        x, u = y[:4], y[4:]
        if not model.in_domain(x):
            raise DomainError(f"{model.name}: trajectory left chart domain at parameter {lam}")
        e = model.tetrad(x)
        omega = model.connection(x)
        xdot = e @ u
        udot = accel_fn(x, u) - np.einsum("n,nij,j->i", xdot, omega, u)
        return np.concatenate([xdot, udot])

    sol = solve_ivp(rhs, (0.0, span), np.concatenate([x0, u0]), method="RK45",
                    rtol=tol, atol=tol, dense_output=True, max_step=max_step)
    if not sol.success:
        raise ToleranceError(f"worldline integration failed: {sol.message}")
    wl = IntegratedWorldline(model, sol.sol, (0.0, span), kind, accel_fn)
    drift = wl.norm_audit()
    budget = max(1e-9, 1000.0 * tol * max(1.0, abs(span)))
    if drift > budget:
        raise ToleranceError("velocity normalization drifted during integration",
                             achieved=drift, requested=budget)
    return wl


def integrate_timelike(model, em, x0, u0, charge_to_mass=0.0, span=1.0, tol=1e-11,
                       max_step=np.inf):
    """Integrate the Lorentz-force law m D^2x/Dtau^2 = -e u F from (x0, u0).

    ``u0`` is a future-pointing unit timelike vector in tetrad components;
    ``charge_to_mass`` is e/m in natural units.
    """
    u0 = np.asarray(u0, dtype=float).reshape(4)
    norm = minkowski_dot(u0, u0)
    if abs(norm - 1.0) > 1e-9:
        raise QulineError(f"u0 must be normalized timelike (u.u = {norm})")
    if u0[0] <= 0:
        raise QulineError("u0 must be future-pointing")
    if span <= 0:
        raise QulineError("span must be positive")
    return _integrate(model, x0, u0, span, tol, "timelike",
                      _lorentz_force_accel(model, em, charge_to_mass), max_step)


def integrate_null_geodesic(model, x0, k0, span=1.0, tol=1e-11, max_step=np.inf):
    """Integrate a null geodesic with the wavevector itself as affine velocity."""
    k0 = np.asarray(k0, dtype=float).reshape(4)
    norm = minkowski_dot(k0, k0)
    if abs(norm) > 1e-12 * (1.0 + k0 @ k0):
        raise QulineError(f"k0 must be null (k.k = {norm})")
    if span <= 0:
        raise QulineError("span must be positive")
    return _integrate(model, x0, k0, span, tol, "null", lambda x, u: np.zeros(4))


def static_worldline(model, spatial_coords, span, t0=0.0):
    """Worldline of an observer at fixed spatial chart coordinates.

    Requires a static model whose tetrad time leg is aligned with the
    coordinate time direction (true for all built-in families); the tetrad
    velocity is then exactly (1,0,0,0) and the proper acceleration follows
    from the connection.
    """
    x_ref = np.array([t0, *np.asarray(spatial_coords, dtype=float)])
    model.check_domain(x_ref)
    e = model.tetrad(x_ref)
    if np.abs(e[1:, 0]).max() > 1e-12 or np.abs(e[0, 1:]).max() > 1e-12:
        raise QulineError("static_worldline needs a static, time-aligned tetrad")
    ut_coord = e[0, 0]              # dx^t/dtau at the fixed spatial point
    u_tet = np.array([1.0, 0.0, 0.0, 0.0])
    omega = model.connection(x_ref)
    a_tet = ut_coord * omega[0, :, 0]

    def position(tau):
        x = x_ref.copy()
        x[0] = t0 + ut_coord * tau
        return x

    return AnalyticWorldline(model, (0.0, span), position,
                             lambda tau: u_tet.copy(), lambda tau: a_tet.copy())


def circular_worldline(model, radius, beta, revolutions=1.0, z=0.0):
    """Flat-space circular orbit in the x-y plane at constant speed beta.

    Parameterized by proper time; one revolution takes 2 pi radius /
    (gamma beta) of proper time.
    """
    if model.name != "minkowski":
        raise QulineError("circular_worldline is defined for the minkowski model")
    if not 0.0 < beta < 1.0:
        raise QulineError("beta must lie in (0, 1)")
    gamma = 1.0 / np.sqrt(1.0 - beta * beta)
    omega_coord = beta / radius
    span = revolutions * 2.0 * np.pi * radius / (gamma * beta)

    def position(tau):
        t = gamma * tau
        ang = omega_coord * t
        return np.array([t, radius * np.cos(ang), radius * np.sin(ang), z])

    def velocity(tau):
        ang = omega_coord * gamma * tau
        return gamma * np.array([1.0, -beta * np.sin(ang), beta * np.cos(ang), 0.0])

    def acceleration(tau):
        ang = omega_coord * gamma * tau
        mag = gamma * gamma * beta * beta / radius
        return np.array([0.0, -mag * np.cos(ang), -mag * np.sin(ang), 0.0])

    return AnalyticWorldline(model, (0.0, span), position, velocity, acceleration)


def worldline_from_coordinate_path(model, spatial_path, spatial_rate, t0, t1, n=801):
    """Proper-time worldline from a prescribed spatial path x_i(t).

    ``spatial_path(t)`` returns the three spatial chart coordinates and
    ``spatial_rate(t)`` their coordinate-time derivatives.  Proper time is
    accumulated by integrating dtau/dt; velocity and acceleration follow
    from the tetrad and connection, the ordinary u-derivative from a
    spline.  The path must stay timelike throughout.
    """
    def coord_velocity(t):
        return np.array([1.0, *np.asarray(spatial_rate(t), dtype=float)])

    def coords_at(t):
        return np.array([t, *np.asarray(spatial_path(t), dtype=float)])

    def dtau_dt(t):
        x = coords_at(t)
        xdot = coord_velocity(t)
        val = xdot @ model.metric(x) @ xdot
        if val <= 0.0:
            raise QulineError("prescribed path is not timelike")
        return np.sqrt(val)

    sol = solve_ivp(lambda t, y: [dtau_dt(t)], (t0, t1), [0.0], method="RK45",
                    rtol=1e-12, atol=1e-12, dense_output=True)
    if not sol.success:
        raise ToleranceError(f"proper-time accumulation failed: {sol.message}")
    total_tau = sol.y[0, -1]
    taus = np.linspace(0.0, total_tau, n)
    from scipy.optimize import brentq
    t_grid = np.array([t0] + [
        brentq(lambda t, target=tau: sol.sol(t)[0] - target, t0, t1, xtol=1e-14)
        for tau in taus[1:-1]] + [t1])
    positions = np.array([coords_at(t) for t in t_grid])
    velocities = np.array([coord_velocity(t) / dtau_dt(t) for t in t_grid])
    u_tet = np.array([model.inverse_tetrad(positions[i]) @ velocities[i]
                      for i in range(n)])
    from scipy.interpolate import CubicSpline
    u_spline = CubicSpline(taus, u_tet)
    accels = np.empty((n, 4))
    for i in range(n):
        omega = model.connection(positions[i])
        udot = u_spline(taus[i], 1)
        accels[i] = udot + np.einsum("n,nij,j->i", velocities[i], omega, u_tet[i])
    return SampledWorldline(model, taus, positions, u_tet, accels, "timelike")


def killing_energy(model, worldline, xi, mass=1.0, n=201):
    """E = p_mu xi^mu per sample for a declared Killing field xi (coordinate
    components, callable of coords or a constant vector)."""
    xi_fn = xi if callable(xi) else (lambda c, _v=np.asarray(xi, dtype=float): _v)
    params = worldline.sample_params(n)
    energies = np.empty_like(params)
    for i, lam in enumerate(params):
        x = worldline.position(lam)
        p_coord_lower = mass * model.lower_coordinate(x, worldline.coordinate_velocity(lam))
        energies[i] = p_coord_lower @ xi_fn(x)
    return params, energies


def rindler_speed_at_height(v1, dz, g):
    """Speed at height dz from energy conservation, given speed v1 at z = 0.

    v2 = sqrt(g00 (1 - g00 / gamma1^2)) with g00 = (1 + dz g)^2.  Evaluated
    in the cancellation-free form v2^2 = g00 (v1^2 - h (1 - v1^2)) with
    h = g00 - 1 = dz g (2 + dz g), which stays accurate when dz g is many
    orders below v1^2.  Raises ComplexVelocity when the particle cannot
    reach the height.
    """
    from .errors import ComplexVelocity

    h = dz * g * (2.0 + dz * g)
    g00 = 1.0 + h
    v2_sq = g00 * (v1 * v1 - h * (1.0 - v1 * v1))
    if v2_sq <= 0.0:
        raise ComplexVelocity(f"no real speed at height {dz} (v2^2 = {v2_sq})")
    return float(np.sqrt(v2_sq))
