"""Spin-qubit transport along timelike worldlines.

Covariant form: the spinor obeys

    dpsi/dtau = i [ (1/2) u^mu omega_{mu IJ} + u_I a_J
                    - (e/2m) B^rest_IJ ] L^{IJ} psi

with B^rest = h F h the doubly projected (rest-frame) magnetic part of the
field, h^I_J = delta^I_J - u^I u_J.  The first two terms are the spin-half
Fermi-Walker derivative, the third is magnetic precession.

Rest-frame form: with psi~ = M(u)^-1 psi (M the spin-half boost of u) the
same evolution reads

    dpsi~/dtau = i gamma^2/(2(gamma+1)) beta_i dbeta_j/dtau eps_ijk pauli_k psi~
               + i u^mu [ 1/2 omega_{mu ij} + gamma omega_{mu 0j} beta_i
                          + gamma^2/(gamma+1) omega_{mu il} beta^l beta_j ] L^{ij} psi~

(Thomas precession plus the rotated gravitational terms; beta_i are the
Euclidean velocity components in the tetrad frame).  Both forms are
integrated independently and agree to integration tolerance.

Norm drift under the velocity inner product I_u is reported, never silently
renormalized away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import HilbertSpaceMismatch, QulineError, ToleranceError
from .geometry import Event
from .spin_algebra import (ETA, PAULI, generator_contraction, minkowski_dot,
                           spin_half_boost_matrix,
                           velocity_inner_product_matrix)

_EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
    _EPS3[_i, _j, _k] = 1.0
    _EPS3[_j, _i, _k] = -1.0


@dataclass(frozen=True)
class FermionState:
    """Spinor psi_A attached to its Hilbert-space label (event, 4-velocity)."""

    psi: np.ndarray
    event: Event
    velocity: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex).reshape(2)
        u = np.asarray(self.velocity, dtype=float).reshape(4)
        if abs(minkowski_dot(u, u) - 1.0) > 1e-9 or u[0] <= 0.0:
            raise QulineError("velocity label must be future-pointing with u.u = 1")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "velocity", u)

    def metric(self):
        return velocity_inner_product_matrix(self.velocity)

    def norm_squared(self):
        return float(np.real(self.psi.conj() @ self.metric() @ self.psi))

    def normalized(self):
        n = np.sqrt(self.norm_squared())
        if n == 0.0:
            raise QulineError("cannot normalize the zero state")
        return FermionState(self.psi / n, self.event, self.velocity)

    def same_space(self, other, tol=1e-9):
        return (self.event.close_to(other.event, tol)
                and np.abs(self.velocity - other.velocity).max() <= tol)

    def export_components(self):
        """4 reals (Re then Im of the two components); the label travels separately."""
        return np.concatenate([self.psi.real, self.psi.imag])


@dataclass(frozen=True)
class RestFrameState:
    """Spinor components in the comoving orthonormal basis (delta inner product)."""

    psi_tilde: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "psi_tilde",
                           np.asarray(self.psi_tilde, dtype=complex).reshape(2))

    def norm_squared(self):
        return float(np.real(self.psi_tilde.conj() @ self.psi_tilde))


def inner_product(a: FermionState, b: FermionState) -> complex:
    """<a|b> = u_I sigmabar^I conj(a) b; states must share their Hilbert space."""
    if not a.same_space(b):
        raise HilbertSpaceMismatch("states live at different (event, velocity) labels")
    return complex(a.psi.conj() @ a.metric() @ b.psi)


def to_rest_frame(state: FermionState) -> RestFrameState:
    m = spin_half_boost_matrix(state.velocity[1:] / state.velocity[0])
    return RestFrameState(np.linalg.solve(m, state.psi))


def from_rest_frame(rf: RestFrameState, event: Event, velocity) -> FermionState:
    velocity = np.asarray(velocity, dtype=float).reshape(4)
    m = spin_half_boost_matrix(velocity[1:] / velocity[0])
    return FermionState(m @ rf.psi_tilde, event, velocity)


def _rest_frame_magnetic(u_tet, f_tet):
    """B^rest_IJ = h_I^K h_J^L F_KL with h^I_J = delta - u^I u_J."""
    u_low = ETA @ u_tet
    h = np.eye(4) - np.outer(u_low, u_tet)   # h_I^K, row I, column K
    return h @ f_tet @ h.T


def _covariant_generator(worldline, em, charge_to_mass, tau):
    x = worldline.position(tau)
    u = worldline.velocity(tau)
    a = worldline.acceleration(tau)
    omega = worldline.model.connection(x)
    omega_low = np.einsum("ik,nkj->nij", ETA, omega)       # omega_{nu I J}
    pulled = np.einsum("n,nij->ij", worldline.coordinate_velocity(tau), omega_low)
    coeffs = 0.5 * pulled + np.outer(ETA @ u, ETA @ a)
    if em is not None and charge_to_mass != 0.0:
        coeffs = coeffs - 0.5 * charge_to_mass * _rest_frame_magnetic(u, em.tensor(x))
    return 1j * generator_contraction(coeffs)


class TransportResult:
    """Dense transported states plus the norm audit."""

    def __init__(self, kind, states, params, norm_drift):
        self.kind = kind
        self.states = states
        self.params = params
        self.norm_drift = norm_drift

    @property
    def final(self):
        return self.states[-1]


def transport(state: FermionState, worldline, em=None, charge_to_mass=0.0,
              tol=1e-12, n_samples=201):
    """Integrate the covariant transport from the start of ``worldline``.

    The state's label must match the worldline start; the returned samples
    carry updated (event, velocity) labels along the curve.
    """
    t0, t1 = worldline.param_span
    if not state.event.close_to(worldline.start_event, 1e-8):
        raise HilbertSpaceMismatch("state is not attached to the worldline start event")
    if np.abs(state.velocity - worldline.velocity(t0)).max() > 1e-8:
        raise HilbertSpaceMismatch("state velocity label differs from worldline velocity")

    def rhs(tau, y):
        psi = y[:2] + 1j * y[2:]
        dpsi = _covariant_generator(worldline, em, charge_to_mass, tau) @ psi
        return np.concatenate([dpsi.real, dpsi.imag])

    y0 = np.concatenate([state.psi.real, state.psi.imag])
    sol = solve_ivp(rhs, (t0, t1), y0, method="RK45", rtol=tol, atol=tol,
                    dense_output=True)
    if not sol.success:
        raise ToleranceError(f"spin transport failed: {sol.message}")
    params = np.linspace(t0, t1, n_samples)
    raw = sol.sol(params)
    states, drift = [], 0.0
    n0 = state.norm_squared()
    for i, tau in enumerate(params):
        s = FermionState(raw[:2, i] + 1j * raw[2:, i], worldline.event(tau),
                         worldline.velocity(tau))
        states.append(s)
        drift = max(drift, abs(s.norm_squared() - n0))
    return TransportResult("fermion", states, params, drift)


def _rest_frame_generator(worldline, tau):
    model = worldline.model
    x = worldline.position(tau)
    u = worldline.velocity(tau)
    udot = worldline.velocity_coordinate_derivative(tau)
    gamma = u[0]
    beta = u[1:] / gamma
    betadot = (udot[1:] * u[0] - u[1:] * udot[0]) / u[0] ** 2
    thomas_vec = np.einsum("i,j,ijk->k", beta, betadot, _EPS3)
    gen = 1j * gamma * gamma / (2.0 * (gamma + 1.0)) * np.einsum(
        "k,kab->ab", thomas_vec, PAULI[1:])
    omega_low = np.einsum("ik,nkj->nij", ETA, model.connection(x))
    pulled = np.einsum("n,nij->ij", worldline.coordinate_velocity(tau), omega_low)
    w = np.zeros((4, 4))
    w[1:, 1:] = (0.5 * pulled[1:, 1:]
                 + gamma * np.outer(beta, pulled[0, 1:])
                 + gamma * gamma / (gamma + 1.0)
                 * np.outer(pulled[1:, 1:] @ beta, beta))
    gen = gen + 1j * generator_contraction(w)
    return gen


def transport_rest_frame(rf: RestFrameState, worldline, tol=1e-12, n_samples=201):
    """Integrate the rest-frame (Wigner) form of the transport equation.

    Independent of :func:`transport`; the two agree through the boost map
    to integration tolerance.  Manifestly norm preserving under the delta
    inner product.
    """
    if worldline.kind != "timelike":
        raise QulineError("rest-frame transport needs a timelike worldline")
    t0, t1 = worldline.param_span

    def rhs(tau, y):
        psi = y[:2] + 1j * y[2:]
        dpsi = _rest_frame_generator(worldline, tau) @ psi
        return np.concatenate([dpsi.real, dpsi.imag])

    y0 = np.concatenate([rf.psi_tilde.real, rf.psi_tilde.imag])
    sol = solve_ivp(rhs, (t0, t1), y0, method="RK45", rtol=tol, atol=tol,
                    dense_output=True)
    if not sol.success:
        raise ToleranceError(f"rest-frame transport failed: {sol.message}")
    params = np.linspace(t0, t1, n_samples)
    raw = sol.sol(params)
    states = [RestFrameState(raw[:2, i] + 1j * raw[2:, i]) for i in range(n_samples)]
    n0 = rf.norm_squared()
    drift = max(abs(s.norm_squared() - n0) for s in states)
    return TransportResult("fermion-rest", states, params, drift)


def wigner_rotation_increment(u, du, omega_pull):
    """2x2 unitary for one step of the rest-frame evolution.

    ``u``: 4-velocity (tetrad components); ``du``: its increment over the
    step; ``omega_pull``: u^mu omega_{mu IJ} dtau, a lowered antisymmetric
    (4,4) increment.  Composing these over a worldline reproduces
    :func:`transport_rest_frame` to second order in the step.
    """
    u = np.asarray(u, dtype=float).reshape(4)
    du = np.asarray(du, dtype=float).reshape(4)
    omega_pull = np.asarray(omega_pull, dtype=float).reshape(4, 4)
    gamma = u[0]
    beta = u[1:] / gamma
    dbeta = (du[1:] * u[0] - u[1:] * du[0]) / u[0] ** 2
    thomas_vec = np.einsum("i,j,ijk->k", beta, dbeta, _EPS3)
    gen = 1j * gamma * gamma / (2.0 * (gamma + 1.0)) * np.einsum(
        "k,kab->ab", thomas_vec, PAULI[1:])
    w = np.zeros((4, 4))
    w[1:, 1:] = (0.5 * omega_pull[1:, 1:]
                 + gamma * np.outer(beta, omega_pull[0, 1:])
                 + gamma * gamma / (gamma + 1.0)
                 * np.outer(omega_pull[1:, 1:] @ beta, beta))
    gen = gen + 1j * generator_contraction(w)
    return expm(gen)


def boost_state(state: FermionState, lorentz, new_event=None):
    """Re-express a state after a local Lorentz re-gauging of the tetrad.

    The spinor transforms with the spin-half image, the velocity label with
    the spin-1 matrix; physical quantities built from the pair are invariant.
    """
    if lorentz.half is None:
        raise QulineError("LocalLorentz carries no spin-half image")
    return FermionState(lorentz.half @ state.psi,
                        new_event or state.event,
                        lorentz.matrix @ state.velocity)
