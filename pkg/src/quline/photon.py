"""Photon polarization: gauge-quotiented parallel transport and Jones extraction.

The physical state is the equivalence class psi^I ~ psi^I + upsilon u^I of
complex polarization vectors orthogonal to the null velocity u^I.  Transport
is parallel transport along the null geodesic; the arbitrary gauge term is
fixed for reporting by the canonical representative with psi^0 = 0.

An adaptation rotation R(u) takes u to the standard form (1,0,0,1); its
middle rows form the diad f^A_I whose contraction with psi^I is the
gauge-invariant Jones vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (AdaptationSingular, HilbertSpaceMismatch, QulineError,
                     ToleranceError)
from .geometry import Event
from .spin_algebra import ETA, minkowski_dot

SINGULAR_TOL = 1e-8


@dataclass(frozen=True)
class PhotonState:
    """Polarization vector psi^I (tetrad components) on (event, null wavevector)."""

    pol: np.ndarray
    event: Event
    wavevector: np.ndarray

    def __post_init__(self):
        pol = np.asarray(self.pol, dtype=complex).reshape(4)
        k = np.asarray(self.wavevector, dtype=float).reshape(4)
        k2 = minkowski_dot(k, k)
        if abs(k2) > 1e-9 * (1.0 + k @ k) or k[0] <= 0.0:
            raise QulineError(f"wavevector must be future null (k.k = {k2})")
        object.__setattr__(self, "pol", pol)
        object.__setattr__(self, "wavevector", k)

    def transversality(self):
        """|u_I psi^I|; zero for a valid polarization."""
        return abs(complex((ETA @ self.wavevector) @ self.pol))

    def norm_squared(self):
        """Gauge-class norm -eta_IJ conj(psi)^I psi^J (transversality assumed)."""
        return float(np.real(-(self.pol.conj() @ ETA @ self.pol)))

    def normalized(self):
        n = np.sqrt(self.norm_squared())
        if n == 0.0:
            raise QulineError("cannot normalize the zero polarization")
        return PhotonState(self.pol / n, self.event, self.wavevector)

    def canonical(self):
        """Representative with psi^0 = 0 (subtracts a multiple of u)."""
        shift = self.pol[0] / self.wavevector[0]
        return PhotonState(self.pol - shift * self.wavevector.astype(complex),
                           self.event, self.wavevector)

    def gauge_shift(self, upsilon):
        return PhotonState(self.pol + upsilon * self.wavevector.astype(complex),
                           self.event, self.wavevector)

    def same_space(self, other, tol=1e-9):
        if not self.event.close_to(other.event, tol):
            return False
        scale = max(self.wavevector[0], other.wavevector[0])
        return np.abs(self.wavevector - other.wavevector).max() <= tol * scale


@dataclass(frozen=True)
class AdaptationRotation:
    """Spatial rotation R^I_J with R u = (u^0, 0, 0, |u|), plus the diad.

    ``diad`` rows are f^A_I (A = 1, 2); ``diad_inv`` columns are f^I_A.
    """

    rotation: np.ndarray
    diad: np.ndarray
    diad_inv: np.ndarray


def adaptation_rotation(u):
    """Rotation adapting the tetrad z-axis to the photon direction.

    Undefined (for topological reasons) when the direction is antiparallel
    to the z-axis; raises :class:`AdaptationSingular` there.
    """
    u = np.asarray(u, dtype=float).reshape(4)
    space = u[1:]
    norm = np.linalg.norm(space)
    if norm == 0.0:
        raise QulineError("velocity has no spatial part")
    uhat = space / norm
    cos_t = uhat[2]
    axis = np.array([uhat[1], -uhat[0], 0.0])   # uhat x zhat
    sin_t = np.linalg.norm(axis)
    if sin_t < SINGULAR_TOL:
        if cos_t > 0.0:
            rot = np.eye(4)
            return AdaptationRotation(rot, rot[1:3, :].copy(), rot[1:3, :].T.copy())
        raise AdaptationSingular("photon direction antiparallel to the tetrad z-axis")
    axis = axis / sin_t
    kx = np.array([[0.0, -axis[2], axis[1]],
                   [axis[2], 0.0, -axis[0]],
                   [-axis[1], axis[0], 0.0]])
    r3 = (cos_t * np.eye(3) + sin_t * kx + (1.0 - cos_t) * np.outer(axis, axis))
    rot = np.eye(4)
    rot[1:, 1:] = r3
    return AdaptationRotation(rot, rot[1:3, :].copy(), rot[1:3, :].T.copy())


def adapt(state: PhotonState):
    """(AdaptationRotation, Jones vector) for the state's wavevector.

    The Jones vector f^A_I psi^I is identical for every representative of
    the gauge class.
    """
    ar = adaptation_rotation(state.wavevector)
    jones = ar.diad @ state.pol
    return ar, jones


def jones_to_state(jones, wavevector, event):
    """Rebuild the canonical transverse polarization vector from a Jones vector."""
    ar = adaptation_rotation(wavevector)
    pol = ar.diad_inv @ np.asarray(jones, dtype=complex).reshape(2)
    return PhotonState(pol, event, wavevector)


def photon_inner_product(a: PhotonState, b: PhotonState) -> complex:
    """-eta_IJ conj(a)^I b^J; requires equal wavevectors (same Hilbert space)."""
    if not a.same_space(b):
        raise HilbertSpaceMismatch("photon states have different (event, wavevector) labels")
    return complex(-(a.pol.conj() @ ETA @ b.pol))


class PhotonTransportResult:
    def __init__(self, states, params, audits):
        self.states = states
        self.params = params
        self.audits = audits

    @property
    def final(self):
        return self.states[-1]

    @property
    def norm_drift(self):
        return self.audits["norm_drift"]


def transport(state: PhotonState, worldline, tol=1e-12, n_samples=201):
    """Parallel transport of the gauge class along a null geodesic.

    Samples are reported in the canonical gauge (psi^0 = 0); orthogonality
    u.psi and the class norm are audited along the way.
    """
    if worldline.kind != "null":
        raise QulineError("photon transport needs a null worldline")
    t0, t1 = worldline.param_span
    if not state.event.close_to(worldline.start_event, 1e-8):
        raise HilbertSpaceMismatch("state is not attached to the worldline start event")
    scale = max(1.0, state.wavevector[0])
    if np.abs(state.wavevector - worldline.velocity(t0)).max() > 1e-8 * scale:
        raise HilbertSpaceMismatch("state wavevector differs from worldline velocity")

    model = worldline.model

    def rhs(lam, y):
        psi = y[:4] + 1j * y[4:]
        omega = model.connection(worldline.position(lam))
        dpsi = -np.einsum("n,nij,j->i", worldline.coordinate_velocity(lam), omega, psi)
        return np.concatenate([dpsi.real, dpsi.imag])

    y0 = np.concatenate([state.pol.real, state.pol.imag])
    sol = solve_ivp(rhs, (t0, t1), y0, method="RK45", rtol=tol, atol=tol,
                    dense_output=True)
    if not sol.success:
        raise ToleranceError(f"polarization transport failed: {sol.message}")
    params = np.linspace(t0, t1, n_samples)
    raw = sol.sol(params)
    states = []
    n0 = state.norm_squared()
    norm_drift = trans_drift = 0.0
    for i, lam in enumerate(params):
        s = PhotonState(raw[:4, i] + 1j * raw[4:, i], worldline.event(lam),
                        worldline.velocity(lam))
        trans_drift = max(trans_drift, abs((ETA @ s.wavevector) @ s.pol) / scale)
        norm_drift = max(norm_drift, abs(s.norm_squared() - n0))
        states.append(s.canonical())
    return PhotonTransportResult(states, params,
                                 {"norm_drift": norm_drift,
                                  "transversality_drift": trans_drift})


def _diad_rows(worldline, lam):
    return adaptation_rotation(worldline.velocity(lam)).diad


def wigner_rotation(worldline, n_samples=201, tol=1e-12, fd_step=None):
    """Accumulated Wigner angle Phi(lambda) along a null geodesic.

    The Jones vector of any transported state evolves as
    jones(lam) = exp(i Phi(lam) sigma_y) jones(0) in the adapted bases,
    with rate u^mu (R dR + R omega R) contracted on the transverse block;
    equals the integral of u^mu omega_{mu 1 2} wherever the tetrad is
    already adapted.
    """
    if worldline.kind != "null":
        raise QulineError("the photon Wigner rotation needs a null worldline")
    model = worldline.model
    t0, t1 = worldline.param_span
    h = fd_step if fd_step is not None else max(1e-7, abs(t1 - t0) * 1e-7)

    def rate(lam):
        f = _diad_rows(worldline, lam)                     # f^A_I rows
        # d f^A_I / d lam by 4th-order central differences in the parameter
        df = np.zeros_like(f)
        for off, w in zip((-2, -1, 1, 2), (1 / 12, -8 / 12, 8 / 12, -1 / 12)):
            df += w * _diad_rows(worldline, lam + off * h)
        df /= h
        omega = model.connection(worldline.position(lam))
        pulled = np.einsum("n,nij->ij", worldline.coordinate_velocity(lam), omega)
        cov = df - np.einsum("ai,ij->aj", f, pulled)       # D f^A_I / D lam
        gen = cov @ adaptation_rotation(worldline.velocity(lam)).diad_inv
        return gen[0, 1]

    sol = solve_ivp(lambda lam, y: [rate(lam)], (t0, t1), [0.0], method="RK45",
                    rtol=tol, atol=tol, dense_output=True)
    if not sol.success:
        raise ToleranceError(f"Wigner angle integration failed: {sol.message}")
    params = np.linspace(t0, t1, n_samples)
    return params, sol.sol(params)[0]


def jones_rotation(angle):
    """exp(i angle sigma_y) acting on Jones components."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]], dtype=complex)


def adapted_angle_rate(worldline, lam):
    """u^mu omega_{mu 1 2}; the Wigner rate when the tetrad is adapted."""
    model = worldline.model
    omega = model.connection(worldline.position(lam))
    omega_low = np.einsum("ik,nkj->nij", ETA, omega)
    return float(np.einsum("n,n->", worldline.coordinate_velocity(lam),
                           omega_low[:, 1, 2]))


def helicity_content(jones):
    """|<sigma_y eigenvector | jones>|^2 for the +1 circular eigenvector."""
    jones = np.asarray(jones, dtype=complex).reshape(2)
    plus = np.array([1.0, 1j]) / np.sqrt(2.0)
    return abs(plus.conj() @ jones) ** 2


def apply_jones(state: PhotonState, matrix):
    """Apply a 2x2 optical element in the adapted basis (same wavevector)."""
    _, jones = adapt(state)
    new_jones = np.asarray(matrix, dtype=complex).reshape(2, 2) @ jones
    return jones_to_state(new_jones, state.wavevector, state.event)


def redirect(state: PhotonState, new_wavevector, matrix=None):
    """Mirror-style element: carry the Jones vector onto a new ray direction.

    The polarization content is expressed in the adapted basis of the old
    ray, optionally acted on by ``matrix``, and rebuilt on the new ray's
    adapted basis at the same event.
    """
    _, jones = adapt(state)
    if matrix is not None:
        jones = np.asarray(matrix, dtype=complex).reshape(2, 2) @ jones
    return jones_to_state(jones, np.asarray(new_wavevector, dtype=float), state.event)
