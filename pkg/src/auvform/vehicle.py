"""6-DOF AUV rigid-body model: kinematics, body/inertial dynamics, model split.

Frames: the inertial frame is earth-fixed with z up (water surface at z = 0,
sea floor at negative z).  The body frame has x forward, y starboard, z up,
aligned with the inertial frame at zero attitude.  Euler angles are ZYX
(roll phi, pitch theta, yaw psi).

Pose e = [x y z phi theta psi] lives in the inertial frame; velocity
q = [u v w p q r] in the body frame.  The two are related by e_dot = J(e) q.

All kinematic/dynamic helpers broadcast over leading axes, so the same code
serves a single vehicle, a fleet, or a batch of predictive-rollout candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

PITCH_SINGULARITY_TOL = 1e-6

# Index blocks of the 6-vectors.
POS = slice(0, 3)
ANG = slice(3, 6)


class SingularityError(ValueError):
    """Pitch too close to +-pi/2: the Euler-rate transform is not invertible."""


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    w = (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def _cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix, batched over leading axes: skew(a) @ b = a x b."""
    v = np.asarray(v, dtype=float)
    m = np.zeros(v.shape[:-1] + (3, 3))
    m[..., 0, 1] = -v[..., 2]
    m[..., 0, 2] = v[..., 1]
    m[..., 1, 0] = v[..., 2]
    m[..., 1, 2] = -v[..., 0]
    m[..., 2, 0] = -v[..., 1]
    m[..., 2, 1] = v[..., 0]
    return m


@dataclass
class VehicleState:
    """Pose and body-frame velocity of one vehicle.

    eta1: inertial position (x, y, z) [m]
    eta2: Euler angles (phi, theta, psi) [rad], wrapped to (-pi, pi]
    nu1:  body-frame linear velocity (u, v, w) [m/s]
    nu2:  body-frame angular velocity (p, q, r) [rad/s]
    """

    eta1: np.ndarray
    eta2: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray

    def __post_init__(self):
        self.eta1 = np.asarray(self.eta1, dtype=float)
        self.eta2 = np.asarray(self.eta2, dtype=float)
        self.nu1 = np.asarray(self.nu1, dtype=float)
        self.nu2 = np.asarray(self.nu2, dtype=float)

    @classmethod
    def from_vectors(cls, eta: np.ndarray, nu: np.ndarray) -> "VehicleState":
        eta = np.asarray(eta, dtype=float)
        nu = np.asarray(nu, dtype=float)
        return cls(eta[POS].copy(), eta[ANG].copy(), nu[POS].copy(), nu[ANG].copy())

    @property
    def eta(self) -> np.ndarray:
        return np.concatenate([self.eta1, self.eta2])

    @property
    def nu(self) -> np.ndarray:
        return np.concatenate([self.nu1, self.nu2])

    def validate(self) -> None:
        if not (np.all(np.isfinite(self.eta)) and np.all(np.isfinite(self.nu))):
            raise ValueError("vehicle state contains non-finite components")
        if abs(self.eta2[1]) >= np.pi / 2 - PITCH_SINGULARITY_TOL:
            raise SingularityError(
                f"pitch {self.eta2[1]:.6f} rad within tolerance of +-pi/2"
            )


@dataclass(frozen=True)
class JacobianSet:
    """Velocity transforms at one pose.

    rot:  3x3 rotation mapping inertial linear velocity into the body frame
          (nu1 = rot @ eta1_dot)
    ang:  3x3 transform mapping Euler-angle rates into body angular velocity
          (nu2 = ang @ eta2_dot)
    full: 6x6 block matrix with eta_dot = full @ nu
    """

    rot: np.ndarray
    ang: np.ndarray
    full: np.ndarray


@dataclass
class Wrench6:
    """Force (X, Y, Z) [N] and moment (K, M, N) [N*m], tagged with its frame."""

    vec: np.ndarray
    frame: str = "body"

    def __post_init__(self):
        self.vec = np.asarray(self.vec, dtype=float)
        if self.frame not in ("body", "inertial"):
            raise ValueError(f"unknown wrench frame {self.frame!r}")

    @property
    def force(self) -> np.ndarray:
        return self.vec[POS]

    @property
    def moment(self) -> np.ndarray:
        return self.vec[ANG]

    @classmethod
    def zero(cls, frame: str = "body") -> "Wrench6":
        return cls(np.zeros(6), frame)


@dataclass
class InertialDynamicsTerms:
    """Dynamics matrices mapped into the inertial frame."""

    m_e: np.ndarray
    c_e: np.ndarray
    d_e: np.ndarray
    g_e: np.ndarray


@dataclass
class RigidBodyParams:
    """Rigid-body coefficients, plus the factor splitting true vs estimated model.

    inertia includes added mass.  Damping is diagonal linear+quadratic:
    D(q) = diag(d_linear_i + d_quad_i * |q_i|); the slender hull makes the
    crossflow (sway/heave) drag several times the surge drag.  Restoring is
    the metacentric roll/pitch moment of a bottom-heavy neutral vehicle with
    stiffness restoring_gain [N*m], plus an optional net buoyancy force [N]
    along inertial z.

    mismatch_factor in (0, 1] uniformly scales the true coefficients into the
    "estimated" model used by the controller; the remaining (1 - factor)
    share is the unknown dynamics the adaptive term has to absorb.
    """

    inertia: np.ndarray = field(
        default_factory=lambda: np.diag([30.0, 30.0, 30.0, 1.0, 5.0, 5.0])
    )
    d_linear: np.ndarray = field(
        default_factory=lambda: np.array([5.0, 25.0, 25.0, 2.0, 8.0, 8.0])
    )
    d_quad: np.ndarray = field(
        default_factory=lambda: np.array([10.0, 150.0, 150.0, 5.0, 20.0, 20.0])
    )
    restoring_gain: float = 30.0
    buoyancy_net: float = 0.0
    mismatch_factor: float = 1.0

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        self.d_linear = np.broadcast_to(
            np.asarray(self.d_linear, dtype=float), (6,)
        ).copy()
        self.d_quad = np.broadcast_to(np.asarray(self.d_quad, dtype=float), (6,)).copy()
        self.validate()

    def validate(self) -> None:
        if self.inertia.shape != (6, 6):
            raise ValueError("inertia must be 6x6")
        if not np.allclose(self.inertia, self.inertia.T, atol=1e-12):
            raise ValueError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(self.inertia) <= 0):
            raise ValueError("inertia must be positive definite")
        if np.any(self.d_linear < 0) or np.any(self.d_quad < 0):
            raise ValueError("damping coefficients must be nonnegative")
        if not 0.0 < self.mismatch_factor <= 1.0:
            raise ValueError("mismatch_factor must lie in (0, 1]")

    @cached_property
    def inertia_inv(self) -> np.ndarray:
        return np.linalg.inv(self.inertia)

    def estimated(self) -> "RigidBodyParams":
        """The hatted model: every coefficient scaled by mismatch_factor."""
        a = self.mismatch_factor
        return RigidBodyParams(
            inertia=a * self.inertia,
            d_linear=a * self.d_linear,
            d_quad=a * self.d_quad,
            restoring_gain=a * self.restoring_gain,
            buoyancy_net=a * self.buoyancy_net,
            mismatch_factor=1.0,
        )

    def damping(self, nu: np.ndarray) -> np.ndarray:
        """D(q) as a matrix, batched: diag(d_linear + d_quad * |q|)."""
        nu = np.asarray(nu, dtype=float)
        diag = self.d_linear + self.d_quad * np.abs(nu)
        out = np.zeros(nu.shape[:-1] + (6, 6))
        idx = np.arange(6)
        out[..., idx, idx] = diag
        return out

    def damping_force(self, nu: np.ndarray) -> np.ndarray:
        """D(q) @ q without materializing the matrix."""
        nu = np.asarray(nu, dtype=float)
        return (self.d_linear + self.d_quad * np.abs(nu)) * nu

    def coriolis(self, nu: np.ndarray) -> np.ndarray:
        """Rigid-body/added-mass Coriolis matrix C(q), skew-symmetric, batched."""
        nu = np.asarray(nu, dtype=float)
        nu1 = nu[..., POS]
        nu2 = nu[..., ANG]
        m = self.inertia
        a1 = nu1 @ m[:3, :3].T + nu2 @ m[:3, 3:].T
        a2 = nu1 @ m[3:, :3].T + nu2 @ m[3:, 3:].T
        s1 = skew(a1)
        s2 = skew(a2)
        out = np.zeros(nu.shape[:-1] + (6, 6))
        out[..., :3, 3:] = -s1
        out[..., 3:, :3] = -s1
        out[..., 3:, 3:] = -s2
        return out

    def coriolis_force(self, nu: np.ndarray) -> np.ndarray:
        """C(q) @ q via cross products, avoiding the matrix build."""
        nu = np.asarray(nu, dtype=float)
        nu1 = nu[..., POS]
        nu2 = nu[..., ANG]
        m = self.inertia
        a1 = nu1 @ m[:3, :3].T + nu2 @ m[:3, 3:].T
        a2 = nu1 @ m[3:, :3].T + nu2 @ m[3:, 3:].T
        # [-S(a1) nu2 ; -S(a1) nu1 - S(a2) nu2], S(a) x = a cross x
        out = np.empty_like(nu)
        out[..., POS] = -_cross3(a1, nu2)
        out[..., ANG] = -_cross3(a1, nu1) - _cross3(a2, nu2)
        return out

    def restoring(self, eta2: np.ndarray) -> np.ndarray:
        """Gravity/buoyancy vector g(e) in the body frame (left-hand side sign)."""
        eta2 = np.asarray(eta2, dtype=float)
        phi = eta2[..., 0]
        theta = eta2[..., 1]
        up_body = np.stack(
            [
                -np.sin(theta),
                np.cos(theta) * np.sin(phi),
                np.cos(theta) * np.cos(phi),
            ],
            axis=-1,
        )
        g = np.zeros(eta2.shape[:-1] + (6,))
        g[..., 3] = self.restoring_gain * np.cos(theta) * np.sin(phi)
        g[..., 4] = self.restoring_gain * np.sin(theta)
        g[..., POS] = -self.buoyancy_net * up_body
        return g


def rotation_body_to_inertial(eta2: np.ndarray) -> np.ndarray:
    """ZYX rotation matrix taking body-frame vectors to the inertial frame."""
    eta2 = np.asarray(eta2, dtype=float)
    cphi, sphi = np.cos(eta2[..., 0]), np.sin(eta2[..., 0])
    cth, sth = np.cos(eta2[..., 1]), np.sin(eta2[..., 1])
    cpsi, spsi = np.cos(eta2[..., 2]), np.sin(eta2[..., 2])
    m = np.empty(eta2.shape[:-1] + (3, 3))
    m[..., 0, 0] = cpsi * cth
    m[..., 0, 1] = cpsi * sth * sphi - spsi * cphi
    m[..., 0, 2] = cpsi * sth * cphi + spsi * sphi
    m[..., 1, 0] = spsi * cth
    m[..., 1, 1] = spsi * sth * sphi + cpsi * cphi
    m[..., 1, 2] = spsi * sth * cphi - cpsi * sphi
    m[..., 2, 0] = -sth
    m[..., 2, 1] = cth * sphi
    m[..., 2, 2] = cth * cphi
    return m


def euler_rate_to_body(eta2: np.ndarray) -> np.ndarray:
    """T(e): maps Euler-angle rates to body angular velocity, nu2 = T @ eta2_dot."""
    eta2 = np.asarray(eta2, dtype=float)
    cphi, sphi = np.cos(eta2[..., 0]), np.sin(eta2[..., 0])
    cth, sth = np.cos(eta2[..., 1]), np.sin(eta2[..., 1])
    m = np.zeros(eta2.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1.0
    m[..., 0, 2] = -sth
    m[..., 1, 1] = cphi
    m[..., 1, 2] = cth * sphi
    m[..., 2, 1] = -sphi
    m[..., 2, 2] = cth * cphi
    return m


def body_rate_to_euler(eta2: np.ndarray) -> np.ndarray:
    """Inverse of euler_rate_to_body: eta2_dot = T^-1 @ nu2."""
    eta2 = np.asarray(eta2, dtype=float)
    cphi, sphi = np.cos(eta2[..., 0]), np.sin(eta2[..., 0])
    cth, sth = np.cos(eta2[..., 1]), np.sin(eta2[..., 1])
    tth = sth / cth
    m = np.zeros(eta2.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1.0
    m[..., 0, 1] = sphi * tth
    m[..., 0, 2] = cphi * tth
    m[..., 1, 1] = cphi
    m[..., 1, 2] = -sphi
    m[..., 2, 1] = sphi / cth
    m[..., 2, 2] = cphi / cth
    return m


def _block_diag_3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros(a.shape[:-2] + (6, 6))
    out[..., :3, :3] = a
    out[..., 3:, 3:] = b
    return out


def jacobian(eta2: np.ndarray) -> np.ndarray:
    """J(e) with eta_dot = J @ q, batched."""
    return _block_diag_3(rotation_body_to_inertial(eta2), body_rate_to_euler(eta2))


def jacobian_inv(eta2: np.ndarray) -> np.ndarray:
    """Analytic inverse of J(e) (rotation transpose, Euler-rate matrix)."""
    rot = rotation_body_to_inertial(eta2)
    return _block_diag_3(np.swapaxes(rot, -1, -2), euler_rate_to_body(eta2))


def jacobian_dot(eta2: np.ndarray, nu2: np.ndarray) -> np.ndarray:
    """Time derivative of J(e) along the motion, from the Euler-rate chain rule.

    Uses R_dot = R @ skew(nu2) for the rotation block and the phi/theta
    partials of the Euler-rate block.
    """
    eta2 = np.asarray(eta2, dtype=float)
    nu2 = np.asarray(nu2, dtype=float)
    rot = rotation_body_to_inertial(eta2)
    rot_dot = rot @ skew(nu2)

    cphi, sphi = np.cos(eta2[..., 0]), np.sin(eta2[..., 0])
    cth, sth = np.cos(eta2[..., 1]), np.sin(eta2[..., 1])
    tth = sth / cth
    sec2 = 1.0 / cth**2

    eta2_dot = np.einsum("...ij,...j->...i", body_rate_to_euler(eta2), nu2)
    phid = eta2_dot[..., 0]
    thd = eta2_dot[..., 1]

    ang_dot = np.zeros(eta2.shape[:-1] + (3, 3))
    ang_dot[..., 0, 1] = cphi * tth * phid + sphi * sec2 * thd
    ang_dot[..., 0, 2] = -sphi * tth * phid + cphi * sec2 * thd
    ang_dot[..., 1, 1] = -sphi * phid
    ang_dot[..., 1, 2] = -cphi * phid
    ang_dot[..., 2, 1] = (cphi * phid + sphi * sth * thd / cth) / cth
    ang_dot[..., 2, 2] = (-sphi * phid + cphi * sth * thd / cth) / cth
    return _block_diag_3(rot_dot, ang_dot)


def check_pitch(eta2: np.ndarray) -> None:
    theta = np.asarray(eta2, dtype=float)[..., 1]
    if np.any(np.abs(theta) >= np.pi / 2 - PITCH_SINGULARITY_TOL):
        raise SingularityError("pitch within tolerance of +-pi/2")


def kinematic_transform(state: VehicleState) -> JacobianSet:
    """Rotation, Euler-rate transform and assembled 6x6 Jacobian at the pose."""
    check_pitch(state.eta2)
    rot_bi = rotation_body_to_inertial(state.eta2)
    return JacobianSet(
        rot=rot_bi.T,
        ang=euler_rate_to_body(state.eta2),
        full=jacobian(state.eta2),
    )


def acceleration_body(
    eta: np.ndarray,
    nu: np.ndarray,
    tau: np.ndarray,
    tau_c: np.ndarray,
    params: RigidBodyParams,
) -> np.ndarray:
    """Body-frame acceleration q_dot = M^-1 (tau - tau_c - C q - D q - g), batched."""
    nu = np.asarray(nu, dtype=float)
    rhs = (
        np.asarray(tau, dtype=float)
        - np.asarray(tau_c, dtype=float)
        - params.coriolis_force(nu)
        - params.damping_force(nu)
        - params.restoring(np.asarray(eta, dtype=float)[..., ANG])
    )
    return rhs @ params.inertia_inv.T


def dynamics_body(
    state: VehicleState, tau: Wrench6, tau_c: Wrench6, params: RigidBodyParams
) -> np.ndarray:
    """Body-frame acceleration for one vehicle; wrenches must be body-tagged."""
    if tau.frame != "body" or tau_c.frame != "body":
        raise ValueError("dynamics_body expects body-frame wrenches")
    return acceleration_body(state.eta, state.nu, tau.vec, tau_c.vec, params)


def inertial_matrices(
    eta2: np.ndarray, nu: np.ndarray, params: RigidBodyParams, scale: float = 1.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(M_e, C_e, D_e, g_e) batched; `scale` yields the hatted (estimated) model.

    M_e = J^-T M J^-1
    C_e = J^-T [C - M J^-1 J_dot] J^-1
    D_e = J^-T D J^-1
    g_e = J^-T g
    """
    eta2 = np.asarray(eta2, dtype=float)
    nu = np.asarray(nu, dtype=float)
    jinv = jacobian_inv(eta2)
    jinv_t = np.swapaxes(jinv, -1, -2)
    jdot = jacobian_dot(eta2, nu[..., ANG])

    m = scale * params.inertia
    c = scale * params.coriolis(nu)
    d = scale * params.damping(nu)
    g = scale * params.restoring(eta2)

    m_e = jinv_t @ m @ jinv
    c_e = jinv_t @ (c - m @ jinv @ jdot) @ jinv
    d_e = jinv_t @ d @ jinv
    g_e = np.einsum("...ij,...j->...i", jinv_t, g)
    return m_e, c_e, d_e, g_e


def dynamics_inertial_terms(
    state: VehicleState, params: RigidBodyParams
) -> InertialDynamicsTerms:
    """True-model dynamics matrices in the inertial frame at one state."""
    check_pitch(state.eta2)
    m_e, c_e, d_e, g_e = inertial_matrices(state.eta2, state.nu, params)
    return InertialDynamicsTerms(m_e=m_e, c_e=c_e, d_e=d_e, g_e=g_e)


def reference_dynamics(
    eta2: np.ndarray,
    nu: np.ndarray,
    eddot_r: np.ndarray,
    params: RigidBodyParams,
    ed_r: np.ndarray | None = None,
    scale: float = 1.0,
) -> np.ndarray:
    """f_r = M_e ed2_r + C_e ed_r + D_e e_dot + g_e, batched.

    ed_r defaults to the actual inertial rate e_dot = J q (i.e. zero sliding
    error); `scale` < 1 gives the hatted model's f_hat_r.
    """
    m_e, c_e, d_e, g_e = inertial_matrices(eta2, nu, params, scale=scale)
    e_dot = np.einsum("...ij,...j->...i", jacobian(eta2), np.asarray(nu, dtype=float))
    if ed_r is None:
        ed_r = e_dot
    return (
        np.einsum("...ij,...j->...i", m_e, np.asarray(eddot_r, dtype=float))
        + np.einsum("...ij,...j->...i", c_e, np.asarray(ed_r, dtype=float))
        + np.einsum("...ij,...j->...i", d_e, e_dot)
        + g_e
    )


def estimated_dynamics(
    state: VehicleState,
    eddot_r: np.ndarray,
    params: RigidBodyParams,
    ed_r: np.ndarray | None = None,
) -> np.ndarray:
    """Controller-side predictable dynamics f_hat_r (mismatch-scaled model)."""
    check_pitch(state.eta2)
    return reference_dynamics(
        state.eta2, state.nu, eddot_r, params, ed_r=ed_r, scale=params.mismatch_factor
    )
