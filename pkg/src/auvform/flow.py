"""Meandering-jet current model: stream function, analytic velocity, layering.

The jet is an eastward stream with a north-south meander.  Its stream
function in jet coordinates (xj, yj) at time t is

    C(xj, yj, t) = 1 - tanh[(yj - B(t) cos(k (xj - c t)))
                            / sqrt(1 + k^2 B(t)^2 sin^2(k (xj - c t)))]
    B(t) = b0 + e_amp cos(omega t + theta0)

and the velocity components are U = -dC/dyj, V = +dC/dxj, implemented
analytically and checked against finite differences in the tests.

The workspace-facing field places the jet inside the simulation volume
(affine map from world xy to jet coordinates), splits the depth range into
horizontal layers with fixed speed ratios, and rescales so the strongest
(surface) layer peaks at `speed_cap`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vehicle import (
    ANG,
    POS,
    VehicleState,
    Wrench6,
    rotation_body_to_inertial,
)

# Supremum of the raw jet speed sqrt(U^2 + V^2) with the default parameters,
# found by dense scan over one joint space/time period (observed 1.013953);
# rounded up so the scaled surface-layer speed never exceeds the cap.
RAW_SPEED_MAX = 1.014


@dataclass
class FlowParams:
    """Stream-function parameters (defaults from the jet model)."""

    b0: float = 1.2
    e_amp: float = 0.3
    omega: float = 0.4
    theta0: float = np.pi / 2
    c: float = 0.12
    k: float = 0.82

    def validate(self) -> None:
        vals = [self.b0, self.e_amp, self.omega, self.theta0, self.c, self.k]
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("flow parameters must be finite")
        if self.k == 0:
            raise ValueError("wavenumber k must be nonzero")


@dataclass
class LayeredField:
    """Depth layering and placement of the jet inside the workspace.

    The depth range [z_bottom, z_top] is split into n_layers equal bands;
    layer_scale[0] is the surface (strongest) band.  Default ratios follow
    |V_c1| = 2.4 |V_c2| = 4 |V_c3|.  jet_origin/jet_scale place and stretch
    the jet coordinates over the workspace so the meander crosses the
    operating area instead of hugging a 1-2 m band.  Outside the workspace
    box the flow is zero.
    """

    n_layers: int = 3
    z_top: float = 0.0
    z_bottom: float = -20.0
    layer_scale: tuple[float, ...] = (1.0, 1.0 / 2.4, 0.25)
    speed_cap: float = 0.5
    jet_origin: tuple[float, float] = (0.0, 52.0)
    jet_scale: float = 18.0
    xy_min: tuple[float, float] = (0.0, 0.0)
    xy_max: tuple[float, float] = (80.0, 80.0)

    def validate(self) -> None:
        if self.n_layers < 1 or len(self.layer_scale) != self.n_layers:
            raise ValueError("layer_scale length must equal n_layers")
        if self.z_bottom >= self.z_top:
            raise ValueError("z_bottom must be below z_top")
        if self.speed_cap < 0:
            raise ValueError("speed_cap must be nonnegative")
        if self.jet_scale <= 0:
            raise ValueError("jet_scale must be positive")

    def layer_index(self, z):
        """Layer of each depth, 0 = surface band; -1 marks out-of-range."""
        z = np.asarray(z, dtype=float)
        depth_frac = (self.z_top - z) / (self.z_top - self.z_bottom)
        idx = np.floor(depth_frac * self.n_layers).astype(int)
        idx = np.clip(idx, 0, self.n_layers - 1)
        inside = (z >= self.z_bottom) & (z <= self.z_top)
        return np.where(inside, idx, -1)


@dataclass
class DisturbanceModel:
    """Quadratic-drag map from relative flow velocity to a bounded wrench.

    Horizontal force: clamp(drag_gain * |v_rel_xy| * v_rel_xy, +-force_clamp).
    Yaw moment: clamp(drag_gain_yaw * lateral body-frame slip, +-force_clamp).
    Roll, pitch and heave-force entries stay zero for this horizontal flow.
    """

    drag_gain: float = 40.0
    drag_gain_yaw: float = 5.0
    force_clamp: float = 20.0

    def validate(self) -> None:
        if self.force_clamp < 0:
            raise ValueError("force_clamp must be nonnegative")
        if self.drag_gain < 0 or self.drag_gain_yaw < 0:
            raise ValueError("drag gains must be nonnegative")


def _jet_terms(x, y, t, p: FlowParams):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    b = p.b0 + p.e_amp * np.cos(p.omega * np.asarray(t, dtype=float) + p.theta0)
    phase = p.k * (x - p.c * np.asarray(t, dtype=float))
    num = y - b * np.cos(phase)
    den = np.sqrt(1.0 + p.k**2 * b**2 * np.sin(phase) ** 2)
    return b, phase, num, den


def stream_function(x, y, t, p: FlowParams) -> np.ndarray:
    """Jet stream function; range (0, 2), equal to 1 on the meander centerline."""
    _, _, num, den = _jet_terms(x, y, t, p)
    return 1.0 - np.tanh(num / den)


def flow_velocity(x, y, t, p: FlowParams) -> tuple[np.ndarray, np.ndarray]:
    """Analytic (U, V) = (-dC/dy, dC/dx) of the stream function."""
    b, phase, num, den = _jet_terms(x, y, t, p)
    f = num / den
    sech2 = 1.0 / np.cosh(f) ** 2
    dnum_dx = b * p.k * np.sin(phase)
    dden_dx = p.k**3 * b**2 * np.sin(phase) * np.cos(phase) / den
    df_dx = (dnum_dx * den - num * dden_dx) / den**2
    u = sech2 / den
    v = -sech2 * df_dx
    return u, v


def layered_velocity(x, y, z, t, fieldp: LayeredField, p: FlowParams) -> np.ndarray:
    """3-D current at world coordinates: layered, rescaled, capped horizontal flow."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    xj = (x - fieldp.jet_origin[0]) / fieldp.jet_scale
    yj = (y - fieldp.jet_origin[1]) / fieldp.jet_scale
    u, v = flow_velocity(xj, yj, t, p)

    idx = fieldp.layer_index(z)
    scales = np.asarray(fieldp.layer_scale + (0.0,), dtype=float)
    scale = scales[idx] * (fieldp.speed_cap / RAW_SPEED_MAX)
    inside_xy = (
        (x >= fieldp.xy_min[0])
        & (x <= fieldp.xy_max[0])
        & (y >= fieldp.xy_min[1])
        & (y <= fieldp.xy_max[1])
    )
    scale = np.where(inside_xy, scale, 0.0)

    u = u * scale
    v = v * scale
    speed = np.hypot(u, v)
    over = speed > fieldp.speed_cap
    if np.any(over):
        shrink = np.where(over, fieldp.speed_cap / np.where(over, speed, 1.0), 1.0)
        u = u * shrink
        v = v * shrink
    return np.stack([u, v, np.zeros_like(u)], axis=-1)


def disturbance_force(
    flow_vel: np.ndarray,
    eta: np.ndarray,
    nu: np.ndarray,
    model: DisturbanceModel,
    rot: np.ndarray | None = None,
) -> np.ndarray:
    """Inertial disturbance wrench d_o = [C_x, C_y, 0, 0, 0, C_z], batched.

    rot may carry a precomputed body-to-inertial rotation for the pose.
    """
    flow_vel = np.asarray(flow_vel, dtype=float)
    eta = np.asarray(eta, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if rot is None:
        rot = rotation_body_to_inertial(eta[..., ANG])
    vel_inertial = np.einsum("...ij,...j->...i", rot, nu[..., POS])
    v_rel = flow_vel - vel_inertial
    v_xy = v_rel.copy()
    v_xy[..., 2] = 0.0
    mag = np.linalg.norm(v_xy, axis=-1, keepdims=True)
    force = np.clip(model.drag_gain * mag * v_xy, -model.force_clamp, model.force_clamp)

    # lateral slip in the body frame drives the yaw component
    v_body = np.einsum("...ji,...j->...i", rot, v_xy)
    yaw = np.clip(
        model.drag_gain_yaw * v_body[..., 1], -model.force_clamp, model.force_clamp
    )
    out = np.zeros(np.broadcast_shapes(eta.shape[:-1], flow_vel.shape[:-1]) + (6,))
    out[..., 0] = force[..., 0]
    out[..., 1] = force[..., 1]
    out[..., 5] = yaw
    return out


def disturbance_wrench(
    flow_vel: np.ndarray, state: VehicleState, model: DisturbanceModel
) -> Wrench6:
    """Single-vehicle wrapper around disturbance_force."""
    return Wrench6(disturbance_force(flow_vel, state.eta, state.nu, model), "inertial")
