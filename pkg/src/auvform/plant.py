"""Closed-form plant advance shared by the simulator and predictive rollouts.

State y = [eta, nu] (12 per vehicle), batched over leading axes.  The applied
body wrench is zero-order-held across one step; the flow disturbance is part
of the continuous dynamics and is re-evaluated inside each integrator
substep.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .flow import DisturbanceModel, disturbance_force
from .vehicle import (
    RigidBodyParams,
    acceleration_body,
    body_rate_to_euler,
    rotation_body_to_inertial,
)

FlowSampler = Callable[[np.ndarray, float], np.ndarray]


def rk4_step(f, y: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One classic Runge-Kutta step of y' = f(y, t)."""
    k1 = f(y, t)
    k2 = f(y + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(y + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(y + dt * k3, t + dt)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def plant_derivative(
    y: np.ndarray,
    t: float,
    tau: np.ndarray,
    params: RigidBodyParams,
    flow_sampler: FlowSampler | None = None,
    dist_model: DisturbanceModel | None = None,
) -> np.ndarray:
    """d/dt [eta, nu] under a held body wrench and the current disturbance."""
    y = np.asarray(y, dtype=float)
    eta = y[..., :6]
    nu = y[..., 6:]
    rot = rotation_body_to_inertial(eta[..., 3:])
    out = np.empty_like(y)
    out[..., :3] = np.einsum("...ij,...j->...i", rot, nu[..., :3])
    out[..., 3:6] = np.einsum(
        "...ij,...j->...i", body_rate_to_euler(eta[..., 3:]), nu[..., 3:]
    )
    if flow_sampler is not None:
        model = dist_model if dist_model is not None else DisturbanceModel()
        flow_vel = flow_sampler(eta[..., :3], t)
        d_o = disturbance_force(flow_vel, eta, nu, model, rot=rot)
        # tau_c = J^T d_o, blockwise: rotation and Euler-rate blocks
        tau_c = np.empty_like(nu)
        tau_c[..., :3] = np.einsum("...ji,...j->...i", rot, d_o[..., :3])
        tau_c[..., 3:] = np.einsum(
            "...ji,...j->...i", body_rate_to_euler(eta[..., 3:]), d_o[..., 3:]
        )
    else:
        tau_c = np.zeros_like(nu)
    out[..., 6:] = acceleration_body(eta, nu, tau, tau_c, params)
    return out


def advance_plant(
    y: np.ndarray,
    t: float,
    tau: np.ndarray,
    dt: float,
    params: RigidBodyParams,
    flow_sampler: FlowSampler | None = None,
    dist_model: DisturbanceModel | None = None,
) -> np.ndarray:
    """RK4-advance the plant by dt with the wrench held constant."""
    return rk4_step(
        lambda yy, tt: plant_derivative(yy, tt, tau, params, flow_sampler, dist_model),
        np.asarray(y, dtype=float),
        t,
        dt,
    )
