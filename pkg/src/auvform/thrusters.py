"""Equivalent three-thruster model: control matrix, wrench mapping, allocation.

Two inclined bow/stern units and one vertical unit replace the real
propeller-plus-fins arrangement.  The 5-DOF decoupled wrench is
[tau_u, tau_v, tau_r, tau_w, tau_q] paired with the pose [x, y, psi, z, theta];
roll is not actuated (tau_p = 0) and relies on the restoring moment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# rows of the 5-DOF wrench inside a 6-DOF body wrench [X Y Z K M N]
WRENCH5_TO_6 = np.array([0, 1, 5, 2, 4])

_COEFF_RANGES = {
    "k1": (0.2, 1.0),
    "k2": (0.2, 1.0),
    "k3": (-1.0, 1.0),
    "l1": (0.3, 1.0),
    "l2": (0.3, 1.0),
    "t1": (0.0, 1.0),
    "t2": (0.0, 1.0),
    "t3": (-0.5, 0.5),
    "t4": (-0.5, 0.5),
}


@dataclass
class ThrusterConfig:
    """Share coefficients, moment arms [m] and the per-thruster force bound [N].

    The defaults were tuned for closed-loop stability of the inertial-frame
    wrench controller: t1 = t2 = 1 and k1 = k2 = 0.45 give the differential
    pair real sway authority, and the small negative r1/r2 place the yaw
    arms bow-side so a lateral force command turns the nose toward, not away
    from, the demanded direction (minimum-phase pairing).  Interval-midpoint
    shares with stern-side arms make the sway and yaw loops fight through
    the shared differential and diverge at cruise speed.
    """

    k1: float = 0.45
    k2: float = 0.45
    k3: float = 1.0
    l1: float = 0.65
    l2: float = 0.65
    t1: float = 1.0
    t2: float = 1.0
    t3: float = 0.25
    t4: float = 0.25
    r1: float = -0.1
    r2: float = -0.1
    r3: float = 0.4
    u_limit: float = 60.0

    def validate(self) -> None:
        for name, (lo, hi) in _COEFF_RANGES.items():
            val = getattr(self, name)
            if not lo <= val <= hi:
                raise ValueError(f"thruster coefficient {name}={val} outside [{lo}, {hi}]")
        if self.u_limit <= 0:
            raise ValueError("u_limit must be positive")


@dataclass
class Wrench5:
    """Decoupled control wrench [tau_u, tau_v, tau_r, tau_w, tau_q]."""

    vec: np.ndarray

    def __post_init__(self):
        self.vec = np.asarray(self.vec, dtype=float)
        if self.vec.shape != (5,):
            raise ValueError("Wrench5 needs exactly 5 components")
        if not np.all(np.isfinite(self.vec)):
            raise ValueError("Wrench5 components must be finite")

    @property
    def tau_u(self) -> float:
        return float(self.vec[0])

    @property
    def tau_v(self) -> float:
        return float(self.vec[1])

    @property
    def tau_r(self) -> float:
        return float(self.vec[2])

    @property
    def tau_w(self) -> float:
        return float(self.vec[3])

    @property
    def tau_q(self) -> float:
        return float(self.vec[4])


def build_tcm(cfg: ThrusterConfig) -> np.ndarray:
    """5x3 thruster control matrix mapping thruster forces to the wrench."""
    cfg.validate()
    return np.array(
        [
            [cfg.k1 * cfg.l1, cfg.k2 * cfg.l2, 0.0],
            [-cfg.t1 * (1.0 - cfg.k1) * cfg.l1, cfg.t2 * (1.0 - cfg.k2) * cfg.l2, 0.0],
            [cfg.k1 * cfg.l1 * cfg.r1, -cfg.k2 * cfg.l2 * cfg.r2, 0.0],
            [0.0, 0.0, cfg.k3],
            [
                cfg.t3 * cfg.k1 * (1.0 - cfg.l1) * cfg.r3,
                cfg.t4 * cfg.k2 * (1.0 - cfg.l2) * cfg.r3,
                0.0,
            ],
        ]
    )


def wrench_from_thrust(u_t: np.ndarray, cfg: ThrusterConfig) -> Wrench5:
    """tau = B_t u_t; rejects thrusts beyond the per-thruster limit."""
    u_t = np.asarray(u_t, dtype=float)
    if np.any(np.abs(u_t) > cfg.u_limit + 1e-12):
        raise ValueError("thrust exceeds per-thruster limit")
    return Wrench5(build_tcm(cfg) @ u_t)


def allocate(tau, cfg: ThrusterConfig) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares thrust allocation with saturation.

    Returns (u_t, residual) where residual = B_t u_t - tau reports the
    unreachable share of the command (nonzero for out-of-range wrenches or
    saturated thrusters).  Pseudo-inverse solve, clip, then one re-solve of
    the unsaturated thrusters against what the saturated ones left over.
    """
    tau = tau.vec if isinstance(tau, Wrench5) else np.asarray(tau, dtype=float)
    b = build_tcm(cfg)
    u = np.linalg.pinv(b) @ tau
    lim = cfg.u_limit
    sat = np.abs(u) > lim
    if np.any(sat):
        u = np.clip(u, -lim, lim)
        free = ~sat
        if np.any(free):
            rem = tau - b[:, sat] @ u[sat]
            u[free] = np.linalg.pinv(b[:, free]) @ rem
            u = np.clip(u, -lim, lim)
    residual = b @ u - tau
    return u, residual


def wrench5_to_body(tau5: np.ndarray) -> np.ndarray:
    """Expand the decoupled wrench to a 6-DOF body wrench with zero roll."""
    tau5 = np.asarray(tau5, dtype=float)
    out = np.zeros(tau5.shape[:-1] + (6,))
    out[..., WRENCH5_TO_6] = tau5
    return out


def body_to_wrench5(tau6: np.ndarray) -> np.ndarray:
    """Project a 6-DOF body wrench onto the actuated 5-DOF wrench (drops roll)."""
    return np.asarray(tau6, dtype=float)[..., WRENCH5_TO_6]
