"""Receding-horizon smoothing shell around the sliding-mode command.

Each solve perturbs a short future control sequence around the raw SMC
command, forward-simulates the estimated vehicle model, and keeps the
cheapest sequence under the cost

    J = sum_k ||ed_pred(k) - ed_d(k)||^2
      + sum_k sum_i ||u(k) - u(k+i)||^2        (k = 1..n_e, i = 1..n_u)

subject to per-axis control bounds and pose-error bounds.  The incumbent
(clipped nominal) sequence is kept in every sampling round, so the result
never costs more than the clipped nominal.  Sampling is seeded and batched
over vehicles and candidates, making every solve deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flow import DisturbanceModel
from .plant import FlowSampler, advance_plant
from .vehicle import RigidBodyParams, VehicleState, jacobian, wrap_angle


@dataclass
class MpcConfig:
    """Horizons, bounds and sampling budget of the smoothing shell."""

    enabled: bool = True
    n_e: int = 5
    n_u: int = 2
    tau_lo: float = -60.0
    tau_hi: float = 60.0
    state_lo: float = -5.0
    state_hi: float = 5.0
    candidate_count: int = 32
    rounds: int = 3
    perturb_scale: float = 2.0
    stride: int = 1

    def validate(self) -> None:
        if self.n_e < 1 or self.n_u < 1:
            raise ValueError("horizons must be at least 1")
        if self.tau_lo > self.tau_hi or self.state_lo > self.state_hi:
            raise ValueError("bounds must be well ordered (lower <= upper)")
        if self.candidate_count < 1 or self.rounds < 0 or self.stride < 1:
            raise ValueError("candidate_count/rounds/stride out of range")

    @property
    def horizon(self) -> int:
        return self.n_e + self.n_u


@dataclass
class MpcSolution:
    """Optimized control sequence, its cost, and whether bounds were met."""

    sequence: np.ndarray
    cost: float
    feasible: bool


def mpc_cost(
    predicted: np.ndarray,
    desired: np.ndarray,
    controls: np.ndarray,
    cfg: MpcConfig,
) -> float:
    """Tracking-plus-smoothing cost of one control sequence."""
    predicted = np.asarray(predicted, dtype=float)
    desired = np.asarray(desired, dtype=float)
    controls = np.asarray(controls, dtype=float)
    if predicted.shape[0] != cfg.n_e or desired.shape[0] != cfg.n_e:
        raise ValueError("predicted/desired sequences must have length n_e")
    if controls.shape[0] < cfg.horizon:
        raise ValueError("control sequence must cover n_e + n_u steps")
    return float(_cost_batch(predicted[None], desired[None], controls[None], cfg)[0])


def _cost_batch(
    predicted: np.ndarray, desired: np.ndarray, controls: np.ndarray, cfg: MpcConfig
) -> np.ndarray:
    track = np.sum((predicted - desired) ** 2, axis=(-1, -2))
    smooth = np.zeros(controls.shape[:-2])
    for i in range(1, cfg.n_u + 1):
        diff = controls[..., : cfg.n_e, :] - controls[..., i : cfg.n_e + i, :]
        smooth = smooth + np.sum(diff**2, axis=(-1, -2))
    return track + smooth


def predict_rollout(
    state: VehicleState,
    controls: np.ndarray,
    flow_sampler: FlowSampler | None,
    params: RigidBodyParams,
    n_e: int,
    dt: float = 0.01,
    t0: float = 0.0,
    dist_model: DisturbanceModel | None = None,
) -> np.ndarray:
    """Predicted inertial rates over n_e steps of the estimated model."""
    if len(controls) < n_e:
        raise ValueError("need at least n_e controls")
    est = params.estimated()
    y = np.concatenate([state.eta, state.nu])
    out = np.empty((n_e, 6))
    for k in range(n_e):
        y = advance_plant(
            y, t0 + k * dt, np.asarray(controls[k], dtype=float), dt, est,
            flow_sampler, dist_model,
        )
        out[k] = jacobian(y[3:6]) @ y[6:]
    return out


class MpcShell:
    """Stateful solver bound to one scenario's model, flow and random stream."""

    def __init__(
        self,
        cfg: MpcConfig,
        params: RigidBodyParams,
        dist_model: DisturbanceModel | None,
        flow_sampler: FlowSampler | None,
        dt: float,
        rng: np.random.Generator,
    ):
        cfg.validate()
        self.cfg = cfg
        self.params_est = params.estimated()
        self.dist_model = dist_model
        self.flow_sampler = flow_sampler
        self.dt = dt
        self.rng = rng

    def solve(
        self,
        y0: np.ndarray,
        t: float,
        nominal: np.ndarray,
        e_d: np.ndarray,
        ed_d: np.ndarray,
        edd_d: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Batched solve for every vehicle at once.

        y0 (V, 12); nominal (V, 6) for a constant-hold nominal or (V, H, 6)
        for a full sequence; references (V, 6) at the current time.  Returns
        (sequences (V, H, 6), costs (V,), feasible (V,)); sequence[:, 0] is
        the command to apply.
        """
        cfg = self.cfg
        n_v = y0.shape[0]
        h = cfg.horizon
        nominal = np.asarray(nominal, dtype=float)
        if nominal.ndim == 2:
            nominal = np.broadcast_to(nominal[:, None, :], (n_v, h, 6))
        center = np.clip(nominal, cfg.tau_lo, cfg.tau_hi).copy()

        steps = self.dt * np.arange(1, cfg.n_e + 1)[:, None]
        # first-order extrapolation of the references over the horizon
        ed_seq = ed_d[:, None, :] + edd_d[:, None, :] * steps
        e_seq = (
            e_d[:, None, :]
            + ed_d[:, None, :] * steps
            + 0.5 * edd_d[:, None, :] * steps**2
        )

        cost0, feas0 = self._evaluate(y0, t, center[:, None], ed_seq, e_seq)
        best_cost = cost0[:, 0]
        best_feasible = feas0[:, 0]
        sel_cost = np.where(best_feasible, best_cost, np.inf)

        scale = cfg.perturb_scale
        rows = np.arange(n_v)
        for _ in range(cfg.rounds):
            noise = self.rng.standard_normal((n_v, cfg.candidate_count, h, 6)) * scale
            noise[:, 0] = 0.0  # keep the incumbent in every round
            cand = np.clip(center[:, None] + noise, cfg.tau_lo, cfg.tau_hi)
            cost, feas = self._evaluate(y0, t, cand, ed_seq, e_seq)
            masked = np.where(feas, cost, np.inf)
            pick = np.argmin(masked, axis=1)
            improved = masked[rows, pick] < sel_cost
            center = np.where(improved[:, None, None], cand[rows, pick], center)
            sel_cost = np.where(improved, masked[rows, pick], sel_cost)
            best_cost = np.where(improved, cost[rows, pick], best_cost)
            best_feasible = best_feasible | feas[rows, pick]
            scale *= 0.5

        return center, best_cost, best_feasible

    def _predict(self, y0: np.ndarray, t: float, controls: np.ndarray):
        """Batched rollout: controls (B, H, 6) -> rates and poses (B, n_e, 6)."""
        n_e = self.cfg.n_e
        y = y0
        rates = np.empty(controls.shape[:-2] + (n_e, 6))
        poses = np.empty_like(rates)
        for k in range(n_e):
            y = advance_plant(
                y, t + k * self.dt, controls[..., k, :], self.dt,
                self.params_est, self.flow_sampler, self.dist_model,
            )
            rates[..., k, :] = np.einsum(
                "...ij,...j->...i", jacobian(y[..., 3:6]), y[..., 6:]
            )
            poses[..., k, :] = y[..., :6]
        return rates, poses

    def _evaluate(self, y0, t, candidates, ed_seq, e_seq):
        """Cost and feasibility for candidates (V, C, H, 6)."""
        cfg = self.cfg
        n_v, n_c = candidates.shape[:2]
        flat = candidates.reshape(n_v * n_c, -1, 6)
        y_rep = np.repeat(y0, n_c, axis=0)
        rates, poses = self._predict(y_rep, t, flat)
        rates = rates.reshape(n_v, n_c, cfg.n_e, 6)
        poses = poses.reshape(n_v, n_c, cfg.n_e, 6)
        cost = _cost_batch(rates, ed_seq[:, None], candidates, cfg)
        err = poses - e_seq[:, None]
        err[..., 3:] = wrap_angle(err[..., 3:])
        feasible = np.all((err >= cfg.state_lo) & (err <= cfg.state_hi), axis=(-1, -2))
        return cost, feasible


def mpc_optimize(
    state: VehicleState,
    desired_traj: tuple[np.ndarray, np.ndarray, np.ndarray],
    smc_nominal: np.ndarray,
    cfg: MpcConfig,
    params: RigidBodyParams,
    dist_model: DisturbanceModel | None = None,
    flow_sampler: FlowSampler | None = None,
    dt: float = 0.01,
    t0: float = 0.0,
    seed: int = 0,
) -> MpcSolution:
    """Single-vehicle solve around a nominal command.

    desired_traj holds the current (e_d, ed_d, edd_d); smc_nominal is the raw
    command, either one 6-vector or a full (n_e + n_u, 6) sequence.
    """
    shell = MpcShell(
        cfg, params, dist_model, flow_sampler, dt, np.random.default_rng(seed)
    )
    smc_nominal = np.asarray(smc_nominal, dtype=float)
    y0 = np.concatenate([state.eta, state.nu])[None]
    e_d, ed_d, edd_d = (np.asarray(v, dtype=float)[None] for v in desired_traj)
    seqs, costs, feas = shell.solve(y0, t0, smc_nominal[None], e_d, ed_d, edd_d)
    return MpcSolution(seqs[0], float(costs[0]), bool(feas[0]))
