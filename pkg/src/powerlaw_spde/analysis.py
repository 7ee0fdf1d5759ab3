"""Energy identities, Monte Carlo moments, and convergence studies."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import GalerkinSpace, synthesize, symmetric_gradient
from .constitutive import ConstitutiveParams, eval_stabilizer, eval_stress
from .galerkin import (
    Forcing,
    SdeStepConfig,
    Trajectory,
    interpolation_exponent,
    run_trajectory,
)
from .noise import NoiseModel, WienerPath, apply_phi


def moment_exponent(params: ConstitutiveParams) -> float:
    """beta = max{2(d+2)/d, p(d+2)/d}."""
    d = params.d
    return max(2.0 * (d + 2) / d, params.p * (d + 2) / d)


@dataclass
class ItoCheck:
    """Both sides of the discrete energy identity for 0.5 |C(t)|^2."""

    lhs: np.ndarray
    rhs: np.ndarray
    residual: float

    @classmethod
    def from_sides(cls, lhs, rhs):
        return cls(lhs=lhs, rhs=rhs, residual=float(np.max(np.abs(lhs - rhs))))


def energy_identity_residual(traj: Trajectory) -> ItoCheck:
    """Discrete analogue of the Ito identity for the kinetic energy.

    0.5|C(t)|^2 vs 0.5|C(0)|^2 - int int S:eps(v) - alpha int int |v|^q
    + int int f.v + martingale + 0.5 * quadratic variation, with left-point
    sums for the time integrals.
    """
    energy = 0.5 * np.sum(traj.coeffs ** 2, axis=1)
    dt = traj.dt
    drift_part = dt * np.cumsum(-traj.stress_diss - traj.stab_int + traj.force_work)
    noise_part = np.cumsum(traj.mart) + 0.5 * np.cumsum(traj.qv)
    rhs = energy[0] + np.concatenate(([0.0], drift_part + noise_part))
    return ItoCheck.from_sides(energy, rhs)


@dataclass
class EnergyReport:
    """Per-trajectory and ensemble energy moments."""

    sup_l2_sq: np.ndarray
    grad_lp: np.ndarray
    stab_lq: np.ndarray
    interp_lr0: np.ndarray
    beta: float
    r0: float

    def __post_init__(self):
        for name in ("sup_l2_sq", "grad_lp", "stab_lq", "interp_lr0"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ValueError(f"{name} must be nonnegative")

    @property
    def total(self) -> np.ndarray:
        """sup ||v||^2 + int |grad v|^p + alpha int |v|^q per trajectory."""
        return self.sup_l2_sq + self.grad_lp + self.stab_lq

    def mean_total(self) -> float:
        return float(np.mean(self.total))

    def se_total(self) -> float:
        n = len(self.total)
        return float(np.std(self.total, ddof=1) / np.sqrt(n)) if n > 1 else 0.0

    def moment_beta(self) -> tuple[float, float]:
        """Monte Carlo mean and standard error of total^(beta/2)."""
        powered = self.total ** (self.beta / 2.0)
        n = len(powered)
        se = float(np.std(powered, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return float(np.mean(powered)), se

    def as_dict(self) -> dict:
        mom, mom_se = self.moment_beta()
        return {
            "n_traj": len(self.total),
            "mean_sup_l2_sq": float(np.mean(self.sup_l2_sq)),
            "mean_grad_lp": float(np.mean(self.grad_lp)),
            "mean_stab_lq": float(np.mean(self.stab_lq)),
            "mean_interp_lr0": float(np.mean(self.interp_lr0)),
            "mean_total": self.mean_total(),
            "se_total": self.se_total(),
            "beta": self.beta,
            "r0": self.r0,
            "moment_beta_mean": mom,
            "moment_beta_se": mom_se,
        }


def report_from_trajectories(trajectories: list[Trajectory], beta: float | None = None) -> EnergyReport:
    params = trajectories[0].params
    if beta is None:
        beta = moment_exponent(params)
    return EnergyReport(
        sup_l2_sq=np.array([t.sup_energy() for t in trajectories]),
        grad_lp=np.array([t.grad_lp_time_integral() for t in trajectories]),
        stab_lq=np.array([t.stab_time_integral() for t in trajectories]),
        interp_lr0=np.array([t.vel_rq_time_integral() for t in trajectories]),
        beta=beta,
        r0=interpolation_exponent(params),
    )


def run_ensemble(
    params: ConstitutiveParams,
    space: GalerkinSpace,
    model: NoiseModel | None,
    forcing: Forcing,
    v0_coeffs: np.ndarray,
    cfg: SdeStepConfig,
    n_steps: int,
    base_seed: int,
    n_traj: int,
) -> list[Trajectory]:
    """Independent trajectories with seeds base_seed, base_seed+1, ..."""
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    out = []
    for i in range(n_traj):
        try:
            out.append(
                run_trajectory(params, space, model, forcing, v0_coeffs,
                               cfg, n_steps, seed=base_seed + i)
            )
        except Exception as exc:
            raise RuntimeError(f"trajectory {i} (seed {base_seed + i}) failed") from exc
    return out


def ensemble_moments(
    params: ConstitutiveParams,
    space: GalerkinSpace,
    model: NoiseModel | None,
    forcing: Forcing,
    v0_coeffs: np.ndarray,
    cfg: SdeStepConfig,
    n_steps: int,
    base_seed: int,
    n_traj: int,
    beta: float | None = None,
) -> EnergyReport:
    if n_traj < 2:
        raise ValueError("ensemble statistics need at least two trajectories")
    trajs = run_ensemble(params, space, model, forcing, v0_coeffs, cfg,
                         n_steps, base_seed, n_traj)
    return report_from_trajectories(trajs, beta=beta)


def bound_ratio(
    report: EnergyReport,
    v0_l2_sq: float,
    forcing_l2q_sq: float,
) -> float:
    """R = E[total] / (1 + E||v0||^2 + E||f||^2_{L2(Q)})."""
    return report.mean_total() / (1.0 + v0_l2_sq + forcing_l2q_sq)


def alpha_independence_study(
    params_for_alpha,
    space: GalerkinSpace,
    model: NoiseModel | None,
    forcing: Forcing,
    v0_coeffs: np.ndarray,
    cfg: SdeStepConfig,
    n_steps: int,
    base_seed: int,
    n_traj: int,
    alphas: list[float],
) -> list[dict]:
    """Bound ratios across a stabilization-weight grid with shared seeds.

    params_for_alpha(alpha) must return the constitutive parameters for one
    grid point.
    """
    v0_sq = float(np.sum(np.asarray(v0_coeffs) ** 2))
    f_sq = forcing.l2q_norm_sq(space, cfg.dt, n_steps)
    rows = []
    for alpha in alphas:
        params = params_for_alpha(alpha)
        report = ensemble_moments(params, space, model, forcing, v0_coeffs,
                                  cfg, n_steps, base_seed, n_traj)
        rows.append({
            "alpha": alpha,
            "ratio": bound_ratio(report, v0_sq, f_sq),
            "mean_total": report.mean_total(),
            "se_total": report.se_total(),
        })
    return rows


def stabilization_convergence(
    params_for_m,
    space: GalerkinSpace,
    model: NoiseModel | None,
    forcing: Forcing,
    v0_coeffs: np.ndarray,
    cfg: SdeStepConfig,
    n_steps: int,
    base_seed: int,
    n_traj: int,
    m_grid: list[float],
) -> list[dict]:
    """E||v^m - v^m'||^2_{L2(Q)} along consecutive m with shared seeds."""
    runs = {}
    for m in m_grid:
        params = params_for_m(m)
        runs[m] = run_ensemble(params, space, model, forcing, v0_coeffs,
                               cfg, n_steps, base_seed, n_traj)
    rows = []
    for m_a, m_b in zip(m_grid[:-1], m_grid[1:]):
        diffs = []
        for ta, tb in zip(runs[m_a], runs[m_b]):
            # ||v_a - v_b||^2_{L2(Q)} = dt sum_n |C_a - C_b|^2 (orthonormal basis)
            d = np.sum((ta.coeffs[:-1] - tb.coeffs[:-1]) ** 2, axis=1)
            diffs.append(cfg.dt * float(np.sum(d)))
        rows.append({
            "m_pair": (m_a, m_b),
            "mean_sq_diff": float(np.mean(diffs)),
        })
    return rows


def interpolation_diagnostic(traj: Trajectory) -> float:
    """int_Q |v|^r0 / [ (sup ||v||^2)^(p/d) * int_Q |grad v|^p + 1 ]."""
    params = traj.params
    num = traj.vel_rq_time_integral()
    den = traj.sup_energy() ** (params.p / params.d) * traj.grad_lp_time_integral() + 1.0
    return num / den


def weak_solution_residual(
    traj: Trajectory,
    model: NoiseModel | None,
    forcing: Forcing,
    test_space: GalerkinSpace,
    j: int,
) -> np.ndarray:
    """Residual time series of the weak identity against test mode w_j.

    test_space may extend the trajectory's space (same ordering, same
    grid); for j <= N the scheme enforces the identity up to solver
    tolerance, for j > N the series measures Galerkin truncation error.
    """
    space = traj.space
    if test_space.M != space.M or test_space.d != space.d:
        raise ValueError("test space must share the trajectory grid")
    if not 1 <= j <= test_space.N:
        raise ValueError(f"test mode {j} not resolved by the test space")
    params = traj.params
    w = space.quad_weight
    w_j = test_space.mode_fields[j - 1]
    grad_w_j = test_space.mode_grads[j - 1]
    eps_w_j = test_space.mode_eps[j - 1]
    implicit = traj.cfg.scheme == "semi_implicit"

    n = traj.n_steps
    res = np.zeros(n + 1)
    accum = 0.0
    for m in range(n):
        c_drift = traj.coeffs[m + 1] if implicit else traj.coeffs[m]
        c_left = traj.coeffs[m]
        eps = symmetric_gradient(space, c_drift)
        s = eval_stress(params, eps)
        mu = -w * float(np.sum(s * eps_w_j))
        v_left = synthesize(space, c_left).values
        tensor = v_left[:, :, None] * v_left[:, None, :]
        mu += w * float(np.sum(tensor * grad_w_j))
        if params.alpha > 0.0:
            v_drift = synthesize(space, c_drift).values
            mu -= w * float(np.sum(eval_stabilizer(params, v_drift) * w_j))
        f = forcing.at_step(m)
        if f is not None:
            mu += w * float(np.sum(f.values * w_j))
        accum += traj.dt * mu
        if model is not None and traj.increments is not None:
            phi = apply_phi(model, space, synthesize(space, c_left))
            sigma_row = w * np.einsum("kxd,xd->k", phi, w_j)
            accum += float(sigma_row @ traj.increments[m])
        proj_now = w * float(np.sum(synthesize(space, traj.coeffs[m + 1]).values * w_j))
        proj_0 = w * float(np.sum(synthesize(space, traj.coeffs[0]).values * w_j))
        res[m + 1] = abs(proj_now - proj_0 - accum)
    return res


def refinement_orders(residuals: list[float]) -> list[float]:
    """Empirical convergence orders log2(r_i / r_{i+1}) for a dt-halving grid."""
    return [float(np.log2(a / b)) for a, b in zip(residuals[:-1], residuals[1:])]


def coupled_paths(seed: int, dt_fine: float, K: int, n_fine: int, factors: list[int]) -> list[WienerPath]:
    """One fine Wiener path and its coarsenings, for refinement studies."""
    fine = WienerPath.generate(seed, dt_fine, K, n_fine)
    return [fine.coarsen(f) if f > 1 else fine for f in factors]
