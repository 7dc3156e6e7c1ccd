"""Seeded multi-trial execution of the benchmark experiments.

Each trial is a pure function of (config, trial_index): trial t draws all
randomness from ``numpy.random.default_rng(base_seed + t)`` (PCG64).
Within-implementation determinism is guaranteed; bit-exact trajectories
across platforms or numpy versions are not promised.
"""

import itertools
import math
import os

import numpy as np

from .. import baselines, envs, ktd, uncertainty, xktd
from ..errors import ConfigError, NumericsError
from ..funcapprox import MatrixExpParam, RbfBasis, boyan_features, identity_features, LinearFeatures
from ..ktd import KtdState, NoiseConfig, ProcessNoise
from ..statespace import ObservationModel, Q_OPT, Transition, V_EVAL
from ..unscented import GaussianBelief, SigmaScheme
from .config import validate_config
from .metrics import MetricSeries, normalized_param_error, write_csv

OUTPUT_DIR_ENV = "KALMANTD_OUT_DIR"

# Exact state values of the 13-state reward chain are linear in the
# interpolated features; the anchor values give the optimal parameters.
BOYAN_OPTIMAL = np.array([-24.0, -16.0, -8.0, 0.0])


class CovarianceMonitor:
    """Tracks worst-case symmetry and PSD slack across every filter step."""

    SYM_LIMIT = 1e-9
    EIG_LIMIT = -1e-8

    def __init__(self, validate=True):
        self.validate = validate
        self.min_eig = math.inf
        self.max_asym = 0.0
        self.checks = 0

    def observe(self, cov):
        self.checks += 1
        asym = float(np.max(np.abs(cov - cov.T)))
        min_eig = float(np.min(np.linalg.eigvalsh(cov)))
        self.max_asym = max(self.max_asym, asym)
        self.min_eig = min(self.min_eig, min_eig)
        if self.validate and (asym > self.SYM_LIMIT or min_eig < self.EIG_LIMIT):
            raise NumericsError(
                f"covariance invariant violated: asym={asym:.3e}, min_eig={min_eig:.3e}"
            )

    def diagnostics(self):
        if not self.checks:
            return {}
        return {
            "cov_min_eig": self.min_eig,
            "cov_max_asym": self.max_asym,
            "cov_checks": self.checks,
        }


def _theta0_vector(value, dim):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(dim, float(arr))
    if arr.size != dim:
        raise ConfigError(f"theta0 has length {arr.size}, expected {dim}")
    return arr.reshape(-1)


def _process_noise(hp, dim):
    kind = hp["process"]
    if kind == "zero":
        return ProcessNoise.zero()
    if kind == "adaptive":
        return ProcessNoise.adaptive(hp["eta"])
    pv = np.asarray(hp["pv"], dtype=float)
    if pv.ndim == 0:
        pv = float(pv) * np.eye(dim)
    return ProcessNoise.constant(pv)


def _sigma_scheme(hp):
    return SigmaScheme(kappa=hp["kappa"], alpha=hp["ut_alpha"], beta=hp["ut_beta"])


def _pendulum_params(hp):
    return envs.PendulumParams(
        gravity=hp["gravity"],
        pole_mass=hp["pole_mass"],
        cart_mass=hp["cart_mass"],
        pole_length=hp["pole_length"],
        force_scale=hp["force_scale"],
        dt=hp["dt"],
    )


def pendulum_basis(rbf_std=1.0):
    """Per-action blocks of a constant plus nine kernels on angle/velocity."""
    centers = list(itertools.product((-math.pi / 4.0, 0.0, math.pi / 4.0),
                                     (-1.0, 0.0, 1.0)))
    return RbfBasis(centers, rbf_std, constant=True, n_actions=3)


def maze_basis(rbf_std=0.5):
    """Nine kernels on the corners, edge midpoints, and center of the square."""
    centers = list(itertools.product((0.0, 0.5, 1.0), (0.0, 0.5, 1.0)))
    return RbfBasis(centers, rbf_std, constant=False)


# ---------------------------------------------------------------------------
# Greedy-policy evaluation (batched over evaluation episodes)


def _batched_rbf_features(approx: RbfBasis, states):
    sq = ((states[:, None, :] - approx.centers[None, :, :]) ** 2).sum(axis=2)
    feats = np.exp(-sq / (2.0 * approx.std_dev**2))
    if approx.constant:
        feats = np.concatenate([np.ones((states.shape[0], 1)), feats], axis=1)
    return feats


def _greedy_actions(approx, theta, states):
    """Lowest-index argmax over the per-action Q values for a state batch."""
    if isinstance(approx, RbfBasis) and approx.n_actions is not None:
        block = approx.param_dim // approx.n_actions
        q = _batched_rbf_features(approx, states) @ theta.reshape(approx.n_actions, block).T
        return np.argmax(q, axis=1)
    out = np.empty(states.shape[0], dtype=int)
    n_actions = approx.n_actions
    for i, s in enumerate(states):
        out[i] = int(np.argmax([approx.evaluate(theta, s, a) for a in range(n_actions)]))
    return out


def evaluate_greedy_policy(approximator, theta, rng, episodes=100, max_steps=3000,
                           params=envs.DEFAULT_PENDULUM, start_spread=0.1):
    """Mean episode length of the greedy policy from perturbed starts.

    Learning is frozen; ties break toward the lowest action index; episode
    length is capped at max_steps.  All episodes advance in lockstep so the
    evaluation cost scales with the longest episode, not their sum.
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    starts = rng.uniform(-start_spread, start_spread, size=(episodes, 2))
    phi = starts[:, 0].copy()
    phi_dot = starts[:, 1].copy()
    alive = np.ones(episodes, dtype=bool)
    steps = np.zeros(episodes, dtype=int)
    forces = np.asarray(envs.PENDULUM_FORCES)
    g, m, l, b = params.gravity, params.pole_mass, params.pole_length, params.beta
    for _ in range(max_steps):
        if not alive.any():
            break
        states = np.column_stack([phi[alive], phi_dot[alive]])
        action = forces[_greedy_actions(approximator, theta, states)]
        cphi = np.cos(phi[alive])
        accel = (g * np.sin(phi[alive])
                 - b * m * l * phi_dot[alive] ** 2 * np.sin(2.0 * phi[alive]) / 2.0
                 - params.force_scale * b * cphi * action) / (4.0 * l / 3.0 - b * m * l * cphi**2)
        new_phi = phi[alive] + params.dt * phi_dot[alive]
        phi_dot[alive] = phi_dot[alive] + params.dt * accel
        phi[alive] = new_phi
        steps[alive] += 1
        still = np.abs(new_phi) <= params.angle_limit
        alive[np.flatnonzero(alive)[~still]] = False
    return float(steps.mean())


# ---------------------------------------------------------------------------
# Per-experiment trial runners


def _run_tsitsiklis_trial(config, trial, monitor):
    hp = config.hyperparameters
    rng = np.random.default_rng(config.base_seed + trial)
    approx = MatrixExpParam()
    model = ObservationModel(approx, hp["gamma"], V_EVAL)
    theta0 = _theta0_vector(hp["theta0"], 1)
    algorithm = config.algorithm
    if algorithm == "ktd":
        state = KtdState.initial(theta0, hp["p0"])
        noise = NoiseConfig(hp["obs_var"], _process_noise(hp, 1))
    else:
        theta = theta0
    s = int(rng.integers(1, 4))
    checkpoints, values = [], []
    for i in range(1, int(hp["transitions"]) + 1):
        outcome = envs.tsitsiklis_step(s, rng)
        t = Transition.v_eval(s, outcome.next_state, outcome.reward)
        if algorithm == "ktd":
            state = ktd.step(state, model, t, noise, _sigma_scheme(hp))
            monitor.observe(state.cov)
            theta = state.theta
        elif algorithm == "td_direct":
            theta = baselines.direct_update(theta, model, t, hp["alpha"])
        else:
            theta = baselines.residual_update(theta, model, t, hp["alpha"])
        s = outcome.next_state
        checkpoints.append(i)
        values.append(float(theta[0]))
    return checkpoints, values


def _boyan_episode(rng, scale):
    transitions = []
    s = 12
    while True:
        outcome = envs.boyan_step(s, scale, rng)
        nxt = None if outcome.terminal else outcome.next_state
        transitions.append(Transition.v_eval(s, nxt, outcome.reward))
        if outcome.terminal:
            return transitions
        s = outcome.next_state


class _BoyanLearner:
    """Uniform stepping interface over the chain learners."""

    def __init__(self, algorithm, hp, approx):
        self.algorithm = algorithm
        self.hp = hp
        self.approx = approx
        self.model = ObservationModel(approx, hp["gamma"], V_EVAL)
        dim = approx.param_dim
        theta0 = _theta0_vector(hp["theta0"], dim)
        if algorithm == "ktd":
            self.state = KtdState.initial(theta0, hp["p0"])
            self.noise = NoiseConfig(hp["obs_var"], _process_noise(hp, dim))
        elif algorithm in ("xktd", "mcgptd"):
            process = ProcessNoise.zero() if algorithm == "mcgptd" else _process_noise(hp, dim)
            self.process = process
            self.state = xktd.extend_prior(theta0, hp["p0"], hp["sigma2"], hp["gamma"])
        elif algorithm == "lstd":
            self.state = baselines.LstdState(theta0, hp["p0"])
        elif algorithm == "gptd":
            self.state = baselines.GptdState(theta0, hp["p0"], hp["sigma2"])
        else:
            self.theta = theta0

    def begin_episode(self):
        if self.algorithm in ("xktd", "mcgptd"):
            self.state = xktd.begin_episode(self.state, self.hp["sigma2"], self.hp["gamma"])

    def observe(self, t, monitor):
        hp = self.hp
        if self.algorithm == "ktd":
            self.state = ktd.step(self.state, self.model, t, self.noise, _sigma_scheme(hp))
            monitor.observe(self.state.cov)
        elif self.algorithm in ("xktd", "mcgptd"):
            self.state = xktd.xstep(self.state, self.model, t, hp["sigma2"],
                                    self.process, _sigma_scheme(hp))
            monitor.observe(self.state.belief.cov)
        elif self.algorithm == "lstd":
            phi = self.approx.features(t.state)
            phi_next = np.zeros_like(phi) if t.terminal else self.approx.features(t.next_state)
            self.state = baselines.lstd_update(self.state, phi, phi_next, hp["gamma"], t.reward)
        elif self.algorithm == "gptd":
            phi = self.approx.features(t.state)
            phi_next = np.zeros_like(phi) if t.terminal else self.approx.features(t.next_state)
            self.state = baselines.gptd_update(self.state, phi, phi_next, hp["gamma"], t.reward)
            monitor.observe(self.state.P)
        elif self.algorithm == "td_direct":
            self.theta = baselines.direct_update(self.theta, self.model, t, hp["alpha"])
        else:
            self.theta = baselines.residual_update(self.theta, self.model, t, hp["alpha"])

    @property
    def estimate(self):
        if self.algorithm in ("xktd", "mcgptd"):
            return self.state.theta
        if self.algorithm in ("ktd", "lstd", "gptd"):
            return self.state.theta
        return self.theta


def _run_boyan_trial(config, trial, monitor):
    hp = config.hyperparameters
    rng = np.random.default_rng(config.base_seed + trial)
    approx = LinearFeatures(boyan_features, 4)
    learner = _BoyanLearner(config.algorithm, hp, approx)
    factor = hp["reward_scale_factor"]
    switch = int(hp["switch_episode"])
    checkpoints, values = [], []
    for ep in range(int(hp["episodes"])):
        scale = factor if ep >= switch else 1.0
        target = BOYAN_OPTIMAL * scale
        learner.begin_episode()
        for t in _boyan_episode(rng, scale):
            learner.observe(t, monitor)
        checkpoints.append(ep + 1)
        values.append(normalized_param_error(learner.estimate, target))
    return checkpoints, values


def _run_maze_trial(config, trial, monitor):
    hp = config.hyperparameters
    rng = np.random.default_rng(config.base_seed + trial)
    approx = maze_basis(hp["rbf_std"])
    dim = approx.param_dim
    model = ObservationModel(approx, hp["gamma"], V_EVAL)
    theta0 = _theta0_vector(hp["theta0"], dim)
    algorithm = config.algorithm
    if algorithm == "ktd":
        state = KtdState.initial(theta0, hp["p0"])
        noise = NoiseConfig(hp["obs_var"], _process_noise(hp, dim))
    elif algorithm == "gptd":
        state = baselines.GptdState(theta0, hp["p0"], hp["sigma2"])
    else:
        state = xktd.extend_prior(theta0, hp["p0"], hp["sigma2"], hp["gamma"])
    for _ in range(int(hp["episodes"])):
        pos = envs.maze_start(rng)
        if algorithm == "mcgptd":
            state = xktd.begin_episode(state, hp["sigma2"], hp["gamma"])
        for _ in range(int(hp["max_steps"])):
            if rng.random() < 0.9:
                action = "up"
            else:
                action = ("left", "right", "down")[rng.integers(3)]
            outcome = envs.maze_step(pos, action, rng)
            nxt = None if outcome.terminal else outcome.next_state
            t = Transition.v_eval(pos, nxt, outcome.reward)
            if algorithm == "ktd":
                state = ktd.step(state, model, t, noise, _sigma_scheme(hp))
                monitor.observe(state.cov)
            elif algorithm == "gptd":
                phi = approx.features(t.state)
                phi_next = np.zeros(dim) if t.terminal else approx.features(t.next_state)
                state = baselines.gptd_update(state, phi, phi_next, hp["gamma"], t.reward)
                monitor.observe(state.P)
            else:
                state = xktd.xstep(state, model, t, hp["sigma2"], ProcessNoise.zero(),
                                   _sigma_scheme(hp))
                monitor.observe(state.belief.cov)
            if outcome.terminal:
                break
            pos = outcome.next_state
    if algorithm == "ktd":
        belief = state.belief
    elif algorithm == "gptd":
        belief = GaussianBelief(state.theta, state.P)
    else:
        belief = GaussianBelief(state.theta, state.theta_cov)
    grid = int(hp["grid"])
    checkpoints, values = [], []
    for index, point in enumerate(maze_grid_points(grid)):
        stats = uncertainty.value_stats(belief, approx, point, kappa=_sigma_scheme(hp))
        checkpoints.append(index)
        values.append(stats.std_dev)
    return checkpoints, values


def maze_grid_points(grid):
    """Evaluation grid in checkpoint order: index = ix * grid + iy."""
    axis = np.linspace(0.0, 1.0, grid)
    return [(float(x), float(y)) for x in axis for y in axis]


def _run_pendulum_trial(config, trial, monitor, active):
    hp = config.hyperparameters
    rng = np.random.default_rng(config.base_seed + trial)
    params = _pendulum_params(hp)
    approx = pendulum_basis(hp["rbf_std"])
    dim = approx.param_dim
    actions = (0, 1, 2)
    forces = envs.PENDULUM_FORCES
    model = ObservationModel(approx, hp["gamma"], Q_OPT, actions)
    theta0 = _theta0_vector(hp["theta0"], dim)
    algorithm = config.algorithm
    scheme = _sigma_scheme(hp)
    if algorithm == "ktd":
        state = KtdState.initial(theta0, hp["p0"])
        noise = NoiseConfig(hp["obs_var"], _process_noise(hp, dim))
        theta = state.theta
    else:
        theta = theta0
        global_step = 0
    eval_every = int(hp["eval_every"])
    checkpoints, values = [], []
    for ep in range(int(hp["episodes"])):
        s = envs.pendulum_start(rng, hp["start_spread"])
        for _ in range(int(hp["learn_max_steps"])):
            if active:
                a_idx = uncertainty.active_policy(state.belief, approx, s, actions,
                                                  scheme, rng)
            else:
                a_idx = int(rng.integers(3))
            outcome = envs.pendulum_step(s, forces[a_idx], params.dt, params)
            nxt = None if outcome.terminal else outcome.next_state
            t = Transition.q_opt(s, a_idx, nxt, outcome.reward)
            if algorithm == "ktd":
                state = ktd.step(state, model, t, noise, scheme)
                monitor.observe(state.cov)
                theta = state.theta
            else:
                global_step += 1
                alpha = hp["alpha0"] * (hp["n0"] + 1.0) / (hp["n0"] + global_step)
                theta = baselines.direct_update(theta, model, t, alpha)
            if outcome.terminal:
                break
            s = outcome.next_state
        if (ep + 1) % eval_every == 0:
            score = evaluate_greedy_policy(
                approx, theta, rng, int(hp["eval_episodes"]),
                int(hp["eval_max_steps"]), params, hp["start_spread"])
            checkpoints.append(ep + 1)
            values.append(score)
    return checkpoints, values


def _run_oracle_theorem2_trial(config, trial, monitor):
    hp = config.hyperparameters
    rng = np.random.default_rng(config.base_seed + trial)
    dim = int(hp["param_dim"])
    approx = identity_features(dim)
    model = ObservationModel(approx, hp["gamma"], V_EVAL)
    theta0 = _theta0_vector(hp["theta0"], dim)
    p0 = float(hp["p0"]) * np.eye(dim)
    algorithm = config.algorithm
    if algorithm == "ktd":
        state = KtdState.initial(theta0, hp["p0"])
        noise = NoiseConfig(hp["obs_var"], ProcessNoise.zero())
        weight = hp["obs_var"]
    else:
        state = baselines.GptdState(theta0, hp["p0"], hp["sigma2"])
        weight = hp["sigma2"]
    p0_inv = np.linalg.inv(p0)
    A = p0_inv.copy()
    b = p0_inv @ theta0
    checkpoints, values = [], []
    for i in range(1, int(hp["transitions"]) + 1):
        s = rng.standard_normal(dim)
        s_next = rng.standard_normal(dim)
        r = rng.standard_normal()
        t = Transition.v_eval(s, s_next, r)
        if algorithm == "ktd":
            state = ktd.step(state, model, t, noise, _sigma_scheme(hp))
            monitor.observe(state.cov)
        else:
            state = baselines.gptd_update(state, s, s_next, hp["gamma"], r)
            monitor.observe(state.P)
        H = s - hp["gamma"] * s_next
        A += np.outer(H, H) / weight
        b += H * r / weight
        batch = np.linalg.solve(A, b)
        checkpoints.append(i)
        values.append(normalized_param_error(state.theta, batch))
    return checkpoints, values


def _run_oracle_theorem3_trial(config, trial, monitor):
    hp = config.hyperparameters
    rng = np.random.default_rng(config.base_seed + trial)
    approx = LinearFeatures(boyan_features, 4)
    model = ObservationModel(approx, hp["gamma"], V_EVAL)
    theta0 = _theta0_vector(hp["theta0"], 4)
    p0 = float(hp["p0"]) * np.eye(4)
    sigma2 = hp["sigma2"]
    gamma = hp["gamma"]
    state = xktd.extend_prior(theta0, hp["p0"], sigma2, gamma)
    p0_inv = np.linalg.inv(p0)
    A = p0_inv.copy()
    b = p0_inv @ theta0
    checkpoints, values = [], []
    for ep in range(int(hp["episodes"])):
        state = xktd.begin_episode(state, sigma2, gamma)
        transitions = _boyan_episode(rng, 1.0)
        for t in transitions:
            state = xktd.xstep(state, model, t, sigma2, ProcessNoise.zero(), _sigma_scheme(hp))
            monitor.observe(state.belief.cov)
        mc_return = 0.0
        for t in reversed(transitions):
            mc_return = t.reward + gamma * mc_return
            phi = approx.features(t.state)
            A += np.outer(phi, phi) / sigma2
            b += phi * mc_return / sigma2
        batch = np.linalg.solve(A, b)
        checkpoints.append(ep + 1)
        values.append(normalized_param_error(state.theta, batch))
    return checkpoints, values


_TRIAL_RUNNERS = {
    "tsitsiklis": _run_tsitsiklis_trial,
    "boyan": _run_boyan_trial,
    "maze": _run_maze_trial,
    "pendulum": lambda c, t, m: _run_pendulum_trial(c, t, m, active=False),
    "pendulum_active": lambda c, t, m: _run_pendulum_trial(c, t, m, active=True),
    "oracle_theorem2": _run_oracle_theorem2_trial,
    "oracle_theorem3": _run_oracle_theorem3_trial,
}


def resolve_output_path(path):
    """Apply the output-directory override from the environment, if set."""
    if not path:
        return path
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        return os.path.join(override, os.path.basename(path))
    return path


def run_experiment(config) -> MetricSeries:
    """Run all trials, aggregate, and write the CSV when an output is set."""
    config = validate_config(config)
    runner = _TRIAL_RUNNERS[config.experiment]
    monitor = CovarianceMonitor(validate=bool(config.hyperparameters.get(
        "validate_covariance", True)))
    checkpoints = None
    rows = []
    for trial in range(config.trials):
        trial_checkpoints, values = runner(config, trial, monitor)
        if checkpoints is None:
            checkpoints = trial_checkpoints
        elif checkpoints != trial_checkpoints:
            raise NumericsError("trials produced mismatched checkpoints")
        rows.append(values)
    series = MetricSeries(checkpoints or [], rows, monitor.diagnostics())
    if config.output_path:
        write_csv(series, config, resolve_output_path(config.output_path))
    return series
