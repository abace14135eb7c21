"""Discrete-time LTI plant, lifted cost weights, and rollout simulation.

The step-by-step rollout implemented here is the ground truth that the
lifted closed-loop algebra in the rest of the package must reproduce.
Stacked vectors follow one fixed block order throughout the package: the
stacked disturbance is ``(x0, w0, ..., w_{T-1})``, i.e. the initial state
occupies the first block.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import psd_sqrt


@dataclass(frozen=True)
class LtiPlant:
    """Plant ``x_{k+1} = A x_k + B u_k + w_k`` over a horizon of T steps."""

    A: np.ndarray
    B: np.ndarray
    T: int

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ValueError(
                f"B must have {A.shape[0]} rows to match A, got shape {B.shape}")
        if self.T < 1:
            raise ValueError(f"horizon T must be >= 1, got {self.T}")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_w(self) -> int:
        """Length of the stacked disturbance vector, (T+1) * n_x."""
        return (self.T + 1) * self.n_x


@dataclass(frozen=True)
class CostWeights:
    """Per-step quadratic weights and their block-diagonal lifted versions.

    ``q_step`` must be symmetric PSD, ``r_step`` symmetric PD; both are
    validated by attempting a symmetric square-root factorization. The
    lifted weights repeat the step weights T+1 times (states, including the
    terminal one) and T times (inputs).
    """

    q_step: np.ndarray
    r_step: np.ndarray
    T: int

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q_step, dtype=float))
        r = np.atleast_2d(np.asarray(self.r_step, dtype=float))
        if self.T < 1:
            raise ValueError(f"horizon T must be >= 1, got {self.T}")
        q_sqrt = psd_sqrt(q, name="state weight")
        r_sqrt = psd_sqrt(r, name="input weight", require_pd=True)
        for arr in (q, r, q_sqrt, r_sqrt):
            arr.setflags(write=False)
        object.__setattr__(self, "q_step", q)
        object.__setattr__(self, "r_step", r)
        object.__setattr__(self, "_q_step_sqrt", q_sqrt)
        object.__setattr__(self, "_r_step_sqrt", r_sqrt)

    @property
    def q_step_sqrt(self) -> np.ndarray:
        return self._q_step_sqrt

    @property
    def r_step_sqrt(self) -> np.ndarray:
        return self._r_step_sqrt

    @property
    def q_lifted(self) -> np.ndarray:
        return np.kron(np.eye(self.T + 1), self.q_step)

    @property
    def r_lifted(self) -> np.ndarray:
        return np.kron(np.eye(self.T), self.r_step)

    @property
    def q_lifted_sqrt(self) -> np.ndarray:
        return np.kron(np.eye(self.T + 1), self._q_step_sqrt)

    @property
    def r_lifted_sqrt(self) -> np.ndarray:
        return np.kron(np.eye(self.T), self._r_step_sqrt)


@dataclass(frozen=True)
class Trajectory:
    """Stacked state, input, and disturbance vectors of one rollout."""

    x: np.ndarray  # (T+1) * n_x
    u: np.ndarray  # T * n_u
    w: np.ndarray  # (T+1) * n_x, first block is x0


def rollout(plant: LtiPlant, inputs: np.ndarray, w: np.ndarray) -> Trajectory:
    """Simulate the plant step by step under given inputs and disturbances.

    Args:
        plant: the LTI plant.
        inputs: per-step inputs, shape (T, n_u).
        w: stacked disturbance of length (T+1)*n_x whose first block is the
           initial state.

    Returns:
        Trajectory with ``x[0]`` equal to the first block of ``w`` and the
        recursion applied exactly. Deterministic.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape != (plant.T, plant.n_u):
        raise ValueError(
            f"inputs must have shape ({plant.T}, {plant.n_u}), got {inputs.shape}")
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != plant.n_w:
        raise ValueError(f"w must have {plant.n_w} entries, got {w.size}")

    w_blocks = w.reshape(plant.T + 1, plant.n_x)
    x = np.empty((plant.T + 1, plant.n_x))
    x[0] = w_blocks[0]
    for k in range(plant.T):
        x[k + 1] = plant.A @ x[k] + plant.B @ inputs[k] + w_blocks[k + 1]
    return Trajectory(x=x.reshape(-1), u=inputs.reshape(-1).copy(), w=w)


def trajectory_cost(weights: CostWeights, traj: Trajectory) -> float:
    """Square root of the accumulated weighted quadratic stage costs."""
    n_x = weights.q_step.shape[0]
    n_u = weights.r_step.shape[0]
    x = np.asarray(traj.x, dtype=float).reshape(-1)
    u = np.asarray(traj.u, dtype=float).reshape(-1)
    if x.size != (weights.T + 1) * n_x:
        raise ValueError(
            f"x must have {(weights.T + 1) * n_x} entries, got {x.size}")
    if u.size != weights.T * n_u:
        raise ValueError(f"u must have {weights.T * n_u} entries, got {u.size}")

    total = 0.0
    for xk in x.reshape(weights.T + 1, n_x):
        total += float(xk @ weights.q_step @ xk)
    for uk in u.reshape(weights.T, n_u):
        total += float(uk @ weights.r_step @ uk)
    return float(np.sqrt(total))
