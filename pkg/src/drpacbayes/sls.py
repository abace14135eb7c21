"""Finite-horizon closed-loop parameterization.

Any causal linear state-feedback policy for the plant induces a pair of
block-lower-triangular response matrices mapping the stacked disturbance to
the stacked state and input trajectories. The achievable responses form an
affine set: this module builds a feasible baseline (the open-loop response)
together with a basis for the feasible directions, so that a coordinate
vector ``theta`` ranges over exactly the achievable causal closed loops.

Block conventions, with ``nw = (T+1) * n_x``:

* state response ``phi_x`` is ``nw x nw``; block row k gives ``x_k``;
* input response ``phi_u`` is ``T*n_u x nw``; block row k gives ``u_k``;
* the constraint system reads ``fx @ phi_x + fu @ phi_u = I`` where ``fx``
  carries identity diagonal blocks and ``-A`` subdiagonal blocks and ``fu``
  carries ``-B`` subdiagonal blocks;
* causality forces block entry ``phi_u[k]`` to touch disturbance blocks
  ``0..k`` only.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import unvec, vec
from .lti import LtiPlant


@dataclass(frozen=True)
class LiftedConstraints:
    """Affine achievability system in both block and vectorized form.

    ``fmat @ [vec(phi_x); vec(phi_u)] = rhs`` is the column-stacked version
    of ``fx @ phi_x + fu @ phi_u = I``.
    """

    fx: np.ndarray     # nw x nw
    fu: np.ndarray     # nw x T*n_u
    fmat: np.ndarray   # nw^2 x (nw^2 + T*n_u*nw)
    rhs: np.ndarray    # nw^2


@dataclass(frozen=True)
class SlsBasis:
    """Feasible baseline plus basis directions of the closed-loop family.

    ``basis`` has one column per free entry of the input response inside the
    causal mask; ``free_entries[i]`` records the (row, col) position in
    ``phi_u`` that coordinate i controls, so theta coordinates read directly
    as disturbance-feedback gains.
    """

    phi_x_base: np.ndarray      # nw x nw
    phi_u_base: np.ndarray      # T*n_u x nw
    basis: np.ndarray           # (nw^2 + T*n_u*nw) x dim
    dim: int
    causal_mask: np.ndarray     # bool, T*n_u x nw
    free_entries: np.ndarray    # dim x 2 int, (row, col) into phi_u
    T: int
    n_x: int
    n_u: int

    @property
    def n_w(self) -> int:
        return (self.T + 1) * self.n_x


def build_constraints(plant: LtiPlant) -> LiftedConstraints:
    """Assemble the lifted achievability constraint matrices for a plant."""
    T, n_x, n_u, nw = plant.T, plant.n_x, plant.n_u, plant.n_w

    fx = np.eye(nw)
    fu = np.zeros((nw, T * n_u))
    for k in range(T):
        rows = slice((k + 1) * n_x, (k + 2) * n_x)
        fx[rows, k * n_x:(k + 1) * n_x] = -plant.A
        fu[rows, k * n_u:(k + 1) * n_u] = -plant.B

    # vec(fx @ phi_x) = kron(I, fx) @ vec(phi_x), same for the input term
    fmat = np.hstack([np.kron(np.eye(nw), fx), np.kron(np.eye(nw), fu)])
    rhs = vec(np.eye(nw))
    return LiftedConstraints(fx=fx, fu=fu, fmat=fmat, rhs=rhs)


def open_loop_baseline(plant: LtiPlant) -> tuple[np.ndarray, np.ndarray]:
    """Feasible baseline response with zero input.

    Block (k, j) of the state response is ``A^(k-j)`` for j <= k and zero
    otherwise; the input response is identically zero.
    """
    T, n_x, nw = plant.T, plant.n_x, plant.n_w
    phi_x = np.zeros((nw, nw))
    power = np.eye(n_x)
    for lag in range(T + 1):
        for k in range(lag, T + 1):
            j = k - lag
            phi_x[k * n_x:(k + 1) * n_x, j * n_x:(j + 1) * n_x] = power
        power = plant.A @ power
    phi_u = np.zeros((T * plant.n_u, nw))
    return phi_x, phi_u


def causal_input_mask(plant: LtiPlant) -> np.ndarray:
    """Boolean sparsity pattern of the input response: u_k sees blocks 0..k."""
    mask = np.zeros((plant.T * plant.n_u, plant.n_w), dtype=bool)
    for k in range(plant.T):
        mask[k * plant.n_u:(k + 1) * plant.n_u, :(k + 1) * plant.n_x] = True
    return mask


def causal_basis(plant: LtiPlant, constraints: LiftedConstraints) -> SlsBasis:
    """Build the basis of feasible causal closed-loop directions.

    One basis column per free scalar entry of the input response inside the
    causal mask: the column sets that entry to one and completes the unique
    state response through the homogeneous achievability recursion
    ``dphi_x[k+1] = A dphi_x[k] + B dphi_u[k]`` with ``dphi_x[0] = 0``. The
    resulting dimension is ``n_u * n_x * T * (T+1) / 2``.
    """
    T, n_x, n_u, nw = plant.T, plant.n_x, plant.n_u, plant.n_w
    phi_x_base, phi_u_base = open_loop_baseline(plant)
    mask = causal_input_mask(plant)

    columns = []
    entries = []
    for k in range(T):
        for col in range((k + 1) * n_x):
            for r in range(n_u):
                row = k * n_u + r
                dphi_u = np.zeros((T * n_u, nw))
                dphi_u[row, col] = 1.0
                dphi_x = np.zeros((nw, nw))
                for j in range(k, T):  # blocks before k stay zero
                    xj = dphi_x[j * n_x:(j + 1) * n_x]
                    uj = dphi_u[j * n_u:(j + 1) * n_u]
                    dphi_x[(j + 1) * n_x:(j + 2) * n_x] = plant.A @ xj + plant.B @ uj
                columns.append(np.concatenate([vec(dphi_x), vec(dphi_u)]))
                entries.append((row, col))

    basis = np.column_stack(columns)
    dim = basis.shape[1]
    assert dim == n_u * n_x * T * (T + 1) // 2
    return SlsBasis(
        phi_x_base=phi_x_base,
        phi_u_base=phi_u_base,
        basis=basis,
        dim=dim,
        causal_mask=mask,
        free_entries=np.asarray(entries, dtype=int),
        T=T,
        n_x=n_x,
        n_u=n_u,
    )


def realize(basis: SlsBasis, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map a coordinate vector to its closed-loop response pair."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != basis.dim:
        raise ValueError(
            f"theta must have length {basis.dim}, got {theta.size}")
    nw = basis.n_w
    n_state = nw * nw
    delta = basis.basis @ theta
    phi_x = basis.phi_x_base + unvec(delta[:n_state], nw, nw)
    phi_u = basis.phi_u_base + unvec(delta[n_state:], basis.T * basis.n_u, nw)
    return phi_x, phi_u
