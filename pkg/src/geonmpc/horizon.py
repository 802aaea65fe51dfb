"""Discretized finite-horizon optimal control problems.

A problem is defined by callbacks for the dynamics, costs and constraints
plus their partials, a horizon grid, and a decision-vector layout.  The
residual assembly runs the forward state recursion with the caller's
structure-preserving stepper, the backward costate recursion, and stacks
the optimality conditions into one vector F whose zero is the discrete
first-order optimum.

Decision vector layout (component-major inside each block):

    [ u^(0)_0..u^(0)_{N-1}, u^(1)_0.., ... | mu^(0)_0.., ... | nu | p ]

Residual rows use the same layout, so Jacobian blocks of F line up with
the corresponding unknown blocks.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch
from .linalg import as_vector, norm2


@dataclass(frozen=True)
class HorizonGrid:
    """Grid 0 = tau_0 < ... < tau_N over the (possibly rescaled) horizon."""

    dtau: np.ndarray
    tau: np.ndarray

    @staticmethod
    def uniform(n_steps: int, horizon: float = 1.0) -> "HorizonGrid":
        if n_steps < 1:
            raise DimensionMismatch("grid needs at least one step")
        return HorizonGrid(
            dtau=np.full(n_steps, horizon / n_steps),
            tau=np.linspace(0.0, horizon, n_steps + 1),
        )

    @property
    def n_steps(self) -> int:
        return self.dtau.shape[0]

    @property
    def horizon(self) -> float:
        return float(self.tau[-1])


@dataclass(frozen=True)
class DecisionLayout:
    """Index arithmetic for the stacked decision vector and residual."""

    n_steps: int
    n_u: int
    n_mu: int
    n_nu: int
    n_p: int

    @property
    def dim(self) -> int:
        return self.n_steps * (self.n_u + self.n_mu) + self.n_nu + self.n_p

    @property
    def mu_offset(self) -> int:
        return self.n_steps * self.n_u

    @property
    def nu_offset(self) -> int:
        return self.n_steps * (self.n_u + self.n_mu)

    @property
    def p_offset(self) -> int:
        return self.nu_offset + self.n_nu

    # Component j of a stage block lives at offset + j*n_steps + i, so a
    # whole stage is the stride-n_steps slice below.
    def control_at_stage(self, vec: np.ndarray, i: int) -> np.ndarray:
        return vec[i : self.mu_offset : self.n_steps]

    def mu_at_stage(self, vec: np.ndarray, i: int) -> np.ndarray:
        return vec[self.mu_offset + i : self.nu_offset : self.n_steps]

    def nu(self, vec: np.ndarray) -> np.ndarray:
        return vec[self.nu_offset : self.p_offset]

    def p(self, vec: np.ndarray) -> np.ndarray:
        return vec[self.p_offset :]

    def set_control_at_stage(self, vec: np.ndarray, i: int, values) -> None:
        vec[i : self.mu_offset : self.n_steps] = values

    def set_mu_at_stage(self, vec: np.ndarray, i: int, values) -> None:
        vec[self.mu_offset + i : self.nu_offset : self.n_steps] = values

    def set_nu(self, vec: np.ndarray, values) -> None:
        vec[self.nu_offset : self.p_offset] = values

    def set_p(self, vec: np.ndarray, values) -> None:
        vec[self.p_offset :] = values

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dim)


@dataclass(frozen=True)
class OcpDefinition:
    """Problem callbacks.  All maps must be pure.

    The Hamiltonian behind H_u/H_x/H_p is L + lam . f + mu . C; the
    costate recursion deliberately uses df/dx in place of the stepper's
    own state sensitivity.
    """

    n_x: int
    n_u: int
    n_mu: int
    n_nu: int
    n_p: int
    f: Callable            # (tau, x, u, p) -> xdot
    f_x: Callable          # (tau, x, u, p) -> (n_x, n_x)
    L: Callable            # (tau, x, u, p) -> scalar
    phi: Callable          # (x_N, p) -> scalar
    C: Callable            # (tau, x, u, p) -> (n_mu,)
    psi: Callable          # (x_N, p) -> (n_nu,)
    H_u: Callable          # (tau, x, lam, u, mu, p) -> (n_u,)
    H_x: Callable          # (tau, x, lam, u, mu, p) -> (n_x,)
    H_p: Callable          # (tau, x, lam, u, mu, p) -> (n_p,)
    phi_x: Callable        # (x_N, p) -> (n_x,)
    phi_p: Callable        # (x_N, p) -> (n_p,)
    psi_x: Callable        # (x_N, p) -> (n_nu, n_x)
    psi_p: Callable        # (x_N, p) -> (n_nu, n_p)
    stepper: Callable      # (tau, x, u, p, dtau) -> next x

    def validate_at(self, tau, x, u, lam, mu, nu, p) -> None:
        """Probe every callback once and check output shapes."""
        x, u, lam, mu, nu, p = map(as_vector, (x, u, lam, mu, nu, p))
        checks = [
            ("f", self.f(tau, x, u, p), (self.n_x,)),
            ("f_x", np.asarray(self.f_x(tau, x, u, p)), (self.n_x, self.n_x)),
            ("C", self.C(tau, x, u, p), (self.n_mu,)),
            ("psi", self.psi(x, p), (self.n_nu,)),
            ("H_u", self.H_u(tau, x, lam, u, mu, p), (self.n_u,)),
            ("H_x", self.H_x(tau, x, lam, u, mu, p), (self.n_x,)),
            ("H_p", self.H_p(tau, x, lam, u, mu, p), (self.n_p,)),
            ("phi_x", self.phi_x(x, p), (self.n_x,)),
            ("phi_p", self.phi_p(x, p), (self.n_p,)),
            ("psi_x", np.asarray(self.psi_x(x, p)), (self.n_nu, self.n_x)),
            ("psi_p", np.asarray(self.psi_p(x, p)), (self.n_nu, self.n_p)),
            ("stepper", self.stepper(tau, x, u, p, 1e-3), (self.n_x,)),
        ]
        for name, out, want in checks:
            got = np.shape(out)
            if got != want:
                raise DimensionMismatch(f"{name} returned shape {got}, expected {want}")
        for name in ("L", "phi"):
            val = self.L(tau, x, u, p) if name == "L" else self.phi(x, p)
            if np.shape(val) != ():
                raise DimensionMismatch(f"{name} must return a scalar")


def euler_stepper(f) -> Callable:
    """Plain explicit-Euler stepper over the given dynamics callback."""
    return lambda tau, x, u, p, dtau: as_vector(x) + dtau * as_vector(f(tau, x, u, p))


@dataclass
class TrajectoryWorkspace:
    states: np.ndarray     # (N+1, n_x)
    costates: np.ndarray   # (N+1, n_x)

    @staticmethod
    def for_problem(n_steps: int, n_x: int) -> "TrajectoryWorkspace":
        return TrajectoryWorkspace(
            states=np.zeros((n_steps + 1, n_x)),
            costates=np.zeros((n_steps + 1, n_x)),
        )


def forward_recursion(ocp: OcpDefinition, grid: HorizonGrid, layout: DecisionLayout,
                      x0, U, ws: TrajectoryWorkspace) -> None:
    p = layout.p(U)
    ws.states[0] = as_vector(x0)
    for i in range(grid.n_steps):
        ws.states[i + 1] = ocp.stepper(
            grid.tau[i], ws.states[i], layout.control_at_stage(U, i), p, grid.dtau[i]
        )


def backward_recursion(ocp: OcpDefinition, grid: HorizonGrid, layout: DecisionLayout,
                       U, ws: TrajectoryWorkspace) -> None:
    p = layout.p(U)
    nu = layout.nu(U)
    x_n = ws.states[grid.n_steps]
    lam = as_vector(ocp.phi_x(x_n, p)) + np.asarray(ocp.psi_x(x_n, p)).T @ nu
    ws.costates[grid.n_steps] = lam
    for i in range(grid.n_steps - 1, -1, -1):
        hx = as_vector(ocp.H_x(
            grid.tau[i], ws.states[i], ws.costates[i + 1],
            layout.control_at_stage(U, i), layout.mu_at_stage(U, i), p,
        ))
        ws.costates[i] = ws.costates[i + 1] + hx * grid.dtau[i]


def assemble_residual(ocp: OcpDefinition, grid: HorizonGrid, layout: DecisionLayout,
                      x0, U, ws: Optional[TrajectoryWorkspace] = None) -> np.ndarray:
    """Stack the optimality residual over the whole horizon.

    Row order: H_u blocks, C blocks, terminal constraint, then the
    parameter stationarity rows.
    """
    U = as_vector(U)
    if U.shape[0] != layout.dim:
        raise DimensionMismatch(f"U has length {U.shape[0]}, layout dim {layout.dim}")
    if ws is None:
        ws = TrajectoryWorkspace.for_problem(grid.n_steps, ocp.n_x)
    forward_recursion(ocp, grid, layout, x0, U, ws)
    backward_recursion(ocp, grid, layout, U, ws)

    p = layout.p(U)
    nu = layout.nu(U)
    out = np.empty(layout.dim)
    p_rows = as_vector(ocp.phi_p(ws.states[grid.n_steps], p)).copy()
    p_rows += np.asarray(ocp.psi_p(ws.states[grid.n_steps], p)).T @ nu
    n = grid.n_steps
    for i in range(n):
        tau_i = grid.tau[i]
        x_i = ws.states[i]
        lam_next = ws.costates[i + 1]
        u_i = layout.control_at_stage(U, i)
        mu_i = layout.mu_at_stage(U, i)
        dt = grid.dtau[i]
        out[i : layout.mu_offset : n] = dt * as_vector(
            ocp.H_u(tau_i, x_i, lam_next, u_i, mu_i, p))
        out[layout.mu_offset + i : layout.nu_offset : n] = dt * as_vector(
            ocp.C(tau_i, x_i, u_i, p))
        p_rows += dt * as_vector(ocp.H_p(tau_i, x_i, lam_next, u_i, mu_i, p))
    out[layout.nu_offset : layout.p_offset] = ocp.psi(ws.states[grid.n_steps], p)
    out[layout.p_offset :] = p_rows
    return out


def residual_norm(fvec) -> float:
    return norm2(fvec)


class HorizonProblem:
    """An OCP definition bound to a grid and decision layout."""

    def __init__(self, ocp: OcpDefinition, grid: HorizonGrid):
        self.ocp = ocp
        self.grid = grid
        self.layout = DecisionLayout(
            n_steps=grid.n_steps, n_u=ocp.n_u, n_mu=ocp.n_mu,
            n_nu=ocp.n_nu, n_p=ocp.n_p,
        )

    @property
    def dim(self) -> int:
        return self.layout.dim

    def trajectory(self, x0, U) -> TrajectoryWorkspace:
        ws = TrajectoryWorkspace.for_problem(self.grid.n_steps, self.ocp.n_x)
        forward_recursion(self.ocp, self.grid, self.layout, x0, U, ws)
        backward_recursion(self.ocp, self.grid, self.layout, U, ws)
        return ws

    def assemble_residual(self, x0, U) -> np.ndarray:
        return assemble_residual(self.ocp, self.grid, self.layout, x0, U)
