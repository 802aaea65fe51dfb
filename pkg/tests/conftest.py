"""Shared fixtures: a small flat-space OCP and a finite-difference oracle.

The flat problem uses an explicit-Euler stepper directly on its dynamics,
so the assembled residual must equal the exact gradient of the discrete
Lagrangian; the oracle below evaluates that Lagrangian from scratch
(states regenerated per call) for central-difference checks.
"""

import numpy as np

from geonmpc.horizon import (
    HorizonGrid,
    HorizonProblem,
    OcpDefinition,
    TrajectoryWorkspace,
    euler_stepper,
    forward_recursion,
)


def make_cart_problem(n_steps=10):
    """Nonlinear point-mass problem: every callback branch is exercised."""

    def f(tau, x, u, p):
        return np.array([x[1], u[0] - 0.3 * np.sin(x[0]) + 0.2 * p[0]])

    def f_x(tau, x, u, p):
        return np.array([[0.0, 1.0], [-0.3 * np.cos(x[0]), 0.0]])

    ocp = OcpDefinition(
        n_x=2, n_u=1, n_mu=1, n_nu=1, n_p=1,
        f=f,
        f_x=f_x,
        L=lambda tau, x, u, p: 0.5 * (u[0] ** 2 + 0.1 * x[0] ** 2) + 0.05 * p[0] ** 2,
        phi=lambda xn, p: 0.5 * (xn @ xn) + 0.1 * p[0],
        C=lambda tau, x, u, p: np.array([u[0] + 0.2 * x[1] - 0.1 * p[0]]),
        psi=lambda xn, p: np.array([xn[0] - 0.3]),
        H_u=lambda tau, x, lam, u, mu, p: np.array([u[0] + lam[1] + mu[0]]),
        H_x=lambda tau, x, lam, u, mu, p: np.array([
            0.1 * x[0] - 0.3 * np.cos(x[0]) * lam[1],
            lam[0] + 0.2 * mu[0],
        ]),
        H_p=lambda tau, x, lam, u, mu, p: np.array([
            0.1 * p[0] + 0.2 * lam[1] - 0.1 * mu[0],
        ]),
        phi_x=lambda xn, p: xn.copy(),
        phi_p=lambda xn, p: np.array([0.1]),
        psi_x=lambda xn, p: np.array([[1.0, 0.0]]),
        psi_p=lambda xn, p: np.array([[0.0]]),
        stepper=euler_stepper(f),
    )
    return HorizonProblem(ocp, HorizonGrid.uniform(n_steps))


def discrete_lagrangian(problem, x0, U):
    """phi + sum L dtau + sum mu.C dtau + nu.psi with states regenerated."""
    ocp, grid, layout = problem.ocp, problem.grid, problem.layout
    p = layout.p(U)
    nu = layout.nu(U)
    ws = TrajectoryWorkspace.for_problem(grid.n_steps, ocp.n_x)
    forward_recursion(ocp, grid, layout, x0, U, ws)
    x_n = ws.states[grid.n_steps]
    total = float(ocp.phi(x_n, p)) + float(nu @ ocp.psi(x_n, p))
    for i in range(grid.n_steps):
        u_i = layout.control_at_stage(U, i)
        mu_i = layout.mu_at_stage(U, i)
        stage = float(ocp.L(grid.tau[i], ws.states[i], u_i, p))
        stage += float(mu_i @ ocp.C(grid.tau[i], ws.states[i], u_i, p))
        total += stage * grid.dtau[i]
    return total


def fd_gradient(fun, U, h=1e-7):
    grad = np.empty_like(U)
    for k in range(U.shape[0]):
        up = U.copy()
        dn = U.copy()
        up[k] += h
        dn[k] -= h
        grad[k] = (fun(up) - fun(dn)) / (2.0 * h)
    return grad
