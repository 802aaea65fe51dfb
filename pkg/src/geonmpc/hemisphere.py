"""Minimum-time motion on the unit upper hemisphere with a banded heading.

The heading u is confined to [c_u - r_u, c_u + r_u] through a slack
variable u_s and the equality (u - c_u)^2 + u_s^2 - r_u^2 = 0.  The
horizon is rescaled to [0, 1]; its physical duration p is a decision
variable and also the quantity being minimized, so the horizon dynamics
carry an explicit p factor.

The chart formulation in the coordinates (x, y) with z = sqrt(1-x^2-y^2)
is primary.  residual_rows is an independent transcription of the
optimality system used as an equality oracle against the generic
assembly in horizon.py.

Note the default start point: with the heading band strictly inside
(0, pi), dy/dt = z sin(u) > 0 everywhere on the open upper hemisphere,
so only targets with y_f > y0 are reachable.  A start at y0 = +0.5 for
the target (0.5, 0) is therefore unreachable; the shipped default uses
the y-mirrored start (-0.5, -0.5), which produces the mirror-image
trajectory and the same minimum time.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ChartDomainViolation
from .horizon import HorizonGrid, HorizonProblem, OcpDefinition
from .manifold import ManifoldChart, ManifoldConstraint

Z_MIN = 0.05  # chart guard: reject x^2 + y^2 > 1 - Z_MIN^2


@dataclass(frozen=True)
class HemisphereParams:
    c_u: float = 0.5
    r_u: float = 0.1
    w_s: float = 0.005
    x0: float = -0.5
    y0: float = -0.5
    x_f: float = 0.5
    y_f: float = 0.0
    z_min: float = Z_MIN

    def __post_init__(self):
        if self.r_u <= 0:
            raise ValueError("r_u must be positive")
        if not 0.0 < self.z_min < 1.0:
            raise ValueError("z_min must lie in (0, 1)")
        if self.x0 ** 2 + self.y0 ** 2 >= 1.0:
            raise ValueError("start point must lie strictly inside the chart")
        if self.x_f ** 2 + self.y_f ** 2 >= 1.0:
            raise ValueError("target point must lie strictly inside the chart")


def chart_height(z_coords, z_min: float = Z_MIN) -> float:
    """z = sqrt(1 - x^2 - y^2), guarded away from the equator."""
    r2 = float(z_coords[0] ** 2 + z_coords[1] ** 2)
    if r2 > 1.0 - z_min ** 2:
        raise ChartDomainViolation(
            f"x^2+y^2 = {r2:.6f} exceeds the chart limit {1.0 - z_min ** 2:.6f}"
        )
    return float(np.sqrt(1.0 - r2))


def lift_to_sphere(z_coords, z_min: float = Z_MIN) -> np.ndarray:
    return np.array([z_coords[0], z_coords[1], chart_height(z_coords, z_min)])


def ambient_dynamics(state, u: float) -> np.ndarray:
    x, y, z = state
    cu, su = np.cos(u), np.sin(u)
    return np.array([z * cu, z * su, -x * cu - y * su])


def chart_dynamics(z_coords, u: float, p: float, z_min: float = Z_MIN) -> np.ndarray:
    s = chart_height(z_coords, z_min)
    return p * s * np.array([np.cos(u), np.sin(u)])


def constraint_C(u: float, u_s: float, params: HemisphereParams) -> float:
    return (u - params.c_u) ** 2 + u_s ** 2 - params.r_u ** 2


def terminal_psi(x_n, params: HemisphereParams) -> np.ndarray:
    return np.array([x_n[0] - params.x_f, x_n[1] - params.y_f])


def cost_terms(p: float, u_s: float, params: HemisphereParams):
    """(terminal cost, running cost) = (p, -w_s * u_s)."""
    return float(p), -params.w_s * u_s


def sphere_constraint() -> ManifoldConstraint:
    return ManifoldConstraint(
        g=lambda y: np.array([y @ y - 1.0]),
        jacobian_g=lambda y: 2.0 * np.asarray(y, dtype=float).reshape(1, -1),
    )


def hemisphere_chart(z_min: float = Z_MIN) -> ManifoldChart:
    """Upper-hemisphere chart; reduced_field controls are a (u, p) pair."""
    return ManifoldChart(
        lift=lambda z: lift_to_sphere(z, z_min),
        project_coords=lambda x: np.asarray(x, dtype=float)[:2].copy(),
        reduced_field=lambda tau, z, controls: chart_dynamics(
            z, controls[0], controls[1], z_min),
        in_domain=lambda z: z[0] ** 2 + z[1] ** 2 <= 1.0 - z_min ** 2,
    )


def plant_step(z_coords, u: float, dt: float, z_min: float = Z_MIN) -> np.ndarray:
    """One physical-time Euler step of the chart flow (no horizon rescaling)."""
    z_next = np.asarray(z_coords, dtype=float) + dt * chart_dynamics(
        z_coords, u, 1.0, z_min)
    chart_height(z_next, z_min)  # reject steps that leave the chart
    return z_next


def great_circle_distance(params: HemisphereParams) -> float:
    a = lift_to_sphere((params.x0, params.y0), params.z_min)
    b = lift_to_sphere((params.x_f, params.y_f), params.z_min)
    return float(np.arccos(np.clip(a @ b, -1.0, 1.0)))


def make_ocp(params: HemisphereParams) -> OcpDefinition:
    """Horizon-time OCP callbacks in chart coordinates.

    The rescaled horizon multiplies dynamics, running cost and constraint
    by p, so the optimality rows reproduce the discretized system with
    p inside every stage block and phi_p = 1 in the parameter row.
    """
    c_u, r_u, w_s, z_min = params.c_u, params.r_u, params.w_s, params.z_min

    def f(tau, x, u, p):
        return chart_dynamics(x, u[0], p[0], z_min)

    def f_x(tau, x, u, p):
        s = chart_height(x, z_min)
        cu, su = np.cos(u[0]), np.sin(u[0])
        return (p[0] / s) * np.array([
            [-x[0] * cu, -x[1] * cu],
            [-x[0] * su, -x[1] * su],
        ])

    def heading_response(x, lam, u, z_min=z_min):
        s = chart_height(x, z_min)
        return s * (-np.sin(u) * lam[0] + np.cos(u) * lam[1])

    def H_u(tau, x, lam, u, mu, p):
        return p[0] * np.array([
            heading_response(x, lam, u[0]) + 2.0 * (u[0] - c_u) * mu[0],
            2.0 * mu[0] * u[1] - w_s,
        ])

    def H_x(tau, x, lam, u, mu, p):
        s = chart_height(x, z_min)
        drift = np.cos(u[0]) * lam[0] + np.sin(u[0]) * lam[1]
        return -(p[0] / s) * drift * np.array([x[0], x[1]])

    def H_p(tau, x, lam, u, mu, p):
        s = chart_height(x, z_min)
        drift = np.cos(u[0]) * lam[0] + np.sin(u[0]) * lam[1]
        return np.array([
            s * drift + mu[0] * constraint_C(u[0], u[1], params) - w_s * u[1],
        ])

    def stepper(tau, x, u, p, dtau):
        return np.asarray(x, dtype=float) + dtau * f(tau, x, u, p)

    return OcpDefinition(
        n_x=2, n_u=2, n_mu=1, n_nu=2, n_p=1,
        f=f,
        f_x=f_x,
        L=lambda tau, x, u, p: -p[0] * w_s * u[1],
        phi=lambda xn, p: float(p[0]),
        C=lambda tau, x, u, p: np.array([p[0] * constraint_C(u[0], u[1], params)]),
        psi=lambda xn, p: terminal_psi(xn, params),
        H_u=H_u,
        H_x=H_x,
        H_p=H_p,
        phi_x=lambda xn, p: np.zeros(2),
        phi_p=lambda xn, p: np.ones(1),
        psi_x=lambda xn, p: np.eye(2),
        psi_p=lambda xn, p: np.zeros((2, 1)),
        stepper=stepper,
    )


def make_problem(params: HemisphereParams | None = None,
                 n_steps: int = 20) -> HorizonProblem:
    if params is None:
        params = HemisphereParams()
    ocp = make_ocp(params)
    problem = HorizonProblem(ocp, HorizonGrid.uniform(n_steps))
    ocp.validate_at(
        0.0, np.array([params.x0, params.y0]), np.array([params.c_u, params.r_u]),
        np.array([0.1, -0.1]), np.array([0.02]), np.zeros(2), np.array([1.2]),
    )
    return problem


def initial_guess(layout, params: HemisphereParams) -> np.ndarray:
    """Stationary-in-the-band guess: controls at the band center, slack at
    full radius, mu canceling the slack row, p at the great-circle length."""
    U = layout.zeros()
    for i in range(layout.n_steps):
        layout.set_control_at_stage(U, i, [params.c_u, params.r_u])
        layout.set_mu_at_stage(U, i, [params.w_s / (2.0 * params.r_u)])
    layout.set_nu(U, np.zeros(2))
    layout.set_p(U, [great_circle_distance(params)])
    return U


def residual_rows(U, x0, grid: HorizonGrid, params: HemisphereParams) -> np.ndarray:
    """Independent, fully written-out optimality rows for the hemisphere.

    Hand-indexed layout [u | u_s | mu | nu | p]; kept free of the generic
    assembly machinery so the two paths can check each other.
    """
    U = np.asarray(U, dtype=float)
    n = grid.n_steps
    if U.shape[0] != 3 * n + 3:
        raise ValueError(f"expected length {3 * n + 3}, got {U.shape[0]}")
    u = U[0:n]
    u_s = U[n : 2 * n]
    mu = U[2 * n : 3 * n]
    nu = U[3 * n : 3 * n + 2]
    p = U[3 * n + 2]
    c_u, r_u, w_s = params.c_u, params.r_u, params.w_s

    xs = np.empty((n + 1, 2))
    ss = np.empty(n)
    xs[0] = np.asarray(x0, dtype=float)
    for i in range(n):
        ss[i] = chart_height(xs[i], params.z_min)
        xs[i + 1, 0] = xs[i, 0] + grid.dtau[i] * p * ss[i] * np.cos(u[i])
        xs[i + 1, 1] = xs[i, 1] + grid.dtau[i] * p * ss[i] * np.sin(u[i])

    lam = np.empty((n + 1, 2))
    lam[n] = nu
    for i in range(n - 1, -1, -1):
        drift = np.cos(u[i]) * lam[i + 1, 0] + np.sin(u[i]) * lam[i + 1, 1]
        lam[i, 0] = lam[i + 1, 0] - grid.dtau[i] * p * (xs[i, 0] / ss[i]) * drift
        lam[i, 1] = lam[i + 1, 1] - grid.dtau[i] * p * (xs[i, 1] / ss[i]) * drift

    out = np.empty(3 * n + 3)
    p_row = 1.0
    for i in range(n):
        dt = grid.dtau[i]
        band = (u[i] - c_u) ** 2 + u_s[i] ** 2 - r_u ** 2
        steer = ss[i] * (-np.sin(u[i]) * lam[i + 1, 0] + np.cos(u[i]) * lam[i + 1, 1])
        advance = ss[i] * (np.cos(u[i]) * lam[i + 1, 0] + np.sin(u[i]) * lam[i + 1, 1])
        out[i] = dt * p * (steer + 2.0 * (u[i] - c_u) * mu[i])
        out[n + i] = dt * p * (2.0 * mu[i] * u_s[i] - w_s)
        out[2 * n + i] = dt * p * band
        p_row += dt * (advance + mu[i] * band - w_s * u_s[i])
    out[3 * n] = xs[n, 0] - params.x_f
    out[3 * n + 1] = xs[n, 1] - params.y_f
    out[3 * n + 2] = p_row
    return out
