"""Pure-numpy master-equation stepping kernels (fallback backend).

Mirrors the compiled interface in _core.pyx exactly: dense complex128
arrays, fixed-step RK4, per-step trace renormalization with drift and
Hermiticity diagnostics.
"""

import numpy as np

BACKEND = "python"


def lindblad_rhs(h, ls, ms, rho):
    """d rho/dt = -i[h, rho] + sum_k (L rho L* - (1/2){L*L, rho})."""
    out = -1j * (h @ rho - rho @ h)
    for lm, mm in zip(ls, ms):
        out += lm @ rho @ lm.conj().T - 0.5 * (mm @ rho + rho @ mm)
    return out


def _step(h, ls, ms, rho, dt):
    k1 = lindblad_rhs(h, ls, ms, rho)
    k2 = lindblad_rhs(h, ls, ms, rho + (0.5 * dt) * k1)
    k3 = lindblad_rhs(h, ls, ms, rho + (0.5 * dt) * k2)
    k4 = lindblad_rhs(h, ls, ms, rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_run(h, ls, ms, rho, dt, steps, obs):
    """Evolve ``steps`` RK4 steps, recording tr(obs[k] rho) after each.

    Returns (rho_final, traces, max_herm_residue, max_trace_drift) with
    traces of shape (n_obs, steps + 1) including the initial point.
    """
    n_obs = obs.shape[0]
    traces = np.empty((n_obs, steps + 1), dtype=complex)
    rho = rho.copy()
    max_herm = 0.0
    max_drift = 0.0
    for k in range(n_obs):
        traces[k, 0] = np.einsum("ij,ji->", obs[k], rho)
    for j in range(1, steps + 1):
        rho = _step(h, ls, ms, rho, dt)
        tr = np.trace(rho).real
        max_drift = max(max_drift, abs(tr - 1.0))
        rho = rho / tr
        max_herm = max(max_herm, float(np.abs(rho - rho.conj().T).max()))
        for k in range(n_obs):
            traces[k, j] = np.einsum("ij,ji->", obs[k], rho)
    return rho, traces, max_herm, max_drift


def rk4_states(h, ls, ms, rho, dt, steps):
    """Like rk4_run but stores the full renormalized trajectory."""
    d = rho.shape[0]
    states = np.empty((steps + 1, d, d), dtype=complex)
    states[0] = rho
    rho = rho.copy()
    max_herm = 0.0
    max_drift = 0.0
    for j in range(1, steps + 1):
        rho = _step(h, ls, ms, rho, dt)
        tr = np.trace(rho).real
        max_drift = max(max_drift, abs(tr - 1.0))
        rho = rho / tr
        max_herm = max(max_herm, float(np.abs(rho - rho.conj().T).max()))
        states[j] = rho
    return states, max_herm, max_drift
