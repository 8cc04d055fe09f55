"""Acceptance suite: twelve criteria on the reference annulus at their stated tolerances.

Each criterion prints one ``criterion N ... PASS|FAIL`` line.  Run with
``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import math
import sys
from functools import lru_cache

import numpy as np
import pytest

from dynbiharm import data
from dynbiharm.assembly import form_energy, seminorm_parts
from dynbiharm.evolution import duhamel_evolve, propagate_coefficients
from dynbiharm.geometry import DomainConfig
from dynbiharm.grid import EvaluationGrid
from dynbiharm.mms import spatial_ladder, temporal_ladder
from dynbiharm.oracle import oracle_mode_eigs
from dynbiharm.properties import (
    eventual_positivity_scan,
    find_sign_change,
    random_mean_free_state,
    random_state,
    small_time_grid,
)
from dynbiharm.spectral import global_spectrum, kernel_vector_error

REFERENCE = DomainConfig(R0=1.0, R1=2.0, d=1.0, delta=1.0, kappa=1.0, n_elem=128, m_max=16)
SEED = 42


@lru_cache(maxsize=None)
def reference():
    return global_spectrum(REFERENCE)


@lru_cache(maxsize=None)
def family_scans():
    dec = reference()
    grid = EvaluationGrid(dec.disc)
    family = data.bump_family(dec.disc, 20, SEED)
    t_max = 10.0 / dec.gap
    return eventual_positivity_scan(dec, family, t_max, grid), eventual_positivity_scan(dec, family, t_max, grid.refined())


def rng(stream):
    return np.random.default_rng([SEED, 100 + stream])


# ---------------------------------------------------------------------------
# criteria: each returns (passed, detail)


def criterion_1():
    dec = reference()
    sym, low = 0.0, math.inf
    for sys_, lam in zip(dec.disc.systems, dec.values):
        sym = max(sym, np.linalg.norm(sys_.K - sys_.K.T) / np.linalg.norm(sys_.K))
        low = min(low, lam[0] / lam[-1])
    return sym <= 1e-12 and low >= -1e-10, f"max |K-K^T|/|K| = {sym:.2e}, min lambda/lambda_max = {low:.2e}"


def criterion_2():
    dec = reference()
    below = int(np.sum(dec.eigenvalues < 1e-8 * dec.gap))
    err = kernel_vector_error(dec)
    return below == 1 and err <= 1e-8, f"{below} eigenvalue(s) below 1e-8 lambda_2, kernel vector error {err:.2e}"


def criterion_3():
    dec = reference()
    disc, lam2 = dec.disc, dec.gap
    g = rng(3)
    worst = 0.0
    times = np.array([0.01, 0.1, 1.0]) / lam2
    for _ in range(50):
        u0 = random_mean_free_state(disc, g)
        n0 = disc.m_norm(u0)
        for t, c in zip(times, propagate_coefficients(dec, u0, times)):
            worst = max(worst, disc.m_norm_coeffs(c) / (math.exp(-lam2 * t) * n0))
    return worst <= 1.0 + 1e-6, f"max |u(t)|_M / (e^(-lambda_2 t) |u0|_M) = {worst:.9f}"


def criterion_4():
    dec = reference()
    disc = dec.disc
    one = disc.ones().coeffs
    fixed = max(float(np.abs(c - one).max()) for c in propagate_coefficients(dec, disc.ones(), [0.0, 1.0, 10.0]))
    u0 = random_state(disc, rng(4))
    drift = max(duhamel_evolve(dec, u0, None, 10.0, 0.01, theta).mass_drift() for theta in (0.5, 1.0))
    return fixed <= 1e-10 and drift <= 1e-10, f"|e^(tA)1 - 1| = {fixed:.2e}, mu-mass drift = {drift:.2e}"


def criterion_5():
    dec = reference()
    disc = dec.disc
    u0 = random_state(disc, rng(5))
    growth = -math.inf
    for theta in (0.5, 1.0):
        traj = duhamel_evolve(dec, u0, None, 10.0, 0.01, theta)
        steps = np.diff(traj.m_norm) / traj.m_norm[:-1]
        growth = max(growth, float(steps.max()))
    return growth <= 1e-12, f"max relative per-step M-norm growth over 1000 steps = {growth:.2e}"


def criterion_6():
    disc = reference().disc
    cfg = disc.config
    floor = min(cfg.d, cfg.delta, 1.0)
    g = rng(6)
    worst = math.inf
    for _ in range(200):
        u = random_state(disc, g)
        bulk, surf, _ = seminorm_parts(disc, u)
        mass = disc.m_norm(u) ** 2
        lhs = form_energy(disc, u) + mass
        rhs = floor * (bulk / cfg.d + surf / cfg.delta + mass)
        worst = min(worst, (lhs - rhs) / lhs)
    return worst >= -1e-10, f"min relative margin = {worst:.2e}"


def criterion_7():
    dec = reference()
    worst = 0.0
    for m in range(4):
        ref = oracle_mode_eigs(REFERENCE, m, k=5)
        got = dec.values[m][:5]
        for a, b in zip(got, ref):
            if abs(b) > 1e-8:
                worst = max(worst, abs(a - b) / abs(b))
            else:
                worst = max(worst, abs(a) / dec.gap)
    return worst <= 1e-3, f"max relative gap to the finite-difference oracle = {worst:.2e}"


def criterion_8():
    space = spatial_ladder(REFERENCE, n_elems=(16, 32, 64, 128))
    time = temporal_ladder(REFERENCE, dts=(1e-2, 5e-3, 2.5e-3), theta=0.5)
    p_space = min(space.orders)
    ok = p_space >= 3.5 and all(1.9 <= p <= 2.1 for p in time.orders)
    orders = ", ".join(f"{p:.4f}" for p in time.orders)
    return ok, f"space order {p_space:.3f}, time orders {orders}"


def criterion_9():
    dec = reference()
    grid = EvaluationGrid(dec.disc)
    bump = data.clipped_bump(dec.disc)
    sup = grid.sup_norm(bump)
    times = small_time_grid()
    mins, _ = grid.modal_extrema(dec, dec.coefficients(bump), times)
    i = int(np.argmin(mins))
    depth = -mins[i] / sup
    first = find_sign_change(dec, bump, times, grid)
    where = f", first negative at t = {first.time:.1e} ({first.where})" if first else ""
    return depth >= 1e-6, f"deepest min / |u0|_inf = {-depth:.3e} at t = {times[i]:.1e}{where}"


def criterion_10():
    scan, fine = family_scans()
    t0, t0_fine = scan.t0_star, fine.t0_star
    finite = math.isfinite(t0) and math.isfinite(t0_fine)
    step = scan.grid_step_at(t0)
    stable = finite and abs(t0_fine - t0) <= step
    horizon = scan.times[-1]
    return finite and t0 <= horizon and stable, f"t0* = {t0:.4g} (doubled grid {t0_fine:.4g}, step {step:.3g}), horizon {horizon:.4g}"


def criterion_11():
    scan, _ = family_scans()
    linf = scan.linf_star
    early = max(m.max_ratio for m in scan.members)
    ok = math.isfinite(linf) and early > 1.0
    return ok, f"sup-norm ratio <= 1 + 1e-8 after t = {linf:.4g}; largest early ratio {early:.4f}"


def criterion_12():
    a = reference().eigenvalues
    b = global_spectrum(REFERENCE.replace(d=2.0, delta=2.0)).eigenvalues
    gap = reference().gap
    nz = np.abs(a) >= 1e-8 * gap
    rel = float(np.max(np.abs(b[nz] - 2 * a[nz]) / (2 * np.abs(a[nz]))))
    kernel = float(np.max(np.abs(b[~nz]))) / (2 * gap)
    return rel <= 1e-10 and kernel <= 1e-8, f"max relative deviation from 2 lambda = {rel:.2e}"


CRITERIA = [
    (1, "self-adjoint and dissipative", criterion_1),
    (2, "kernel is the constants", criterion_2),
    (3, "spectral-gap decay", criterion_3),
    (4, "Markov fixed point and mass", criterion_4),
    (5, "theta-scheme contraction", criterion_5),
    (6, "coercivity inequality", criterion_6),
    (7, "oracle equivalence", criterion_7),
    (8, "manufactured-solution orders", criterion_8),
    (9, "non-positivity at small time", criterion_9),
    (10, "eventual positivity", criterion_10),
    (11, "eventual L-infinity contractivity", criterion_11),
    (12, "scaling covariance", criterion_12),
]


def _line(number, name, ok, detail):
    return f"criterion {number:>2} {name:<36} {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("number, name, check", CRITERIA, ids=[f"c{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(number, name, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(number, name, ok, detail))
    assert ok, detail


def main() -> int:
    failed = 0
    for number, name, check in CRITERIA:
        ok, detail = check()
        failed += not ok
        print(_line(number, name, ok, detail), flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
