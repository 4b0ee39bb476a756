"""One test per acceptance criterion; each prints a single PASS/FAIL line."""
import math

import numpy as np
import pytest

from ncsg.algebra import TracialAlgebra, lp_norm, random_element
from ncsg.calculus import imaginary_power, m_theta, mellin_reconstruct, n_theta_hat
from ncsg.dilation import build_path_space, conditional_expectation, embed, verify_dilation_identity
from ncsg.ergodic import (
    contour_Tz,
    decomposition_check,
    mean_ergodic_bound,
    semigroup_distance_formula,
    witness_projection,
)
from ncsg.maximal import (
    MaximalFamily,
    classical_sup_norm,
    maximal_inequality_harness,
    positive_linf_norm,
    sector_grid,
)
from ncsg.multiplier import imaginary_power_growth
from ncsg.semigroup import (
    Schur,
    apply_Tt,
    build_generator,
    check_standard_semigroup,
    eigendecompose,
    fixed_point_projection,
)
from ncsg.special import gamma_fn
from ncsg.squarefn import equivalence_tracker, gram_by_quadrature, gram_element, column_norm

from .conftest import ACCEPTANCE_LINES, builtin_systems, two_state


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def schur_dec(n, seed):
    rng = np.random.default_rng(seed)
    return eigendecompose(build_generator(Schur(rng.standard_normal((n, 2))), TracialAlgebra.matrix(n)))


def chain():
    alg, spec = two_state()
    return eigendecompose(build_generator(spec, alg))


def traceless(dec, x):
    return x - fixed_point_projection(dec, x)


def test_decomposition_identity():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for dec in [schur_dec(2, 0), schur_dec(3, 1), schur_dec(4, 2), chain()]:
        for t in np.logspace(-2, 2, 200):
            x = random_element(dec.algebra, rng)
            theta = rng.uniform(-0.45, 0.45) * math.pi
            worst = max(worst, decomposition_check(dec, x, t, theta) / lp_norm(x, 2))
    record(1, worst <= 1e-10, f"decomposition identity, 800 triples, max relative residual {worst:.2e}")


def test_mellin_reconstruction_and_envelope():
    worst = 0.0
    for x in (0.1, 1.0, 10.0):
        for theta in (0.0, 0.2 * math.pi, 0.4 * math.pi):
            worst = max(worst, abs(mellin_reconstruct(1.0, x, theta).value - m_theta(x, theta)))
    u = np.linspace(-30, 30, 6001)
    K = max(float(np.max(np.abs(n_theta_hat(u, th)) * np.exp((math.pi / 2 - abs(th)) * np.abs(u))))
            for th in (0.0, 0.2 * math.pi, 0.4 * math.pi, -0.3))
    record(2, worst <= 1e-4 and K <= 10,
           f"Mellin reconstruction max error {worst:.2e}; fitted envelope constant K = {K:.4f}")


def test_gamma_oracle():
    worst_it = max(abs(abs(gamma_fn(1j * t)) ** 2 / (math.pi / (t * math.sinh(math.pi * t))) - 1)
                   for t in (0.5, 1.0, 2.0, 5.0, 10.0))
    worst_n = max(abs(gamma_fn(float(n)).real / math.factorial(n - 1) - 1) for n in range(1, 13))
    record(3, worst_it <= 1e-10 and worst_n <= 1e-12,
           f"Gamma oracle: imaginary axis rel err {worst_it:.2e}, factorials rel err {worst_n:.2e}")


def test_l2_isometry_of_imaginary_powers():
    worst = 0.0
    for label, alg, spec in builtin_systems():
        dec = eigendecompose(build_generator(spec, alg))
        for k, u in enumerate(np.linspace(-10, 10, 21)):
            x = traceless(dec, random_element(alg, k))
            worst = max(worst, abs(lp_norm(imaginary_power(dec, u, x), 2) / lp_norm(x, 2) - 1))
    record(4, worst <= 1e-10, f"L_2 isometry of L^(iu), |u| <= 10, all built-ins, max deviation {worst:.2e}")


def test_multiplier_envelope():
    dec = schur_dec(4, 1)
    u_grid = [-4, -2, -1, 1, 2, 4]
    ok, parts = True, []
    for p in (1.5, 3.0):
        fits = []
        for seed in range(5):
            g = imaginary_power_growth(dec, p, u_grid, restarts=4, seed=seed)
            ok &= g["dominated"]
            fits.append(g["fitted_constant"])
        mid = float(np.median(fits))
        spread = max(abs(f / mid - 1) for f in fits)
        ok &= spread <= 0.10
        parts.append(f"p={p:g}: C in [{min(fits):.4f}, {max(fits):.4f}] (spread {spread:.1%})")
    record(5, ok, "imaginary power envelope on Schur M_4; " + "; ".join(parts))


def test_square_functions():
    rng = np.random.default_rng(6)
    decs = [schur_dec(2, 3), schur_dec(3, 4), schur_dec(4, 5), chain()]
    worst_q = 0.0
    for k in range(50):
        dec = decs[k % len(decs)]
        x = random_element(dec.algebra, rng)
        G = gram_element(dec, x)
        worst_q = max(worst_q, lp_norm(G - gram_by_quadrature(dec, x), 2) / lp_norm(G, 2))
    worst_2 = 0.0
    for k in range(20):
        dec = decs[k % len(decs)]
        x = random_element(dec.algebra, rng)
        worst_2 = max(worst_2, abs(column_norm(dec, x, 2) - lp_norm(traceless(dec, x), 2) / 2))
    windows = {p: equivalence_tracker(decs[2], p, range(50), trials=8) for p in (1.5, 4.0)}
    finite = all(np.all(np.isfinite(r.ratios)) for r in windows.values())
    desc = ", ".join(f"p={p:g} ratios in [{r.min_ratio:.4f}, {r.max_ratio:.4f}]" for p, r in windows.items())
    record(6, worst_q <= 1e-8 and worst_2 <= 1e-10 and finite,
           f"square functions: quadrature rel err {worst_q:.2e}, p=2 identity err {worst_2:.2e}, {desc}")


def test_maximal_norm_solver():
    rng = np.random.default_rng(7)
    # (a) closed form at p = inf against singular values from numpy
    worst_inf = 0.0
    for n in (2, 3, 4):
        fam = MaximalFamily([random_element(TracialAlgebra.matrix(n), rng, "positive") for _ in range(3)])
        cert = positive_linf_norm(fam, math.inf)
        ref = max(np.linalg.svd(x.blocks[0], compute_uv=False).max() for x in fam.elements)
        worst_inf = max(worst_inf, abs(cert.primal - ref) / ref, abs(cert.dual - ref) / ref)
    # (b) commutative oracle
    worst_comm = 0.0
    diag = TracialAlgebra.diagonal([0.1, 0.2, 0.3, 0.4])
    for _ in range(3):
        fam = MaximalFamily([random_element(diag, rng, "positive") for _ in range(4)])
        for p in (1.0, 2.0, 4.0):
            worst_comm = max(worst_comm, abs(positive_linf_norm(fam, p).primal - classical_sup_norm(fam, p)))
    # (c) duality gap on random noncommutative families
    worst_gap = 0.0
    for k in range(30):
        alg = TracialAlgebra.matrix(2 + k % 3)
        fam = MaximalFamily([random_element(alg, rng, "positive") for _ in range(3)])
        worst_gap = max(worst_gap, positive_linf_norm(fam, (1.0, 1.5, 3.0)[k % 3]).relative_gap)
    # (d) nested grids: the subgrid's lower bound never exceeds the full grid's upper bound
    dec = schur_dec(3, 8)
    x = random_element(dec.algebra, rng, "positive")
    grids = [np.logspace(-2, 2, n) for n in (3, 5, 9, 17)]
    certs = [positive_linf_norm(MaximalFamily([apply_Tt(dec, x, t) for t in g]), 2.0) for g in grids]
    monotone = all(a.dual <= b.primal * (1 + 1e-12) for a, b in zip(certs, certs[1:]))
    record(7, worst_inf <= 1e-6 and worst_comm <= 1e-8 and worst_gap <= 1e-4 and monotone,
           f"maximal-norm solver: p=inf err {worst_inf:.1e}, commutative err {worst_comm:.1e}, "
           f"worst relative gap {worst_gap:.1e}, nested grids monotone={monotone}")


def test_maximal_inequality_harness():
    dec = schur_dec(3, 3)
    parts, finite = [], True
    for p in (1.5, 2.0, 3.0):
        psi = 0.5 * (0.5 - abs(1 / p - 0.5)) * math.pi
        grid = sector_grid(psi, 16, 4)
        xs = [random_element(dec.algebra, s) for s in range(20)]
        res = maximal_inequality_harness(dec, p, psi, grid, xs, pieces=False)
        finite &= res["finite"] and res["grid_size"] == 64
        q = res["ratio_quantiles"]
        parts.append(f"p={p:g}: min {res['ratio_min']:.4f} q10/50/90 {q[0]:.4f}/{q[1]:.4f}/{q[2]:.4f} "
                     f"max {res['ratio_max']:.4f}")
    cdec = chain()
    xs = [cdec.algebra.from_diagonal(np.random.default_rng(s).standard_normal(2)) for s in range(5)]
    res = maximal_inequality_harness(cdec, 2.0, 0.25 * math.pi, sector_grid(0.25 * math.pi, 16, 4), xs,
                                     pieces=False)
    classical = max(abs(r["ratio"] - r["classical_ratio"]) for r in res["rows"])
    record(8, finite and classical <= 1e-6,
           "maximal harness ratios " + "; ".join(parts) + f"; two-state classical deviation {classical:.1e}")


def test_ergodic_theorems():
    rng = np.random.default_rng(9)
    worst_dist, worst_rate, witness_ok, finals = 0.0, 0.0, True, []
    for label, alg, spec in builtin_systems():
        dec = eigendecompose(build_generator(spec, alg))
        for t in (0.0, 0.1, 1.0, 10.0):
            x = random_element(alg, rng)
            direct = lp_norm(apply_Tt(dec, x, t) - fixed_point_projection(dec, x), 2)
            worst_dist = max(worst_dist, abs(direct - semigroup_distance_formula(dec, x, t)))
        for t in (0.5, 5.0, 50.0):
            x = random_element(alg, rng)
            actual, bound = mean_ergodic_bound(dec, x, t)
            worst_rate = max(worst_rate, (actual - bound) / lp_norm(traceless(dec, x), 2))
        w = witness_projection(dec, random_element(alg, rng), 0.1, np.logspace(-9, 0, 19))
        witness_ok &= w.tau_complement < 0.1 and w.monotone and w.final <= 1e-6
        finals.append(w.final)
    record(9, worst_dist <= 1e-12 and worst_rate <= 1e-10 and witness_ok,
           f"ergodic: distance formula err {worst_dist:.1e}, rate excess {worst_rate:.1e}, "
           f"witness tables monotone, worst final value {max(finals):.1e}")


def test_contour_representation():
    worst = 0.0
    for label, alg, spec in builtin_systems():
        dec = eigendecompose(build_generator(spec, alg))
        x = traceless(dec, random_element(alg, 10))
        for z in (1.0, 2 * np.exp(1j * math.pi / 8)):
            worst = max(worst, contour_Tz(dec, z, x).deviation)
    record(10, worst <= 1e-6, f"contour representation, all built-ins, max deviation {worst:.2e}")


def test_markov_dilation():
    rng = np.random.default_rng(11)
    worst, worst_eig = 0.0, 0.0
    for S in (2, 3, 4, 5):
        W = rng.uniform(0.1, 1.0, (S, S))
        W = W + W.T
        P = W / W.sum(axis=1)[:, None]
        ps = build_path_space(P, W.sum(axis=1) / W.sum(), T=5)
        for _ in range(20):
            f = rng.standard_normal(S)
            for t in range(6):
                for s in range(t + 1):
                    worst = max(worst, verify_dilation_identity(ps, f, s, t))
        r = np.sqrt(ps.w)
        mu, V = np.linalg.eigh(r[:, None] * P / r[None, :])
        for k in range(S):
            f = V[:, k] / r
            lhs = conditional_expectation(ps, embed(ps, f, 5), 1)
            worst_eig = max(worst_eig, float(np.max(np.abs(lhs - mu[k] ** 4 * embed(ps, f, 1)))))
    record(11, worst <= 1e-12 and worst_eig <= 1e-12,
           f"Markov dilation identity on 2..5 states, T=5: residual {worst:.1e}, eigenfunctions {worst_eig:.1e}")


def test_standard_semigroup_validation():
    failures, worst = [], 0.0
    for label, alg, spec in builtin_systems():
        rep = check_standard_semigroup(build_generator(spec, alg), [0.1, 1.0, 10.0], tol=1e-9)
        worst = max([worst] + [c.residual for c in rep.checks.values()])
        failures += [f"{label}/{k}" for k in rep.failed()]
    record(12, not failures, f"standard-semigroup checks on all built-ins, worst residual {worst:.1e}"
           + (f"; failed {failures}" if failures else ""))
