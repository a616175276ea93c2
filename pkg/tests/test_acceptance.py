"""Exit criteria. Each test prints one PASS/FAIL line in the terminal summary."""

import math
import time

import numpy as np
import pytest

from phaselock.coupling import (
    bisection_budget,
    compute_kc,
    construct_fixed_point,
    enumerate_fixed_points,
    existence_at,
    order_band,
    upper_bound,
)
from phaselock.frequencies import center, sample_normal
from phaselock.order_field import (
    coupling_field,
    field_norm_bound_gap,
    order_complex,
    reduced_jacobian,
)
from phaselock.simulator import SimConfig, homogeneous_run

import oracles

CERTIFICATES = []  # (spec, certificate) pairs gathered by the tests below
REPORTS = []  # (spec, report) pairs


def _kc(spec, eps=None):
    rep = compute_kc(spec, eps)
    REPORTS.append((spec, rep))
    return rep


def test_exact_kc_two_oscillators(criterion):
    worst, slowest = 0.0, 0.0
    for c in (0.5, 1.0, 3.0):
        spec = center([c, -c])
        _kc(spec)
        best = math.inf
        for _ in range(20):
            t0 = time.perf_counter()
            rep = compute_kc(spec)
            best = min(best, time.perf_counter() - t0)
        slowest = max(slowest, best)
        worst = max(worst, abs(rep.kc - 2 * c) / (2 * c))
    criterion("exact kc N=2: rel err <= 1e-9, < 1 ms", worst <= 1e-9 and slowest < 1e-3,
              f"rel err {worst:.2e}, {slowest * 1e3:.3f} ms")


def test_exact_kc_three_oscillators(criterion):
    worst = 0.0
    for c in (0.25, 1.0, 4.0):
        rep = _kc(center([-c, 0, c]))
        worst = max(worst, abs(rep.kc - oracles.N3_KC_OVER_C * c) / (oracles.N3_KC_OVER_C * c))
    criterion("exact kc N=3: kc = 1.7043783160 c within 1e-7 rel", worst <= 1e-7, f"rel err {worst:.2e}")


def test_sandwich(criterion):
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    violations = 0
    for i in range(1000):
        spec = sample_normal(int(rng.integers(3, 51)), seed=int(rng.integers(2**63)))
        rep = _kc(spec)
        tol = 1e-8 * rep.kc
        lo = max(rep.lower_inf, rep.lower_sigma)
        hi = min(rep.upper, 2 * rep.lower_inf)
        if not (lo - tol <= rep.kc <= hi + tol):
            violations += 1
    elapsed = time.perf_counter() - t0
    criterion("sandwich on 1000 random specs, < 10 s", violations == 0 and elapsed < 10,
              f"{violations} violations, {elapsed:.2f} s")


def test_upper_bound_ratio_on_normal_samples(criterion):
    ratios = {}
    for n, seed in ((20, 20), (200, 200)):
        spec = sample_normal(n, 0.0, 1.0, seed=seed)
        rep = _kc(spec)
        ratios[n] = rep.upper / rep.kc
    ok = all(1.0 <= r < 1.05 for r in ratios.values())
    criterion("upper bound exceeds kc by < 5% (N=20, N=200)", ok,
              ", ".join(f"N={n}: {r:.6f}" for n, r in ratios.items()))


def test_threshold_dichotomy(criterion):
    rng = np.random.default_rng(7)
    bad, worst = 0, 0.0
    for _ in range(100):
        spec = sample_normal(int(rng.integers(2, 60)), seed=int(rng.integers(2**63)))
        kc = _kc(spec).kc
        below = existence_at(spec, 0.999 * kc)
        k = 1.001 * kc
        above = existence_at(spec, k)
        if below is not None or above is None:
            bad += 1
            continue
        cert = construct_fixed_point(spec, k, np.ones(spec.n), above)
        CERTIFICATES.append((spec, cert))
        worst = max(worst, cert.residual_inf / k)
        if cert.residual_inf >= 1e-8 * k:
            bad += 1
    criterion("threshold dichotomy at 0.999/1.001 kc, residual < 1e-8 k", bad == 0,
              f"{bad} failures, worst residual/k {worst:.2e}")


def test_field_norm_bound(criterion):
    rng = np.random.default_rng(11)
    worst_gap = math.inf
    for n in range(2, 102):
        X = rng.uniform(-np.pi, np.pi, (1000, n))
        worst_gap = min(worst_gap, float(np.min(field_norm_bound_gap(X))))
    part1 = worst_gap >= -1e-10

    worst_eq = 0.0
    for n in range(2, 102, 2):
        for c in np.linspace(0, 1, 21):
            t = math.acos(c)
            x = np.array([t] * (n // 2) + [-t] * (n // 2))
            worst_eq = max(worst_eq, abs(field_norm_bound_gap(x)))
    part2 = worst_eq <= 1e-10

    odd = rng.choice(np.arange(3, 102, 2), 10_000)
    strict = 0
    tested = 0
    for n in np.unique(odd):
        X = rng.uniform(-np.pi, np.pi, (int(np.sum(odd == n)), int(n)))
        R = np.abs(order_complex(X))
        mask = (R > 0) & (R < 1)
        tested += int(mask.sum())
        strict += int(np.sum(field_norm_bound_gap(X)[mask] > 0))
    part3 = strict == tested == 10_000
    criterion("field-norm bound: 1e5 samples, even equality, odd strict", part1 and part2 and part3,
              f"min gap {worst_gap:.2e}, even |gap| {worst_eq:.2e}, odd strict {strict}/{tested}")


def test_identities(criterion):
    rng = np.random.default_rng(12)
    worst_cos, worst_sin, worst_sum, count = 0.0, 0.0, 0.0, 0
    for n in range(2, 102):
        X = rng.uniform(-np.pi, np.pi, (1000, n))
        z = order_complex(X)
        R, psi = np.abs(z), np.angle(z)
        keep = R > 1e-6
        count += int(keep.sum())
        d = psi[keep, None] - X[keep]
        worst_cos = max(worst_cos, float(np.max(np.abs(np.mean(np.cos(d), axis=1) - R[keep]))))
        worst_sin = max(worst_sin, float(np.max(np.abs(np.sum(np.sin(d), axis=1)))))
        F = coupling_field(X)
        worst_sum = max(worst_sum, float(np.max(np.abs(F.sum(axis=1)))) / n)
    ok = count >= 99_000 and worst_cos <= 1e-10 and worst_sin <= 1e-10 and worst_sum <= 1e-12
    criterion("centroid identities on 1e5 states, sum f = 0", ok,
              f"{count} states, cos {worst_cos:.1e}, sin {worst_sin:.1e}, sum/N {worst_sum:.1e}")


def test_jacobian(criterion):
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 13))
        y = rng.uniform(-np.pi, np.pi, n - 1)
        x = np.append(y, -y.sum())
        worst = max(worst, float(np.max(np.abs(reduced_jacobian(x) - oracles.finite_difference_jacobian(x)))))
    dets = [abs(np.linalg.det(reduced_jacobian(np.zeros(n)))) for n in range(3, 13)]
    criterion("reduced Jacobian vs finite differences within 1e-6; aligned det != 0",
              worst <= 1e-6 and min(dets) > 0, f"max err {worst:.2e}, min |det| {min(dets):.3e}")


def test_enumeration(criterion):
    rng = np.random.default_rng(14)
    t0 = time.perf_counter()
    short, worst = 0, 0.0
    for _ in range(20):
        spec = sample_normal(int(rng.integers(3, 9)), seed=int(rng.integers(2**63)))
        k = 10 * max(upper_bound(spec), 2 * spec.inf_norm)
        found = enumerate_fixed_points(spec, k)
        if len(found) < 2 ** (spec.n - 1):
            short += 1
        for cert in found:
            CERTIFICATES.append((spec, cert))
            worst = max(worst, cert.residual_inf / k)
    elapsed = time.perf_counter() - t0
    criterion("enumeration: >= 2^(N-1) certificates, residual < 1e-8 k, < 5 s",
              short == 0 and worst < 1e-8 and elapsed < 5,
              f"{short} short, worst residual/k {worst:.1e}, {elapsed:.2f} s")


def test_dynamics(criterion):
    trace = homogeneous_run(100, 2.0, SimConfig(k=2.0, t_end=5.0, seed=100))
    drop = float(np.min(np.diff(trace.L)))
    excess = float(np.max(trace.L - trace.D))
    splay = homogeneous_run(3, 2.0, SimConfig(k=2.0, t_end=5.0, init=np.array([0, 2 * np.pi / 3, 4 * np.pi / 3])))
    splay_max = float(np.max(np.abs(splay.L)))
    criterion("homogeneous N=100 k=2: L monotone, L <= D; splay L == 0",
              drop >= -1e-9 and excess <= 1e-6 and splay_max <= 1e-9,
              f"min dL {drop:.1e}, max L-D {excess:.1e}, splay max L {splay_max:.1e}")


def test_order_band(criterion):
    # extra certificates from fresh specs so the criterion stands on its own
    rng = np.random.default_rng(15)
    for _ in range(10):
        spec = sample_normal(int(rng.integers(2, 7)), seed=int(rng.integers(2**63)))
        for cert in enumerate_fixed_points(spec, 3 * compute_kc(spec).kc):
            CERTIFICATES.append((spec, cert))
    spec = center([1, -1])
    CERTIFICATES.extend((spec, c) for c in enumerate_fixed_points(spec, 4.0))
    outside = 0
    for spec, cert in CERTIFICATES:
        r_min, r_max = order_band(spec, cert.k)
        if not (r_min - 1e-8 <= cert.order_R <= r_max + 1e-8):
            outside += 1
    criterion("order band holds for every certificate", outside == 0 and len(CERTIFICATES) > 0,
              f"{outside} outside of {len(CERTIFICATES)}")


def test_bisection_budget(criterion):
    rng = np.random.default_rng(16)
    for _ in range(50):
        spec = sample_normal(int(rng.integers(2, 40)), std=float(rng.uniform(0.01, 100)),
                             seed=int(rng.integers(2**63)))
        for eps_rel in (1e-4, 1e-8, 1e-12):
            _kc(spec, eps_rel * spec.inf_norm)
    over = [(s.n, r.iterations) for s, r in REPORTS
            if not r.degenerate and r.iterations > bisection_budget(s, r.tolerance)]
    criterion("bisection iterations within ceil(log2((sqrt2-1)||Omega||/eps)) + 1", not over,
              f"{len(REPORTS)} runs, {len(over)} over budget")
