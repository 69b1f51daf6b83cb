#!/usr/bin/env python3
"""Regenerates the frozen oracle tables in tests/data.

feasible_sets.csv: feasible step durations of random boundary conditions,
found by scanning [T_MIN, T_MAX] every EPS_T with a support-function
zonotope test (every edge normal, O(N^2)) and bisecting each transition.

min_energy.csv: minimum-energy costs of random feasible problems, solved
as dense QPs on DENSE_KNOTS piecewise-constant pieces with cvxpy.

Usage: make_oracles.py [corpus.csv]. Rows of an optional recorded corpus
are mixed into the feasible-set cases.
"""

import csv
import math
import sys
from pathlib import Path

import cvxpy as cp
import numpy as np
from numba import njit

GRAVITY = 9.81
COM_HEIGHT = 0.9
OMEGA = math.sqrt(GRAVITY / COM_HEIGHT)
KNOTS = 64
DENSE_KNOTS = 2000
T_MIN, T_MAX = 0.05, 3.0
EPS_T = 1e-4
HALF = np.array([0.10, 0.05])
SEED = 20261019

OUT = Path(__file__).resolve().parent.parent / "data"


def propagate(c, v, u, dt):
    ch, sh = math.cosh(OMEGA * dt), math.sinh(OMEGA * dt)
    return u + (c - u) * ch + v / OMEGA * sh, (c - u) * OMEGA * sh + v * ch


@njit(cache=True)
def axis_feasible(t, xi0, zeta0, xif, zetaf, lo, hi, n):
    h = t / n
    q = math.exp(-OMEGA * h)
    decay = math.exp(-OMEGA * t)
    r1 = xi0 - decay * xif
    r2 = zetaf - decay * zeta0
    gx = np.empty(n)
    gy = np.empty(n)
    for k in range(n):
        gx[k] = q ** k * (1.0 - q)
        gy[k] = q ** (n - 1 - k) * (1.0 - q)
    mid = 0.5 * (lo + hi)
    rad = 0.5 * (hi - lo)
    dx = r1 - mid * gx.sum()
    dy = r2 - mid * gy.sum()
    for k in range(n):
        nx, ny = -gy[k], gx[k]
        reach = 0.0
        for j in range(n):
            reach += abs(nx * gx[j] + ny * gy[j])
        reach *= rad
        proj = abs(nx * dx + ny * dy)
        if proj > reach + 1e-12 * (reach + proj) + 1e-300:
            return False
    return True


@njit(cache=True)
def feasible(t, s, n):
    # s: xi0x, xi0y, zeta0x, zeta0y, xifx, xify, zetafx, zetafy, lox, loy, hix, hiy
    for a in range(2):
        if not axis_feasible(t, s[0 + a], s[2 + a], s[4 + a], s[6 + a], s[8 + a], s[10 + a], n):
            return False
    return True


@njit(cache=True)
def scan(s, n, t_min, t_max, eps):
    m = int(round((t_max - t_min) / eps))
    flags = np.empty(m + 1, dtype=np.bool_)
    for i in range(m + 1):
        flags[i] = feasible(min(t_min + i * eps, t_max), s, n)
    return flags


def boundary(s, inside, outside):
    while abs(outside - inside) > 1e-9:
        mid = 0.5 * (inside + outside)
        if feasible(mid, s, KNOTS):
            inside = mid
        else:
            outside = mid
    return inside


def feasible_set(s):
    flags = scan(s, KNOTS, T_MIN, T_MAX, EPS_T)
    m = len(flags) - 1
    grid = lambda i: min(T_MIN + i * EPS_T, T_MAX)
    out = []
    i = 0
    while i <= m:
        if not flags[i]:
            i += 1
            continue
        start = i
        while i + 1 <= m and flags[i + 1]:
            i += 1
        lo = grid(0) if start == 0 else boundary(s, grid(start), grid(start - 1))
        hi = grid(m) if i == m else boundary(s, grid(i), grid(i + 1))
        out.append((lo, hi))
        i += 1
    return out


def dcm_signature(x0, xf, center, half):
    c0, v0, cf, vf = map(np.asarray, (x0[:2], x0[2:], xf[:2], xf[2:]))
    lo, hi = center - half, center + half
    return np.concatenate([c0 + v0 / OMEGA, c0 - v0 / OMEGA,
                           cf + vf / OMEGA, cf - vf / OMEGA, lo, hi])


def constructed_case(rng, t_range):
    """x0 random, xf reached from it under a random 8-piece CoP inside 80%
    of the foot, so the problem is feasible at the drawn duration for any
    knot count that is a multiple of 8."""
    t0 = rng.uniform(*t_range)
    xi0 = rng.uniform(-1, 1, 2) * np.array([0.12, 0.08])
    c0 = rng.uniform(-1, 1, 2) * np.array([0.15, 0.12])
    v0 = OMEGA * (xi0 - c0)
    u = rng.uniform(-0.8, 0.8, (8, 2)) * HALF
    c, v = c0.copy(), v0.copy()
    for k in range(8):
        for a in range(2):
            c[a], v[a] = propagate(c[a], v[a], u[k, a], t0 / 8)
    return np.concatenate([c0, v0]), np.concatenate([c, v]), t0


def arbitrary_case(rng):
    x0 = np.concatenate([rng.uniform(-0.3, 0.3, 2), rng.uniform(-1.0, 1.0, 2)])
    xf = np.concatenate([rng.uniform(-0.3, 0.3, 2), rng.uniform(-1.0, 1.0, 2)])
    return x0, xf


def load_corpus(path):
    rows = []
    with open(path) as f:
        for row in csv.DictReader(f):
            rows.append(row)
    return rows


def fmt(x):
    return repr(float(x))


def make_feasible_sets(rng, corpus):
    cases = []
    for _ in range(300):
        x0, xf, _ = constructed_case(rng, (0.2, 1.2))
        cases.append((x0, xf, np.zeros(2), HALF))
    for _ in range(50):
        x0, xf = arbitrary_case(rng)
        cases.append((x0, xf, np.zeros(2), HALF))
    picks = rng.choice(len(corpus), size=min(150, len(corpus)), replace=False) if corpus else []
    for i in picks:
        r = corpus[i]
        g = lambda k: float(r[k])
        cases.append((np.array([g("x0_cx"), g("x0_cy"), g("x0_vx"), g("x0_vy")]),
                      np.array([g("xf_cx"), g("xf_cy"), g("xf_vx"), g("xf_vy")]),
                      np.array([g("poly_cx"), g("poly_cy")]),
                      np.array([g("poly_hx"), g("poly_hy")])))
    path = OUT / "feasible_sets.csv"
    with open(path, "w") as f:
        f.write("x0_cx,x0_cy,x0_vx,x0_vy,xf_cx,xf_cy,xf_vx,xf_vy,"
                "poly_cx,poly_cy,poly_hx,poly_hy,intervals\n")
        for n, (x0, xf, center, half) in enumerate(cases):
            ivs = feasible_set(dcm_signature(x0, xf, center, half))
            text = ";".join(f"{fmt(lo)}:{fmt(hi)}" for lo, hi in ivs)
            f.write(",".join(fmt(v) for v in [*x0, *xf, *center, *half]) + "," + text + "\n")
            if n % 50 == 0:
                print(f"feasible sets: {n}/{len(cases)}", flush=True)
    print(f"wrote {path}")


def dense_qp_cost(x0, xf, t, half, knots):
    h = t / knots
    q = math.exp(-OMEGA * h)
    decay = math.exp(-OMEGA * t)
    k = np.arange(knots)
    gx = q ** k * (1 - q)
    gy = q ** (knots - 1 - k) * (1 - q)
    total = 0.0
    for a in range(2):
        xi0 = x0[a] + x0[2 + a] / OMEGA
        zeta0 = x0[a] - x0[2 + a] / OMEGA
        xif = xf[a] + xf[2 + a] / OMEGA
        zetaf = xf[a] - xf[2 + a] / OMEGA
        u = cp.Variable(knots)
        cons = [gx @ u == xi0 - decay * xif, gy @ u == zetaf - decay * zeta0,
                u >= -half[a], u <= half[a]]
        prob = cp.Problem(cp.Minimize(h * cp.sum_squares(u)), cons)
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12,
                   tol_feas=1e-12)
        if prob.status != cp.OPTIMAL:
            raise RuntimeError(f"dense QP status {prob.status}")
        total += h * float(np.sum(u.value ** 2))
    return total


def make_min_energy(rng):
    path = OUT / "min_energy.csv"
    with open(path, "w") as f:
        f.write("x0_cx,x0_cy,x0_vx,x0_vy,xf_cx,xf_cy,xf_vx,xf_vy,"
                "poly_cx,poly_cy,poly_hx,poly_hy,duration,cost\n")
        for n in range(200):
            x0, xf, t0 = constructed_case(rng, (0.3, 1.5))
            cost = dense_qp_cost(x0, xf, t0, HALF, DENSE_KNOTS)
            f.write(",".join(fmt(v) for v in [*x0, *xf, 0.0, 0.0, *HALF, t0, cost]) + "\n")
            if n % 50 == 0:
                print(f"min energy: {n}/200", flush=True)
    print(f"wrote {path}")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    corpus = load_corpus(sys.argv[1]) if len(sys.argv) > 1 else []
    make_feasible_sets(np.random.default_rng(SEED), corpus)
    make_min_energy(np.random.default_rng(SEED + 1))


if __name__ == "__main__":
    main()
