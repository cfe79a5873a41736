"""Stein cubature reweighting a Metropolis-Hastings sample.

Plain MCMC averages give every state weight ``1/n``; the Stein weights are
optimal for the same points. Both are compared on the default von
Mises-Fisher target over a few chains.

    python3 demos/mcmc_points.py
"""

import numpy as np

import geostein as gs

N_GRID = (50, 100, 200, 400)
SEEDS = range(5)


def main():
    target = gs.VonMisesFisher([0.0, 0.0, 2.0])
    cfg = gs.SteinOperatorConfig(target)
    profile = gs.profile_k1(3.5)
    f = gs.default_integrand("rosenbrock", target)
    truth = gs.reference_expectation(target, f)

    print(f"E_P[f] = {truth:.10f}")
    print(f"{'n':>5} {'ksd stein':>11} {'ksd 1/n':>11} {'err stein':>11} {'err 1/n':>11} {'accept':>7}")
    for n in N_GRID:
        rows = []
        for seed in SEEDS:
            X, diag = gs.mh_chain(target, n, seed=seed)
            K = gs.assemble_KP(cfg, profile, X)
            res = gs.integrate(gs.solve_weights(K), f(X))
            uniform = np.full(n, 1.0 / n)
            rows.append((res.ksd, gs.ksd_of_weights(K, uniform),
                         abs(res.estimate - truth), abs(f(X).mean() - truth), diag.acceptance_rate))
        m = np.mean(rows, axis=0)
        print(f"{n:5d} {m[0]:11.4e} {m[1]:11.4e} {m[2]:11.3e} {m[3]:11.3e} {m[4]:7.3f}")


if __name__ == "__main__":
    main()
