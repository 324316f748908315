#!/usr/bin/env python3
"""Convergence studies at desk scale.

Two measurements: the local selection model against the semi-Lagrangian
reference, and the non-local drift toy by self-refinement (no grid
reference covers non-local advection).
"""

import argparse
import time

import phenopart as pp


def local_study(h_list, oracle_dx, oracle_dt):
    profile = pp.build_profile("one-minus-x")
    model = pp.build_model("advsel1d", profile.support)
    cutoff = pp.build_cutoff("gaussian")
    cfg = pp.ReferenceConfig(x_lo=-0.25, x_hi=1.25, dx=oracle_dx, dt=oracle_dt)
    t0 = time.time()
    sol = pp.solve_reference(model, profile, cfg, 1.0)
    print(f"reference: dx={oracle_dx:g} mass={sol.mass():.6f} "
          f"({time.time() - t0:.1f} s)")

    print(f"{'h':>10} {'n':>6} {'L1':>12} {'weighted':>12}")
    pairs_l1, pairs_w = [], []
    for h in h_list:
        ens = pp.partition_support(profile, model, h, 1.0)
        traj = pp.integrate(model, ens, pp.RunConfig(1.0, record_series=False))
        recon = pp.reconstruct(traj.final, cutoff, pp.epsilon_rule(h, q=0.5),
                               sol.x)
        l1 = pp.l1_distance(sol, recon)
        wpe = pp.weighted_pointwise_error(traj.final, sol)
        pairs_l1.append((h, l1))
        pairs_w.append((h, wpe))
        print(f"{h:>10.5f} {ens.n:>6} {l1:>12.6f} {wpe:>12.3e}")
    print(f"L1 order {pp.fit_convergence_order(pairs_l1).order:.3f}, "
          f"weighted order {pp.fit_convergence_order(pairs_w).order:.3f}")


def nonlocal_study(h_list):
    profile = pp.build_profile("bump", center=0.5, width=0.4)
    model = pp.build_model("nldrift1d", profile.support)
    res = pp.particle_self_convergence(
        model, profile, h_list, 1.0, pp.build_cutoff("gaussian"), eps_q=0.5)
    print(f"{'h':>10} {'L1 vs finer':>14}")
    for h, err in res.fit.pairs:
        print(f"{h:>10.5f} {err:>14.5e}")
    print(f"self-convergence order {res.fit.order:.3f} "
          f"(truth at h={res.truth_h:g})")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true",
                    help="coarser sweep and reference")
    args = ap.parse_args()

    if args.quick:
        local_study([1 / 50, 1 / 100, 1 / 200], 1 / 1000, 2e-3)
        nonlocal_study([1 / 25, 1 / 50, 1 / 100])
    else:
        local_study([1 / 100, 1 / 200, 1 / 400, 1 / 800], 1 / 8000, 5e-4)
        nonlocal_study([1 / 25, 1 / 50, 1 / 100, 1 / 200])


if __name__ == "__main__":
    main()
