#!/usr/bin/env python3
"""Long-horizon behavior at desk scale.

Runs the Dirac-limit scenario (constant density, weak selection) and the
divergent scenario (the particle limit and the density limit disagree),
printing cluster tables, predicted limit masses, and the preservation
verdict.
"""

import argparse
import time

import phenopart as pp


def dirac_case(n, t_final):
    profile = pp.build_profile("const6")
    model = pp.build_model("advsel1d", profile.support, r0=6.0, r1=0.5)
    t0 = time.time()
    ens = pp.partition_support(profile, model, 1.0 / n, t_final)
    traj = pp.integrate(model, ens, pp.RunConfig(t_final))
    rep = pp.detect_limit_clusters(traj)
    print(f"dirac case: N={n} T={t_final:g} ({time.time() - t0:.1f} s)")
    for center, mass in rep.clusters:
        print(f"  cluster at {float(center[0]):.6f} with mass {mass:.6f}")
    predicted = pp.predict_limit_mass(model, [1.0])
    print(f"  predicted limit mass {predicted:.6f}, "
          f"conclusive={rep.conclusive}")


def divergent_case(n_list, t_final):
    profile = pp.build_profile("one-minus-x")
    model = pp.build_model("advsel1d", profile.support)
    cfg = pp.ReferenceConfig(x_lo=-0.25, x_hi=1.25, dx=1 / 1000, dt=4e-3)
    t0 = time.time()
    sol, history = pp.refine_until_stable(model, profile, cfg, t_final)
    print(f"divergent case: reference mass {sol.mass():.6f} after "
          f"{len(history) - 1} refinements ({time.time() - t0:.1f} s)")
    tests = pp.default_test_functions(float(sol.x[0]), float(sol.x[-1]))
    gaps = {}
    for n in n_list:
        ens = pp.partition_support(profile, model, 1.0 / n, t_final)
        traj = pp.integrate(model, ens, pp.RunConfig(t_final))
        gap = pp.weak_measure_gap(traj.final, sol, tests)
        gaps[1.0 / n] = gap
        print(f"  N={n:<6} particle mass {traj.final.mass():.6f} "
              f"weak gap {gap:.4f}")
    verdict = pp.ap_verdict(gaps)
    print(f"  verdict: {verdict.verdict} ({verdict.detail})")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true",
                    help="smaller swarms and shorter horizon")
    args = ap.parse_args()

    if args.quick:
        dirac_case(500, 30.0)
        divergent_case([250, 500, 1000], 30.0)
    else:
        dirac_case(2000, 40.0)
        divergent_case([1000, 2000, 4000], 40.0)


if __name__ == "__main__":
    main()
