"""Grid convergence of the round-sphere flow against the exact solution.

Prints max radius^2 and sup|Rm| errors at t = 0.2 for a ladder of resolutions
together with the observed order between neighbouring rows.
"""
import argparse
import math

from ricci_lab import exact_models as em, flow, geometry as geo


def errors(N, t_end, n=3, r0=1.0):
    model = em.SphereModel(n, r0)
    p0 = flow.initial_profile(flow.RoundSphere(r0), n, N)
    traj = flow.run(p0, flow.StepControl(), until_time=t_end)
    p = traj.states[-1].profile
    r2 = (geo.volume(p) / geo.sphere_volume(n)) ** (2 / n)
    r2_err = abs(r2 - model.radius2(t_end)) / model.radius2(t_end)
    rm_err = abs(traj.sup_rm[-1] - model.norm_rm(t_end)) / model.norm_rm(t_end)
    return r2_err, rm_err


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=float, default=0.2)
    ap.add_argument("--N", type=int, nargs="+", default=[33, 65, 129, 257])
    args = ap.parse_args()
    prev = None
    print(f"{'N':>6} {'radius2 rel':>12} {'sup|Rm| rel':>12} {'order':>6}")
    for N in args.N:
        r2, rm = errors(N, args.t)
        order = math.log2(prev / rm) if prev else float("nan")
        print(f"{N:>6} {r2:12.3e} {rm:12.3e} {order:6.2f}")
        prev = rm


if __name__ == "__main__":
    main()
