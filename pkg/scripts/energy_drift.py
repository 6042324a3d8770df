"""Energy drift of undriven quadratic reservoirs versus step count and time step."""

import argparse

import numpy as np

from legendre_sr.reservoir import build, energy, random_quadratic_spec, run
from legendre_sr.rng import stream


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--n", type=int, default=4)
    parser.add_argument("--steps", type=int, default=10000)
    args = parser.parse_args()

    rng = stream(args.seed, "reservoir")
    print("dt,max_rel_drift,final_rel_drift")
    for dt in (0.01, 0.1, 1.0, 10.0):
        spec = random_quadratic_spec(args.n, 1, rng, dt)
        traj = run(build(spec), rng.standard_normal(2 * args.n), np.zeros((args.steps, 1)))
        e = np.array([energy(spec, x) for x in traj.states])
        rel = np.abs(e - e[0]) / e[0]
        print(f"{dt},{rel.max():.3e},{rel[-1]:.3e}")


if __name__ == "__main__":
    main()
