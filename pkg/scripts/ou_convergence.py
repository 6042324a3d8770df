"""RK4 order study for the natural-parameter OU flow against the closed-form moments."""

import argparse

import numpy as np

from legendre_sr.expfam import GaussianMoments, to_natural
from legendre_sr.legdyn import OUProcessSpec, natural_distance, ou_flow_exact, ou_flow_natural


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=float, default=2.0)
    args = parser.parse_args()

    ou = OUProcessSpec([[1.0, 0.3], [-0.2, 0.8]], [0.5, -0.5], [[1.0, 0.2], [0.2, 0.5]])
    mom0 = GaussianMoments([2.0, 1.0], np.diag([0.5, 0.4]))
    exact = to_natural(ou_flow_exact(mom0, ou, args.horizon))
    print("steps,error,ratio")
    prev = None
    for steps in (10, 20, 40, 80, 160, 320):
        err = natural_distance(ou_flow_natural(to_natural(mom0), ou, args.horizon, steps), exact)
        ratio = f"{prev / err:.2f}" if prev else ""
        print(f"{steps},{err:.3e},{ratio}")
        prev = err


if __name__ == "__main__":
    main()
