"""Readout NRMSE against window length and ridge strength on the default GPR task."""

import argparse

from legendre_sr.config import ExperimentConfig, ReadoutSection
from legendre_sr.tasks import readout_task


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    print("window,reg,nrmse_sr,nrmse_persistence")
    for window in (1, 4, 8, 16, 24, 32):
        cfg = ExperimentConfig(task="readout-task", seed=args.seed,
                               readout=ReadoutSection(window=window, reg=[1e-6, 1e-2, 1.0]))
        header, rows, _ = readout_task(cfg)
        for row in rows:
            print(f"{window},{row[0]:g},{row[1]:.4f},{row[2]:.4f}")


if __name__ == "__main__":
    main()
