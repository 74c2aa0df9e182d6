"""Regenerate the finite-sample Dickey-Fuller tau surface (constant, no trend).

For every sample size in ``SIZES`` the script simulates driftless Gaussian
random walks, runs the single-mean Dickey-Fuller regression and records the
empirical quantiles of tau at ``PROBS``.  A cubic in 1/T is then fitted for
each probability level (weighted by the Monte Carlo replication count), and
the coefficients are written to ``src/tradecast/data/df_tau_surface.csv``.

Usage::

    python tools/build_df_surface.py [--reps 2000000] [--seed 20170101]

Runtime is a few minutes on a laptop.
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

SIZES = [8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 22, 24, 26, 28, 30,
         35, 40, 45, 50, 60, 70, 80, 100, 125, 150, 200, 250, 300, 400, 500]

_tail = [1e-4, 2e-4, 3e-4, 5e-4, 7e-4, 1e-3, 1.5e-3, 2e-3, 3e-3, 4e-3, 5e-3,
         7e-3, 0.01, 0.0125, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05, 0.06, 0.07,
         0.08, 0.09]
PROBS = np.unique(np.round(np.r_[_tail, np.arange(0.10, 0.901, 0.02),
                                 1 - np.array(_tail)[::-1]], 6))

OUT = Path(__file__).resolve().parents[1] / "src" / "tradecast" / "data" / "df_tau_surface.csv"


def simulate_tau(nobs: int, reps: int, rng: np.random.Generator, chunk: int = 200_000) -> np.ndarray:
    """tau from ``reps`` random walks of length ``nobs + 1`` (``nobs`` regression rows)."""
    out = np.empty(reps)
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        y = np.cumsum(rng.standard_normal((m, nobs + 1)), axis=1)
        dy = np.diff(y, axis=1)
        yl = y[:, :-1]
        ylc = yl - yl.mean(axis=1, keepdims=True)
        dyc = dy - dy.mean(axis=1, keepdims=True)
        sxx = np.einsum("ij,ij->i", ylc, ylc)
        rho = np.einsum("ij,ij->i", ylc, dyc) / sxx
        res = dyc - rho[:, None] * ylc
        s2 = np.einsum("ij,ij->i", res, res) / (nobs - 2)
        out[done:done + m] = rho / np.sqrt(s2 / sxx)
        done += m
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=2_000_000)
    ap.add_argument("--seed", type=int, default=20170101)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    quant = np.empty((len(SIZES), len(PROBS)))
    weights = np.empty(len(SIZES))
    for i, size in enumerate(SIZES):
        reps = args.reps if size <= 100 else max(args.reps // 4, 100_000)
        quant[i] = np.quantile(simulate_tau(size, reps, rng), PROBS)
        weights[i] = np.sqrt(reps)
        print(f"T={size:4d} reps={reps} q05={quant[i][np.searchsorted(PROBS, 0.05)]:.4f}")

    inv = 1.0 / np.asarray(SIZES, dtype=float)
    design = np.column_stack([np.ones_like(inv), inv, inv**2, inv**3])
    wd = design * weights[:, None]
    coefs = np.linalg.lstsq(wd, quant * weights[:, None], rcond=None)[0].T

    with OUT.open("w", newline="") as fh:
        fh.write(f"# Dickey-Fuller tau quantiles, constant/no trend; q(T) = b0 + b1/T + b2/T^2 + b3/T^3\n")
        fh.write(f"# T = regression observations; seed={args.seed} reps={args.reps} sizes={SIZES[0]}..{SIZES[-1]}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["prob", "b0", "b1", "b2", "b3"])
        for p, row in zip(PROBS, coefs):
            writer.writerow([f"{p:.6g}"] + [f"{c:.8g}" for c in row])
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
