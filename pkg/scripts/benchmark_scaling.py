#!/usr/bin/env python3
"""Timing run for a million-row sparse design: generate, build, fit.

Defaults reproduce the scalability acceptance setting (1000-vertex risk
set, 50 transitions, mean degree about 5).
"""

import argparse
import time

import numpy as np

from dynetlogit import ModelSpec, RiskSet, TermSpec, build_design, fit_mle, generate_panel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--vertices", type=int, default=1000)
    ap.add_argument("--steps", type=int, default=51)
    ap.add_argument("--seed", type=int, default=31)
    ap.add_argument("--tolerance", type=float, default=1e-8)
    args = ap.parse_args()

    spec = ModelSpec(
        [TermSpec("vertex", "intercept"), TermSpec("vertex", "lag_indicator", lag=1)],
        [TermSpec("edge", "intercept"), TermSpec("edge", "lag_indicator", lag=1),
         TermSpec("edge", "log_size")],
    )
    theta = np.array([-1.45, 0.5, -5.2, 1.0, 0.3])
    risk = RiskSet([f"v{k:05d}" for k in range(args.vertices)])

    t0 = time.time()
    panel = generate_panel(spec, theta, risk, args.steps, seed=args.seed,
                           init_presence=0.2, init_density=0.02)
    t_gen = time.time() - t0
    sizes = [s.n_present for s in panel.snapshots]
    degs = [2 * s.edge_count / max(1, s.n_present) for s in panel.snapshots]
    print(f"generate: {t_gen:6.1f}s   mean |V_t|={np.mean(sizes):.0f} "
          f"mean degree={np.mean(degs):.2f}")

    t0 = time.time()
    dm = build_design(panel, spec)
    t_build = time.time() - t0
    X = dm.features
    mb = (X.data.nbytes + X.indices.nbytes + X.indptr.nbytes) / 1e6
    print(f"build:    {t_build:6.1f}s   rows={dm.n_rows} nnz={X.nnz} "
          f"sparse={mb:.0f}MB (dense would be {dm.n_rows * dm.n_cols * 8 / 1e6:.0f}MB)")

    t0 = time.time()
    fit = fit_mle(dm, tolerance=args.tolerance)
    t_fit = time.time() - t0
    print(f"fit:      {t_fit:6.1f}s   converged={fit.converged} "
          f"iterations={fit.iterations} gradient={fit.gradient_norm:.1e}")
    print("estimates:", np.round(fit.coefficients, 3).tolist())


if __name__ == "__main__":
    main()
