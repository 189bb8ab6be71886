"""Preconditioned CG with IC(0) and gradient-trained factors.

Solves A x = b on a 16x16 diffusion problem with four preconditioners
(none, IC(0), unweighted-trained, weighted-trained) and prints the
iteration counts and residual decay, tying together the whole toolkit:
problem generation -> IC(0) -> training -> PCG.
"""

import numpy as np

from precopt import (CsrMatrix, GridSpec, TrainConfig, assemble_fvm,
                     attach_solutions, gaussian_random_field, ic0_factorize,
                     pcg, sample_probes, spmv, train)


def main():
    spec = GridSpec(16, 16)
    field = gaussian_random_field(spec, seed=0, target_contrast=10.0)
    a_raw = assemble_fvm(spec, field)
    sigma = a_raw.diagonal().mean() / 4.0
    a = CsrMatrix(a_raw.n, a_raw.row_ptr, a_raw.col_idx, a_raw.values / sigma,
                  symmetric=True)
    probes = attach_solutions(a, sample_probes(spec.n, 1000, seed=100))
    l0 = ic0_factorize(a)

    factors = {"none": None, "IC(0)": l0}
    for kind in ("unweighted", "weighted"):
        cfg = TrainConfig(step_size=1e-3, batch_size=512, epochs=2000,
                          seed=7, loss_kind=kind)
        factors[kind] = train(a, l0, probes, cfg).factor

    rng = np.random.default_rng(42)
    b = rng.standard_normal(spec.n)

    print(f"PCG to relative residual 1e-8, n = {spec.n}")
    print(f"{'preconditioner':<15}  {'iterations':>10}  {'final residual':>15}")
    histories = {}
    for name, l in factors.items():
        x, iters, hist = pcg(a, b, l, rel_tol=1e-8)
        histories[name] = hist
        true_res = np.linalg.norm(b - spmv(a, x)) / np.linalg.norm(b)
        print(f"{name:<15}  {iters:>10}  {true_res:>15.3e}")

    print()
    print("residual decay (relative true residual)")
    print(f"{'iter':>5}  " + "  ".join(f"{name:>11}" for name in factors))
    max_len = max(len(h) for h in histories.values())
    for i in range(0, max_len, max(1, max_len // 10)):
        cells = []
        for name in factors:
            h = histories[name]
            cells.append(f"{h[i]:>11.3e}" if i < len(h) else f"{'-':>11}")
        print(f"{i:>5}  " + "  ".join(cells))


if __name__ == "__main__":
    main()
