"""Compare the compiled and numpy kernel backends.

Times the margin/gradient evaluation, the duality fixed point, and one full
alternating optimization per backend (the kernels are swapped in place, so
the rest of the pipeline is identical).

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import contextlib
import timeit

import numpy as np

from fimbeam import (AoConfig, FimGeometry, ScenarioGeometry, SurfaceShape, channel_matrix,
                     kernels, make_link_budget, noise_power, optimize, sample_environment,
                     sample_user_positions)
from fimbeam import _pykernels
from fimbeam.morphing import MarginProblem

try:
    from fimbeam import _ckernels
except ImportError:
    _ckernels = None


@contextlib.contextmanager
def backend(mod):
    saved = kernels.evaluate, kernels.duality_multipliers
    kernels.evaluate, kernels.duality_multipliers = mod.evaluate, mod.duality_multipliers
    try:
        yield
    finally:
        kernels.evaluate, kernels.duality_multipliers = saved


def scenario(n_z, paths, seed=0):
    rng = np.random.default_rng(seed)
    geom = FimGeometry.half_wavelength(2, n_z, 28e9)
    scen = ScenarioGeometry()
    link = make_link_budget(sample_user_positions(rng, scen), 1.0, 2.2, geom.wavelength,
                            noise_power(-174, 1e8))
    return geom, link, sample_environment(rng, scen, paths, link)


def best_of(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    mods = {"python": _pykernels}
    if _ckernels is not None:
        mods["cython"] = _ckernels
    else:
        print("compiled extension not built; timing the numpy backend only")

    rows = []
    for n_z, paths in ((2, 8), (3, 8), (4, 16)):
        geom, link, env = scenario(n_z, paths)
        H = channel_matrix(env, geom, SurfaceShape.flat(geom.n, 0.0))
        Ht = H / np.sqrt(link.noise_powers)
        gamma = np.full(4, 10 ** 0.5)
        W = Ht.copy()
        p = MarginProblem(env, geom, W, link.noise_powers, gamma)
        y = np.full(geom.n, 0.3 * geom.wavelength)
        cfg = AoConfig(y_max=geom.wavelength)
        label = f"N={geom.n} L={paths}"
        for name, mod in mods.items():
            ev = best_of(lambda: mod.evaluate(p.phase0, p.uy, p.kappa, y, p.alpha, p.W, p.inv_gs,
                                              p.inv_s, True), 2000, args.repeat)
            fp = best_of(lambda: mod.duality_multipliers(Ht, gamma, 1e-10, 500, 1e12), 200,
                         args.repeat)
            with backend(mod):
                ao = best_of(lambda: optimize(env, geom, link, gamma, cfg), 5, args.repeat)
            rows.append((label, name, ev, fp, ao))

    print(f"{'case':<12} {'backend':<8} {'evaluate':>12} {'fixed point':>12} {'optimize':>12}")
    for label, name, ev, fp, ao in rows:
        print(f"{label:<12} {name:<8} {ev * 1e6:9.1f} us {fp * 1e6:9.1f} us {ao * 1e3:9.2f} ms")
    if "cython" in mods:
        print()
        for i in range(0, len(rows), 2):
            (label, _, e1, f1, a1), (_, _, e2, f2, a2) = rows[i], rows[i + 1]
            print(f"{label:<12} speedup: evaluate x{e1 / e2:.1f}, fixed point x{f1 / f2:.1f}, "
                  f"optimize x{a1 / a2:.1f}")


if __name__ == "__main__":
    main()
