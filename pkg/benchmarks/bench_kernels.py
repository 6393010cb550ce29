"""Compare the numba and numpy kernel backends.

Kernel timings call both implementations directly. The end-to-end timing
runs one loss-and-gradient evaluation per epoch in a subprocess per backend,
with SNNPDE_DISABLE_NUMBA selecting the fallback.

    python3 benchmarks/bench_kernels.py [--repeat 20]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from snnpde import _kernels as K

# (label, streams S, points N, width, d): preset-sized hidden layers
CASES = [
    ("helmholtz 1D, 1000 pts", 3, 1000, 100, 1),
    ("poisson 2D, 1024 pts", 5, 1024, 100, 2),
    ("advection 2D first order, 10000 pts", 3, 10000, 100, 2),
    ("subspace layer 2D, 2500 pts", 5, 2500, 300, 2),
]

EPOCH_SNIPPET = """
import time
from snnpde import _kernels
from snnpde.autodiff import loss_and_param_grad
from snnpde.network import MlpConfig, init_xavier
from snnpde.problems import builtin
from snnpde.sampling import collocation_set
from snnpde.training import loss_terms
import numpy as np
p = builtin("poisson2d")
terms = loss_terms(p, collocation_set(p, 32), "discrete")
params = init_xavier(MlpConfig(d=2, hidden_widths=(100,) * 4, M=300))
om = np.ones(300)
loss_and_param_grad(params, om, terms)
t = time.perf_counter()
for _ in range({n}):
    loss_and_param_grad(params, om, terms)
print(_kernels.backend(), (time.perf_counter() - t) / {n})
"""


def timeit(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return np.median(times) * 1e3


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--epochs", type=int, default=5, help="epochs timed end to end per backend")
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)

    print(f"{'case':40s} {'kernel':9s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for label, s, n, w, d in CASES:
        z = rng.normal(size=(s, n, w))
        ybar = rng.normal(size=(s, n, w))
        a = np.tanh(z[0])
        np.testing.assert_allclose(K.tanh_forward_numba(z, d), K.tanh_forward_numpy(z, d), rtol=1e-14, atol=1e-15)
        t_np = timeit(lambda: K.tanh_forward_numpy(z, d), args.repeat)
        t_nb = timeit(lambda: K.tanh_forward_numba(z, d), args.repeat)
        print(f"{label:40s} {'forward':9s} {t_np:10.3f} {t_nb:10.3f} {t_np / t_nb:8.2f}")
        t_np = timeit(lambda: K.tanh_backward_numpy(ybar, a, z, d), args.repeat)
        t_nb = timeit(lambda: K.tanh_backward_numba(ybar, a, z, d), args.repeat)
        print(f"{'':40s} {'backward':9s} {t_np:10.3f} {t_nb:10.3f} {t_np / t_nb:8.2f}")

    for q in (10, 64):
        t_np = timeit(lambda: K.legendre_newton_numpy(q, 1e-15, 100), args.repeat)
        t_nb = timeit(lambda: K.legendre_newton_numba(q, 1e-15, 100), args.repeat)
        print(f"{f'Legendre roots q={q}':40s} {'newton':9s} {t_np:10.3f} {t_nb:10.3f} {t_np / t_nb:8.2f}")

    print(f"\nend to end, Poisson preset network, one loss+gradient per epoch ({args.epochs} epochs):")
    code = EPOCH_SNIPPET.format(n=args.epochs)
    for flag in ("1", "0"):
        env = dict(os.environ, SNNPDE_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:6s} {float(out[1]) * 1e3:9.1f} ms/epoch")


if __name__ == "__main__":
    main()
