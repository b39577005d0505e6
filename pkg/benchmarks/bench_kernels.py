"""Compare the compiled Grassmann kernels with the pure-Python fallback.

Two layers are timed:

* kernel micro-benchmarks on integer coefficients, calling both modules
  directly in one process;
* end-to-end workloads (products of rational superfunctions, a flatness
  check on R^{2|2}), each run in a fresh interpreter per backend because the
  backend is chosen at import.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat N] [--json out.json]``
"""

import argparse
import json
import os
import random
import subprocess
import sys
import timeit

WORKLOADS = {
    "superfunction products": """
import random
from densalg.graded import Chart
from densalg.randgen import random_scalar
c = Chart.of("x", "y", "a:odd", "b:odd", "c:odd", "e:odd")
rng = random.Random(0)
fs = [random_scalar(c, rng, 3, density=1.0) for _ in range(12)]
def work():
    for f in fs:
        for g in fs:
            f * g
""",
    "flatness on R^(2|2)": """
import random, sys
sys.path.insert(0, "tests")
import bvgen
from densalg.bv import flatness_check
d = bvgen.curved_operator(bvgen.R22, random.Random(1))
def work():
    flatness_check(d)
""",
}


def micro(repeat):
    import densalg._kernels_py as py

    try:
        import densalg._kernels as cy
    except ImportError:
        cy = None
    rng = random.Random(0)
    n_odd = 8
    left = {m: rng.randint(-5, 5) or 1 for m in rng.sample(range(1 << n_odd), 60)}
    right = {m: rng.randint(-5, 5) or 1 for m in rng.sample(range(1 << n_odd), 60)}
    cases = {
        "grassmann_product (60x60 terms, 8 odd)": lambda k: k.grassmann_product(left, right),
        "odd_derivative (60 terms)": lambda k: [k.odd_derivative(left, i) for i in range(n_odd)],
        "koszul_sign (all mask pairs, 6 odd)": lambda k: [k.koszul_sign(a, b) for a in range(64) for b in range(64)],
    }
    out = {}
    for name, fn in cases.items():
        row = {"python": min(timeit.repeat(lambda: fn(py), number=20, repeat=repeat)) / 20}
        if cy is not None:
            assert fn(cy) == fn(py), f"backends disagree on {name}"
            row["cython"] = min(timeit.repeat(lambda: fn(cy), number=20, repeat=repeat)) / 20
            row["speedup"] = row["python"] / row["cython"]
        out[name] = row
    return out


def end_to_end(repeat):
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = {}
    for name, setup in WORKLOADS.items():
        row = {}
        for backend in ("python", "cython"):
            env = dict(os.environ)
            env.pop("DENSALG_PURE_PYTHON", None)
            if backend == "python":
                env["DENSALG_PURE_PYTHON"] = "1"
            script = (
                setup
                + "\nimport timeit, densalg.kernels as k\n"
                + f"print(k.BACKEND, min(timeit.repeat(work, number=1, repeat={repeat})))\n"
            )
            proc = subprocess.run([sys.executable, "-c", script], cwd=root, env=env, capture_output=True, text=True)
            if proc.returncode:
                raise SystemExit(proc.stderr)
            got, seconds = proc.stdout.split()
            if got == backend:
                row[backend] = float(seconds)
        if "cython" in row:
            row["speedup"] = row["python"] / row["cython"]
        out[name] = row
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write the results here")
    args = ap.parse_args(argv)
    results = {"micro": micro(args.repeat), "end_to_end": end_to_end(max(1, args.repeat // 2))}
    for section, rows in results.items():
        print(f"[{section}]")
        for name, row in rows.items():
            cells = "  ".join(f"{k}={v:.3g}{'x' if k == 'speedup' else 's'}" for k, v in row.items())
            print(f"  {name:42} {cells}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
