"""Runs every kernel of an original and a compiled corpus file on the same
random inputs and compares all results.

usage: differential.py STEM ORIGINAL COMPILED
Prints one line per kernel; exits 1 on any mismatch.
"""
import copy
import importlib.util
import os
import sys

import numpy as np

sys.dont_write_bytecode = True

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))


class Obj:
    pass


def load(path, name):
    spec = importlib.util.spec_from_file_location(name, path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def obj(**kw):
    o = Obj()
    o.__dict__.update(kw)
    return o


def corr(rng, as_list, M=7, N=9):
    conv = (lambda a: a.tolist()) if as_list else (lambda a: a)
    data = rng.random((N, M))
    return [obj(M=M, N=N), float(N), conv(data), conv(np.zeros((M, M))), conv(np.zeros(M)), conv(np.zeros(M))]


def stap(rng, N=6, K=8):
    x = rng.random((N, K)) + 1j * rng.random((N, K))
    g = rng.random(N)
    v = rng.random((N, K)) + 1j * rng.random((N, K))
    y = np.zeros((N, K), dtype=complex)
    z = np.zeros((N, K), dtype=complex)
    return [x, g, v, y, z]


n, m = 6, 5
r = lambda rng, *s: rng.random(s)
MICRO = {
    "recurrence": lambda g: [r(g, n), n],
    "shift_left": lambda g: [r(g, n), n],
    "k_reduction": lambda g: [obj(M=6, N=7), r(g, 7, 6).tolist(), np.zeros((6, 6)).tolist()],
    "transpose_copy": lambda g: [r(g, n, m), np.zeros((m, n)), n, m],
    "transpose_inplace": lambda g: [r(g, n, n), n],
    "elementwise": lambda g: [r(g, n), r(g, n), np.zeros(n), n],
    "producer_consumer": lambda g: [r(g, n), r(g, n), n],
    "matmul": lambda g: [r(g, n, n), r(g, n, n), np.zeros((n, n)), n],
    "sweep": lambda g: [r(g, n, n), n],
    "total": lambda g: [r(g, n), np.zeros(1), n],
    "guarded": lambda g: [r(g, n), n],
}

# (callable path, argument builder); a leading Obj becomes `self` of a
# method when the path names a class.
CASES = {
    "correlation_list": [("kernel", lambda g: corr(g, True)), ("kernel", lambda g: corr(g, False))],
    "correlation_numpy": [("kernel", lambda g: corr(g, False))],
    "stap": [("Stap.kernel", lambda g: [obj(N=6)] + stap(g))],
    "micro": [(k, v) for k, v in MICRO.items()],
    # Generated kernels `k(a, b, n)` of rank 1 or 2.
    "rand1": [("k", lambda g: [r(g, n + 3), r(g, n + 3), n])],
    "rand2": [("k", lambda g: [r(g, n + 3, n + 3), r(g, n + 3, n + 3), n])],
    "blackbox": [
        ("norm", lambda g: [list(r(g, n)), n]),
        ("tally", lambda g: [["a", "b", "a", "c"], [0], 4]),
    ],
}


def resolve(mod, path, args):
    parts = path.split(".")
    if len(parts) == 1:
        return getattr(mod, path), args
    cls = getattr(mod, parts[0])
    inst = cls.__new__(cls)
    inst.__dict__.update(args[0].__dict__)
    return getattr(inst, parts[1]), args[1:]


def same(a, b):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return type(a) is type(b) and np.allclose(a, b, rtol=1e-8, atol=1e-12)
    if isinstance(a, list):
        return isinstance(b, list) and len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, Obj):
        return isinstance(b, Obj) and a.__dict__ == b.__dict__
    if isinstance(a, float):
        return bool(np.isclose(a, b, rtol=1e-8, atol=1e-12))
    return a == b


def main():
    stem, original, compiled = sys.argv[1:4]
    a = load(original, "loomc_original")
    b = load(compiled, "loomc_compiled")
    bad = 0
    for k, (path, build) in enumerate(CASES[stem]):
        args = build(np.random.default_rng(k))
        fa, xa = resolve(a, path, copy.deepcopy(args))
        fb, xb = resolve(b, path, copy.deepcopy(args))
        ra = fa(*xa)
        rb = fb(*xb)
        ok = same(ra, rb) and all(same(x, y) for x, y in zip(xa, xb))
        bad += not ok
        print(f"{path}#{k}: {'ok' if ok else 'MISMATCH'}")
    import amphc_rt

    print(f"tasks {amphc_rt.submitted}")
    sys.exit(1 if bad else 0)


main()
