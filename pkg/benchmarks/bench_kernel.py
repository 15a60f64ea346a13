"""Compare the compiled substring kernel against the pure-Python fallback.

    python benchmarks/bench_kernel.py [--mib 8] [--repeat 5]
"""

import argparse
import random
import sys
import timeit

from log4shield.deepscan import _needles
from log4shield.kb import default_kb
from log4shield.kernel import find_all_compiled, find_all_py


def corpus(mib: int, seed: int = 7) -> bytes:
    rng = random.Random(seed)
    words = [b"import", b"org.apache.log4j.Logger;", b"class", b"return", b"log.info(msg);", b"{", b"}", b"org.apache"]
    rules = default_kb().rules
    lines = []
    size = 0
    while size < mib * 1024 * 1024:
        if rng.random() < 0.001:
            rule = rng.choice(rules)
            line = b"    x = " + rng.choice([rule.dotted_form, rule.path_form]).encode() + b";"
        else:
            line = b" ".join(rng.choice(words) for _ in range(rng.randint(2, 12)))
        lines.append(line)
        size += len(line) + 1
    return b"\n".join(lines)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mib", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    data = corpus(args.mib)
    needles, _ = _needles(default_kb().rules)
    backends = {"python": find_all_py}
    if find_all_compiled is not None:
        backends["cython"] = find_all_compiled
    else:
        print("compiled kernel not built; timing the fallback only", file=sys.stderr)

    results = {name: fn(data, needles) for name, fn in backends.items()}
    if len({tuple(r) for r in results.values()}) != 1:
        print("backends disagree", file=sys.stderr)
        return 1

    print(f"{len(data) / 2**20:.1f} MiB, {len(needles)} needles, {len(results['python'])} hits")
    timings = {}
    for name, fn in backends.items():
        best = min(timeit.repeat(lambda: fn(data, needles), number=1, repeat=args.repeat))
        timings[name] = best
        print(f"{name:>7}: {best * 1000:8.1f} ms  {len(data) / 2**20 / best:8.1f} MiB/s")
    if "cython" in timings:
        print(f"speedup: {timings['python'] / timings['cython']:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
