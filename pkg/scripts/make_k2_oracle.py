"""Freeze the exp(x) K_2(x) reference table used by the tests.

The values come from the integral representation evaluated with mpmath
(see tests/oracles.py), not from any Bessel routine. Run from the repo root::

    python3 scripts/make_k2_oracle.py
"""

import argparse
import json
import pathlib
import sys

import mpmath as mp
import numpy as np

ROOT = pathlib.Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from oracles import k2_scaled_oracle  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=121)
    ap.add_argument("--out", default=str(ROOT / "tests" / "data" / "k2_oracle.json"))
    args = ap.parse_args()
    xs = list(np.logspace(-3, np.log10(700.0), args.points))
    # regime edges of the implementation, approached from both sides
    xs += [2.0 * (1 - 1e-12), 2.0, 2.0 * (1 + 1e-12), 30.0 * (1 - 1e-12), 30.0, 30.0 * (1 + 1e-12)]
    xs = sorted(float(x) for x in xs)
    rows = [{"x": repr(x), "k2_scaled": mp.nstr(k2_scaled_oracle(x, dps=40), 25)} for x in xs]
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump({"function": "exp(x) K_2(x)", "dps": 40, "rows": rows}, fh, indent=1)
        fh.write("\n")
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
