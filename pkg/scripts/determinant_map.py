"""Angular factor m of the coupling determinant over the tilt box.

Writes the full grid as CSV and prints where m is smallest. m only depends
on the anchor angles, so ``--phi`` lets other layouts be compared.

    python scripts/determinant_map.py --grid-n 201 --out out/m_map.csv
    python scripts/determinant_map.py --phi -90 20 160
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from pamflat.checks import m_grid
from pamflat.cli import atomic_write
from pamflat.platform import PlatformGeometry


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid-n", type=int, default=201)
    ap.add_argument("--limit-deg", type=float, default=15.0)
    ap.add_argument("--phi", type=float, nargs=3, metavar="DEG", default=(-90.0, 30.0, 150.0))
    ap.add_argument("--out", default="out/m_map.csv")
    args = ap.parse_args(argv)

    geom = PlatformGeometry(phi=tuple(math.radians(p) for p in args.phi))
    angles, M = m_grid(geom, args.grid_n, args.limit_deg)
    rows = ["theta_x_deg,theta_y_deg,m"]
    rows += [f"{float(a)!r},{float(b)!r},{float(M[i, j])!r}" for i, a in enumerate(angles) for j, b in enumerate(angles)]
    atomic_write(args.out, "\n".join(rows) + "\n")

    i, j = np.unravel_index(np.argmin(M), M.shape)
    center = M[args.grid_n // 2, args.grid_n // 2] if args.grid_n % 2 else float("nan")
    print(f"phi={tuple(args.phi)} grid={args.grid_n}x{args.grid_n} limit={args.limit_deg} deg")
    print(f"min m={M.min():.6f} at ({angles[i]:.2f}, {angles[j]:.2f}) deg; max m={M.max():.6f}; centre m={center:.12f}")
    print(f"m>0 everywhere: {bool(M.min() > 0)}; wrote {args.out}")


if __name__ == "__main__":
    main()
