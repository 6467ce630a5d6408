"""Print measured characteristic points next to the theoretical ones.

    python3 scripts/summarize_exit.py results/exit/exit_points.csv
"""

import csv
import sys


def main(path: str) -> None:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'code':6} {'n':>2} {'rho':>5}  {'bal':>7} {'theory':>7}  {'unb':>7} {'theory':>7}  {'gap':>7}")
    for r in rows:
        bal, unb = float(r["lambda_bal"]), float(r["lambda_unb"])
        print(f"{r['code']:6} {r['n']:>2} {r['rho']:>5}  {bal:7.4f} {float(r['theory_lambda_bal']):7.4f}  "
              f"{unb:7.4f} {float(r['theory_lambda_unb']):7.4f}  {bal - unb:7.4f}")


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    main(sys.argv[1])
