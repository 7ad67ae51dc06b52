"""Print the ground-state band table of an ``altwave band`` CSV."""
import csv
import sys


def main(path):
    with open(path) as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    print(f"{'eps':>6} {'mu':>8} {'tau':>6} {'lambda-tau^2/eps^2':>20} {'diff_hom':>11} {'diff_ref':>11}")
    for r in rows:
        if r["n"] != "1":
            continue
        ref = float(r["diff_refined"]) if r["diff_refined"] else float("nan")
        print(f"{float(r['epsilon']):6.3f} {float(r['mu']):8.4f} {float(r['tau']):6.2f} "
              f"{float(r['lambda_shifted']):20.12f} {float(r['diff_homogenized']):11.3e} {ref:11.3e}")


if __name__ == "__main__":
    main(sys.argv[1])
