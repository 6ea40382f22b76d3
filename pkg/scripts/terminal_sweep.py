"""Median normalized throughput against the number of terminals per sector (RR, eDRX on)."""

import argparse
from pathlib import Path

from nbiot_sls import metrics
from nbiot_sls.config import SimConfig
from nbiot_sls.engine import Simulator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--terminals", type=int, nargs="+", default=[1000, 2000, 3000, 4000])
    ap.add_argument("--ttis", type=int, default=100000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="results/sweep")
    args = ap.parse_args()
    rows = []
    for n in args.terminals:
        cfg = SimConfig(num_terminals=n, num_ttis=args.ttis, rng_seed=args.seed, scheduler="RR", edrx_enabled=True)
        r = Simulator(cfg).run()
        s = metrics.normalized_user_throughput(r)
        rows.append((n, *s.median, r.mean_awake))
        print(f"{n:5d} terminals: median DL {s.median[0]:.5f} UL {s.median[1]:.5f} bps/Hz, "
              f"{r.mean_awake:.1f} awake per TTI")
    metrics.write_csv(Path(args.out) / "sweep.csv", ["terminals", "median_dl", "median_ul", "mean_awake"], rows)


if __name__ == "__main__":
    main()
