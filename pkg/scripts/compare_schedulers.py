"""Round robin vs proportional fair in the default scenario (median and mean normalized throughput)."""

import argparse
from pathlib import Path

from nbiot_sls import metrics
from nbiot_sls.config import SimConfig
from nbiot_sls.engine import Simulator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--terminals", type=int, default=4000)
    ap.add_argument("--ttis", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="results/schedulers")
    args = ap.parse_args()
    rows = []
    for sch in ("RR", "PF"):
        cfg = SimConfig(num_terminals=args.terminals, num_ttis=args.ttis, rng_seed=args.seed, scheduler=sch)
        r = Simulator(cfg).run()
        s = metrics.normalized_user_throughput(r)
        metrics.write_throughput(Path(args.out) / f"throughput_{sch.lower()}.csv", s)
        rows.append((sch, *s.median, *s.mean))
        print(f"{sch}: median DL {s.median[0]:.5f} UL {s.median[1]:.5f}, mean DL {s.mean[0]:.5f} UL {s.mean[1]:.5f}")
    metrics.write_csv(Path(args.out) / "schedulers.csv",
                   ["scheduler", "median_dl", "median_ul", "mean_dl", "mean_ul"], rows)


if __name__ == "__main__":
    main()
