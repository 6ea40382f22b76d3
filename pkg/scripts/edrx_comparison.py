"""Effect of eDRX: terminals awake per TTI and normalized throughput with and without power saving."""

import argparse
from pathlib import Path

from nbiot_sls import metrics
from nbiot_sls.config import SimConfig
from nbiot_sls.engine import Simulator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--terminals", type=int, nargs="+", default=[500, 4000])
    ap.add_argument("--ttis", type=int, default=20480)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="results/edrx")
    args = ap.parse_args()
    rows = []
    for n in args.terminals:
        for on in (True, False):
            cfg = SimConfig(num_terminals=n, num_ttis=args.ttis, rng_seed=args.seed, edrx_enabled=on)
            r = Simulator(cfg).run()
            s = metrics.normalized_user_throughput(r)
            rows.append((n, int(on), r.mean_awake, *s.mean, *s.median))
            print(f"{n:5d} terminals eDRX {'on ' if on else 'off'}: {r.mean_awake:7.1f} awake per TTI, "
                  f"mean DL {s.mean[0]:.5f} UL {s.mean[1]:.5f} bps/Hz")
    metrics.write_csv(Path(args.out) / "edrx.csv",
                   ["terminals", "edrx", "mean_awake", "mean_dl", "mean_ul", "median_dl", "median_ul"], rows)


if __name__ == "__main__":
    main()
