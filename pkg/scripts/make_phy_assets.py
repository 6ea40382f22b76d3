"""Regenerate the bundled link-abstraction tables in src/nbiot_sls/data/.

BLER curves are an AWGN model for one resource allocation without
repetition: logistic in dB around a per-MCS operating point placed a fixed
gap from the capacity needed for the MCS's transport block (plus CRC) over
the allocation's data resource elements. Downlink: one 180 kHz subframe
(N_SF = 1). Uplink: one single-tone resource unit (16 slots of 7 symbols,
one reference symbol per slot).
"""

import csv
import math
from pathlib import Path

import numpy as np

from nbiot_sls.phy import derive_cqi_thresholds, load_assets

DATA = Path(__file__).resolve().parents[1] / "src" / "nbiot_sls" / "data"

# NPDSCH transport block sizes, rows I_TBS 0..13, columns N_SF 1,2,3,4,5,6,8,10
TBS_ROWS = [
    [16, 32, 56, 88, 120, 152, 208, 256],
    [24, 56, 88, 144, 176, 208, 256, 344],
    [32, 72, 144, 176, 208, 256, 328, 424],
    [40, 104, 176, 208, 256, 328, 440, 568],
    [56, 120, 208, 256, 328, 408, 552, 680],
    [72, 144, 224, 328, 424, 504, 680, 872],
    [88, 176, 256, 392, 504, 600, 808, 1032],
    [104, 224, 328, 472, 584, 680, 968, 1224],
    [120, 256, 392, 536, 680, 808, 1096, 1352],
    [136, 296, 456, 616, 776, 936, 1256, 1544],
    [144, 328, 504, 680, 872, 1000, 1384, 1736],
    [176, 376, 584, 776, 1000, 1192, 1608, 2024],
    [208, 440, 680, 1000, 1128, 1352, 1800, 2280],
    [224, 488, 744, 1032, 1256, 1544, 2024, 2536],
]
N_SF_COLUMNS = [1, 2, 3, 4, 5, 6, 8, 10]

DATA_RE = {"dl": 152, "ul": 96}  # 12 x 14 - 16 reference REs; 16 x 7 - 16 DMRS REs
SUFFIX = {"dl": "", "ul": "_ul"}
CRC_BITS = 24
GAP_DB = 3.0
SLOPE_PER_DB = 2.0
SNR_GRID = np.arange(-15.0, 25.0 + 1e-9, 0.25)
BLER_FLOOR = 1e-5


def tbs_full_table():
    """Expand to n_sf = 1..10; counts without a standard column use the next lower one."""
    table = {}
    for mcs, row in enumerate(TBS_ROWS):
        for n_sf in range(1, 11):
            col = max(i for i, c in enumerate(N_SF_COLUMNS) if c <= n_sf)
            table[mcs, n_sf] = row[col]
    return table


def operating_point_db(mcs, link="dl"):
    se = (TBS_ROWS[mcs][0] + CRC_BITS) / DATA_RE[link]
    return 10.0 * math.log10(2.0**se - 1.0) + GAP_DB


def bler_curve(mcs, link="dl"):
    x10 = operating_point_db(mcs, link)
    x50 = x10 - math.log(9.0) / SLOPE_PER_DB
    bler = 1.0 / (1.0 + np.exp(SLOPE_PER_DB * (SNR_GRID - x50)))
    return np.maximum(bler, BLER_FLOOR)


def write_curves(link):
    sfx = SUFFIX[link]
    with open(DATA / f"bler_curves{sfx}.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mcs", "snr_db", "bler"])
        for mcs in range(len(TBS_ROWS)):
            for snr, b in zip(SNR_GRID, bler_curve(mcs, link)):
                w.writerow([mcs, f"{snr:.2f}", f"{b:.6g}"])


def write_thresholds(link):
    # thresholds come from the curves just written
    assets = load_assets(DATA, derive_thresholds=True, link=link)
    thresholds = derive_cqi_thresholds(assets.bler_curves)
    with open(DATA / f"cqi_thresholds{SUFFIX[link]}.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cqi", "snr_db"])
        for cqi, snr in enumerate(thresholds, start=1):
            w.writerow([cqi, f"{snr:.4f}"])


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    with open(DATA / "tbs_table.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mcs", "n_sf", "bits"])
        for (mcs, n_sf), bits in sorted(tbs_full_table().items()):
            w.writerow([mcs, n_sf, bits])
    for link in ("dl", "ul"):
        write_curves(link)
        write_thresholds(link)


if __name__ == "__main__":
    main()
