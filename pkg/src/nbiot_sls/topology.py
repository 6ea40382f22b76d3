"""Hexagonal site layout, sectorization, the ROI pixel map and terminal drops."""

import csv
import dataclasses
from dataclasses import dataclass

import numpy as np

LAYERS = ("inner", "middle", "outer")


@dataclass(frozen=True)
class Site:
    id: int
    x: float
    y: float
    layer: str

    @property
    def position(self):
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class Sector:
    site_id: int
    sector_index: int
    boresight_azimuth: float


@dataclass(frozen=True)
class Terminal:
    id: int
    x: float
    y: float
    serving_site: int = -1
    serving_sector: int = -1

    @property
    def position(self):
        return np.array([self.x, self.y])


@dataclass
class PixelMap:
    """Regular grid of candidate terminal positions.

    Pixel ``(row, col)`` has its center at ``origin + (col, row) * resolution``.
    ``roi`` marks the pixels where terminals may be dropped.
    """

    origin: tuple
    resolution: float
    width: int
    height: int
    roi: np.ndarray

    def centers(self):
        xs = self.origin[0] + np.arange(self.width) * self.resolution
        ys = self.origin[1] + np.arange(self.height) * self.resolution
        return np.meshgrid(xs, ys)

    def roi_centers(self):
        gx, gy = self.centers()
        return np.column_stack([gx[self.roi], gy[self.roi]])

    @property
    def roi_pixel_count(self):
        return int(self.roi.sum())


def _axial_sites(rings):
    coords = []
    for q in range(-rings, rings + 1):
        for r in range(-rings, rings + 1):
            ring = max(abs(q), abs(r), abs(q + r))
            if ring <= rings:
                coords.append((ring, q, r))
    return coords


def build_layout(cfg):
    """Sites on a hexagonal lattice (1 + 6 + 12) and their sectors.

    Ring-1 neighbors sit at azimuths 0, 60, ..., 300 degrees; sites are ordered
    by ring, then by azimuth.
    """
    d = cfg.inter_site_distance
    a1 = np.array([d, 0.0])
    a2 = np.array([d / 2.0, d * np.sqrt(3.0) / 2.0])
    entries = []
    for ring, q, r in _axial_sites(cfg.rings):
        pos = q * a1 + r * a2
        az = np.degrees(np.arctan2(pos[1], pos[0])) % 360.0
        entries.append((ring, round(az, 9), pos))
    entries.sort(key=lambda e: (e[0], e[1]))
    sites = [Site(i, float(p[0]), float(p[1]), LAYERS[ring]) for i, (ring, _, p) in enumerate(entries)]
    step = 360.0 / cfg.sectors_per_site
    sectors = [Sector(s.id, k, k * step) for s in sites for k in range(cfg.sectors_per_site)]
    return sites, sectors


def site_positions(sites):
    return np.array([[s.x, s.y] for s in sites])


def in_cell(points, center, inter_site_distance):
    """Mask of ``points`` inside the hexagonal cell (Voronoi region) of a site."""
    rel = np.asarray(points, dtype=float) - np.asarray(center, dtype=float)
    inside = np.ones(len(rel), dtype=bool)
    apothem = inter_site_distance / 2.0
    for k in range(6):
        ang = np.radians(60.0 * k)
        proj = rel[:, 0] * np.cos(ang) + rel[:, 1] * np.sin(ang)
        inside &= proj <= apothem + 1e-9
    return inside


def roi_sites(cfg, sites):
    return [s for s in sites if cfg.roi == "all" or s.id == 0]


def build_pixel_map(cfg, sites):
    """Pixel map covering the ROI (center cell, or all cells when ``roi = all``).

    Pixels closer than ``min_link_distance`` to any site are outside the ROI.
    """
    res = cfg.pixel_resolution
    cells = roi_sites(cfg, sites)
    radius = cfg.inter_site_distance / np.sqrt(3.0)
    pos = site_positions(cells)
    lo = pos.min(axis=0) - radius
    hi = pos.max(axis=0) + radius
    i0 = np.ceil(lo / res).astype(int)
    i1 = np.floor(hi / res).astype(int)
    origin = (float(i0[0] * res), float(i0[1] * res))
    width, height = int(i1[0] - i0[0] + 1), int(i1[1] - i0[1] + 1)
    pm = PixelMap(origin, res, width, height, np.zeros((height, width), dtype=bool))
    gx, gy = pm.centers()
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    roi = np.zeros(len(pts), dtype=bool)
    for s in cells:
        roi |= in_cell(pts, (s.x, s.y), cfg.inter_site_distance)
    all_pos = site_positions(sites)
    for p in all_pos:
        roi &= np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1]) >= cfg.min_link_distance
    pm.roi = roi.reshape(height, width)
    return pm


class DropError(ValueError):
    pass


def drop_positions(cfg, pixel_map, rng):
    centers = pixel_map.roi_centers()
    n = cfg.num_terminals
    if n > len(centers) and not cfg.allow_duplicate_pixels:
        raise DropError(
            f"ROI has {len(centers)} pixels, cannot place {n} terminals uniquely "
            "(set allow_duplicate_pixels)"
        )
    idx = rng.choice(len(centers), size=n, replace=cfg.allow_duplicate_pixels)
    return centers[idx]


def drop_terminals(cfg, pixel_map, rng):
    """Place ``num_terminals`` terminals uniformly over the ROI pixel centers."""
    pos = drop_positions(cfg, pixel_map, rng)
    return [Terminal(i, float(x), float(y)) for i, (x, y) in enumerate(pos)]


def attach_terminals(terminals, sectors, coupling_db, candidate_sectors=None):
    """Assign each terminal to the sector with the lowest large-scale coupling loss.

    ``coupling_db`` has shape ``(n_terminals, n_sectors)`` in the order of
    ``sectors``. Ties go to the lowest sector index.
    """
    loss = np.asarray(coupling_db, dtype=float)
    if candidate_sectors is not None:
        masked = np.full_like(loss, np.inf)
        masked[:, candidate_sectors] = loss[:, candidate_sectors]
        loss = masked
    best = np.argmin(loss, axis=1)
    return [
        dataclasses.replace(t, serving_site=sectors[b].site_id, serving_sector=sectors[b].sector_index)
        for t, b in zip(terminals, best)
    ]


def write_layout_csv(sites, terminals, site_path, terminal_path):
    with open(site_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["site_id", "x_m", "y_m", "layer"])
        for s in sites:
            w.writerow([s.id, repr(s.x), repr(s.y), s.layer])
    with open(terminal_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["terminal_id", "x_m", "y_m", "serving_site", "serving_sector"])
        for t in terminals:
            w.writerow([t.id, repr(t.x), repr(t.y), t.serving_site, t.serving_sector])
