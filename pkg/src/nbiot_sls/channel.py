"""Large-scale gains (path loss, antenna pattern, correlated shadowing) and small-scale fading."""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import brentq
from scipy.spatial.distance import cdist

MAX_SHADOW_NODES = 12000
CHOLESKY_JITTER = 1e-9


@dataclass(frozen=True)
class PathLossParams:
    """Macro-cell path loss plus the fixed losses applied on every link.

    ``psi_floor`` is the minimum coupling (before cable and penetration loss)
    in dB; ``delta`` is the cable loss and ``xi`` the building penetration loss.
    """

    H: float = 15.0
    f: float = 900.0
    psi_floor: float = 0.0
    delta: float = 3.0
    xi: float = 20.0
    g_terminal: float = -4.0

    @property
    def is_reference(self):
        return self.H == 15.0 and self.f == 900.0


@dataclass(frozen=True)
class AntennaPattern:
    g_max: float = 18.0
    beamwidth: float = 65.0
    floor_attenuation: float = 23.0


def path_loss_db(R, params=PathLossParams()):
    """Path loss in dB for distance ``R`` in meters (the model takes kilometers).

    At H = 15 m and f = 900 MHz the reduced form ``120.9 + 37.6 log10(R_km)`` is
    used; other heights and frequencies go through the full expression.
    """
    R = np.asarray(R, dtype=float)
    if np.any(R <= 0):
        raise ValueError("distance must be positive")
    r_km = R / 1000.0
    if params.is_reference:
        out = 120.9 + 37.6 * np.log10(r_km)
    else:
        out = (
            40.0 * (1.0 - 4e-3 * params.H) * np.log10(r_km)
            - 18.0 * np.log10(params.H)
            + 21.0 * np.log10(params.f)
            + 80.0
        )
    return out if out.ndim else float(out)


def antenna_gain_db(theta, pattern=AntennaPattern()):
    """Sector antenna gain in dBi at angle ``theta`` (degrees) off boresight."""
    theta = np.asarray(theta, dtype=float)
    att = np.minimum(12.0 * (theta / pattern.beamwidth) ** 2, pattern.floor_attenuation)
    out = pattern.g_max - att
    return out if out.ndim else float(out)


def coupling_alpha_db(R, theta, params, pattern=AntennaPattern()):
    """Deterministic coupling loss: max(L - G_BS - G_terminal, floor) + cable + penetration."""
    inner = path_loss_db(R, params) - antenna_gain_db(theta, pattern) - params.g_terminal
    out = np.maximum(inner, params.psi_floor) + params.delta + params.xi
    return out if np.ndim(out) else float(out)


def path_loss_params(cfg):
    base = PathLossParams(
        H=cfg.enb_antenna_height,
        f=cfg.carrier_freq,
        delta=cfg.cable_loss,
        xi=cfg.penetration_loss,
        g_terminal=cfg.terminal_antenna_gain,
    )
    if cfg.psi_mode == "paper_value":
        psi = cfg.psi_fixed_db
    else:
        psi = path_loss_db(cfg.min_link_distance, base) - cfg.enb_antenna_gain_max - cfg.terminal_antenna_gain
    return PathLossParams(base.H, base.f, float(psi), base.delta, base.xi, base.g_terminal)


def antenna_pattern(cfg):
    return AntennaPattern(cfg.enb_antenna_gain_max, cfg.antenna_beamwidth, cfg.antenna_floor)


def wrap_degrees(angle):
    return (np.asarray(angle) + 180.0) % 360.0 - 180.0


def link_geometry(points, sites, sectors, cfg):
    """Distances (n, n_sites) and pattern angles (n, n_sectors) for ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    spos = np.array([[s.x, s.y] for s in sites])
    dx = pts[:, None, 0] - spos[None, :, 0]
    dy = pts[:, None, 1] - spos[None, :, 1]
    dist = np.hypot(dx, dy)
    site_idx = np.array([sec.site_id for sec in sectors])
    if cfg.pattern_plane == "vertical":
        elev = np.degrees(np.arctan2(cfg.enb_antenna_height, np.maximum(dist, 1e-9)))
        theta = elev[:, site_idx]
    else:
        az = np.degrees(np.arctan2(dy, dx))
        bore = np.array([sec.boresight_azimuth for sec in sectors])
        theta = wrap_degrees(az[:, site_idx] - bore[None, :])
    return dist, theta


# --- correlated shadowing -------------------------------------------------------


def correlation(x, d_corr):
    """Exponentially decaying spatial correlation r(x) = exp(-x / d_corr)."""
    return np.exp(-np.asarray(x, dtype=float) / d_corr)


class ShadowingError(ValueError):
    pass


_FACTOR_CACHE = {}

# quadrature for the lag calibration: point offsets inside a cell and lag directions
_CAL_OFFSETS = (np.arange(8) + 0.5) / 8
_CAL_ANGLES = np.radians(np.arange(0.0, 90.0, 15.0))


def bilinear_weights(fx, fy):
    """Bilinear weights of the corners (0,0), (1,0), (0,1), (1,1) of a unit cell."""
    fx, fy = np.asarray(fx, dtype=float), np.asarray(fy, dtype=float)
    return np.stack([(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy], axis=-1)


def _cell_variance(w, r1, rd):
    return (
        (w**2).sum(axis=-1)
        + 2 * r1 * (w[..., 0] * w[..., 1] + w[..., 0] * w[..., 2] + w[..., 1] * w[..., 3] + w[..., 2] * w[..., 3])
        + 2 * rd * (w[..., 0] * w[..., 3] + w[..., 1] * w[..., 2])
    )


def interpolated_correlation(lag, spacing, node_d_corr):
    """Correlation at distance ``lag`` of the variance-normalized bilinear field,
    averaged over point positions inside a cell and lag directions."""
    fx, fy = np.meshgrid(_CAL_OFFSETS, _CAL_OFFSETS)
    fx, fy = fx.ravel(), fy.ravel()
    corner = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float) * spacing
    r1 = float(correlation(spacing, node_d_corr))
    rd = float(correlation(spacing * np.sqrt(2.0), node_d_corr))
    wa = bilinear_weights(fx, fy)
    wa = wa / np.sqrt(_cell_variance(wa, r1, rd))[:, None]
    pa = np.column_stack([fx, fy]) * spacing
    out = []
    for ang in _CAL_ANGLES:
        pb = pa + lag * np.array([np.cos(ang), np.sin(ang)])
        cb = np.floor(pb / spacing)
        fb = pb / spacing - cb
        wb = bilinear_weights(fb[:, 0], fb[:, 1])
        wb = wb / np.sqrt(_cell_variance(wb, r1, rd))[:, None]
        na = corner[None, :, :]
        nb = cb[:, None, :] * spacing + corner[None, :, :]
        d = np.linalg.norm(na[:, :, None, :] - nb[:, None, :, :], axis=-1)
        out.append(np.einsum("pi,pij,pj->p", wa, correlation(d, node_d_corr), wb))
    return float(np.mean(out))


def node_correlation_distance(spacing, d_corr):
    """Node-grid decorrelation distance that gives the interpolated field
    correlation exp(-1) at distance ``d_corr``.

    Bilinear interpolation smooths the field, which raises its correlation at
    a given lag; the node field is generated slightly less correlated to
    compensate.
    """
    target = math.exp(-1.0)
    f = lambda d: interpolated_correlation(d_corr, spacing, d) - target
    if spacing <= 0 or f(d_corr) <= 0:
        return float(d_corr)
    return float(brentq(f, 0.25 * d_corr, d_corr, xtol=1e-6 * d_corr))


def cholesky_factor(nodes, d_corr):
    """Lower Cholesky factor of the correlation matrix over ``nodes`` (cached)."""
    nodes = np.ascontiguousarray(nodes, dtype=float)
    key = (float(d_corr), nodes.shape, nodes.tobytes())
    hit = _FACTOR_CACHE.get(key)
    if hit is not None:
        return hit
    if len(nodes) > MAX_SHADOW_NODES:
        raise ShadowingError(
            f"shadowing grid has {len(nodes)} nodes (max {MAX_SHADOW_NODES}); "
            "increase shadow_grid_spacing"
        )
    R = cdist(nodes, nodes)
    R /= -d_corr
    np.exp(R, out=R)
    R[np.diag_indices_from(R)] += CHOLESKY_JITTER
    try:
        L = scipy.linalg.cholesky(R, lower=True, overwrite_a=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ShadowingError(f"correlation matrix not positive definite: {exc}") from None
    _FACTOR_CACHE.clear()
    _FACTOR_CACHE[key] = L
    return L


@dataclass
class ShadowingGrid:
    """Coarse node grid carrying the correlated field.

    Only nodes needed to interpolate the ROI pixels are active; ``index`` maps
    a (row, col) node to its position in the active list or -1. ``d_corr`` is
    the decorrelation distance of the interpolated field; the nodes are
    correlated over ``node_d_corr`` (see ``node_correlation_distance``).
    """

    origin: tuple
    spacing: float
    nx: int
    ny: int
    index: np.ndarray
    nodes: np.ndarray
    d_corr: float
    node_d_corr: float = None

    def __post_init__(self):
        if self.node_d_corr is None:
            self.node_d_corr = node_correlation_distance(self.spacing, self.d_corr)

    @classmethod
    def covering(cls, points, spacing, d_corr):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo = np.floor(pts.min(axis=0) / spacing) * spacing
        hi = np.ceil(pts.max(axis=0) / spacing) * spacing
        nx = int(round((hi[0] - lo[0]) / spacing)) + 2
        ny = int(round((hi[1] - lo[1]) / spacing)) + 2
        grid = cls((float(lo[0]), float(lo[1])), float(spacing), nx, ny,
                   np.full((ny, nx), -1, dtype=np.int64), np.empty((0, 2)), float(d_corr))
        i, j, _, _ = grid._cell(pts)
        need = np.zeros((ny, nx), dtype=bool)
        for di in (0, 1):
            for dj in (0, 1):
                need[j + dj, i + di] = True
        rows, cols = np.nonzero(need)
        grid.index[rows, cols] = np.arange(len(rows))
        grid.nodes = np.column_stack([lo[0] + cols * spacing, lo[1] + rows * spacing])
        return grid

    def _cell(self, pts):
        u = (pts[:, 0] - self.origin[0]) / self.spacing
        v = (pts[:, 1] - self.origin[1]) / self.spacing
        i = np.clip(np.floor(u).astype(np.int64), 0, self.nx - 2)
        j = np.clip(np.floor(v).astype(np.int64), 0, self.ny - 2)
        return i, j, u - i, v - j

    def interpolation(self, points):
        """Active-node indices (n, 4) and normalized weights (n, 4) for ``points``.

        Weights are bilinear, rescaled so the interpolated value keeps unit
        variance given the node correlation.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        u = (pts - np.asarray(self.origin)) / self.spacing
        if np.any(u < 0) or np.any(u[:, 0] > self.nx - 1) or np.any(u[:, 1] > self.ny - 1):
            raise ShadowingError("point outside the shadowing grid")
        i, j, fx, fy = self._cell(pts)
        idx = np.stack([self.index[j, i], self.index[j, i + 1],
                        self.index[j + 1, i], self.index[j + 1, i + 1]], axis=1)
        if np.any(idx < 0):
            raise ShadowingError("point outside the shadowing grid")
        w = bilinear_weights(fx, fy)
        r1 = float(correlation(self.spacing, self.node_d_corr))
        rd = float(correlation(self.spacing * np.sqrt(2.0), self.node_d_corr))
        return idx, w / np.sqrt(_cell_variance(w, r1, rd))[:, None]

    def factor(self):
        return cholesky_factor(self.nodes, self.node_d_corr)

    def sample(self, rng, n, std):
        """``n`` independent fields on the active nodes, shape (n_nodes, n), in dB."""
        if std == 0 or len(self.nodes) == 0:
            return np.zeros((len(self.nodes), n))
        a = rng.standard_normal((len(self.nodes), n))
        return std * (self.factor() @ a)


@dataclass
class ShadowingField:
    grid: ShadowingGrid
    values: np.ndarray
    std: float

    def at(self, points):
        idx, w = self.grid.interpolation(points)
        return (self.values[idx] * w).sum(axis=1)

    def raster(self):
        """(x, y, shadow_db) for every active node."""
        return np.column_stack([self.grid.nodes, self.values])


def generate_shadowing(pixel_map, cfg, rng, n_fields):
    """One independent correlated shadowing field per site over the ROI."""
    grid = ShadowingGrid.covering(pixel_map.roi_centers(), cfg.shadow_grid_spacing,
                                  cfg.shadow_corr_distance)
    values = grid.sample(rng, n_fields, cfg.shadow_std)
    return [ShadowingField(grid, values[:, k], cfg.shadow_std) for k in range(n_fields)]


# --- large-scale link table -----------------------------------------------------


@dataclass
class LinkGainTable:
    """Frozen large-scale state for every (terminal, sector) pair.

    ``coupling_db`` includes path loss, antenna gains, cable and penetration
    loss and shadowing; ``shadow_db`` is per (terminal, site).
    """

    distance: np.ndarray
    theta: np.ndarray
    shadow_db: np.ndarray
    coupling_db: np.ndarray
    sector_site: np.ndarray

    @property
    def gain_linear(self):
        return 10.0 ** (-self.coupling_db / 10.0)


def build_link_table(points, sites, sectors, cfg, shadow_fields=None, shadow_db=None):
    params = path_loss_params(cfg)
    pattern = antenna_pattern(cfg)
    dist, theta = link_geometry(points, sites, sectors, cfg)
    sector_site = np.array([sec.site_id for sec in sectors])
    if shadow_db is None:
        if shadow_fields is None:
            shadow_db = np.zeros(dist.shape)
        else:
            shadow_db = np.column_stack([f.at(points) for f in shadow_fields])
    alpha = coupling_alpha_db(dist[:, sector_site], theta, params, pattern)
    coupling = alpha + shadow_db[:, sector_site]
    return LinkGainTable(dist, theta, shadow_db, coupling, sector_site)


# --- small-scale fading ---------------------------------------------------------


@dataclass
class FadingProcess:
    """Per-link flat block-Rayleigh fading, first-order autoregressive across TTIs.

    Links are advanced lazily: a link last sampled at t0 and queried at t moves
    by ``rho**(t - t0)``, which has the same law as stepping every TTI.
    """

    n_links: int
    rho: float = 0.9
    model: str = "block-rayleigh"
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    def __post_init__(self):
        self.h = np.zeros(self.n_links, dtype=complex)
        self.last_t = np.full(self.n_links, -1, dtype=np.int64)

    def _cn(self, n):
        z = self.rng.standard_normal((n, 2))
        return (z[:, 0] + 1j * z[:, 1]) * np.sqrt(0.5)

    def coefficients(self, links, t):
        links = np.asarray(links, dtype=np.int64)
        if self.model == "none":
            return np.ones(len(links), dtype=complex)
        fresh = self.last_t[links] < 0
        lag = np.where(fresh, 0, t - self.last_t[links])
        if np.any(lag < 0):
            raise ValueError("fading queried backwards in time")
        coef = np.where(fresh, 0.0, self.rho ** lag.astype(float))
        w = self._cn(len(links))
        h = coef * self.h[links] + np.sqrt(1.0 - coef**2) * w
        moved = fresh | (lag > 0)
        h = np.where(moved, h, self.h[links])
        self.h[links] = h
        self.last_t[links] = t
        return h

    def gains(self, links, t):
        """|h|^2 for ``links`` at TTI ``t``."""
        return np.abs(self.coefficients(links, t)) ** 2


def fading_gain(process, link, t, n=0):
    """Linear power gain of ``link`` at TTI ``t`` on subcarrier ``n`` (flat across subcarriers)."""
    return float(process.gains([link], t)[0])
