"""Tentative ARMA order identification: ESACF, SCAN and MINIC.

All three work on an already differenced (stationary) series and report
(p, q) in terms of that series.  Tables are (p_max + 1) x (q_max + 1) with
rows indexed by AR order and columns by MA order; cells the sample cannot
support are NaN.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from ._validation import check_int
from .exceptions import RankDeficient, TooShort
from .ts_core import as_series, ols

SIGNIFICANCE = 0.05


@dataclass(frozen=True)
class OrderCandidate:
    p: int
    q: int
    source: str
    score: float = float("nan")


@dataclass(frozen=True)
class IdentificationTable:
    method: str
    grid: np.ndarray        # statistics; NaN marks a cell that cannot be computed
    significant: np.ndarray  # boolean, False where grid is NaN

    @property
    def computable(self) -> np.ndarray:
        return ~np.isnan(self.grid)


def _prepare(series, p_max, q_max):
    z = as_series(series).values
    p_max = check_int(p_max, "p_max", minimum=0)
    q_max = check_int(q_max, "q_max", minimum=0)
    if z.size < p_max + q_max + 5:
        raise TooShort(f"identification grid {p_max}x{q_max} needs {p_max + q_max + 5} points, got {z.size}")
    return z - z.mean(), p_max, q_max


def _lag_matrix(z: np.ndarray, rows: np.ndarray, lags) -> np.ndarray:
    return np.column_stack([z[rows - k] for k in lags])


def _autocorr(x: np.ndarray, k: int) -> float:
    x = x - x.mean()
    den = x @ x
    return float(x[:-k] @ x[k:] / den) if den > 0 else 0.0


# --- ESACF ------------------------------------------------------------------

def _ar_ols(z: np.ndarray, m: int):
    if m == 0:
        return np.zeros(0)
    rows = np.arange(m, z.size)
    if rows.size < m + 1:
        return None
    try:
        return ols(_lag_matrix(z, rows, range(1, m + 1)), z[rows]).coefficients
    except (RankDeficient, TooShort):
        return None


def esacf_table(series, p_max: int = 5, q_max: int = 5) -> IdentificationTable:
    """Extended sample autocorrelations.

    Cell (k, j) is the lag-(j+1) autocorrelation of the series filtered by
    the j-th iterated AR(k) estimate (iteration 0 is plain least squares),
    obtained with the recursion

        phi_i^(l)(k) = phi_i^(l-1)(k+1) - phi_{i-1}^(l-1)(k) * phi_{k+1}^(l-1)(k+1) / phi_k^(l-1)(k)

    (phi_0 = -1).  Significance uses the band 2 / sqrt(n - k - j).
    """
    z, p_max, q_max = _prepare(series, p_max, q_max)
    n = z.size
    top = p_max + q_max
    current = {m: _ar_ols(z, m) for m in range(top + 1)}
    grid = np.full((p_max + 1, q_max + 1), np.nan)
    for j in range(q_max + 1):
        lag = j + 1
        for k in range(p_max + 1):
            coefs = current.get(k)
            if coefs is None:
                continue
            rows = np.arange(k, n)
            w = z[rows] - (_lag_matrix(z, rows, range(1, k + 1)) @ coefs if k else 0.0)
            if w.size > lag + 1:
                grid[k, j] = _autocorr(w, lag)
        nxt = {}
        for m in range(top - j):
            lo, hi = current.get(m), current.get(m + 1)
            if lo is None or hi is None:
                nxt[m] = None
            elif m == 0:
                nxt[m] = np.zeros(0)
            elif lo[m - 1] == 0.0:
                nxt[m] = None
            else:
                shifted = np.r_[-1.0, lo[:m - 1]]
                nxt[m] = hi[:m] - shifted * hi[m] / lo[m - 1]
        current = nxt
    band = np.array([[2.0 / math.sqrt(max(n - k - j, 1)) for j in range(q_max + 1)]
                     for k in range(p_max + 1)])
    sig = np.where(np.isnan(grid), False, np.abs(np.nan_to_num(grid)) > band)
    return IdentificationTable("ESACF", grid, sig)


def _triangle_vertices(table: IdentificationTable) -> list[tuple[int, int]]:
    P, Q = table.grid.shape
    ok = table.computable
    valid = []
    for k in range(P):
        for j in range(Q):
            if not ok[k, j] or table.significant[k, j]:
                continue
            if all(not table.significant[k2, j2]
                   for k2 in range(k, P) for j2 in range(j + (k2 - k), Q)):
                valid.append((k, j))
    return [c for c in valid
            if not any(d != c and c[0] >= d[0] and c[1] - d[1] >= c[0] - d[0] for d in valid)]


def esacf(series, p_max: int = 5, q_max: int = 5):
    table = esacf_table(series, p_max, q_max)
    return table, [OrderCandidate(p, q, "ESACF", float(table.grid[p, q]))
                   for p, q in _triangle_vertices(table)]


# --- SCAN -------------------------------------------------------------------

def scan_table(series, p_max: int = 5, q_max: int = 5) -> IdentificationTable:
    """Smallest canonical correlations between (z_t..z_{t-m}) and (z_{t-j-1}..z_{t-j-1-m}).

    The grid holds chi-square(1) p-values of
    ``-(n - m - j) * log(1 - lambda / d(m, j))`` where
    ``d(m, j) = 1 + 2 * sum_{i<=j} r_i(w)^2`` and w is the series filtered by
    the canonical vector.
    """
    z, p_max, q_max = _prepare(series, p_max, q_max)
    n = z.size
    grid = np.full((p_max + 1, q_max + 1), np.nan)
    for m in range(p_max + 1):
        for j in range(q_max + 1):
            shift = j + 1
            rows = np.arange(m + shift, n)
            if rows.size < m + 3:
                continue
            Y = _lag_matrix(z, rows, range(0, m + 1))
            X = _lag_matrix(z, rows, range(shift, shift + m + 1))
            syy, sxx, syx = Y.T @ Y, X.T @ X, Y.T @ X
            try:
                a = np.linalg.solve(syy, syx) @ np.linalg.solve(sxx, syx.T)
            except np.linalg.LinAlgError:
                continue
            vals, vecs = np.linalg.eig(a)
            i = int(np.argmin(vals.real))
            lam = float(np.clip(vals.real[i], 0.0, 1.0 - 1e-12))
            vec = vecs[:, i].real
            if vec[0] == 0.0:
                continue
            w = Y @ (vec / vec[0])
            dfac = 1.0 + 2.0 * sum(_autocorr(w, k) ** 2 for k in range(1, j + 1) if w.size > k)
            stat = -(n - m - j) * math.log(1.0 - lam / dfac)
            grid[m, j] = float(chi2.sf(stat, 1))
    sig = np.where(np.isnan(grid), False, np.nan_to_num(grid, nan=1.0) < SIGNIFICANCE)
    return IdentificationTable("SCAN", grid, sig)


def _rectangle_corners(table: IdentificationTable) -> list[tuple[int, int]]:
    P, Q = table.grid.shape
    valid = []
    for m in range(P):
        for j in range(Q):
            if not table.computable[m, j] or table.significant[m, j]:
                continue
            if not table.significant[m:, j:].any():
                valid.append((m, j))
    return [c for c in valid if not any(d != c and d[0] <= c[0] and d[1] <= c[1] for d in valid)]


def scan(series, p_max: int = 5, q_max: int = 5):
    table = scan_table(series, p_max, q_max)
    return table, [OrderCandidate(p, q, "SCAN", float(table.grid[p, q]))
                   for p, q in _rectangle_corners(table)]


# --- MINIC ------------------------------------------------------------------

def minic(series, p_max: int = 5, q_max: int = 5):
    """BIC grid from Hannan-Rissanen regressions.

    A long autoregression (order picked by AIC over 1..ceil(n/4)) supplies
    innovation proxies; each (p, q) cell regresses z_t on p own lags and q
    lagged proxies, and BIC = log(sigma2) + (p + q) * log(n) / n.  Cells that
    would run out of rows use zero proxies before the first fitted point.
    Collinear cells are scored by their projection residuals.
    """
    z, p_max, q_max = _prepare(series, p_max, q_max)
    n = z.size
    best = None
    for m in range(1, math.ceil(n / 4) + 1):
        rows = np.arange(m, n)
        try:
            f = ols(_lag_matrix(z, rows, range(1, m + 1)), z[rows])
        except (RankDeficient, TooShort):
            continue
        s2 = f.residuals @ f.residuals / rows.size
        aic = math.log(s2) + 2.0 * m / rows.size
        if best is None or aic < best[0]:
            best = (aic, m, f.residuals)
    if best is None:
        raise TooShort("no long autoregression could be fitted")
    _, m_long, eps_tail = best
    # pre-sample innovations are taken as zero
    eps = np.r_[np.zeros(m_long), eps_tail]

    grid = np.full((p_max + 1, q_max + 1), np.nan)
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            start = max(p, m_long + q if q else 0)
            if n - start <= p + q + 1:
                start = max(p, q)  # short series: lean on the zero pre-sample proxies
            rows = np.arange(start, n)
            if rows.size <= p + q + 1:
                continue
            cols = [z[rows - i] for i in range(1, p + 1)] + [eps[rows - i] for i in range(1, q + 1)]
            if cols:
                # collinear cells (p beyond the long-AR order) still have a projection SSE
                X = np.column_stack(cols)
                resid = z[rows] - X @ np.linalg.lstsq(X, z[rows], rcond=None)[0]
            else:
                resid = z[rows]
            s2 = resid @ resid / rows.size
            if s2 <= 0:
                continue
            grid[p, q] = math.log(s2) + (p + q) * math.log(n) / n
    table = IdentificationTable("MINIC", grid, np.zeros_like(grid, dtype=bool))
    if np.all(np.isnan(grid)):
        raise TooShort("MINIC grid has no computable cell")
    p, q = np.unravel_index(np.nanargmin(grid), grid.shape)
    return table, OrderCandidate(int(p), int(q), "MINIC", float(grid[p, q]))


def tentative_orders(series, d: int = 0, p_max: int = 5, q_max: int = 5,
                     methods=("ESACF", "SCAN", "MINIC")) -> list[OrderCandidate]:
    """Union of the method suggestions, deduplicated on (p, q), always with (0, 0).

    ``d`` is informational: ``series`` must already be differenced d times.
    Merged candidates carry a comma-joined source tag.
    """
    check_int(d, "d", minimum=0)
    found: dict[tuple[int, int], list] = {}
    if "ESACF" in methods:
        for c in esacf(series, p_max, q_max)[1]:
            found.setdefault((c.p, c.q), []).append(c)
    if "SCAN" in methods:
        for c in scan(series, p_max, q_max)[1]:
            found.setdefault((c.p, c.q), []).append(c)
    if "MINIC" in methods:
        c = minic(series, p_max, q_max)[1]
        found.setdefault((c.p, c.q), []).append(c)
    found.setdefault((0, 0), [OrderCandidate(0, 0, "DEFAULT")])
    out = []
    for (p, q), cs in sorted(found.items(), key=lambda kv: (kv[0][0] + kv[0][1], kv[0])):
        out.append(OrderCandidate(p, q, ",".join(c.source for c in cs), cs[0].score))
    return out
