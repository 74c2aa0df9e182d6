"""Independent reference implementations used as test oracles.

Each one is written from the textbook definition with plain loops or normal
equations, deliberately avoiding the code paths of the package.
"""
import math

import numpy as np
from scipy.signal import lfilter

# US NRCA x 1e6 for the six revealed categories, 1996-2016.
US_NRCA = {
    "5201": [474.32, 420.97, 392.00, 92.27, 217.65, 273.19, 255.00, 366.25, 406.10, 334.84,
             332.55, 293.19, 269.48, 237.20, 326.33, 400.89, 277.48, 241.65, 189.75, 198.94,
             239.33],
    "5502": [73.14, 53.29, 53.07, 47.23, 35.92, 45.73, 40.32, 34.13, 37.40, 39.64, 37.25,
             40.76, 45.10, 61.84, 50.86, 44.47, 50.92, 52.98, 51.94, 47.55, 50.07],
    "5603": [3.91, 18.69, 15.41, 9.92, 26.78, 32.63, 39.27, 50.53, 50.64, 61.20, 60.09,
             39.51, 39.46, 41.84, 45.75, 39.32, 42.85, 44.10, 40.45, 36.44, 33.56],
    "5205": [-102.75, -90.44, -75.10, -61.45, -44.77, -42.71, -32.39, -32.45, -14.37, 1.69,
             5.98, 11.12, 17.85, 20.24, 15.74, 50.69, 18.85, 7.87, 12.02, 13.06, 20.09],
    "5703": [-8.37, 7.80, 11.50, 11.22, 22.18, 21.61, 19.10, 18.00, 22.47, 25.70, 26.17,
             17.13, 24.97, 22.68, 24.73, 22.07, 23.23, 20.43, 19.05, 16.50, 17.20],
    "6309": [23.11, 22.84, 17.54, 13.01, 15.24, 12.79, 13.69, 15.00, 15.49, 13.20, 10.89,
             12.44, 13.81, 14.16, 15.51, 18.34, 18.59, 19.26, 18.47, 16.17, 17.82],
}
YEARS = list(range(1996, 2017))


def nrca_brute(records, country, commodity, year):
    """E_j^i / E - E_j * E^i / E^2 from raw (reporter, year, code, value) tuples."""
    e_ij = e_j = e_i = e = 0.0
    for rep, yr, code, val in records:
        if yr != year:
            continue
        code = code[:4]
        e += val
        if code == commodity:
            e_j += val
        if rep == country:
            e_i += val
            if code == commodity:
                e_ij += val
    return e_ij / e - e_j * e_i / (e * e)


def acf_brute(x, k):
    x = [float(v) for v in x]
    m = sum(x) / len(x)
    num = sum((x[t] - m) * (x[t + k] - m) for t in range(len(x) - k))
    den = sum((v - m) ** 2 for v in x)
    return num / den


def ols_normal_equations(X, y):
    """Coefficients, residuals and standard errors via (X'X)^-1 X'y."""
    X, y = np.asarray(X, float), np.asarray(y, float)
    xtx_inv = np.linalg.inv(X.T @ X)
    beta = xtx_inv @ X.T @ y
    resid = y - X @ beta
    s2 = resid @ resid / (len(y) - X.shape[1])
    return beta, resid, np.sqrt(np.diag(xtx_inv) * s2)


def df_tau(y):
    """Dickey-Fuller tau with a constant and no augmentation."""
    y = np.asarray(y, float)
    dy = np.diff(y)
    X = np.column_stack([np.ones(dy.size), y[:-1]])
    beta, _, se = ols_normal_equations(X, dy)
    return beta[1] / se[1]


def ljung_box_brute(e, m):
    """Q with autocorrelations taken about zero."""
    e = [float(v) for v in e]
    n = len(e)
    den = sum(v * v for v in e)
    q = 0.0
    for k in range(1, m + 1):
        r = sum(e[t] * e[t + k] for t in range(n - k)) / den
        q += r * r / (n - k)
    return n * (n + 2) * q


def drift_forecast(values, h):
    """Random walk with drift: last + h * mean(diff), stderr sigma*sqrt(h)."""
    v = np.asarray(values, float)
    dv = np.diff(v)
    mu = dv.mean()
    sigma = math.sqrt(((dv - mu) ** 2).sum() / (dv.size - 1))
    return v[-1] + h * mu, sigma * math.sqrt(h)


# MacKinnon (2010) response surface for the constant-only Dickey-Fuller tau,
# q(T) = b_inf + b1/T + b2/T^2 + b3/T^3.
MACKINNON_C = {
    0.01: (-3.43035, -6.5393, -16.786, -79.433),
    0.05: (-2.86154, -2.8903, -4.234, -40.040),
    0.10: (-2.56677, -1.5384, -2.809, 0.0),
}


def mackinnon_critical(alpha, nobs):
    b = MACKINNON_C[alpha]
    return b[0] + b[1] / nobs + b[2] / nobs**2 + b[3] / nobs**3


def simulate_arma(ar=(), ma=(), n=500, seed=0, burn=100, sigma=1.0, mu=0.0):
    """Gaussian ARMA path via a direct difference-equation filter."""
    e = np.random.default_rng(seed).standard_normal(n + burn) * sigma
    return mu + lfilter(np.r_[1.0, ma], np.r_[1.0, -np.asarray(ar, float)], e)[burn:]
