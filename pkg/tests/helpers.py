"""Independent dense-linear-algebra oracles shared by the test modules.

Everything here forms matrices explicitly with ``np.linalg.inv`` so that it
shares no code path with the Cholesky/substitution machinery under test.
"""

import numpy as np


def gauss_corr(A, B, theta, powers=2.0):
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    theta = np.broadcast_to(np.asarray(theta, float), (A.shape[1],))
    powers = np.broadcast_to(np.asarray(powers, float), (A.shape[1],))
    out = np.ones((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            s = sum(theta[k] * abs(A[i, k] - B[j, k]) ** powers[k] for k in range(A.shape[1]))
            out[i, j] = np.exp(-s)
    return out


def series_inverse(R, delta, M):
    """``sum_{k=1}^M delta^(k-1) (R + delta I)^(-k)``; plain inverse when delta is 0."""
    n = R.shape[0]
    if delta == 0:
        return np.linalg.inv(R)
    B = np.linalg.inv(R + delta * np.eye(n))
    total = np.zeros_like(R)
    P = np.eye(n)
    for k in range(1, M + 1):
        P = P @ B
        total += delta ** (k - 1) * P
    return total


def dense_neg2_loglik(R, y, Ainv=None):
    """``-log|A| + n log[(y - mu 1)' A (y - mu 1)]`` with ``A`` defaulting to ``R^{-1}``."""
    n = len(y)
    A = np.linalg.inv(R) if Ainv is None else Ainv
    one = np.ones(n)
    mu = (one @ A @ y) / (one @ A @ one)
    res = y - mu
    return -np.linalg.slogdet(A)[1] + n * np.log(res @ A @ res)


def dense_predict(X, y, theta, x_star, A, sigma2=None):
    """Mean and MSE of the linear predictor built on an explicit ``A ~ R^{-1}``."""
    R = gauss_corr(X, X, theta)
    r = gauss_corr(X, x_star, theta)  # n x q
    one = np.ones(len(y))
    s1 = one @ A @ one
    C = A @ r + np.outer(A @ one, (1 - one @ A @ r) / s1)
    mean = C.T @ y
    if sigma2 is None:
        mu = (one @ A @ y) / s1
        sigma2 = (y - mu) @ A @ (y - mu) / len(y)
    mse = sigma2 * (1 - 2 * np.einsum("iq,iq->q", C, r) + np.einsum("iq,iq->q", C, R @ C))
    return mean, mse


def near_singular_instance():
    """1-d, nine equispaced sites plus one 1e-7 beyond the middle, smooth response."""
    x = np.sort(np.append(np.linspace(0, 1, 9), 0.5 + 1e-7))
    X = x[:, None]
    return X, np.sin(6 * x) + x


def mp_predict(X, y, theta, x_star, delta, M=1, dps=50):
    """Extended-precision mean and MSE of the order-M nugget predictor.

    Forms ``A = sum_{k<=M} delta^(k-1) (R + delta I)^(-k)`` in mpmath, estimates
    ``mu`` and ``sigma^2`` with ``A``, and evaluates ``C'Y`` and
    ``sigma^2 (1 - 2C'r + C'RC)`` term by term.
    """
    import mpmath as mp

    with mp.workdps(dps):
        n, d = X.shape
        th = [mp.mpf(float(t)) for t in np.broadcast_to(theta, (d,))]

        def c(a, b):
            return mp.exp(-mp.fsum(th[k] * (mp.mpf(float(a[k])) - mp.mpf(float(b[k]))) ** 2 for k in range(d)))

        R = mp.matrix(n, n)
        for i in range(n):
            for j in range(n):
                R[i, j] = c(X[i], X[j])
        dl = mp.mpf(float(delta))
        B = (R + dl * mp.eye(n)) ** -1
        A = mp.zeros(n, n)
        P = mp.eye(n)
        for k in range(1, M + 1):
            P = P * B
            A += dl ** (k - 1) * P
        one = mp.matrix([1] * n)
        Y = mp.matrix([mp.mpf(float(v)) for v in y])
        s1 = (one.T * A * one)[0]
        mu = (one.T * A * Y)[0] / s1
        res = Y - mu * one
        sig = (res.T * A * res)[0] / n
        means, mses = [], []
        for x in np.atleast_2d(x_star):
            r = mp.matrix([c(X[i], x) for i in range(n)])
            C = A * r + A * one * ((1 - (one.T * A * r)[0]) / s1)
            means.append(float((C.T * Y)[0]))
            mses.append(float(sig * (1 - 2 * (C.T * r)[0] + (C.T * R * C)[0])))
        return np.array(means), np.array(mses), float(sig)
