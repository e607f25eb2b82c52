"""Independent convex-solver oracle for the Mathieu filtering example.

Solves the correction and prediction SDPs with cvxpy/Clarabel and prints
golden values that are frozen into the C++ tests. Not part of the build.
"""
import sys

import cvxpy as cp
import numpy as np
from scipy.linalg import expm

OMEGA, OMEGA0, EPS, DT = 2 * np.pi, np.pi, 0.3, 0.1


def a_cont(t):
    return np.array([[0.0, 1.0], [-OMEGA0**2 * (1 + EPS * np.sin(OMEGA * t)), 0.0]])


def discretize(t):
    m = np.zeros((3, 3))
    m[:2, :2] = a_cont(t)
    m[:2, 2] = [0.0, 1.0]
    phi = expm(m * DT)
    return phi[:2, :2], phi[:2, 2:3]


def correct(E, C, D, R):
    n, p = E.shape[0], C.shape[0]
    v = D.shape[1]
    P = cp.Variable((n, n), symmetric=True)
    L = cp.Variable((n, p))
    t1 = cp.Variable(nonneg=True)
    t2 = cp.Variable(nonneg=True)
    Pi = cp.hstack([np.zeros((n, 1)), E - L @ C @ E, -L @ D])
    Theta = cp.bmat([
        [cp.reshape(1 - t1 - t2, (1, 1)), np.zeros((1, n)), np.zeros((1, v))],
        [np.zeros((n, 1)), t1 * np.eye(n), np.zeros((n, v))],
        [np.zeros((v, 1)), np.zeros((v, n)), t2 * np.linalg.inv(R)],
    ])
    M = cp.bmat([[-P, Pi], [Pi.T, -Theta]])
    prob = cp.Problem(cp.Minimize(cp.trace(P)), [(M + M.T) / 2 << 0, P >> 1e-9 * np.eye(n)])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
    return P.value, L.value, t1.value, t2.value


def predict(A, E, G, Q):
    n, w = E.shape[0], G.shape[1]
    P = cp.Variable((n, n), symmetric=True)
    t3 = cp.Variable(nonneg=True)
    t4 = cp.Variable(nonneg=True)
    Pi = np.hstack([np.zeros((n, 1)), A @ E, G])
    Psi = cp.bmat([
        [cp.reshape(1 - t3 - t4, (1, 1)), np.zeros((1, n)), np.zeros((1, w))],
        [np.zeros((n, 1)), t3 * np.eye(n), np.zeros((n, w))],
        [np.zeros((w, 1)), np.zeros((w, n)), t4 * np.linalg.inv(Q)],
    ])
    M = cp.bmat([[-P, Pi], [Pi.T, -Psi]])
    prob = cp.Problem(cp.Minimize(cp.trace(P)), [(M + M.T) / 2 << 0, P >> 1e-9 * np.eye(n)])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
    return P.value, t3.value, t4.value


def main(tf):
    C = np.array([[1.0, 0.0]])
    D = np.array([[1.0]])
    Q = np.array([[0.0025]])
    R = Q.copy()
    x = np.array([0.5, 0.0])
    xh = np.zeros(2)
    P = 10.5 * np.eye(2)
    errs = []
    for k in range(tf + 1):
        t = k * DT
        w = 0.05 * np.sin(OMEGA * t)
        y = C @ x + D @ np.array([w])
        E = np.linalg.cholesky(P)
        Pc, L, t1, t2 = correct(E, C, D, R)
        xc = xh + L @ (y - C @ xh)
        e = x - xc
        errs.append(e)
        if k == 0:
            print("k0 trace(P00) = %.12g" % np.trace(Pc))
            print("k0 P00 =", repr(Pc))
            print("k0 L =", repr(L), "tau", t1, t2)
            print("k0 xcorr =", repr(xc))
        A, G = discretize(t)
        Ec = np.linalg.cholesky(Pc)
        Pp, t3, t4 = predict(A, Ec, G, Q)
        if k == 0:
            print("k0 trace(P10) = %.12g" % np.trace(Pp), "tau", t3, t4)
        xh = A @ xc
        P = Pp
        x = A @ x + G[:, 0] * w
        q = e @ np.linalg.solve(Pc, e)
        if q > 1 + 1e-6:
            print("containment violated at", k, q)
    errs = np.array(errs)
    print("mean|e| = %.6g" % np.mean(np.linalg.norm(errs, axis=1)))
    print("mse1 = %.6g  mse2 = %.6g" % tuple(np.mean(errs**2, axis=0)))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 200)
