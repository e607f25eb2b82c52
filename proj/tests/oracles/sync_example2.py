"""Independent prototype of the four-agent synchronization example.

Uses cvxpy/Clarabel for the filter SDPs and numpy for everything else.
Prints per-seed |normalized disagreement| metrics. Not part of the build.
"""
import sys

import numpy as np

from smf_example1 import correct, predict

A = np.array([[0.0, -1.0], [1.0, 0.0]])
B = np.eye(2)
C = np.array([[1.0, 0.0]])
D = np.array([[1.0]])
G = np.eye(2)
LAP = np.array([[1, 0, 0, -1], [-1, 1, 0, 0], [0, -1, 1, 0], [0, 0, -1, 1]], float)
PIN = np.diag([1.0, 0, 0, 0])
DEG = np.eye(4)
GAMMA = np.linalg.solve(np.eye(4) + DEG + PIN, LAP + PIN)
ADJ = DEG - LAP
c = 1.5
K = A.copy()


def run(seed, aw, av, qs, rs, tf=60):
    rng = np.random.default_rng(seed)
    n = 4
    Q = qs * np.eye(2)
    R = np.array([[rs]])
    xh0 = [np.array([50.0, -50]), np.array([50.0, -50]), np.array([-50.0, 50]), np.array([-50.0, 50])]
    x = [xh0[i] + rng.uniform(0, 1, 2) for i in range(n)]
    xh = [v.copy() for v in xh0]
    P = [2.0 * np.eye(2) for _ in range(n)]
    lead = np.array([5.0, -5.0])
    mubar = 1.1 * 2 / 0.1
    dn = []
    for k in range(tf + 1):
        xc = []
        for i in range(n):
            v = rng.uniform(-av, av, 1)
            y = C @ x[i] + D @ v
            Pc, L, _, _ = correct(np.linalg.cholesky(P[i]), C, D, R)
            xc.append(xh[i] + L @ (y - C @ xh[i]))
            P[i] = Pc
        delta = np.concatenate([x[i] - lead for i in range(n)])
        dn.append(np.linalg.norm(delta) / mubar)
        u = []
        for i in range(n):
            eps = sum(ADJ[i, j] * (xc[j] - xc[i]) for j in range(n)) + PIN[i, i] * (lead - xc[i])
            u.append(c / (1 + DEG[i, i] + PIN[i, i]) * K @ eps)
        for i in range(n):
            w = rng.uniform(-aw, aw, 2)
            Pp, _, _ = predict(A, np.linalg.cholesky(P[i]), G, Q)
            xh[i] = A @ xc[i] + B @ u[i]
            P[i] = Pp
            x[i] = A @ x[i] + B @ u[i] + G @ w
        lead = A @ lead
    dn = np.array(dn)
    return dn.mean(), np.sqrt((dn**2).mean())


if __name__ == "__main__":
    settings = [(0.05, 0.05, 0.1, 0.1), (0.5, 0.5, 1.0, 1.0), (1.0, 1.0, 2.0, 1.0)]
    for s in settings:
        res = np.array([run(seed, *s) for seed in range(int(sys.argv[1]) if len(sys.argv) > 1 else 3)])
        print(s, "mean=%.4f rms=%.4f" % tuple(res.mean(axis=0)))
