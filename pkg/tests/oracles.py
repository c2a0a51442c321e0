"""Independent brute-force references used only by the tests.

None of these share code paths with the package implementation.
"""
import numpy as np
from scipy.optimize import minimize


def partial_trace_loops(rho, dA, dB):
    """Tr_B by explicit index contraction."""
    out = np.zeros((dA, dA), dtype=complex)
    for i in range(dA):
        for ip in range(dA):
            s = 0j
            for j in range(dB):
                s += rho[i * dB + j, ip * dB + j]
            out[i, ip] = s
    return out


def rk4_evolve(H, psi0, t, steps=4000):
    """Integrate i d(psi)/dt = H psi with classical fourth-order Runge-Kutta."""
    dt = t / steps
    psi = np.array(psi0, dtype=complex)

    def f(v):
        return -1j * (H @ v)

    for _ in range(steps):
        k1 = f(psi)
        k2 = f(psi + 0.5 * dt * k1)
        k3 = f(psi + 0.5 * dt * k2)
        k4 = f(psi + dt * k3)
        psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return psi


def power_span(H, psi0, m, tol=1e-10):
    """Orthonormal basis of span{psi0, H psi0, ..., H^{m-1} psi0} by Gram-Schmidt on normalized powers."""
    vecs = []
    v = np.array(psi0, dtype=complex)
    for _ in range(m):
        w = v / np.linalg.norm(v)
        r = w.copy()
        for _ in range(2):
            for q in vecs:
                r -= np.vdot(q, r) * q
        if np.linalg.norm(r) > tol:
            vecs.append(r / np.linalg.norm(r))
        v = H @ w
    return np.array(vecs).T


def projector(cols):
    return cols @ cols.conj().T


def bloch(theta, phi):
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def _product_overlap(angles, T):
    a = [bloch(angles[2 * k], angles[2 * k + 1]) for k in range(3)]
    amp = np.einsum("abc,a,b,c->", T, a[0].conj(), a[1].conj(), a[2].conj())
    return abs(amp) ** 2


def brute_force_product_overlap_3qubit(psi, n_theta=181, n_phi=361, coarse=(19, 37)):
    """Max |<a b c|psi>|^2 over qubit product states by grid search plus local refinement.

    Two searches: the symmetric ansatz a = b = c on a fine (theta, phi) grid, and a
    coarse grid over the first two qubits with the third maximized analytically.
    The best grid point of each is then polished with Nelder-Mead over all angles.
    """
    T = np.asarray(psi, dtype=complex).reshape(2, 2, 2)
    th, ph = np.meshgrid(np.linspace(0, np.pi, n_theta), np.linspace(0, 2 * np.pi, n_phi), indexing="ij")
    a = bloch(th, ph).reshape(-1, 2)
    sym = np.abs(np.einsum("abc,za,zb,zc->z", T, a.conj(), a.conj(), a.conj())) ** 2
    i = int(np.argmax(sym))
    starts = [[th.ravel()[i], ph.ravel()[i]] * 3]

    ct, cp = np.meshgrid(np.linspace(0, np.pi, coarse[0]), np.linspace(0, 2 * np.pi, coarse[1]), indexing="ij")
    b = bloch(ct, cp).reshape(-1, 2)
    env = np.einsum("abc,xa,yb->xyc", T, b.conj(), b.conj())
    val = (np.abs(env) ** 2).sum(axis=-1)
    x, y = np.unravel_index(int(np.argmax(val)), val.shape)
    e = env[x, y] / np.linalg.norm(env[x, y])
    # Bloch angles of the analytic third-qubit optimum
    th3 = 2 * np.arccos(min(1.0, abs(e[0])))
    ph3 = np.angle(e[1]) - np.angle(e[0]) if abs(e[0]) > 1e-14 else np.angle(e[1])
    starts.append([ct.ravel()[x], cp.ravel()[x], ct.ravel()[y], cp.ravel()[y], th3, ph3])

    best = max(sym.max(), val.max())
    for s in starts:
        res = minimize(lambda v: -_product_overlap(v, T), s, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000, "maxfev": 40000})
        best = max(best, -res.fun)
    return float(best)


def max_entropy_projected_gradient(K, d, iters=200000, tol=1e-14):
    """Maximize Shannon entropy on d outcomes at fixed mean K by projected gradient ascent.

    Iterates stay on the affine set {sum p = 1, sum n p = K}; steps are
    shortened to keep every component positive.
    """
    n = np.arange(d, dtype=float)
    A = np.vstack([np.ones(d), n])
    proj = np.eye(d) - A.T @ np.linalg.solve(A @ A.T, A)
    # strictly positive start with mean K: uniform mixed with a point mass at an end
    mid = (d - 1) / 2
    end = np.zeros(d)
    end[0 if K < mid else d - 1] = 1.0
    lam = K / mid if K < mid else (d - 1 - K) / (d - 1 - mid)
    p = lam * np.full(d, 1.0 / d) + (1 - lam) * end
    for _ in range(iters):
        g = proj @ (-np.log(p) - 1.0)
        if np.abs(g).max() < tol:
            break
        step = 0.5 * p.min()
        neg = g < 0
        if neg.any():
            step = min(step, 0.5 * (p[neg] / -g[neg]).min())
        p = p + step * g
    return p
