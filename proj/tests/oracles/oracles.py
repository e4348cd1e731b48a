"""Independent reference values for the unit tests.

Run with python3; every number printed here is frozen into a test file.
Nothing in this script calls the library.
"""

import numpy as np
from scipy import integrate, optimize, stats
from sklearn.gaussian_process import kernels as skk

np.set_printoptions(precision=17)


def show(name, value):
    print(f"{name} = {np.array2string(np.asarray(value), precision=17, separator=', ')}")


# Kernels -----------------------------------------------------------------
show("se_1d_unit", np.exp(-1.0))
show("rq", 1.5 * (1 + 0.5 * 0.7 * 0.7**2) ** -2.0)
# theta = 1 / l^2 for the Matern family.
m32 = skk.Matern(length_scale=1 / np.sqrt(0.8), nu=1.5)
m52 = skk.Matern(length_scale=1 / np.sqrt(0.8), nu=2.5)
x, y = np.array([[0.3, -0.2]]), np.array([[-0.4, 0.5]])
show("matern32", 2.0 * m32(x, y)[0, 0])
show("matern52", 2.0 * m52(x, y)[0, 0])
# exp(-0.5 theta sin^2(p d)) == ExpSineSquared with theta = 4/l^2, p = pi/period.
ess = skk.ExpSineSquared(length_scale=2.0 / np.sqrt(1.3), periodicity=np.pi / 0.9)
show("periodic", ess(np.array([[0.25]]), np.array([[-0.6]]))[0, 0])
show("lbf_exp", [-np.exp(-0.5), 1.5 * np.exp(-0.5), np.exp(-1) - 1, 1.0])

# Regression --------------------------------------------------------------
X = np.array([-1.0, 0.5, 2.0])
yv = np.array([0.3, -1.2, 0.8])
k = lambda a, b: np.exp(-0.5 * (a[:, None] - b[None, :]) ** 2)
K = k(X, X) + 0.1 * np.eye(3)
t = np.linalg.solve(K, yv)
xs = np.array([0.25])
ks = k(xs, X)
show("reg_t", t)
show("reg_mean", ks @ t)
show("reg_var", 1 - ks @ np.linalg.solve(K, ks.T))

# Laplace probit classification by direct optimisation of the log posterior.
Xc = np.array([-2.0, -1.2, -0.5, 0.3, 1.1, 1.9])
yc = np.array([-1.0, -1.0, 1.0, -1.0, 1.0, 1.0])
Kc = np.exp(-0.7 * (Xc[:, None] - Xc[None, :]) ** 2)
Kinv = np.linalg.inv(Kc)
obj = lambda f: -np.sum(stats.norm.logcdf(yc * f)) + 0.5 * f @ Kinv @ f
fhat = optimize.minimize(obj, np.zeros(6), method="BFGS", options={"gtol": 1e-12}).x
z = yc * fhat
r = np.exp(stats.norm.logpdf(z) - stats.norm.logcdf(z))
W = r**2 + z * r
xq = np.array([0.0, 0.8])
kq = np.exp(-0.7 * (xq[:, None] - Xc[None, :]) ** 2)
mu = kq @ Kinv @ fhat
var = 1 - np.einsum("ij,ij->i", kq, np.linalg.solve(Kc + np.diag(1 / W), kq.T).T)
show("laplace_mean", mu)
show("laplace_var", var)
show("laplace_pi", stats.norm.cdf(mu / np.sqrt(1 + var)))
show("probit_phi1", stats.norm.cdf(1.0))

# Likelihood --------------------------------------------------------------
def box_extrema(f, mlo, mhi, vlo, vhi, n=801):
    mg, vg = np.meshgrid(np.linspace(mlo, mhi, n), np.linspace(vlo, vhi, n))
    vals = f(mg, vg)
    return vals.min(), vals.max()


show("probit_range", box_extrema(lambda m, v: stats.norm.cdf(m / np.sqrt(1 + v)), -0.5, 1.0, 0.1, 2.0))


def logistic_pi(m, v):
    return integrate.quad(lambda f: stats.norm.pdf(f, m, np.sqrt(v)) / (1 + np.exp(-f)), -np.inf, np.inf,
                          epsabs=1e-13)[0]


lg = np.vectorize(logistic_pi)
show("logistic_range", box_extrema(lg, -0.5, 1.0, 0.1, 2.0, n=81))


def interval_mass(m, v, a, b):
    s = np.sqrt(v)
    return stats.norm.cdf((b - m) / s) - stats.norm.cdf((a - m) / s)


show("gauss_extrema", box_extrema(lambda m, v: interval_mass(m, v, -1.0, 0.5), -0.2, 0.3, 0.5, 1.5, n=2001))
show("probit_breaks_m4", stats.norm.ppf([0.25, 0.5, 0.75]))
show("logistic_breaks_m4", np.log(np.array([0.25, 0.5, 0.75]) / (1 - np.array([0.25, 0.5, 0.75]))))

mu3 = np.array([0.2, -0.1, 0.4])
S3 = np.array([[1.0, 0.3, -0.2], [0.3, 0.8, 0.1], [-0.2, 0.1, 0.6]])
zc = np.array([0.5, -0.3])
w = np.linalg.solve(S3[1:, 1:], S3[1:, 0])
show("cond_mean", mu3[0] + w @ (zc - mu3[1:]))
show("cond_var", S3[0, 0] - S3[0, 1:] @ w)

# Solvers -----------------------------------------------------------------
c = np.array([-1.0, -2.0, 0.5])
A = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, 2.0]])
b = np.array([4.0, 1.0])
res = optimize.linprog(c, A_ub=A, b_ub=b, bounds=[(0, 3), (0, 2.5), (-1, 1)], method="highs")
show("lp_value", res.fun)
show("lp_solution", res.x)

H = np.array([[2.0, 0.5], [0.5, 1.0]])
g = np.array([-2.0, -3.0])
Aq = np.array([[1.0, 1.0]])
bq = np.array([1.5])
qp = optimize.minimize(lambda z: 0.5 * z @ H @ z + g @ z, np.zeros(2), jac=lambda z: H @ z + g,
                       constraints=[{"type": "ineq", "fun": lambda z: bq - Aq @ z, "jac": lambda z: -Aq}],
                       bounds=[(-1, 1), (-1, 1)], method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
show("qp_value", qp.fun)
show("qp_solution", qp.x)

# Eigenvalues for the Jacobi test.
E = np.array([[4.0, 1.0, -2.0], [1.0, 2.0, 0.0], [-2.0, 0.0, 3.0]])
show("eig", np.linalg.eigvalsh(E))

# Gauss-Hermite: E[cos(f)] for f ~ N(0.3, 0.5) = cos(0.3) exp(-0.25).
show("gh_cos", np.cos(0.3) * np.exp(-0.25))

# Robustness: grid oracle of the sup-norm mean deviation for the 1-point
# model mean(x) = 0.5 exp(-x^2) around x* = 0.5 with radius 0.3.
grid = np.linspace(0.2, 0.8, 100001)
show("reg_sup", np.max(np.abs(0.5 * np.exp(-grid**2) - 0.5 * np.exp(-0.25))))
