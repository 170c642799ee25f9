"""Reference values for the CFG-A fixture (b0=1, b1=2, a=1, L=5, kappa=1).

Computed with mpmath at 40 digits, independently of the Rust code paths.
Run: python3 gen_fixtures.py  (add --table to rewrite profile_table.csv)
"""
from mpmath import mp, mpf, quad, exp, log, sqrt, pi, gamma, atan, hyperu, cos, sin

mp.dps = 40

b0, b1, a, L, kappa = mpf(1), mpf(2), mpf(1), mpf(5), mpf(1)
ua = a**2 / 2


def beta(u):
    if u >= ua:
        return b1
    return b1 - (b1 - b0) * exp(-kappa * u / (ua - u))


def alpha_u(v):
    """Cumulative integral of beta on (0, v)."""
    if v <= ua:
        return quad(beta, [0, v])
    return b1 * v + M


M = -(b1 - b0) * quad(lambda u: exp(-kappa * u / (ua - u)), [0, ua])
N = 8 * abs(M) / (b1 * L**2)
d0 = (b1 - b0) / (2 * b1)


def agmon(upper):
    # int_0^upper alpha(v)/v dv
    f = lambda v: alpha_u(v) / v if v > 0 else b0
    pts = [0, ua] if upper > ua else [0, upper]
    if upper > ua:
        pts.append(upper)
    return quad(f, pts)


two_phi0 = agmon(L**2 / 8)
Phi0 = two_phi0 / 2
S0 = agmon((L - a) ** 2 / 2) / 2
sq = sqrt(1 - N)
I_closed = b1 * L**2 / 4 * ((N - 1) / 2 + sq - N * log(1 + sq))
I_int = quad(lambda v: alpha_u(v) / v, [L**2 / 8, L**2 / 8 * (1 + sq) ** 2]) - 2 * alpha_u(L**2 / 8)
S = two_phi0 + I_closed
F0 = b1 * L**2 / 4 * (N / 2 + sq - N * log(1 + sq))
c0 = -(8 * pi * gamma(d0) / (b1 * L**2)) * (1 - N) ** (-0.25) * (b1 * L**2 / 8) ** (-d0) * (1 + sq) ** (1 - 2 * d0)
c = 2 / gamma(d0) * (b1 * L**2 / 8) ** d0 * ((1 - N) / (1 + sq)) ** (2 * d0) * (1 - N) ** (-0.25) * (1 + sq)

# Gaussian moment defining c0, evaluated in polar coordinates as a cross-check.
e8 = b1 * L**2 / 8
h11 = e8 * (1 + sq)
h12 = h11 - abs(M)
psi2 = 2 * e8 * (1 - N / (1 + sq) ** 2)


def _radial(p):
    q = h11 * (cos(p) ** 2 + sin(p) ** 2) + 2 * h12 * cos(p) * sin(p)
    return gamma(d0 + mpf(1) / 2) / 2 * (2 / q) ** (d0 + mpf(1) / 2)


c0_moment = -sqrt(2 * pi / psi2) * quad(
    lambda p: (cos(p) * sin(p)) ** (d0 - 1) * (sq * (cos(p) + sin(p)) + 2 * cos(p)) * _radial(p),
    [0, pi / 4, pi / 2],
)
remark = -2 * quad(lambda r: beta(r**2 / 2) * log(2 * r / L) * r, [0, a, L / 2])
# transport equation for the leading WKB amplitude: 2 pi a0(midpoint)^2
transport = b0 * exp(quad(lambda u: (b0 - beta(u)) / alpha_u(u), [0, ua, L**2 / 8]))
ineq_lhs = quad(lambda v: alpha_u(v) / v, [(L - a) ** 2 / 2, L**2 / 8 * (1 + sq) ** 2])
ineq_rhs = 2 * alpha_u(L**2 / 8)

print("M        =", mp.nstr(M, 20))
print("N        =", mp.nstr(N, 20))
print("Phi0     =", mp.nstr(Phi0, 20))
print("S0       =", mp.nstr(S0, 20))
print("I_closed =", mp.nstr(I_closed, 20))
print("I_int    =", mp.nstr(I_int, 20))
print("S        =", mp.nstr(S, 20))
print("remark   =", mp.nstr(remark, 20), " (= 2 Phi0)")
print("F0       =", mp.nstr(F0, 20))
print("c0       =", mp.nstr(c0, 20))
print("c0 moment=", mp.nstr(c0_moment, 20))
print("c        =", mp.nstr(c, 20))
print("log10 gap(h=0.05) =", mp.nstr(log(c * exp(-S / mpf("0.05")) * mpf("0.05") ** (mpf(1) / 2 + b0 / (2 * b1))) / log(10), 20))
print("2pi a0^2 =", mp.nstr(transport, 20), " (transport prediction)")
print("ineq     =", mp.nstr(ineq_lhs, 15), "<", mp.nstr(ineq_rhs, 15))
print("alpha(r=2) = M+4 =", mp.nstr(M + 4, 20))
print("theta(x2=1) =", mp.nstr(b1 * L / 2 + 2 * M * atan(2 / L), 20))
print("k(x2=1)     =", mp.nstr(b1 + 2 * M / (L**2 / 4 + 1), 20))
print("beta(0.125) =", mp.nstr(beta(mpf(1) / 8), 20))
print("beta(0.25)  =", mp.nstr(beta(mpf(1) / 4), 20))
# Kummer integral oracles: log int_0^inf e^{-rho t} t^{delta-1} (1+t)^{gamma-delta} dt = log Gamma(delta) U(delta, gamma+1, rho)
for (g, dl, rho) in [(mpf(3), mpf("0.2"), mpf(50)), (mpf("0.5"), mpf("0.3"), mpf(2)), (abs(M) / mpf("0.05"), mpf("0.2"), b1 * (L / 2) ** 2 / (2 * mpf("0.05"))), (mpf(12), mpf("0.24"), mpf(500)), (mpf(20), mpf("0.45"), mpf(30))]:
    val = gamma(dl) * hyperu(dl, g + 1, rho)
    print("kummer(gamma=%s, delta=%s, rho=%s) log =" % (mp.nstr(g, 17), mp.nstr(dl, 6), mp.nstr(rho, 17)), mp.nstr(log(val), 20))

# Tabulated copy of the built-in profile, 401 rows on [0, a^2/2], for profile_table.csv.
if __name__ == "__main__" and "--table" in __import__("sys").argv:
    with open("profile_table.csv", "w") as f:
        f.write("u,beta\n")
        for i in range(401):
            u = ua * i / 400
            f.write("%s,%s\n" % (mp.nstr(u, 17), mp.nstr(beta(u), 17)))
