#!/usr/bin/env python3
"""Independent reference values for the unit tests.

Everything here is evaluated from the defining Fock sums with explicit
Hermite polynomials in 50-digit arithmetic (mpmath), sharing no code with the
C++ library. Output is the frozen header oracle_values.hpp:

    python3 tests/oracles/generate_oracles.py > tests/oracles/oracle_values.hpp
"""

import mpmath as mp

mp.mp.dps = 50


def psi_n(n, x, w):
    """Normalized oscillator eigenfunction with m = hbar = 1."""
    xi = mp.sqrt(w) * x
    return (w / mp.pi) ** mp.mpf("0.25") / mp.sqrt(2**n * mp.factorial(n)) * mp.hermite(n, xi) * mp.exp(-xi * xi / 2)


def coherent(x, t, amp, phase, w, n_in, n_f):
    """Band-limited coherent state sum_{n_in..n_f} e^{-|a|^2/2} a^n/sqrt(n!) psi_n e^{-i(n+1/2)wt}."""
    alpha = amp * mp.expj(phase)
    total = mp.mpc(0)
    for n in range(n_in, n_f + 1):
        c = mp.exp(-abs(alpha) ** 2 / 2) * alpha**n / mp.sqrt(mp.factorial(n))
        total += c * psi_n(n, x, w) * mp.expj(-(n + mp.mpf(1) / 2) * w * t)
    return total


def big_band(amp):
    return int(amp * amp + 12 * amp + 40)


def psi2(x, y, t, s):
    nf_x = s["n_f"] if s["n_f"] is not None else big_band(s["a0"])
    nf_y = s["n_f"] if s["n_f"] is not None else big_band(s["b0"])
    yr_x = coherent(x, t, s["a0"], 0, s["wx"], s["n_in"], nf_x)
    yl_x = coherent(x, t, s["a0"], mp.pi, s["wx"], s["n_in"], nf_x)
    yr_y = coherent(y, t, s["b0"], 0, s["wy"], s["n_in"], nf_y)
    yl_y = coherent(y, t, s["b0"], mp.pi, s["wy"], s["n_in"], nf_y)
    return s["c1"] * yr_x * yl_y + s["c2"] * yl_x * yr_y


def velocity(x, y, t, s):
    f = lambda u, v: psi2(u, v, t, s)
    p = f(x, y)
    dx = mp.diff(lambda u: f(u, y), x)
    dy = mp.diff(lambda v: f(x, v), y)
    return mp.im(dx / p), mp.im(dy / p)


def spec(a0, b0, c2, n_f, n_in=0, wx=1, wy=None):
    wy = mp.sqrt(3) if wy is None else wy
    c2 = mp.mpf(c2)
    return dict(a0=mp.mpf(a0), b0=mp.mpf(b0), c1=mp.sqrt(1 - c2 * c2), c2=c2, n_f=n_f, n_in=n_in,
                wx=mp.mpf(wx), wy=wy)


def fmt(v):
    return mp.nstr(v, 17, min_fixed=-1, max_fixed=-1) if v != 0 else "0.0"


def emit_array(name, values):
    print(f"inline constexpr double {name}[] = {{")
    for v in values:
        print(f"    {fmt(v)},")
    print("};")


def emit(name, v):
    print(f"inline constexpr double {name} = {fmt(v)};")


def node_near(t, s, guess):
    f = lambda x, y: [mp.re(psi2(x, y, t, s)), mp.im(psi2(x, y, t, s))]
    return mp.findroot(f, guess)


print("// Generated by generate_oracles.py (mpmath, 50 digits). Do not edit.")
print("#pragma once")
print()
print("namespace oracle {")
print()

# Eigenfunction rows at x = 0.5.
emit_array("kEigenRowW1", [psi_n(n, mp.mpf("0.5"), 1) for n in range(9)])
emit_array("kEigenRowW3", [psi_n(n, mp.mpf("0.5"), mp.sqrt(3)) for n in range(9)])
# High order, far out: exercises the rescaled recurrence.
emit("kEigen60At7", psi_n(60, mp.mpf(7), 1))
emit("kEigen150AtM12", psi_n(150, mp.mpf(-12), mp.sqrt(3)))
print()

# Truncated coherent state: a = 1.3, w = sqrt 3, phase pi, band 1..4, x = 0.7, t = 0.9.
y = coherent(mp.mpf("0.7"), mp.mpf("0.9"), mp.mpf("1.3"), mp.pi, mp.sqrt(3), 1, 4)
dy = mp.diff(lambda u: coherent(u, mp.mpf("0.9"), mp.mpf("1.3"), mp.pi, mp.sqrt(3), 1, 4), mp.mpf("0.7"))
emit("kBandValueRe", mp.re(y))
emit("kBandValueIm", mp.im(y))
emit("kBandDerivRe", mp.re(dy))
emit("kBandDerivIm", mp.im(dy))
# Full coherent state (long Fock sum) at x = 1.1, t = 0.4, a = 2.5, w = 1, phase 0.
y = coherent(mp.mpf("1.1"), mp.mpf("0.4"), mp.mpf("2.5"), 0, 1, 0, big_band(mp.mpf("2.5")))
emit("kFullValueRe", mp.re(y))
emit("kFullValueIm", mp.im(y))
print()

# Two-mode Psi and velocities.
s_full = spec("2.5", "2.5", mp.sqrt(2) / 2, None)
p = psi2(mp.mpf("0.3"), mp.mpf("-1.2"), mp.mpf("2.1"), s_full)
emit("kPsiFullRe", mp.re(p))
emit("kPsiFullIm", mp.im(p))
vx, vy = velocity(mp.mpf("0.3"), mp.mpf("-1.2"), mp.mpf("2.1"), s_full)
emit("kVelFullX", vx)
emit("kVelFullY", vy)
s_trunc = spec("0.5", "0.5", mp.sqrt(2) / 2, 4)
vx, vy = velocity(mp.mpf("0.4"), mp.mpf("0.9"), mp.mpf("3.3"), s_trunc)
emit("kVelTruncX", vx)
emit("kVelTruncY", vy)
s_mixed = spec("1.5", "0.8", "0.35", 6, n_in=1)
vx, vy = velocity(mp.mpf("-0.6"), mp.mpf("0.25"), mp.mpf("1.3"), s_mixed)
emit("kVelMixedX", vx)
emit("kVelMixedY", vy)
print()

# One-dimensional norms, overlaps and the two-mode norm at n_f = 2.
a = mp.mpf("2.5")
cov = lambda amp, nf: mp.fsum(mp.exp(-amp * amp) * amp ** (2 * n) / mp.factorial(n) for n in range(0, nf + 1))
ovl = lambda amp, nf: mp.fsum((-1) ** n * mp.exp(-amp * amp) * amp ** (2 * n) / mp.factorial(n) for n in range(0, nf + 1))
emit_array("kCoverage25", [cov(a, 2), cov(a, 4), cov(a, 12)])
emit("kOverlapFull25", mp.exp(-2 * a * a))
emit_array("kOverlapNf12", [ovl(mp.mpf(x), 12) for x in ("2.5", "2.0", "1.5", "1.0")])
c = mp.sqrt(2) / 2
n2 = cov(a, 2)
s2 = ovl(a, 2)
# |Psi|^2 integrates to c1^2 N^4 + c2^2 N^4 + 2 c1 c2 S^2 for real c1, c2.
emit("kNormSquaredNf2", (c * c + c * c) * n2 * n2 + 2 * c * c * s2 * s2)
print()

# Nodes. Full band, c1 = c2: analytic family k = 1 at t = 1, found by findroot.
node = node_near(mp.mpf(1), spec("2.5", "2.5", mp.sqrt(2) / 2, None), [mp.mpf("0.107"), mp.mpf("-0.273")])
emit("kFullNodeT1X", node[0])
emit("kFullNodeT1Y", node[1])
# n_f = 2, a0 = b0 = 0.5, c2 = sqrt2/2, t = 1.37: the four finite nodes.
s_nf2 = spec("0.5", "0.5", mp.sqrt(2) / 2, 2)
guesses = [(2.484, -5.990), (1.752, -0.416), (-1.752, 0.416), (-2.484, 5.990)]
nodes = []
for gx, gy in guesses:
    r = node_near(mp.mpf("1.37"), s_nf2, [mp.mpf(gx), mp.mpf(gy)])
    nodes.extend([r[0], r[1]])
emit_array("kNf2NodesT137", nodes)
print()
print("}  // namespace oracle")
