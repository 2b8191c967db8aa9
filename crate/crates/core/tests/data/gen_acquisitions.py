"""Regenerate acquisitions.csv: 50-digit reference values for the closed-form rules."""
import random

import mpmath as mp

mp.mp.dps = 50
XI, NU, DELTA_UCB, DELTA_MI = mp.mpf("1e-3"), 1, mp.mpf("0.05"), mp.mpf("1e-10")


def ucb(mu, s, t, d):
    tau = 2 * mp.log(mp.mpf(t) ** (mp.mpf(d) / 2 + 2) * mp.pi**2 / (3 * DELTA_UCB))
    return mu + mp.sqrt(NU * tau) * s


def pi(mu, s, inc):
    if s == 0:
        return mp.mpf(1 if mu > inc + XI else 0)
    return mp.ncdf((mu - inc - XI) / s)


def ei(mu, s, inc):
    if s == 0:
        return max(mu - inc, 0)
    z = (mu - inc) / s
    return s * (z * mp.ncdf(z) + mp.npdf(z))


def gpmi(mu, s, g):
    return mu + mp.sqrt(mp.log(2 / DELTA_MI)) * (mp.sqrt(s * s + g) - mp.sqrt(g))


def mes(mu, s, y):
    if s == 0:
        return mp.mpf(0)
    g = (y - mu) / s
    c = mp.ncdf(g)
    return g * mp.npdf(g) / (2 * c) - mp.log(c)


def main():
    rng = random.Random(20240611)
    rows = ["mu,sigma,incumbent,t,d,gamma,ystar,pi,ei,ucb,gpmi,mes"]
    for _ in range(10_000):
        mu = f"{rng.uniform(-3, 3):.6f}"
        sigma = "0" if rng.random() < 0.05 else f"{10 ** rng.uniform(-3, 1):.6e}"
        inc = f"{rng.uniform(-3, 3):.6f}"
        t, d = rng.randint(1, 100), rng.randint(1, 3)
        gamma = "0" if rng.random() < 0.1 else f"{rng.uniform(0, 10):.6f}"
        ystar = f"{rng.uniform(-3, 6):.6f}"
        m, s, i, g, y = (mp.mpf(float(v)) for v in (mu, sigma, inc, gamma, ystar))
        vals = [pi(m, s, i), ei(m, s, i), ucb(m, s, t, d), gpmi(m, s, g), mes(m, s, y)]
        rows.append(",".join([mu, sigma, inc, str(t), str(d), gamma, ystar] + [mp.nstr(v, 20) for v in vals]))
    with open("acquisitions.csv", "w") as fh:
        fh.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
