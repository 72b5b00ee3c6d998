"""Independent scalar evaluations used to freeze test fixtures.

Run with `python3 tests/oracles/fixtures.py`. Uses mpmath at 40 digits so the
values do not share any code path with the C++ implementation.
"""
import mpmath as mp

mp.mp.dps = 40
EPS0 = mp.mpf("8.8541878128e-12")
C0 = mp.mpf(299792458)


def debye(f, eps_inf, eps_s, tau, sigma=0):
    # engineering convention eps = eps' - j eps''
    e = eps_inf + (eps_s - eps_inf) / (1 + 1j * 2 * mp.pi * f * tau)
    e = e - 1j * sigma / (2 * mp.pi * f * EPS0)
    return mp.re(e), -mp.im(e)


def stogryn(n, t, eps_s_ref=mp.mpf("78.36"), tau_ref=mp.mpf("8.27e-12")):
    n = mp.mpf(n)
    t = mp.mpf(t)
    eps_t0 = lambda T: 87.74 - 0.40008 * T + 9.398e-4 * T**2 + 1.410e-6 * T**3
    tau_t0 = lambda T: (1.1109e-10 - 3.824e-12 * T + 6.938e-14 * T**2 - 5.096e-16 * T**3) / (2 * mp.pi)
    a = 1 - 0.2551 * n + 5.151e-2 * n**2 - 6.889e-3 * n**3
    b = 0.1463e-2 * n * t + 1 - 0.04896 * n - 0.02967 * n**2 + 5.644e-3 * n**3
    eps_s = eps_s_ref * eps_t0(t) / eps_t0(25) * a
    tau = tau_ref * tau_t0(t) / tau_t0(25) * b
    d = 25 - t
    s25 = n * (10.394 - 2.3776 * n + 0.68258 * n**2 - 0.13538 * n**3 + 1.0086e-2 * n**4)
    alpha = 2.033e-2 + 1.266e-4 * d + 2.464e-6 * d**2 - n * (1.849e-5 - 2.551e-7 * d + 2.551e-8 * d**2)
    sigma = s25 * mp.e ** (-d * alpha)
    return eps_s, tau, sigma


def eps_eff(w, h, er):
    return (er + 1) / 2 + (er - 1) / 2 * (1 + 12 * h / w) ** mp.mpf(-0.5)


def z0(w, h, er):
    u = w / h
    return 120 * mp.pi / (mp.sqrt(eps_eff(w, h, er)) * (u + mp.mpf("1.393") + mp.mpf("0.667") * mp.log(u + mp.mpf("1.444"))))


def show(name, v):
    print(f"{name:40s} {mp.nstr(v, 17)}")


f = mp.mpf(700e6)
re, im = debye(f, mp.mpf("5.2"), mp.mpf("78.36"), mp.mpf("8.27e-12"))
show("water700.real", re)
show("water700.loss", im)
show("water700.tan", im / re)
show("cond_term_1Spm_700MHz", 1 / (2 * mp.pi * f * EPS0))
es, tau, sig = stogryn("0.5", 25)
show("stogryn0.5.eps_static", es)
show("stogryn0.5.tau", tau)
show("stogryn0.5.sigma", sig)
es, tau, sig = stogryn("0.125", 10)
show("stogryn0.125@10C.eps_static", es)
show("stogryn0.125@10C.tau", tau)
show("stogryn0.125@10C.sigma", sig)

w, h = mp.mpf("2.4e-3"), mp.mpf("0.79e-3")
show("rt5880.eps_eff", eps_eff(w, h, mp.mpf("2.2")))
show("rt5880.z0", z0(w, h, mp.mpf("2.2")))
show("air.w/h=2.z0", z0(mp.mpf(2), mp.mpf(1), mp.mpf(1)))
show("rt.w/h=2.z0", z0(mp.mpf(2), mp.mpf(1), mp.mpf("2.2")))
show("beta700.air", 2 * mp.pi * f / C0)

zl = mp.mpf(25)
Z = 50 * (zl + 1j * 50 * mp.tan(mp.pi / 4)) / (50 + 1j * zl * mp.tan(mp.pi / 4))
show("eq1.re", mp.re(Z))
show("eq1.im", mp.im(Z))

beta = 2 * mp.pi * f * mp.sqrt(eps_eff(w, h, mp.mpf("2.2"))) / C0
show("stub10mm.reactance", -50 * mp.cot(beta * mp.mpf("0.010")))

show("mix.4000+200@0.125", (200 * mp.mpf("0.125")) / 4200)
show("transient.a2e6.b0.01.v220", 2e6 * (1 - mp.e ** (-mp.mpf("2.2"))))


def model_shift(c, F=mp.mpf("0.25")):
    es, tau, sig = stogryn(c, 25)
    e_c, _ = debye(f, mp.mpf("5.2"), es, tau, sig)
    e_w, _ = debye(f, mp.mpf("5.2"), mp.mpf("78.36"), mp.mpf("8.27e-12"))
    return -F * f * (e_c - e_w) / (2 * e_w)


show("model_shift.0.5M", model_shift("0.5"))
show("model_shift.3.125e-3M", model_shift("3.125e-3"))
