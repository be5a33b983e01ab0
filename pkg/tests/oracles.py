"""Reference implementations kept independent of the package code paths."""

import math

import mpmath


def bessel_series(n: int, x: float, dps: int = 50) -> float:
    """J_n(x) by direct summation of the ascending series in high precision."""
    sign = 1
    if n < 0:
        n = -n
        sign = -1 if n % 2 else 1
    with mpmath.workdps(dps):
        half = mpmath.mpf(x) / 2
        term = half**n / mpmath.factorial(n)
        total = term
        k = 0
        while True:
            k += 1
            term *= -(half * half) / (k * (k + n))
            total += term
            if k > 5 and abs(term) < mpmath.mpf(10) ** (-dps + 5) * max(abs(total), mpmath.mpf(10) ** -300):
                break
        return sign * float(total)


def convolution_amplitude(a, alpha, b, beta, d, p_max=60):
    """sum_p U_p(a, alpha) U_{d-p}(b, beta) with U from the oracle series."""
    total = 0j
    for p in range(-p_max, p_max + 1):
        u_a = bessel_series(p, a) * complex(math.cos(p * (alpha - math.pi / 2)), math.sin(p * (alpha - math.pi / 2)))
        q = d - p
        u_b = bessel_series(q, b) * complex(math.cos(q * (beta - math.pi / 2)), math.sin(q * (beta - math.pi / 2)))
        total += u_a * u_b
    return total
