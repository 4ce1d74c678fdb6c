from fractions import Fraction

from hypothesis import HealthCheck, settings

from chaocodec.codec import _compose_affines, _int_mode

settings.register_profile(
    "ci",
    derandomize=True,
    max_examples=80,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


def exact_interval(bits: str, pn: int, key) -> tuple[Fraction, Fraction, int]:
    """Final composed interval (lo, hi) of the exact coder plus |slope| numerator."""
    terms = []
    for t, ch in enumerate(bits):
        prm = _int_mode(key.mode_at(t), pn)
        terms.append(prm.affines[ch == "1"])
    a, c, e = _compose_affines(terms)
    lo, hi = (c, c + a) if a > 0 else (c + a, c)
    return Fraction(lo, 1 << e), Fraction(hi, 1 << e), abs(a)


def shortest_dyadic_oracle(lo: Fraction, hi: Fraction, max_bits: int = 8):
    """Brute-force search over all bit strings of length 0..max_bits, in
    (length, value) order, for the first whose continuation interval
    [v, v + 2^-k) sits inside (lo, hi] with a strictly interior lower end."""
    for k in range(max_bits + 1):
        step = Fraction(1, 1 << k)
        for v in range(1 << k):
            val = Fraction(v, 1 << k)
            if lo < val and val + step <= hi:
                return k, v
    return None
