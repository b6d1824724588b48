"""Seedable, platform-independent random number generator.

All stochastic sampling in this package goes through SplitMix64 so that
traces and simulations are bit-exact across runs and platforms. The
distribution samplers (Poisson, Gamma, Beta) are implemented from uniform
primitives rather than delegating to `random`/`numpy`, which keeps the
stream layout under our control.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood 2014)."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of entropy."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randint bound must be positive")
        return self.next_u64() % n

    def normal(self) -> float:
        """Standard normal via Box-Muller (second variate discarded)."""
        u1 = self.random()
        while u1 <= 0.0:
            u1 = self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def poisson(self, lam: float) -> int:
        """Poisson draw. Knuth's product method, chunked for large rates."""
        if lam < 0:
            raise ValueError("Poisson rate must be non-negative")
        count = 0
        # Chunking avoids exp underflow for large rates.
        while lam > 500:
            count += self.poisson(500.0)
            lam -= 500.0
        threshold = math.exp(-lam)
        k = 0
        p = 1.0
        while True:
            p *= self.random()
            if p <= threshold:
                return count + k
            k += 1

    def gamma(self, shape: float) -> float:
        """Gamma(shape, 1) via Marsaglia-Tsang, with the a<1 boost."""
        if shape <= 0:
            raise ValueError("Gamma shape must be positive")
        if shape < 1.0:
            u = self.random()
            while u <= 0.0:
                u = self.random()
            return self.gamma(shape + 1.0) * u ** (1.0 / shape)
        d = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = self.normal()
            v = 1.0 + c * x
            if v <= 0:
                continue
            v = v * v * v
            u = self.random()
            if u < 1.0 - 0.0331 * x ** 4:
                return d * v
            if u > 0 and math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
                return d * v

    def beta(self, a: float, b: float) -> float:
        """Beta(a, b) as a ratio of Gammas. b == 0 degenerates to 1."""
        if b == 0:
            return 1.0
        ga = self.gamma(a)
        gb = self.gamma(b)
        return ga / (ga + gb)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]
