"""(t, n) Shamir secret sharing over GF(2^8) and the two recovery paths.

``easy_recover`` is plain Lagrange interpolation that insists every responder
lies on one degree-<=t polynomial.  ``hard_recover`` treats the responses as a
noisy Reed-Solomon codeword and searches for the polynomial agreeing with more
than floor(sqrt(k*t)) responders.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import isqrt
from typing import Optional, Sequence

import numpy as np

from .errors import (
    InsufficientResponses,
    InvalidEvaluationPoint,
    ShapeError,
    ThresholdError,
    UnrecoverableResponse,
)
from .field import MUL, gf256_div, gf256_mul, poly_eval, random_bytes


@dataclass(frozen=True)
class SharePoint:
    alpha: int
    value: int


@dataclass(frozen=True)
class RecoveryVerdict:
    """Outcome of a recovery attempt.

    ``honest_set`` and ``byzantine_set`` hold positions into the response list
    that was passed in.  ``block`` is ``None`` when easy recovery gave up.
    """

    block: Optional[np.ndarray]
    honest_set: frozenset = field(default_factory=frozenset)
    byzantine_set: frozenset = field(default_factory=frozenset)

    @property
    def recovered(self) -> bool:
        return self.block is not None


def check_alphas(alphas: Sequence[int]) -> None:
    for a in alphas:
        if not 0 < a < 256:
            raise InvalidEvaluationPoint(f"evaluation point {a!r} must be a nonzero byte")
    if len(set(alphas)) != len(alphas):
        raise InvalidEvaluationPoint("evaluation points must be pairwise distinct")


def agreement_bound(k: int, t: int) -> int:
    """floor(sqrt(k*t)); a decoded polynomial must agree with more points than this."""
    return isqrt(k * t)


def max_correctable(k: int, t: int) -> int:
    """Largest v with v < k - floor(sqrt(k*t))."""
    return k - agreement_bound(k, t) - 1


def share_secret(s: int, t: int, alphas: Sequence[int], rng=None) -> list[SharePoint]:
    n = len(alphas)
    if t < 1 or t >= n:
        raise ThresholdError(f"need 1 <= t < n, got t={t}, n={n}")
    check_alphas(alphas)
    coeffs = [s] + [int(c) for c in random_bytes(rng, t)]
    return [SharePoint(a, poly_eval(coeffs, a)) for a in alphas]


def lagrange_coefficients(alphas: Sequence[int], x: int = 0) -> list[int]:
    """Weights c_i with f(x) = sum c_i * f(alpha_i) for any f of degree < len(alphas)."""
    out = []
    for i, ai in enumerate(alphas):
        num, den = 1, 1
        for m, am in enumerate(alphas):
            if m != i:
                num = gf256_mul(num, x ^ am)
                den = gf256_mul(den, ai ^ am)
        out.append(gf256_div(num, den))
    return out


def lagrange_at_zero(points: Sequence[SharePoint]) -> int:
    if not points:
        raise InvalidEvaluationPoint("cannot interpolate zero points")
    alphas = [p.alpha for p in points]
    check_alphas(alphas)
    acc = 0
    for c, p in zip(lagrange_coefficients(alphas), points):
        acc ^= gf256_mul(c, p.value)
    return acc


def interpolate_blocks(alphas: Sequence[int], blocks: np.ndarray, x: int = 0) -> np.ndarray:
    """Evaluate at ``x``, word by word, the interpolant through ``(alphas[i], blocks[i])``."""
    out = np.zeros(blocks.shape[1], dtype=np.uint8)
    for c, row in zip(lagrange_coefficients(alphas, x), blocks):
        out ^= MUL[c][row]
    return out


def interpolation_feasible(points: Sequence[SharePoint], t: int, candidate: int) -> bool:
    """True if some polynomial of degree <= t passes through ``points`` and has f(0) = candidate.

    Only meaningful for len(points) <= t; this is how t-privacy is checked.
    """
    if len(points) > t:
        raise ThresholdError("feasibility check is for at most t points")
    xs = [0] + [p.alpha for p in points]
    ys = [candidate] + [p.value for p in points]
    check_alphas(xs[1:])
    coeffs = _interpolating_poly(xs, ys)
    if len(coeffs) - 1 > t:
        return False
    return all(poly_eval(coeffs, x) == y for x, y in zip(xs, ys))


def _interpolating_poly(xs: Sequence[int], ys: Sequence[int]) -> list[int]:
    # Lagrange form expanded into coefficients
    n = len(xs)
    coeffs = [0] * n
    for i in range(n):
        basis = [1]
        den = 1
        for m in range(n):
            if m == i:
                continue
            # basis *= (x + xs[m])
            nxt = [0] * (len(basis) + 1)
            for d, c in enumerate(basis):
                nxt[d] ^= gf256_mul(c, xs[m])
                nxt[d + 1] ^= c
            basis = nxt
            den = gf256_mul(den, xs[i] ^ xs[m])
        scale_ = gf256_div(ys[i], den)
        for d, c in enumerate(basis):
            coeffs[d] ^= gf256_mul(c, scale_)
    return coeffs


def _stack(responses, word_count: int) -> tuple[list[int], np.ndarray]:
    alphas = [int(a) for a, _ in responses]
    check_alphas(alphas)
    blocks = np.empty((len(responses), word_count), dtype=np.uint8)
    for i, (_, block) in enumerate(responses):
        arr = np.frombuffer(block, dtype=np.uint8) if isinstance(block, (bytes, bytearray)) else np.asarray(block, dtype=np.uint8)
        if arr.shape != (word_count,):
            raise ShapeError(f"response {i} has {arr.size} words, expected {word_count}")
        blocks[i] = arr
    return alphas, blocks


def easy_recover(t: int, responses, word_count: int) -> RecoveryVerdict:
    """Lagrange recovery that succeeds only if all k responses are mutually consistent."""
    k = len(responses)
    if k <= t:
        raise InsufficientResponses(f"{k} responses cannot reconstruct a degree-{t} sharing")
    alphas, blocks = _stack(responses, word_count)
    base = alphas[: t + 1]
    for i in range(t + 1, k):
        if not np.array_equal(interpolate_blocks(base, blocks[: t + 1], alphas[i]), blocks[i]):
            return RecoveryVerdict(None)
    block = interpolate_blocks(base, blocks[: t + 1])
    return RecoveryVerdict(block, frozenset(range(k)), frozenset())


def hard_recover(t: int, responses, word_count: int) -> RecoveryVerdict:
    """Decode despite Byzantine responders.

    Every (t+1)-subset of responders defines a candidate polynomial per word;
    a responder agrees with the candidate if it matches at every word.  A
    candidate is accepted when more than floor(sqrt(k*t)) responders agree.
    Exactly one accepted candidate is required; zero or several raise
    :class:`UnrecoverableResponse`.
    """
    k = len(responses)
    if k <= t:
        raise InsufficientResponses(f"{k} responses cannot reconstruct a degree-{t} sharing")
    alphas, blocks = _stack(responses, word_count)
    bound = agreement_bound(k, t)
    found: list[tuple[np.ndarray, frozenset]] = []
    for subset in combinations(range(k), t + 1):
        if any(set(subset) <= agree for _, agree in found):
            continue
        sub_alphas = [alphas[j] for j in subset]
        agree = set(subset)
        for i in range(k):
            if i in agree:
                continue
            if np.array_equal(interpolate_blocks(sub_alphas, blocks[list(subset)], alphas[i]), blocks[i]):
                agree.add(i)
        if len(agree) > bound:
            found.append((interpolate_blocks(sub_alphas, blocks[list(subset)]), frozenset(agree)))
            if len(found) > 1:
                raise UnrecoverableResponse(
                    f"ambiguous decoding: responder sets {sorted(found[0][1])} and {sorted(found[1][1])} "
                    f"both exceed the agreement bound {bound}"
                )
    if not found:
        raise UnrecoverableResponse(f"no polynomial agrees with more than {bound} of {k} responses")
    block, honest = found[0]
    return RecoveryVerdict(block, honest, frozenset(range(k)) - honest)
