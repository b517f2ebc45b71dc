"""Source text of the bundled example programs."""

from __future__ import annotations

LAX = """\
// Lax: pick any new password, possibly the old one again.
var X : {A, B, C}
X <- uniform {A, B, C}
// over-the-shoulder glimpse of a letter that is not the password
leak uniform {succ(X), pred(X)}
"""

STRICT = """\
// Strict: the new password must differ from the old one.
var X : {A, B, C}
X <- uniform {succ(X), pred(X)}
leak uniform {succ(X), pred(X)}
"""

BIT_FLIP = """\
// A two-bit array is flipped, one of its bits leaks, and it is flipped again.
var xs : int[0..3]
map neg : int[0..3] -> int[0..3] { 0 -> 3, 1 -> 2, 2 -> 1, 3 -> 0 }
map hi : int[0..3] -> int[0..1] { 0 -> 0, 1 -> 0, 2 -> 1, 3 -> 1 }
map lo : int[0..3] -> int[0..1] { 0 -> 0, 1 -> 1, 2 -> 0, 3 -> 1 }
xs <- choose { xs @ 1/3, neg(xs) @ 2/3 }
leak choose { hi(xs) @ 1/2, lo(xs) @ 1/2 }
xs <- choose { xs @ 1/2, neg(xs) @ 1/2 }
"""

ALLOWED_DIVISORS = (2, 3, 5)
BITS_RANGE = range(4, 9)


def passwords() -> dict[str, str]:
    return {"lax": LAX, "strict": STRICT}


def bit_flip() -> str:
    return BIT_FLIP


def expmod(bits: int, divisors) -> str:
    """Randomized-divisor exponentiation, keeping only the exponent-related state.

    The base and the running power never influence the exponent or the
    branch that leaks, so they are left out of the state.
    """
    divisors = sorted(set(divisors))
    if bits not in BITS_RANGE:
        raise ValueError(f"bits must be in {BITS_RANGE.start}..{BITS_RANGE.stop - 1}, not {bits}")
    if not divisors or any(d not in ALLOWED_DIVISORS for d in divisors):
        raise ValueError(f"divisors must be a nonempty subset of {set(ALLOWED_DIVISORS)}")
    ds = ", ".join(map(str, divisors))
    return f"""\
// Exponentiation with a secret random divisor each round: {bits}-bit exponent E.
// The adversary sees whether each remainder is nonzero.
var E : int[0..{2 ** bits - 1}]
var D : {{{ds}}}
var R : int[0..{max(divisors) - 1}]
while E != 0 do
  D <- uniform {{{ds}}}
  R := E mod D
  leak R != 0
  E := E div D
od unroll {bits}
"""


__all__ = ["BIT_FLIP", "LAX", "STRICT", "bit_flip", "expmod", "passwords"]
