"""Fixed-point formats, saturating arithmetic, and CORDIC polar translation.

Every datapath quantity is a scaled integer tagged with a Q format. The
conventions, fixed once here and reused everywhere:

* rounding is round-to-nearest with ties away from zero,
* overflow saturates to the format limits, never wraps,
* all value paths are integer adds, shifts and multiplies, so results are
  bit-identical across platforms.  The only floating point is the CORDIC
  angle accumulator, which sums a fixed table of constants in a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Extra fraction bits carried on CORDIC magnitudes so the rounding step at
# the output grid dominates the error budget, not the iteration truncation.
CORDIC_GUARD_BITS = 14
# Working registers are normalized so the larger component sits just below
# this bit position; keeps relative truncation error flat for tiny inputs.
_CORDIC_WORK_BITS = 28
# Precision of the integer gain-compensation constant.
_GAIN_SHIFT = 30

DEFAULT_CORDIC_ITERATIONS = 16
MIN_CORDIC_ITERATIONS = 8


@dataclass(frozen=True)
class QFormat:
    """Two's-complement fixed-point format.

    ``integer_bits`` counts the sign bit for signed formats, so Q1.15 is a
    16-bit word covering [-1, 1 - 2**-15].  Total width is capped at 32.
    """

    integer_bits: int
    fraction_bits: int
    signed: bool = True

    def __post_init__(self) -> None:
        if self.signed and self.integer_bits < 1:
            raise ValueError("signed format needs at least the sign bit")
        if self.integer_bits < 0 or self.fraction_bits < 0:
            raise ValueError("field widths must be non-negative")
        if self.integer_bits + self.fraction_bits > 32:
            raise ValueError(
                f"total width {self.integer_bits + self.fraction_bits} exceeds 32 bits"
            )

    @property
    def width(self) -> int:
        return self.integer_bits + self.fraction_bits

    @property
    def scale(self) -> int:
        return 1 << self.fraction_bits

    @property
    def min_raw(self) -> int:
        return -(1 << (self.width - 1)) if self.signed else 0

    @property
    def max_raw(self) -> int:
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1

    @property
    def min_value(self) -> float:
        return self.min_raw / self.scale

    @property
    def max_value(self) -> float:
        return self.max_raw / self.scale

    def to_real(self, raw: int) -> float:
        return raw / self.scale

    def __str__(self) -> str:
        prefix = "Q" if self.signed else "UQ"
        return f"{prefix}{self.integer_bits}.{self.fraction_bits}"


# Receive samples are two's complement Q1.15 throughout.
Q1_15 = QFormat(1, 15)


def product_format(frac_bits: int) -> QFormat:
    """Instant products c1/c2/ee: Q1.f, unit range."""
    return QFormat(1, frac_bits)


def metric_format(frac_bits: int) -> QFormat:
    """Windowed metrics AC1/AC2/ENE: Q8.f, sized for sums of 128 unit products."""
    return QFormat(8, frac_bits)


def magnitude_format(frac_bits: int) -> QFormat:
    """|c2| after polar translation: Q2.f, headroom for magnitudes up to sqrt(2)."""
    return QFormat(2, frac_bits)


def xcr_format(frac_bits: int) -> QFormat:
    """Energy-correlator output: unsigned 8.f, values stay below 256."""
    return QFormat(8, frac_bits, signed=False)


def saturate_raw(raw: int, fmt: QFormat) -> tuple[int, bool]:
    """Clamp a raw integer into the format range. Returns (raw, saturated)."""
    if raw > fmt.max_raw:
        return fmt.max_raw, True
    if raw < fmt.min_raw:
        return fmt.min_raw, True
    return raw, False


def round_shift(raw, shift: int):
    """Round ``raw / 2**shift`` to nearest, ties away from zero.

    Works on Python ints and int64 arrays; a non-positive shift is an exact
    left shift.
    """
    if shift <= 0:
        return raw << (-shift)
    half = 1 << (shift - 1)
    if isinstance(raw, np.ndarray):
        mag = (np.abs(raw) + half) >> shift
        return np.where(raw >= 0, mag, -mag)
    if raw >= 0:
        return (raw + half) >> shift
    return -((-raw + half) >> shift)


@dataclass(frozen=True)
class FixedValue:
    """A raw integer bound to its format. Saturates at construction."""

    raw: int
    fmt: QFormat

    def __post_init__(self) -> None:
        clipped, _ = saturate_raw(int(self.raw), self.fmt)
        object.__setattr__(self, "raw", clipped)

    @property
    def value(self) -> float:
        return self.raw / self.fmt.scale

    def __repr__(self) -> str:
        return f"FixedValue({self.value!r}, {self.fmt})"


def quantize(x: float, fmt: QFormat) -> FixedValue:
    """Quantize a real number: round to nearest, ties away from zero, saturate."""
    if not math.isfinite(x):
        raise ValueError(f"cannot quantize non-finite value {x!r}")
    scaled = x * fmt.scale
    if scaled >= 0:
        raw = int(math.floor(scaled + 0.5))
    else:
        raw = -int(math.floor(-scaled + 0.5))
    return FixedValue(raw, fmt)


def quantize_array(x: np.ndarray, fmt: QFormat) -> tuple[np.ndarray, int]:
    """Vector quantizer. Returns (int64 raws, saturation event count)."""
    scaled = np.asarray(x, dtype=np.float64) * fmt.scale
    raw = np.where(
        scaled >= 0.0, np.floor(scaled + 0.5), -np.floor(-scaled + 0.5)
    ).astype(np.int64)
    saturated = int(np.count_nonzero((raw > fmt.max_raw) | (raw < fmt.min_raw)))
    return np.clip(raw, fmt.min_raw, fmt.max_raw), saturated


def fixed_mul(a: FixedValue, b: FixedValue, out_fmt: QFormat) -> FixedValue:
    """Multiply two fixed-point values into ``out_fmt``.

    The integer product is exact; one rounding to the output grid, then
    saturation.
    """
    prod = a.raw * b.raw
    shift = a.fmt.fraction_bits + b.fmt.fraction_bits - out_fmt.fraction_bits
    return FixedValue(round_shift(prod, shift), out_fmt)


@dataclass(frozen=True)
class FixedIq:
    """Complex sample as an I/Q pair sharing one format."""

    re: FixedValue
    im: FixedValue

    def __post_init__(self) -> None:
        if self.re.fmt != self.im.fmt:
            raise ValueError("I and Q must share a format")

    @property
    def fmt(self) -> QFormat:
        return self.re.fmt

    @property
    def value(self) -> complex:
        return complex(self.re.value, self.im.value)

    @classmethod
    def from_complex(cls, z: complex, fmt: QFormat) -> "FixedIq":
        return cls(quantize(z.real, fmt), quantize(z.imag, fmt))


@lru_cache(maxsize=None)
def _cordic_tables(iterations: int) -> tuple[tuple[float, ...], int]:
    angles = tuple(math.atan(2.0 ** -i) for i in range(iterations))
    gain = 1.0
    for i in range(iterations):
        gain *= math.sqrt(1.0 + 2.0 ** (-2 * i))
    compensation = round((1.0 / gain) * (1 << _GAIN_SHIFT))
    return angles, compensation


def cordic_gain(iterations: int = DEFAULT_CORDIC_ITERATIONS) -> float:
    """Uncompensated magnitude growth of the vectoring iteration."""
    gain = 1.0
    for i in range(iterations):
        gain *= math.sqrt(1.0 + 2.0 ** (-2 * i))
    return gain


def magnitude_output_format(in_fmt: QFormat) -> QFormat:
    """Format of a CORDIC magnitude: one extra integer bit for the sqrt(2)
    growth, guard fraction bits as width allows."""
    guard = min(CORDIC_GUARD_BITS, 32 - in_fmt.width - 1)
    return QFormat(in_fmt.integer_bits + 1, in_fmt.fraction_bits + guard)


def cordic_polar_arrays(
    x_raw: np.ndarray,
    y_raw: np.ndarray,
    fmt: QFormat,
    iterations: int = DEFAULT_CORDIC_ITERATIONS,
    compensate_gain: bool = True,
) -> tuple[np.ndarray, np.ndarray, QFormat]:
    """Vectoring-mode CORDIC over arrays of raw I/Q integers.

    Returns ``(mag_raw, angle, mag_fmt)``: magnitudes as raw integers in
    ``magnitude_output_format(fmt)``, and angles in radians in (-pi, pi].
    Zero inputs map to (0, 0.0).

    With ``compensate_gain`` the iteration gain (about 1.6468) is divided
    back out of the magnitude.  Passing False skips the correction and
    returns the grown magnitude, the way hardware does when the consumer
    is scale-invariant and the extra multiplier would be wasted.

    Inputs are normalized up to a common working position before iterating,
    so relative magnitude error stays flat down to single-LSB inputs; the
    result is rounded once onto the output grid.
    """
    if iterations < MIN_CORDIC_ITERATIONS:
        raise ValueError(f"need at least {MIN_CORDIC_ITERATIONS} iterations")
    x = np.asarray(x_raw, dtype=np.int64)
    y = np.asarray(y_raw, dtype=np.int64)
    zero = (x == 0) & (y == 0)

    peak = np.maximum(np.abs(x), np.abs(y))
    # frexp exponent == bit length for positive integers below 2**53
    _, exponent = np.frexp(np.maximum(peak, 1).astype(np.float64))
    lead = np.maximum(_CORDIC_WORK_BITS - exponent.astype(np.int64), 0)
    xw = x << lead
    yw = y << lead

    # Fold the left half-plane onto the right: rotate by +-pi/2.
    neg_x = xw < 0
    y_nonneg = yw >= 0
    z0 = np.where(neg_x, np.where(y_nonneg, math.pi / 2.0, -math.pi / 2.0), 0.0)
    xr = np.where(neg_x, np.where(y_nonneg, yw, -yw), xw)
    yr = np.where(neg_x, np.where(y_nonneg, -xw, xw), yw)

    z = np.zeros(x.shape, dtype=np.float64)
    angles, compensation = _cordic_tables(iterations)
    if not compensate_gain:
        compensation = 1 << _GAIN_SHIFT
    for i, step in enumerate(angles):
        y_neg = yr < 0
        xs = xr >> i
        ys = yr >> i
        xr, yr = (
            np.where(y_neg, xr - ys, xr + ys),
            np.where(y_neg, yr + xs, yr - xs),
        )
        z = np.where(y_neg, z - step, z + step)

    angle = z0 + z
    angle = np.where(angle > math.pi, angle - 2.0 * math.pi, angle)
    angle = np.where(angle <= -math.pi, angle + 2.0 * math.pi, angle)

    out_fmt = magnitude_output_format(fmt)
    guard = out_fmt.fraction_bits - fmt.fraction_bits
    # xr is non-negative here; one round from the working scale to the grid.
    shift = _GAIN_SHIFT + lead - guard
    half = np.int64(1) << (shift - 1)
    mag = (xr * compensation + half) >> shift

    mag = np.where(zero, np.int64(0), mag)
    angle = np.where(zero, 0.0, angle)
    return mag, angle, out_fmt


def cordic_polar(
    z: FixedIq,
    iterations: int = DEFAULT_CORDIC_ITERATIONS,
    compensate_gain: bool = True,
) -> tuple[FixedValue, float]:
    """Rectangular-to-polar translation of one I/Q sample.

    Returns (magnitude, angle): the magnitude as a FixedValue in
    ``magnitude_output_format`` and the angle in radians in (-pi, pi].
    """
    mag, angle, fmt = cordic_polar_arrays(
        np.array([z.re.raw], dtype=np.int64),
        np.array([z.im.raw], dtype=np.int64),
        z.fmt,
        iterations,
        compensate_gain,
    )
    return FixedValue(int(mag[0]), fmt), float(angle[0])
