"""Natural-frequency vectors: validation, centering, sampling and file I/O.

All downstream analysis works with the centered vector ``Omega`` (the
natural frequencies with their mean removed), which lives on the
zero-mean subspace of R^N.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import DimensionError, ValidationError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FrequencySpec:
    """Raw natural frequencies and their centered counterpart.

    ``sigma`` is the population standard deviation sqrt(mean(Omega**2)).
    """

    omega: np.ndarray
    Omega: np.ndarray
    inf_norm: float
    sigma: float
    n: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n", int(self.Omega.shape[0]))

    @property
    def is_degenerate(self) -> bool:
        """True when every centered frequency is zero (identical oscillators)."""
        return self.inf_norm == 0.0

    def __eq__(self, other):
        if not isinstance(other, FrequencySpec):
            return NotImplemented
        return np.array_equal(self.omega, other.omega)

    def __hash__(self):
        return hash(self.omega.tobytes())


def center(omega: Iterable[float]) -> FrequencySpec:
    """Subtract the mean from ``omega`` and summarize the result."""
    w = np.asarray(list(omega) if not isinstance(omega, np.ndarray) else omega, dtype=np.float64)
    if w.ndim != 1:
        raise DimensionError(f"expected a 1-D frequency vector, got shape {w.shape}")
    if w.shape[0] < 2:
        raise DimensionError(f"need at least 2 oscillators, got {w.shape[0]}")
    if not np.all(np.isfinite(w)):
        bad = int(np.flatnonzero(~np.isfinite(w))[0])
        raise ValidationError(f"frequency at index {bad} is not finite ({w[bad]})")
    n = w.shape[0]
    if math.fsum(w) == 0.0:
        # already centered: keep exactly as given
        Om = w.copy()
    else:
        Om = w - math.fsum(w) / n
        # second pass removes the rounding left by a mean much larger than the spread
        Om = Om - math.fsum(Om) / n
    inf_norm = float(np.max(np.abs(Om)))
    # scaled by the norm so tiny or huge frequencies do not under/overflow when squared
    sigma = inf_norm * float(np.sqrt(np.mean((Om / inf_norm) ** 2))) if inf_norm > 0 else 0.0
    return FrequencySpec(omega=_frozen(w), Omega=_frozen(Om), inf_norm=inf_norm, sigma=sigma)


def sample_normal(n: int, mean: float = 0.0, std: float = 1.0, seed: int = 0) -> FrequencySpec:
    """Draw ``n`` normal frequencies, sort them ascending and center them.

    The generator is numpy's PCG64 seeded with ``seed`` (``numpy.random.default_rng``),
    so a given seed reproduces the same vector on every platform numpy supports.
    """
    if n < 2:
        raise DimensionError(f"need at least 2 oscillators, got {n}")
    if not std >= 0:
        raise ValidationError(f"std must be non-negative, got {std}")
    rng = np.random.default_rng(seed)
    draw = rng.normal(mean, std, size=n) if std > 0 else np.full(n, float(mean))
    order = np.argsort(draw, kind="stable")
    return center(draw[order])


def parse_frequencies(text: str) -> FrequencySpec:
    """Parse either a JSON array or one decimal per line ('#' starts a comment)."""
    stripped = text.strip()
    if stripped.startswith("["):
        try:
            values = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON array: {exc.msg}", line=exc.lineno) from None
        if not isinstance(values, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
        ):
            raise ValidationError("JSON input must be an array of numbers")
        return center([float(v) for v in values])

    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        try:
            v = float(body)
        except ValueError:
            raise ValidationError(f"not a number: {body!r}", line=lineno) from None
        if not math.isfinite(v):
            raise ValidationError(f"non-finite value: {body!r}", line=lineno)
        values.append(v)
    return center(values)


def read_frequencies(path: str | Path) -> FrequencySpec:
    return parse_frequencies(Path(path).read_text())


def write_frequencies(spec_or_values, fh: TextIO) -> None:
    """Write one value per line with 17 significant digits."""
    values = spec_or_values.omega if isinstance(spec_or_values, FrequencySpec) else spec_or_values
    for v in values:
        fh.write(f"{float(v):.17g}\n")
