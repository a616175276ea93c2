"""Critical coupling, existence tests and explicit construction of phase-locked states.

A fixed point of the grounded system x' = Omega + k f(x) is a state with
k f(x) = -Omega. Fixed points are parameterized by a sign vector ``a`` and a
scalar ``beta`` (the order-parameter magnitude of the state) solving the
self-consistency equation

    beta = (1/N) sum_j a_j sqrt(1 - (Omega_j / (k beta))^2),   beta in [||Omega||_inf / k, 1].

The critical coupling is computed by bisection on the tangency condition

    v(u) := 2 P(u) = w(u) := (1/N) sum_j 1 / sqrt(1 - (Omega_j/u)^2),

with P(u) = (1/N) sum_j sqrt(1 - (Omega_j/u)^2), over u in (||Omega||_inf, sqrt(2) ||Omega||_inf].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    CapacityError,
    CertificationError,
    DegenerateInputError,
    ParameterError,
    ValidationError,
)
from .frequencies import FrequencySpec
from .order_field import coupling_field, order_magnitude

SQRT2 = math.sqrt(2.0)
SCAN_POINTS = 1024
BETA_CONDITION_TOL = 1e-10
EQUIVALENCE_TOL = 1e-8
DEFAULT_MAX_N = 16


def default_eps(spec: FrequencySpec) -> float:
    return 1e-10 * spec.inf_norm


def certification_tol(k: float) -> float:
    return 1e-8 * max(1.0, k)


def _radicand(Omega: np.ndarray, u) -> np.ndarray:
    # (1 - r)(1 + r) keeps precision when |Omega_j| is close to u
    r = np.divide.outer(Omega, u) if np.ndim(u) else Omega / u
    return np.clip((1.0 - r) * (1.0 + r), 0.0, None)


def P(spec: FrequencySpec, u):
    """Mean of sqrt(1 - (Omega_j/u)^2); vectorized over ``u``."""
    return np.mean(np.sqrt(_radicand(spec.Omega, u)), axis=0)


def key_sides(spec: FrequencySpec, u) -> tuple[np.ndarray, np.ndarray]:
    """(v(u), w(u)): the two sides of the tangency equation whose crossing is u*."""
    rad = np.sqrt(_radicand(spec.Omega, u))
    with np.errstate(divide="ignore"):
        return 2.0 * np.mean(rad, axis=0), np.mean(1.0 / rad, axis=0)


# --------------------------------------------------------------------------- bounds


def lower_bounds(spec: FrequencySpec) -> tuple[float, float]:
    """(||Omega||_inf, 2 sigma): both are necessary conditions on k."""
    return spec.inf_norm, 2.0 * spec.sigma


def upper_bound(spec: FrequencySpec) -> float:
    """Sufficient coupling ||Omega||_inf / P(||Omega||_inf).

    Returns ``math.inf`` when every |Omega_j| equals the norm, where the bound
    is vacuous.
    """
    if spec.is_degenerate:
        raise DegenerateInputError("Omega = 0: every coupling admits the fixed point x = 0")
    denom = float(P(spec, spec.inf_norm))
    if denom == 0.0:
        return math.inf
    return spec.inf_norm / denom


def order_band(spec: FrequencySpec, k: float) -> tuple[float, float]:
    """Admissible range of R at any fixed point for coupling ``k``."""
    if not k > 0:
        raise ParameterError(f"k must be positive, got {k}")
    ratio = spec.sigma / k
    disc = 1.0 - 4.0 * ratio * ratio
    if disc < 0:
        raise ParameterError(
            f"k={k:.6g} is below the lower bound 2*sigma={2 * spec.sigma:.6g}; the band is empty"
        )
    root = math.sqrt(disc)
    return math.sqrt(max(0.5 - 0.5 * root, 0.0)), math.sqrt(0.5 + 0.5 * root)


# --------------------------------------------------------------------------- critical coupling


@dataclass(frozen=True)
class CouplingReport:
    lower_inf: float
    lower_sigma: float
    upper: float
    kc: float
    u_star: float
    iterations: int
    tolerance: float
    degenerate: bool = False

    @property
    def upper_vacuous(self) -> bool:
        return math.isinf(self.upper)


def _key_sums(Om: np.ndarray, u: float) -> tuple[float, float]:
    """N*v(u) and N*w(u); plain floats for small N where numpy call overhead dominates."""
    if Om.shape[0] <= 32:
        v = w = 0.0
        for om in Om.tolist():
            r = om / u
            rad = math.sqrt((1.0 - r) * (1.0 + r))
            v += rad
            w += 1.0 / rad if rad > 0.0 else math.inf
        return 2.0 * v, w
    r = Om / u
    rad = np.sqrt((1.0 - r) * (1.0 + r))
    with np.errstate(divide="ignore"):
        return 2.0 * float(rad.sum()), float((1.0 / rad).sum())


def bisection_budget(spec: FrequencySpec, eps: float) -> int:
    """Largest iteration count compute_kc may use for this input."""
    width = (SQRT2 - 1.0) * spec.inf_norm
    if width <= eps:
        return 1
    return math.ceil(math.log2(width / eps)) + 1


def compute_kc(spec: FrequencySpec, eps: float | None = None) -> CouplingReport:
    """Exact critical coupling via bisection for the unique root u* of v(u) = w(u).

    v - w is negative just above ||Omega||_inf (w diverges there) and
    non-negative at sqrt(2) ||Omega||_inf, so the root is bracketed. Only
    midpoints are evaluated, never the singular left endpoint.
    """
    if eps is None:
        eps = default_eps(spec)
    elif not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    lo_inf, lo_sigma = lower_bounds(spec)
    if spec.is_degenerate:
        return CouplingReport(0.0, 0.0, 0.0, 0.0, 0.0, 0, eps, degenerate=True)

    a, b = spec.inf_norm, SQRT2 * spec.inf_norm
    iterations = 0
    while b - a > eps:
        u = 0.5 * (a + b)
        if u <= a or u >= b:
            break  # bracket is one ulp wide
        v, w = _key_sums(spec.Omega, u)
        if v > w:
            b = u
        else:
            a = u
        iterations += 1
    u_star = 0.5 * (a + b)
    kc = u_star / float(P(spec, u_star))
    return CouplingReport(
        lower_inf=lo_inf,
        lower_sigma=lo_sigma,
        upper=upper_bound(spec),
        kc=kc,
        u_star=u_star,
        iterations=iterations,
        tolerance=eps,
    )


# --------------------------------------------------------------------------- self-consistency


def as_sign_vector(a, n: int | None = None) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 1 or (n is not None and arr.shape[0] != n):
        raise ValidationError(f"sign vector must have length {n}, got shape {arr.shape}")
    if not np.all((arr == 1) | (arr == -1)):
        raise ValidationError("sign vector entries must be exactly -1 or +1")
    out = arr.astype(np.int8)
    out.setflags(write=False)
    return out


def self_consistency_rhs(spec: FrequencySpec, k: float, a, beta):
    """(1/N) sum_j a_j sqrt(1 - (Omega_j/(k beta))^2); vectorized over ``beta``."""
    rad = np.sqrt(_radicand(spec.Omega, k * np.asarray(beta, dtype=np.float64)))
    a = np.asarray(a, dtype=np.float64)
    if rad.ndim == 1:
        return float(a @ rad) / spec.n
    return (a @ rad) / spec.n


def _check_k(k: float) -> None:
    if not (k > 0 and math.isfinite(k)):
        raise ParameterError(f"k must be positive and finite, got {k}")


def _bisect(g, lo: float, hi: float, glo: float) -> float:
    """Bisect to machine precision on a bracket with sign(g(lo)) = sign(glo) != sign(g(hi)).

    Returns whichever final endpoint has the smaller |g|.
    """
    ghi = g(hi)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi, ghi = mid, gm
    return lo if abs(glo) <= abs(ghi) else hi


def _all_plus_roots(spec: FrequencySpec, k: float) -> list[float]:
    """Roots of beta = P(k beta), largest first.

    G(u) = P(u) - u/k is strictly concave on [||Omega||_inf, k], so there are
    at most two roots, separated by the maximizer of G.
    """
    lo = spec.inf_norm
    if lo > k:
        return []
    Om = spec.Omega
    n = spec.n

    def G(u):
        r = Om / u
        return float(np.sqrt(np.clip((1.0 - r) * (1.0 + r), 0.0, None)).sum()) / n - u / k

    def dG(u):
        r = Om / u
        rad = np.sqrt((1.0 - r) * (1.0 + r))
        with np.errstate(divide="ignore"):
            return float(np.sum(r * r / rad)) / (n * u) - 1.0 / k

    if G(k) >= 0.0:
        # only possible when Omega = 0 (then G(k) = 0 and beta = 1)
        return [1.0]
    # dG -> +inf at the left endpoint; locate the maximizer
    if dG(k) >= 0.0:
        u_max = k
    else:
        a, b = lo, k
        while True:
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            if dG(mid) > 0:
                a = mid
            else:
                b = mid
        u_max = a if G(a) >= G(b) else b
    g_max = G(u_max)
    if g_max < -1e-12:
        return []
    if g_max <= 0.0:
        return [u_max / k]
    roots = [_bisect(G, u_max, k, g_max) / k]
    g_lo = G(lo)
    if g_lo <= 0.0:
        roots.append(lo / k if g_lo == 0.0 else _bisect(G, lo, u_max, g_lo) / k)
    return roots


def existence_at(spec: FrequencySpec, k: float) -> float | None:
    """Largest beta with beta = P(k beta), or None when no fixed point exists at ``k``."""
    _check_k(k)
    if spec.is_degenerate:
        return 1.0
    roots = _all_plus_roots(spec, k)
    return roots[0] if roots else None


def _scan_roots(spec: FrequencySpec, k: float, a: np.ndarray, grid: np.ndarray, rhs: np.ndarray) -> list[float]:
    """Refine sign changes of beta - rhs(beta) sampled on ``grid``."""
    g_vals = grid - rhs
    af = a.astype(np.float64)

    def g(beta):
        return beta - self_consistency_rhs(spec, k, af, beta)

    roots = []
    for i in np.flatnonzero(g_vals == 0.0):
        roots.append(float(grid[i]))
    s = np.sign(g_vals)
    for i in np.flatnonzero(s[:-1] * s[1:] < 0):
        roots.append(_bisect(g, float(grid[i]), float(grid[i + 1]), float(g_vals[i])))
    return sorted(roots, reverse=True)


def _beta_grid(spec: FrequencySpec, k: float) -> np.ndarray:
    return np.linspace(spec.inf_norm / k, 1.0, SCAN_POINTS)


def existence_with_signs(spec: FrequencySpec, k: float, a) -> list[float]:
    """All beta in [||Omega||_inf/k, 1] solving the self-consistency equation for sign vector ``a``.

    The all-plus vector is solved exactly via concavity. Other sign vectors
    are scanned on a uniform grid and each sign change refined by bisection;
    tangential roots of mixed-sign equations can be missed by the scan.
    """
    _check_k(k)
    a = as_sign_vector(a, spec.n)
    if spec.is_degenerate:
        m = float(a.mean())
        return [m] if m > 0 else []
    if spec.inf_norm > k:
        return []
    if np.all(a == 1):
        return _all_plus_roots(spec, k)
    grid = _beta_grid(spec, k)
    return _scan_roots(spec, k, a, grid, self_consistency_rhs(spec, k, a, grid))


# --------------------------------------------------------------------------- construction


@dataclass(frozen=True)
class FixedPointCertificate:
    """A verified phase-locked state.

    ``mirrored`` marks a solution of the negated equation beta = -rhs(beta, a):
    the state then coincides with the one built from ``-a`` and the same beta.
    """

    a: np.ndarray
    beta: float
    x_star: np.ndarray
    residual_inf: float
    order_R: float
    k: float
    mirrored: bool = False

    def sign_code(self) -> int:
        return sign_code(self.a)


def sign_code(a) -> int:
    """Binary encoding of a sign vector: +1 -> bit set, first entry most significant."""
    code = 0
    for v in a:
        code = (code << 1) | (1 if v > 0 else 0)
    return code


def construct_fixed_point(
    spec: FrequencySpec, k: float, a, beta: float, tol: float | None = None
) -> FixedPointCertificate:
    """Build x* with k f(x*) = -Omega from a self-consistent pair (a, beta).

    Each oscillator sits at offset delta_i from the mean phase, with
    sin(delta_i) = -Omega_i/(k beta) and cos(delta_i) carrying the sign a_i.
    Placing the mean phase at the average offset keeps sum(x*) = 0.
    """
    _check_k(k)
    a = as_sign_vector(a, spec.n)
    if not 0 < beta <= 1 + 1e-12:
        raise ParameterError(f"beta must lie in (0, 1], got {beta}")
    if k * beta < spec.inf_norm * (1 - 1e-12):
        raise ParameterError(
            f"k*beta={k * beta:.17g} is below ||Omega||_inf={spec.inf_norm:.17g}"
        )
    rhs = self_consistency_rhs(spec, k, a, beta)
    mirrored = False
    defect = abs(beta - rhs)
    if defect > BETA_CONDITION_TOL and abs(beta + rhs) <= BETA_CONDITION_TOL:
        mirrored = True
        defect = abs(beta + rhs)
    if defect > BETA_CONDITION_TOL:
        raise CertificationError("(a, beta) does not satisfy the self-consistency equation", defect)

    eff = -a if mirrored else a
    s = np.clip(-spec.Omega / (k * beta), -1.0, 1.0)
    delta = np.arctan2(s, eff * np.sqrt((1.0 - s) * (1.0 + s)))
    x = delta.mean() - delta
    x = x - x.mean()

    residual = float(np.max(np.abs(k * coupling_field(x) + spec.Omega)))
    limit = certification_tol(k) if tol is None else tol
    if residual > limit:
        raise CertificationError("constructed state fails k f(x) = -Omega", residual)
    x.setflags(write=False)
    return FixedPointCertificate(
        a=a,
        beta=float(beta),
        x_star=x,
        residual_inf=residual,
        order_R=float(order_magnitude(x)),
        k=float(k),
        mirrored=mirrored,
    )


# --------------------------------------------------------------------------- enumeration


@dataclass
class FixedPointSet:
    """Certificates in deterministic order plus their equivalence classes (equal R)."""

    certificates: list[FixedPointCertificate]
    classes: list[list[int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.certificates)

    def __iter__(self) -> Iterator[FixedPointCertificate]:
        return iter(self.certificates)

    def __getitem__(self, i):
        return self.certificates[i]

    @property
    def class_values(self) -> list[float]:
        return [self.certificates[c[0]].order_R for c in self.classes]


def group_by_order(certs: Sequence[FixedPointCertificate], tol: float = EQUIVALENCE_TOL) -> list[list[int]]:
    """Cluster certificate indices whose R values agree within ``tol``."""
    order = sorted(range(len(certs)), key=lambda i: certs[i].order_R, reverse=True)
    classes: list[list[int]] = []
    anchor = None
    for i in order:
        R = certs[i].order_R
        if anchor is not None and abs(anchor - R) <= tol:
            classes[-1].append(i)
        else:
            classes.append([i])
            anchor = R
    for c in classes:
        c.sort()
    return classes


def _sign_matrix(n: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return np.where((codes[:, None] >> shifts) & 1, 1, -1).astype(np.int8)


def enumerate_fixed_points(spec: FrequencySpec, k: float, max_n: int = DEFAULT_MAX_N) -> FixedPointSet:
    """Certificates for every sign vector, in sign-code order then beta descending.

    For each ``a`` both the direct equation beta = rhs(beta, a) and its
    mirror beta = -rhs(beta, a) are solved; a mirrored root of ``a`` is the
    direct root of ``-a`` and yields the same state.
    """
    _check_k(k)
    n = spec.n
    if n > max_n:
        raise CapacityError(f"N={n} exceeds the enumeration cap max_n={max_n} (2^N sign vectors)")

    total = 1 << n
    direct: dict[int, list[float]] = {}
    if spec.is_degenerate:
        for code in range(total):
            a = _sign_matrix(n, code, code + 1)[0]
            direct[code] = existence_with_signs(spec, k, a)
    elif spec.inf_norm <= k:
        grid = _beta_grid(spec, k)
        rad = np.sqrt(_radicand(spec.Omega, k * grid))  # (n, SCAN_POINTS)
        all_plus = total - 1
        chunk = 1024
        for start in range(0, total, chunk):
            A = _sign_matrix(n, start, min(total, start + chunk))
            rhs = (A.astype(np.float64) @ rad) / n
            for row, code in enumerate(range(start, start + A.shape[0])):
                if code == all_plus:
                    direct[code] = _all_plus_roots(spec, k)
                elif np.all(grid - rhs[row] > 0):
                    direct[code] = []
                else:
                    direct[code] = _scan_roots(spec, k, A[row], grid, rhs[row])
    else:
        direct = {code: [] for code in range(total)}

    certs: list[FixedPointCertificate] = []
    for code in range(total):
        a = _sign_matrix(n, code, code + 1)[0]
        mirror = (total - 1) ^ code
        found = [(b, False) for b in direct[code]] + [(b, True) for b in direct[mirror]]
        found.sort(key=lambda t: (-t[0], t[1]))
        for beta, mirrored in found:
            cert = construct_fixed_point(spec, k, -a if mirrored else a, beta)
            if mirrored:
                cert = FixedPointCertificate(
                    a=a, beta=cert.beta, x_star=cert.x_star, residual_inf=cert.residual_inf,
                    order_R=cert.order_R, k=cert.k, mirrored=True,
                )
            certs.append(cert)
    return FixedPointSet(certificates=certs, classes=group_by_order(certs))


def self_consistency_curve(spec: FrequencySpec, k: float, samples: int = 512) -> np.ndarray:
    """Rows (beta, P(k beta), beta) over [||Omega||_inf/k, 1] for plotting root crossings."""
    _check_k(k)
    if samples < 2:
        raise ParameterError(f"need at least 2 samples, got {samples}")
    lo = spec.inf_norm / k
    if lo > 1.0:
        raise ParameterError(
            f"||Omega||_inf/k = {lo:.6g} > 1: coupling too weak for any admissible beta"
        )
    beta = np.linspace(lo, 1.0, samples)
    return np.column_stack([beta, P(spec, k * beta), beta])
