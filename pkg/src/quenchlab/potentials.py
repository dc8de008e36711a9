"""Special functions and edge potentials.

Every potential has two faces. As an angle interaction it is a positive
even function on the circle; as a height interaction it is the sequence of
its Fourier coefficients. ``EdgePotential.coefficient`` is that shared
sequence, so ``xy`` and ``bessel`` share coefficients, as do ``villain``
and ``gaussian``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .errors import ArgumentError, UnsupportedMeasureError

TWO_PI = 2.0 * math.pi

# Enough images/modes for 1e-16 relative accuracy on either side of the switch.
_HK_TERMS = 8
_HK_SWITCH = 1.0 / TWO_PI


def _wrap(theta):
    """Reduce angles to [-pi, pi)."""
    return np.mod(np.asarray(theta, dtype=float) + math.pi, TWO_PI) - math.pi


def _fourier_mp(beta: float, theta: float, digits: float) -> float:
    """Fourier sum at the working precision the cancellation needs."""
    import mpmath
    dps = int(min(digits, 330.0)) + 25
    with mpmath.workdps(dps):
        b, t = mpmath.mpf(beta), mpmath.mpf(theta)
        kmax = int(math.ceil(math.sqrt(2.0 * beta * (dps + 5) * math.log(10.0)))) + 2
        s = mpmath.fsum(mpmath.exp(-k * k / (2 * b)) * mpmath.cos(k * t) for k in range(1, kmax))
        return float(1 + 2 * s)


def heat_kernel(beta: float, theta, method: str = "auto"):
    """Heat kernel on the circle.

    ``v_beta(theta) = sum_k exp(-k^2 / (2 beta)) cos(k theta)``, with
    ``v_0 = 1``.

    Parameters
    ----------
    beta : float
        Inverse temperature, ``beta >= 0``.
    theta : float or array_like
        Angles.
    method : {"auto", "gauss", "fourier"}
        Which of the two series to sum. ``auto`` uses the image sum for
        ``beta >= 1/(2 pi)`` and the Fourier sum below.
    """
    if beta < 0:
        raise ArgumentError("beta must be nonnegative")
    th = _wrap(theta)
    if beta == 0:
        return np.ones_like(th)[()]
    if method == "auto":
        method = "gauss" if beta >= _HK_SWITCH else "fourier"
    if method == "gauss":
        terms = _HK_TERMS + int(math.ceil(math.sqrt(80.0 / beta) / TWO_PI))
        k = np.arange(-terms, terms + 1)
        x = th[..., None] - TWO_PI * k
        out = math.sqrt(TWO_PI * beta) * np.exp(-0.5 * beta * x * x).sum(axis=-1)
    elif method == "fourier":
        terms = _HK_TERMS + int(math.ceil(math.sqrt(80.0 * beta)))
        k = np.arange(1, terms + 1)
        w = np.exp(-(k * k) / (2.0 * beta))
        out = 1.0 + 2.0 * (w * np.cos(th[..., None] * k)).sum(axis=-1)
        # leading image term bounds the cancellation; redo bad points in mpmath
        dist = np.minimum(th, TWO_PI - th)
        digits = 0.5 * beta * dist * dist / math.log(10.0)
        bad = digits > 2.5
        if np.any(bad):
            out = np.array(out, dtype=float)
            for idx in zip(*np.nonzero(bad)) if out.ndim else [()]:
                out[idx] = _fourier_mp(beta, float(th[idx]), float(digits[idx]))
    else:
        raise ArgumentError(f"unknown method {method!r}")
    return out[()]


def log_heat_kernel(beta: float, theta):
    """Logarithm of :func:`heat_kernel`, stable for large ``beta``."""
    th = _wrap(theta)
    if beta == 0:
        return np.zeros_like(th)[()]
    if beta < _HK_SWITCH:
        return np.log(heat_kernel(beta, th))
    k = np.arange(-3, 4)
    x = th[..., None] - TWO_PI * k
    return (0.5 * math.log(TWO_PI * beta)
            + special.logsumexp(-0.5 * beta * x * x, axis=-1))[()]


def bessel_I(k, x):
    """Modified Bessel function of the first kind for integer order.

    ``I_k(x) = I_{-k}(x)``; ``I_k(0)`` is the indicator of ``k = 0``.
    """
    k = np.abs(np.asarray(k))
    return special.iv(k, x)[()]


def log_bessel_I(k, x):
    """``log I_k(x)`` without overflow for large ``x``."""
    k = np.abs(np.asarray(k))
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return (np.log(special.ive(k, x)) + x)[()]


def bessel_ratio(k, x):
    """``I_k(x) / I_0(x)``, computed from exponentially scaled values."""
    k = np.abs(np.asarray(k))
    x = np.asarray(x, dtype=float)
    return (special.ive(k, x) / special.ive(0, x))[()]


def bessel_power(k, n: int, beta: float):
    """``(I_k(n beta) / I_0(n beta))^n``; tends to ``exp(-k^2 / (2 beta))``."""
    return bessel_ratio(k, n * beta) ** n


# ---------------------------------------------------------------------------
# Mixing measures


@dataclass(frozen=True)
class MixingMeasure:
    """Probability measure on ``(0, inf)`` used to mix Gaussian weights.

    ``kind`` is ``"points"`` (finite atoms), ``"abs"`` (the measure behind
    ``exp(-|x|)``) or ``"quadratic"`` (a unit atom, behind ``exp(-x^2/2)``).
    """

    kind: str
    atoms: tuple = ()

    def __post_init__(self):
        if self.kind not in ("points", "abs", "quadratic"):
            raise UnsupportedMeasureError(f"unregistered mixing measure {self.kind!r}")
        if self.kind == "points":
            if not self.atoms:
                raise ArgumentError("point-mass measure needs at least one atom")
            js = np.array([a[0] for a in self.atoms], dtype=float)
            ws = np.array([a[1] for a in self.atoms], dtype=float)
            if np.any(js <= 0) or np.any(ws < 0):
                raise ArgumentError("atoms need J > 0 and w >= 0")
            if abs(ws.sum() - 1.0) > 1e-12:
                raise ArgumentError(f"weights sum to {ws.sum()!r}, not 1")

    @classmethod
    def points(cls, pairs) -> "MixingMeasure":
        """Finite measure from ``(J, w)`` pairs."""
        return cls("points", tuple((float(j), float(w)) for j, w in pairs))

    @classmethod
    def registered(cls, name: str) -> "MixingMeasure":
        if name not in ("abs", "quadratic"):
            raise ArgumentError(f"unknown registered measure {name!r}")
        return cls(name)

    @classmethod
    def from_table(cls, source) -> "MixingMeasure":
        """Read ``J w`` lines from a path or a string; ``#`` starts a comment."""
        text = source
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                        and Path(source).exists()):
            text = Path(source).read_text()
        pairs = []
        for line in str(text).splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                j, w = line.split()
                pairs.append((float(j), float(w)))
        return cls.points(pairs)

    def as_points(self):
        """Atoms as ``(J, w)`` arrays; only for discrete measures."""
        if self.kind == "quadratic":
            return np.array([1.0]), np.array([1.0])
        if self.kind == "points":
            a = np.array(self.atoms, dtype=float)
            return a[:, 0], a[:, 1]
        raise UnsupportedMeasureError("continuous measure has no atoms")

    def gaussian_mixture(self, beta: float, k):
        """``int exp(-k^2 / (2 beta J)) kappa(dJ)`` for integer ``k``."""
        k = np.abs(np.asarray(k, dtype=float))
        if beta == 0:
            return (k == 0).astype(float)[()]
        if self.kind == "abs":
            return np.exp(-k / math.sqrt(beta))[()]
        js, ws = self.as_points()
        return (ws * np.exp(-(k[..., None] ** 2) / (2.0 * beta * js))).sum(axis=-1)[()]

    def ratio_bound(self, beta: float, k: int) -> float:
        """Upper bound on ``c(j+1)/c(j)`` for all ``j >= k``."""
        if self.kind == "abs":
            return math.exp(-1.0 / math.sqrt(beta))
        js, _ = self.as_points()
        return float(np.max(np.exp(-(2 * k + 1) / (2.0 * beta * js))))


def annealed_villain_eval(kappa: MixingMeasure, beta: float, theta):
    """Annealed Villain interaction ``int v_{beta J}(theta) kappa(dJ)``."""
    if beta == 0:
        return np.ones_like(_wrap(theta))[()]
    if kappa.kind == "abs":
        q = math.exp(-1.0 / math.sqrt(beta))
        th = _wrap(theta)
        return ((1 - q * q) / (1 - 2 * q * np.cos(th) + q * q))[()]
    js, ws = kappa.as_points()
    return sum(w * heat_kernel(beta * j, theta) for j, w in zip(js, ws))


def mixture_identity_check(name: str, grid) -> float:
    """Max discrepancy between ``exp(-V(x))`` and its Gaussian mixture.

    ``abs`` uses ``exp(-|x|) = int (pi s)^{-1/2} e^{-s} e^{-x^2/(4s)} ds``,
    integrated adaptively after the substitution ``s = t^2``.
    """
    xs = np.asarray(grid, dtype=float)
    if name == "quadratic":
        return float(np.max(np.abs(np.exp(-xs ** 2 / 2) - np.exp(-xs ** 2 / 2))))
    if name != "abs":
        raise ArgumentError(f"unknown potential {name!r}")
    err = 0.0
    for x in xs:
        val, _ = integrate.quad(lambda t: math.exp(-t * t - x * x / (4 * t * t)) if t > 0 else 0.0,
                                0.0, np.inf, epsabs=1e-15, epsrel=1e-13, limit=200)
        err = max(err, abs(2.0 / math.sqrt(math.pi) * val - math.exp(-abs(x))))
    return err


# ---------------------------------------------------------------------------
# Edge potentials

_KINDS = ("xy", "villain", "gaussian", "bessel", "frozen", "free", "mixture")


@dataclass(frozen=True)
class FourierSeries:
    """Truncated coefficient sequence with rigorous tail bounds.

    Attributes
    ----------
    coeffs : ndarray
        ``c(0), ..., c(K)`` divided by ``c(0)``.
    log_c0 : float
        ``log c(0)``.
    tail : float
        Bound on ``sum_{|k|>K} c(k) / c(0)`` (both signs of ``k``).
    tail2 : float
        Bound on ``sum_{|k|>K} k^2 c(k) / c(0)``.
    """

    coeffs: np.ndarray
    log_c0: float
    tail: float
    tail2: float

    @property
    def K(self) -> int:
        return len(self.coeffs) - 1

    def symmetric(self) -> np.ndarray:
        """Coefficients for ``k = -K..K``."""
        return np.concatenate([self.coeffs[:0:-1], self.coeffs])

    def total(self) -> float:
        """Truncated sum ``sum_{|k|<=K} c(k)/c(0)``."""
        return float(self.coeffs[0] + 2 * self.coeffs[1:].sum())


@dataclass(frozen=True)
class EdgePotential:
    """One edge interaction; see the module docstring for the two views."""

    kind: str
    beta: float = 0.0
    measure: MixingMeasure | None = field(default=None)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ArgumentError(f"unknown potential kind {self.kind!r}")
        if self.beta < 0 or not math.isfinite(self.beta):
            raise ArgumentError("beta must be finite and nonnegative")
        if self.kind == "mixture" and self.measure is None:
            raise ArgumentError("mixture potential needs a measure")

    # constructors
    @classmethod
    def xy(cls, beta):
        return cls("xy", float(beta))

    @classmethod
    def villain(cls, beta):
        return cls("villain", float(beta))

    @classmethod
    def gaussian(cls, beta):
        return cls("gaussian", float(beta))

    @classmethod
    def bessel(cls, beta):
        return cls("bessel", float(beta))

    @classmethod
    def frozen(cls):
        return cls("frozen")

    @classmethod
    def free(cls):
        return cls("free")

    @classmethod
    def mixture(cls, measure: MixingMeasure, beta):
        return cls("mixture", float(beta), measure)

    # structure
    @property
    def family(self) -> str:
        """``"bessel"`` or ``"gauss"`` for coefficient shape, else the kind."""
        if self.kind in ("xy", "bessel"):
            return "bessel"
        if self.kind in ("villain", "gaussian"):
            return "gauss"
        return self.kind

    def is_delta(self) -> bool:
        """True when ``c(k)`` is the indicator of ``k = 0``."""
        return self.beta == 0 and self.kind not in ("frozen", "free")

    def scaled(self, factor: float) -> "EdgePotential":
        """Same kind with ``beta`` multiplied by ``factor``."""
        if self.kind in ("frozen", "free"):
            return self
        return EdgePotential(self.kind, self.beta * factor, self.measure)

    # coefficient view
    def coefficient(self, k):
        """Fourier coefficient of the angle view, i.e. the height weight."""
        k = np.abs(np.asarray(k))
        if self.kind == "frozen":
            return (k == 0).astype(float)[()]
        if self.kind == "free":
            return np.ones(k.shape)[()]
        if self.beta == 0:
            return (k == 0).astype(float)[()]
        fam = self.family
        if fam == "bessel":
            return bessel_I(k, self.beta)
        if fam == "gauss":
            return np.exp(-(k.astype(float) ** 2) / (2.0 * self.beta))[()]
        return self.measure.gaussian_mixture(self.beta, k)

    def log_coefficient(self, k):
        k = np.abs(np.asarray(k))
        with np.errstate(divide="ignore"):
            if self.family == "bessel" and self.beta > 0:
                return log_bessel_I(k, self.beta)
            return np.log(self.coefficient(k))

    def relative_coefficient(self, k):
        """``c(k) / c(0)``."""
        k = np.abs(np.asarray(k))
        if self.family == "bessel" and self.beta > 0:
            return bessel_ratio(k, self.beta)
        return self.coefficient(k) / self.coefficient(0)

    def ratio_bound(self, k: int) -> float:
        """Bound on ``c(j+1)/c(j)`` valid for all ``j >= k``; may be >= 1."""
        if self.is_delta() or self.kind == "frozen":
            return 0.0
        if self.kind == "free":
            return 1.0
        fam = self.family
        if fam == "bessel":
            return self.beta / (2.0 * (k + 1))
        if fam == "gauss":
            return math.exp(-(2 * k + 1) / (2.0 * self.beta))
        return self.measure.ratio_bound(self.beta, k)

    # angle view
    def density(self, theta):
        """Angle interaction as a function of the edge angle difference."""
        if self.kind == "frozen":
            raise ArgumentError("frozen edge has no density; contract it instead")
        if self.kind == "free" or self.beta == 0:
            return np.ones_like(_wrap(theta))[()]
        fam = self.family
        if fam == "bessel":
            return np.exp(self.beta * np.cos(theta))
        if fam == "gauss":
            return heat_kernel(self.beta, theta)
        return annealed_villain_eval(self.measure, self.beta, theta)

    def log_density(self, theta):
        if self.kind == "free" or self.beta == 0:
            return np.zeros_like(_wrap(theta))[()]
        fam = self.family
        if fam == "bessel":
            return self.beta * np.cos(theta)
        if fam == "gauss":
            return log_heat_kernel(self.beta, theta)
        return np.log(self.density(theta))

    def log_density_max(self) -> float:
        """Upper bound of ``log_density``, attained at zero angle."""
        return float(self.log_density(0.0))


def _geometric_tail(first: float, ratio: float) -> float:
    if first == 0:
        return 0.0
    if ratio >= 1:
        return math.inf
    return first / (1.0 - ratio)


def fourier_coeffs(p: EdgePotential, K: int) -> FourierSeries:
    """Coefficients ``|k| <= K`` of ``p`` with rigorous tail majorants."""
    if K < 0:
        raise ArgumentError("K must be nonnegative")
    if p.kind in ("frozen", "free"):
        raise ArgumentError(f"{p.kind} edge has no summable coefficient sequence")
    ks = np.arange(K + 1)
    if p.is_delta():
        return FourierSeries((ks == 0).astype(float), 0.0, 0.0, 0.0)
    c = np.asarray(p.relative_coefficient(ks), dtype=float)
    first = float(p.relative_coefficient(K + 1))
    rho = p.ratio_bound(K + 1)
    tail = 2.0 * _geometric_tail(first, rho)
    g = ((K + 2) / (K + 1)) ** 2
    tail2 = 2.0 * _geometric_tail((K + 1) ** 2 * first, g * rho)
    return FourierSeries(c, float(p.log_coefficient(0)), tail, tail2)


def truncation_order(p: EdgePotential, rel: float, second_moment: bool = False,
                     K_max: int = 4096) -> FourierSeries:
    """Smallest series whose tail is at most ``rel`` (relative to ``c(0)``)."""
    K = 1
    while True:
        fs = fourier_coeffs(p, K)
        t = fs.tail2 if second_moment else fs.tail
        if t <= rel:
            return fs
        if K >= K_max:
            return fs
        K = min(2 * K, K_max) if not math.isfinite(t) else K + max(1, K // 4)
