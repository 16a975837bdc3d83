"""Spectra, spectral test functions and their linear majorizers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .graph import Graph, laplacian
from .motifs import DEFAULT_BALL_CAP, census_distance, motif_census

NEG_CLAMP = 1e-10


class NonFiniteInput(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns aligned with eigenvalues


def eig_sym(S: np.ndarray) -> Spectrum:
    """Symmetric eigendecomposition with ascending eigenvalues.

    Each eigenvector is signed so that its first component that is not
    numerically zero is positive, which makes the output deterministic.
    """
    S = np.asarray(S, dtype=float)
    if not np.all(np.isfinite(S)):
        raise NonFiniteInput("matrix has non-finite entries")
    lam, V = np.linalg.eigh((S + S.T) / 2)
    tol = 1e-12 * max(1.0, np.abs(V).max())
    first = np.argmax(np.abs(V) > tol, axis=0)
    signs = np.sign(V[first, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return Spectrum(lam, V * signs)


# --------------------------------------------------------------------------
# test functions

AFFINE, CONVEX, CONCAVE = "affine", "convex", "concave"


@dataclass(frozen=True)
class TestFunction:
    """Scalar function applied to every eigenvalue.

    ``linear_derivative`` is ``(a1, a0)`` when ``g'(x) = a1 x + a0``; the
    eigenvalue step then has a closed form.
    """

    __test__ = False  # not a pytest class

    name: str
    g: Callable[[np.ndarray], np.ndarray]
    g_prime: Callable[[np.ndarray], np.ndarray]
    g_second: Callable[[np.ndarray], np.ndarray]
    curvature: str
    linear_derivative: Optional[tuple] = None

    @property
    def sign(self) -> int:
        """+1 for concave, -1 for convex, 0 for affine.

        This is the sign with which ``gamma * c_g`` enters the objective and the
        orientation of the enforced half of the similarity interval (``>=`` for
        concave, ``<=`` for convex).
        """
        return {CONCAVE: 1, CONVEX: -1, AFFINE: 0}[self.curvature]


def _heat(x):
    return np.exp(-np.clip(x, -50.0, 50.0))


def _sqrt_arg(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < -NEG_CLAMP):
        raise DomainError("sqrt test function applied to a negative eigenvalue")
    return np.maximum(x, 0.0)


def _sqrt_prime(x):
    x = _sqrt_arg(x)
    if np.any(x == 0):
        raise DomainError("sqrt test function has no derivative at 0")
    return 0.5 / np.sqrt(x)


TEST_FUNCTIONS = {
    "tr": TestFunction(
        "tr",
        lambda x: np.asarray(x, dtype=float),
        lambda x: np.ones_like(np.asarray(x, dtype=float)),
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        AFFINE,
        (0.0, 1.0),
    ),
    "heat": TestFunction("heat", _heat, lambda x: -_heat(x), _heat, CONVEX),
    "sqrt": TestFunction(
        "sqrt",
        lambda x: np.sqrt(_sqrt_arg(x)),
        _sqrt_prime,
        lambda x: -0.25 * _sqrt_arg(x) ** -1.5,
        CONCAVE,
    ),
    "sq": TestFunction(
        "sq",
        lambda x: np.asarray(x, dtype=float) ** 2,
        lambda x: 2.0 * np.asarray(x, dtype=float),
        lambda x: np.full_like(np.asarray(x, dtype=float), 2.0),
        CONVEX,
        (2.0, 0.0),
    ),
    "br": TestFunction(
        "br",
        lambda x: (np.asarray(x, dtype=float) - 1.5) ** 2 / 4,
        lambda x: (np.asarray(x, dtype=float) - 1.5) / 2,
        lambda x: np.full_like(np.asarray(x, dtype=float), 0.5),
        CONVEX,
        (0.5, -0.75),
    ),
}


def get_test_function(name) -> TestFunction:
    if isinstance(name, TestFunction):
        return name
    try:
        return TEST_FUNCTIONS[name.lower()]
    except KeyError:
        raise ValueError(
            f"unknown test function {name!r}; choose from {'|'.join(TEST_FUNCTIONS)}"
        ) from None


def c_g(lam, f) -> float:
    """Mean of ``g`` over the spectrum."""
    f = get_test_function(f)
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)):
        raise NonFiniteInput("eigenvalues are not finite")
    return float(np.mean(f.g(lam)))


def majorizer_coeffs(f, lambda_prev, gamma: float, sqrt_form: str = "taylor", n=None) -> np.ndarray:
    """Coefficients of the linear surrogate added to the eigenvalue subproblem.

    The surrogate is ``sign * gamma * (1/N) sum g'(lambda_prev_i) lambda_i``: a
    tangent upper bound of ``+gamma c_g`` for concave ``g`` and of ``-gamma c_g``
    for convex ``g``. Affine functions contribute nothing. ``N`` defaults to
    ``len(lambda_prev)``; pass ``n`` when only part of the spectrum is given.

    ``sqrt_form="printed"`` uses ``1/(2 lambda_prev)`` instead of the
    derivative ``1/(2 sqrt(lambda_prev))`` for the square-root function.
    """
    f = get_test_function(f)
    lam = np.asarray(lambda_prev, dtype=float)
    n = lam.size if n is None else n
    if f.sign == 0:
        return np.zeros(lam.size)
    if f.name == "sqrt" and sqrt_form == "printed":
        lam = _sqrt_arg(lam)
        if np.any(lam == 0):
            raise DomainError("sqrt majorizer undefined at 0")
        grad = 0.5 / lam
    else:
        grad = f.g_prime(lam)
    return f.sign * gamma / n * grad


@dataclass(frozen=True)
class SpectralTarget:
    """Reference value of ``c_g`` with tolerance ``delta``."""

    test_fn: TestFunction
    value: float
    delta: float = 0.0
    source: str = "explicit"  # reference_graph | ensemble_density | explicit

    def __post_init__(self):
        object.__setattr__(self, "test_fn", get_test_function(self.test_fn))
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if not np.isfinite(self.value):
            raise ValueError("target value must be finite")

    @property
    def lower(self) -> float:
        return self.value - self.delta

    @property
    def upper(self) -> float:
        return self.value + self.delta

    @classmethod
    def from_graph(cls, f, ref: Graph, delta: float = 0.0):
        lam = np.linalg.eigvalsh(laplacian(ref))
        return cls(get_test_function(f), c_g(np.maximum(lam, 0.0), f), delta, "reference_graph")

    @classmethod
    def from_density(cls, f, density: Callable, support, delta: float = 0.0):
        """Ensemble target ``int g dmu`` for a spectral density on ``support``."""
        from scipy.integrate import quad

        f = get_test_function(f)
        a, b = support
        mass = quad(density, a, b, limit=200)[0]
        val = quad(lambda x: float(f.g(np.array(x))) * density(x), a, b, limit=200)[0] / mass
        return cls(f, val, delta, "ensemble_density")


def spectrum_of(g: Graph) -> np.ndarray:
    """Laplacian eigenvalues with round-off negatives clamped to zero."""
    return np.maximum(np.linalg.eigvalsh(laplacian(g)), 0.0)


def theorem1_check(g1: Graph, g2: Graph, r: int, fns=None, cap: int = DEFAULT_BALL_CAP) -> dict:
    """Pair census distance with the spectral gap ``|c_g(lam1) - c_g(lam2)|``.

    Returns a dict with ``eps`` (census distance) and ``deltas`` mapping each
    test-function name to its gap on the Laplacian spectra.
    """
    fns = [get_test_function(f) for f in (fns or TEST_FUNCTIONS)]
    eps = census_distance(motif_census(g1, r, cap), motif_census(g2, r, cap))
    lam1, lam2 = spectrum_of(g1), spectrum_of(g2)
    deltas = {f.name: abs(c_g(lam1, f) - c_g(lam2, f)) for f in fns}
    return {"radius": r, "eps": eps, "deltas": deltas}
