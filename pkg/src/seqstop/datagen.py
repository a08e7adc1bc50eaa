"""Deterministic, seedable generators for the simulation designs and signals.

Covers the diagonal inverse problems with three signal classes, the Phillips
and gravity test problems, high-dimensional linear-model signals, and sparse
additive regression models.  Every generator is a pure function of its
parameters and seed; the matrix constructions are seed-independent.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSizeError
from .linalg import DesignMatrix
from .rng import make_rng

# signal template 5000 * |sin(a j)| * j^(-b); the smooth pair is canonical,
# the supersmooth/rough pairs are overridable library defaults chosen for the
# qualitative decay ordering supersmooth < smooth < rough
SIGNAL_PARAMS = {
    "supersmooth": (0.001, 2.5),
    "smooth": (0.01, 1.6),
    "rough": (1.0, 0.8),
}

ADDITIVE_PARAMETER_SIZE = 30
ADDITIVE_SUPPORT = (-2.5, 2.5)


@dataclass
class InverseProblemInstance:
    """One draw of the inverse problem Y = A f + delta * eps."""

    design: DesignMatrix
    response: np.ndarray
    true_signal: np.ndarray
    noise_level: float
    noise: np.ndarray


@dataclass
class RegressionInstance:
    """One draw of the regression model Y_i = f(X_i) + eps_i."""

    covariates: np.ndarray
    response: np.ndarray
    true_function_values: np.ndarray
    noise_variance: float
    noise: np.ndarray


def signal_vector(n, kind, params=None) -> np.ndarray:
    """Signal 5000 * |sin(a j)| * j^(-b) for j = 1..n."""
    if params is None:
        params = SIGNAL_PARAMS[kind]
    a, b = params
    j = np.arange(1, n + 1, dtype=float)
    return 5000.0 * np.abs(np.sin(a * j)) * j ** (-b)


def diagonal_problem(n, signal_kind="smooth", delta=0.01, seed=0, signal_params=None):
    """Diagonal design lambda_j = j^(-1/2) with the given signal class."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    j = np.arange(1, n + 1, dtype=float)
    lam = 1.0 / np.sqrt(j)
    f = signal_vector(n, signal_kind, signal_params)
    noise = delta * make_rng(seed).standard_normal(n)
    design = DesignMatrix.from_diagonal(lam)
    response = design.matvec(f) + noise
    return InverseProblemInstance(design, response, f, float(delta), noise)


def phillips(n):
    """Classical Phillips test problem on [-6, 6].

    Galerkin discretization with orthonormal box functions of the Fredholm
    kernel k(s, t) = phi(s - t), phi(t) = (1 + cos(pi t / 3)) on |t| < 3 and
    zero outside.  Returns the symmetric design matrix and the box-function
    coefficients of the solution phi.
    """
    if n % 4 != 0:
        raise InvalidSizeError("phillips requires n divisible by 4")
    h = 12.0 / n
    n4 = n // 4
    a = np.pi / 3.0
    # exact double integral of phi(s - t) over cell pairs at offset k * h
    k = np.arange(0, n4, dtype=float)
    col = np.zeros(n)
    col[:n4] = h + (9.0 / (h * np.pi**2)) * (
        2.0 * np.cos(a * k * h) - np.cos(a * (k - 1.0) * h) - np.cos(a * (k + 1.0) * h)
    )
    col[n4] = h / 2.0 + (9.0 / (h * np.pi**2)) * (np.cos(a * h) - 1.0)
    offsets = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    design = col[offsets]

    edges = -6.0 + h * np.arange(n + 1)

    def antiderivative(t):
        t = np.clip(t, -3.0, 3.0)
        return t + np.sin(a * t) / a

    true_signal = (antiderivative(edges[1:]) - antiderivative(edges[:-1])) / np.sqrt(h)
    return DesignMatrix.dense(design), true_signal


def gravity(n, depth=0.25):
    """1-D gravity surveying problem on [0, 1] midpoint grids.

    A_ij = h * d * (d^2 + (s_i - t_j)^2)^(-3/2) with h = 1/n and source
    depth d; signal f(t) = sin(pi t) + 0.5 sin(2 pi t).
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if depth <= 0:
        raise ValueError("depth must be positive")
    h = 1.0 / n
    t = (np.arange(1, n + 1) - 0.5) * h
    diff = np.subtract.outer(t, t)
    design = h * depth * (depth**2 + diff**2) ** (-1.5)
    true_signal = np.sin(np.pi * t) + 0.5 * np.sin(2.0 * np.pi * t)
    return DesignMatrix.dense(design), true_signal


def gamma_sparse_signal(p, gamma) -> np.ndarray:
    """Polynomially decaying coefficients j^(-gamma), rescaled to l1-norm 10."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    beta = 1.0 / (1.0 + np.arange(p, dtype=float)) ** gamma
    return 10.0 * beta / np.sum(np.abs(beta))


def s_sparse_signal(p, s, magnitude) -> np.ndarray:
    """Leading-block support of size s with equal magnitudes."""
    if not 1 <= s <= p:
        raise ValueError("s must satisfy 1 <= s <= p")
    beta = np.zeros(p)
    beta[:s] = magnitude
    return beta


def gaussian_design(n, p, seed=0) -> np.ndarray:
    """iid standard normal n x p design."""
    return make_rng(seed).standard_normal((n, p))


def _scaled(values, target=2.0):
    peak = np.max(np.abs(values))
    return target / peak


_GRID = np.linspace(ADDITIVE_SUPPORT[0], ADDITIVE_SUPPORT[1], 20001)


def _smooth_components():
    defs = [
        lambda x: np.sin(2.0 * x),
        lambda x: np.cos(3.0 * x) + 0.5 * x,
        lambda x: 1.0 - x**2 / 3.0,
        lambda x: np.tanh(2.0 * x),
    ]
    return [
        (lambda x, g=g, c=_scaled(g(_GRID)): c * g(x))
        for g in defs
    ]


def _step_components():
    # symmetric three-level staircases with per-coordinate breakpoints
    params = [(1.25, 1.0), (0.75, -1.0), (1.75, 1.0), (0.25, -1.0)]

    def make(threshold, sign):
        def g(x):
            return sign * 2.0 * (np.sign(x) * (np.abs(x) > threshold))

        return g

    return [make(t, s) for t, s in params]


def _linear_components():
    # piecewise-linear tents and zig-zags through fixed knots
    knots = [
        ([-2.5, 0.0, 2.5], [-2.0, 2.0, -2.0]),
        ([-2.5, -1.25, 0.0, 1.25, 2.5], [-2.0, 2.0, -2.0, 2.0, -2.0]),
        ([-2.5, -0.5, 0.5, 2.5], [-2.0, 1.0, -1.0, 2.0]),
        ([-2.5, -1.0, 2.5], [-2.0, 2.0, -1.0]),
    ]
    return [
        (lambda x, xs=np.array(xs), ys=np.array(ys): np.interp(x, xs, ys))
        for xs, ys in knots
    ]


def _hills_components():
    # sum of two Gaussian bumps per coordinate
    params = [
        ((-1.0, 0.5, 1.0), (1.0, 0.5, 1.0)),
        ((-1.5, 0.4, 1.0), (0.8, 0.6, -0.8)),
        ((0.0, 0.3, 1.0), (1.8, 0.5, 0.6)),
        ((-0.7, 0.6, -1.0), (1.2, 0.4, 1.0)),
    ]

    def bump(x, center, width, amp):
        return amp * np.exp(-((x - center) ** 2) / (2.0 * width**2))

    def make(b1, b2):
        def raw(x):
            return bump(x, *b1) + bump(x, *b2)

        scale = _scaled(raw(_GRID))

        def g(x):
            return scale * raw(x)

        return g

    return [make(b1, b2) for b1, b2 in params]


ADDITIVE_COMPONENTS = {
    "smooth": _smooth_components,
    "step": _step_components,
    "linear": _linear_components,
    "hills": _hills_components,
}


def additive_components(kind):
    """The four component functions g_1..g_4 for an additive model kind."""
    return ADDITIVE_COMPONENTS[kind]()


def additive_model(kind, n, noise_level=1.0, seed=0, components=None) -> RegressionInstance:
    """Sparse additive model with 30 uniform covariates on (-2.5, 2.5).

    The response is sum_{j<=4} g_j(x_j) + noise_level * N(0, 1); the default
    g_j per kind are fixed library functions (amplitude-normalised to
    max |g_j| = 2), overridable through `components`.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if components is None:
        components = additive_components(kind)
    rng = make_rng(seed)
    lo, hi = ADDITIVE_SUPPORT
    x = rng.uniform(lo, hi, (n, ADDITIVE_PARAMETER_SIZE))
    f = np.zeros(n)
    for j, g in enumerate(components):
        f = f + g(x[:, j])
    noise = noise_level * rng.standard_normal(n)
    return RegressionInstance(x, f + noise, f, float(noise_level) ** 2, noise)
