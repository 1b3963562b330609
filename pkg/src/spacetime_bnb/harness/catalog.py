"""Manufactured problems for u' + A u = f, u(0) - Phi u(T) = xi0.

Every problem is written modally: spatial mode j has eigenvalue lambda_j of the
model operator.  On a spectral triple the modes are the basis vectors and
lambda_j = j**2 by default; on a P1 triple over (0, L) they are sin(j pi x/L)
with lambda_j = (j pi / L)**2 and the form is the Dirichlet stiffness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import ConstructionError
from ..norms import ExactFunction, ModalFunction, SineSeriesFunction
from ..triple import (P1FEM, SPECTRAL, ContractionMap, FormSpec, SpaceTriple, make_contraction, make_form,
                      make_p1_fem_triple, make_spectral_triple, p1_h_load)

ROUGH_SEED = 20240611
_ROUGH_MAX_MODES = 4096
_EXACT_ORDER = 6


def default_eigenvalues(n: int) -> np.ndarray:
    """lambda_j = j**2, j = 1..n."""
    return np.arange(1, n + 1, dtype=float) ** 2


def spectral_model(n: int) -> SpaceTriple:
    return make_spectral_triple(n, default_eigenvalues(n), label=f"spectral({n})")


def build_triple(kind: str, size: int, length: float = 1.0) -> SpaceTriple:
    """``kind`` spectral -> ``size`` modes; p1 -> ``size`` cells."""
    if kind in ("spectral", SPECTRAL):
        return spectral_model(size)
    if kind in ("p1", P1FEM):
        return make_p1_fem_triple(size, length)
    raise ConstructionError(f"unknown triple kind {kind!r}")


def model_eigenvalues(triple: SpaceTriple, count: int) -> np.ndarray:
    """Eigenvalues of the first ``count`` continuous modes used by the catalog."""
    if triple.kind == SPECTRAL:
        if count > triple.dim:
            raise ConstructionError(f"need {count} modes, triple has {triple.dim}")
        return np.asarray(triple.eigenvalues[:count], dtype=float)
    L = triple.params["length"]
    return (np.arange(1, count + 1) * math.pi / L) ** 2


@dataclass(frozen=True)
class ManufacturedProblem:
    """Modal recipe.

    ``xi0(lam)`` and ``f(t, lam)`` give modal coefficients for the eigenvalues
    ``lam`` of the first modes; ``exact(t, lam, order)`` the coefficients of the
    order-th time derivative of the solution (None when unknown).
    """

    name: str
    phi_kind: str
    modes: Optional[int]  # number of modes carrying data (None: all available)
    xi0: Callable
    f: Optional[Callable]
    exact: Optional[Callable]
    T: float = 1.0
    phi_override: bool = False
    note: str = ""

    @property
    def has_exact(self) -> bool:
        return self.exact is not None


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    problem: ManufacturedProblem
    triple: SpaceTriple
    form: FormSpec
    phi: ContractionMap
    xi0: np.ndarray  # H-load vector
    f: Optional[Callable]  # t -> load vector
    exact: Optional[ExactFunction]
    T: float
    meta: dict = field(default_factory=dict)


def _scalar_of(kind: str) -> float:
    table = {"zero": 0.0, "identity": 1.0, "neg-identity": -1.0}
    if kind in table:
        return table[kind]
    if kind.startswith("scalar:"):
        return float(kind.split(":", 1)[1])
    raise ConstructionError(f"catalog problems need a scalar Phi, got {kind!r}")


def _decay(phi_kind="zero", T=1.0):
    c = _scalar_of(phi_kind)

    def amp(lam):
        return 1.0 / (1.0 - c * math.exp(-lam[0] * T))

    def exact(t, lam, order):
        return np.array([amp(lam) * (-lam[0]) ** order * math.exp(-lam[0] * t)])

    return ManufacturedProblem(
        "decay", phi_kind, 1, lambda lam: np.array([1.0]), None, exact, T, True,
        "first mode decaying from xi0 = phi_1; with Phi = c Id the amplitude is 1/(1 - c exp(-lambda_1 T))")


def _harmonic(name, phi_kind, omega_fn, T=1.0):
    """y' + lambda y = cos(omega t) in mode 1 with a (anti)periodic particular solution."""

    def exact(t, lam, order):
        w = omega_fn(T)
        z = (1j * w) ** order * complex(math.cos(w * t), math.sin(w * t)) / complex(lam[0], w)
        return np.array([z.real])

    def f(t, lam):
        return np.array([math.cos(omega_fn(T) * t)])

    return ManufacturedProblem(name, phi_kind, 1, lambda lam: np.array([0.0]), f, exact, T, False,
                               f"forced first mode, omega = {'2 pi' if name == 'periodic' else 'pi'}/T")


def _rough(phi_kind="zero", T=1.0, seed=ROUGH_SEED):
    rng = np.random.default_rng(seed)
    table = rng.standard_normal((_ROUGH_MAX_MODES, 3))
    freq = 2.0 * math.pi * (1 + np.arange(_ROUGH_MAX_MODES) % 3) / T

    def xi0(lam):
        j = np.arange(1, lam.size + 1)
        return table[:lam.size, 0] / j

    def f(t, lam):
        n = lam.size
        if n > _ROUGH_MAX_MODES:
            raise ConstructionError("too many modes for the rough problem")
        # V'-norm of mode j grows like lambda_j^(-1/4): barely square summable for lambda_j ~ j^2
        w = lam ** 0.25
        return w * (table[:n, 1] * np.cos(freq[:n] * t) + table[:n, 2] * np.sin(freq[:n] * t))

    return ManufacturedProblem("rough", phi_kind, None, xi0, f, None, T, True,
                               f"random multi-mode forcing, seed {seed}; no closed-form solution")


def catalog() -> list[ManufacturedProblem]:
    return [
        _decay(),
        _harmonic("periodic", "identity", lambda T: 2 * math.pi / T),
        _harmonic("antiperiodic", "neg-identity", lambda T: math.pi / T),
        _rough(),
    ]


def get_problem(name: str, phi_kind: Optional[str] = None, T: float = 1.0) -> ManufacturedProblem:
    builders = {
        "decay": lambda: _decay(phi_kind or "zero", T),
        "periodic": lambda: _harmonic("periodic", "identity", lambda TT: 2 * math.pi / TT, T),
        "antiperiodic": lambda: _harmonic("antiperiodic", "neg-identity", lambda TT: math.pi / TT, T),
        "rough": lambda: _rough(phi_kind or "zero", T),
    }
    if name not in builders:
        raise ConstructionError(f"unknown problem {name!r}; available: {', '.join(builders)}")
    p = builders[name]()
    if phi_kind is not None and phi_kind != p.phi_kind:
        raise ConstructionError(f"problem {name!r} has a fixed Phi ({p.phi_kind})")
    return p


def instantiate(problem: ManufacturedProblem, triple: SpaceTriple) -> ProblemInstance:
    """Loads, form and exact solution of a problem on a given triple."""
    n = triple.dim
    count = n if problem.modes is None else problem.modes
    lam = model_eigenvalues(triple, count)
    form = make_form(triple)
    phi = make_contraction(problem.phi_kind, triple)
    xi_modes = np.asarray(problem.xi0(lam), dtype=float)
    T = problem.T
    if triple.kind == SPECTRAL:
        def pad(c):
            out = np.zeros(n)
            out[:c.size] = c
            return out

        xi0 = pad(xi_modes)
        f = None if problem.f is None else (lambda t: pad(np.asarray(problem.f(t, lam), dtype=float)))
        exact = None
        if problem.exact is not None:
            exact = ModalFunction([(lambda t, i=i: problem.exact(t, lam, i)) for i in range(_EXACT_ORDER + 1)],
                                  label=problem.name)
    else:
        L = triple.params["length"]
        x_loads = np.stack([p1_h_load(triple, lambda x, j=j: np.sin(j * math.pi * x / L))
                            for j in range(1, count + 1)])  # (count, n)
        xi0 = xi_modes @ x_loads
        f = None if problem.f is None else (lambda t: np.asarray(problem.f(t, lam), dtype=float) @ x_loads)
        exact = None
        if problem.exact is not None:
            exact = SineSeriesFunction([(lambda t, i=i: problem.exact(t, lam, i)) for i in range(_EXACT_ORDER + 1)],
                                       L, label=problem.name)
    return ProblemInstance(problem, triple, form, phi, xi0, f, exact, T,
                           {"problem": problem.name, "phi": phi.descriptor(), "modes": int(count)})


def residual_check(problem: ManufacturedProblem, n_modes: int = 8, samples: int = 64) -> dict:
    """Modal residuals of the exact solution: ODE at ``samples`` times and the time coupling."""
    if problem.exact is None:
        return {"problem": problem.name, "exact": False, "ode": None, "coupling": None, "passed": True}
    count = n_modes if problem.modes is None else problem.modes
    lam = default_eigenvalues(count)
    c = _scalar_of(problem.phi_kind)
    T = problem.T
    ts = np.linspace(0.0, T, samples)
    worst = 0.0
    for t in ts:
        y = problem.exact(t, lam, 0)
        dy = problem.exact(t, lam, 1)
        f = np.zeros_like(y) if problem.f is None else problem.f(t, lam)
        r = dy + lam[:y.size] * y - f
        scale = np.abs(dy).max() + np.abs(lam[:y.size] * y).max() + np.abs(f).max()
        worst = max(worst, float(np.abs(r).max() / max(scale, 1e-300)))
    y0, yT = problem.exact(0.0, lam, 0), problem.exact(T, lam, 0)
    xi = np.asarray(problem.xi0(lam), dtype=float)[:y0.size]
    coupling = float(np.linalg.norm(y0 - c * yT - xi))
    return {"problem": problem.name, "exact": True, "ode": worst, "coupling": coupling,
            "passed": bool(worst <= 1e-9 and coupling <= 1e-9)}
