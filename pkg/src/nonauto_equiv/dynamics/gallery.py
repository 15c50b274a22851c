"""Built-in example systems with declared constants and closed-form oracles.

G1 "scalar-linear" and X1 "smallness-violator" share the scalar system
``x' = -x`` with ``f(t, x) = c·x`` (``c = 0.25`` and ``c = 2``). With
``a = 1`` the closed forms are:

* ``Φ(t, s) = e^{-(t-s)}`` and ``x(s, t, ξ) = ξ e^{-(s-t)}``.
* ``y(s, t, η) = η e^{(c-1)(s-t)}`` (the perturbed system is linear with rate ``c - 1``).
* ``z*(t; (t, ξ)) = ξ(e^{ct} - 1)``: with ``x(s) = ξ e^{t-s}`` the equation
  ``z' = (c-1)z + cξe^{t-s}`` has the solution ``z(s) = ξ e^{t-s}(e^{cs} - 1)``,
  which at ``s = t`` gives the stated value.
* ``H(t, ξ) = ξ e^{ct}`` and, inverting, ``G(t, η) = η e^{-ct}``. Directly,
  ``G = Φ(t, 0) y(0, t, η) = e^{-t} η e^{(1-c)t}``.
* ``DG(t, η) = e^{-ct}``.

G3 "planar-rotating" has ``A(t) = -I + ½cos(t)·J`` with ``J = [[0, 1], [-1, 0]]``.
``A(t)`` commutes with ``A(s)``, so ``Φ(t, s) = e^{-(t-s)} R(½(sin t - sin s))``
with the rotation ``R(φ) = [[cos φ, sin φ], [-sin φ, cos φ]]``; in particular
``‖Φ(t, s)‖₂ = e^{-(t-s)}``.

G2 "scalar-softplus" has no closed form and is validated by finite
differences and round trips only.
"""

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from ..exceptions import OracleUnavailable, UnknownGalleryId
from .conjugacy import ConjugacyTolerances, CoupledSystem, SystemConstants
from .linear import LinearSystem
from .ode import IntegratorOptions
from .perturbation import Perturbation

DEFAULT_HORIZON = 5.0

ORACLE_NAMES = ("Phi", "x", "y", "zstar", "H", "G", "DG")

Oracle = Callable[..., Any]


@dataclass(frozen=True)
class GallerySystem:
    """A built-in system with its declared constants and closed-form oracles.

    Attributes:
        id: Gallery identifier (``"G1"``, ``"G2"``, ``"G3"``, ``"X1"``)
        title: Short descriptive name
        lin: The linear part
        pert: The perturbation (declared γ and μ attached)
        constants: Declared K, α, M, γ, μ
        oracles: Closed-form maps by name, a subset of ``ORACLE_NAMES``
    """

    id: str
    title: str
    lin: LinearSystem
    pert: Perturbation
    constants: SystemConstants
    oracles: Mapping[str, Oracle] = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.lin.n

    def oracle(self, which: str, *args: Any) -> Any:
        """Evaluate the closed-form oracle ``which`` at ``args``.

        Raises:
            OracleUnavailable: No closed form is known for this system and oracle
        """
        fn = self.oracles.get(which)
        if fn is None:
            raise OracleUnavailable(
                f"No {which!r} oracle for {self.id}",
                context={"system": self.id, "oracle": which, "available": sorted(self.oracles)},
            )
        return fn(*args)

    def coupled(
        self, unsafe: bool = False, tolerances: ConjugacyTolerances | None = None
    ) -> CoupledSystem:
        """The coupled system with the declared constants.

        Raises:
            SmallnessViolation: For X1 unless ``unsafe`` is set
        """
        return CoupledSystem(
            self.lin, self.pert, self.constants, unsafe=unsafe, tolerances=tolerances
        )


def _scalar(value: float) -> np.ndarray:
    return np.array([[value]], dtype=np.float64)


def _vec(value: ArrayLike) -> np.ndarray:
    return np.asarray(value, dtype=np.float64).reshape(-1)


def _scalar_linear_oracles(c: float) -> dict[str, Oracle]:
    return {
        "Phi": lambda t, s: _scalar(math.exp(-(t - s))),
        "x": lambda s, t, xi: _vec(xi) * math.exp(-(s - t)),
        "y": lambda s, t, eta: _vec(eta) * math.exp((c - 1.0) * (s - t)),
        "zstar": lambda t, xi: _vec(xi) * (math.exp(c * t) - 1.0),
        "H": lambda t, xi: _vec(xi) * math.exp(c * t),
        "G": lambda t, eta: _vec(eta) * math.exp(-c * t),
        "DG": lambda t, eta: _scalar(math.exp(-c * t)),
    }


def _rotation(phi: float) -> np.ndarray:
    return np.array([[math.cos(phi), math.sin(phi)], [-math.sin(phi), math.cos(phi)]])


def _rotating_phi(t: float, s: float) -> np.ndarray:
    return math.exp(-(t - s)) * _rotation(0.5 * (math.sin(t) - math.sin(s)))


def _scalar_linear(
    system_id: str, title: str, c: float, horizon: float, options: IntegratorOptions | None
) -> GallerySystem:
    lin = LinearSystem.from_expressions("-1", 1, horizon, options)
    pert = Perturbation.from_expressions(f"{c!r}*x1", 1, gamma=c, mu=0.0)
    constants = SystemConstants(K=1.0, alpha=1.0, M=1.0, gamma=c, mu=0.0)
    return GallerySystem(system_id, title, lin, pert, constants, _scalar_linear_oracles(c))


def _g1(horizon: float, options: IntegratorOptions | None) -> GallerySystem:
    return _scalar_linear("G1", "scalar-linear", 0.25, horizon, options)


def _x1(horizon: float, options: IntegratorOptions | None) -> GallerySystem:
    return _scalar_linear("X1", "smallness-violator", 2.0, horizon, options)


def _g2(horizon: float, options: IntegratorOptions | None) -> GallerySystem:
    lin = LinearSystem.from_expressions("-1", 1, horizon, options)
    pert = Perturbation.from_expressions("0.2*(sqrt(1+x1^2)+cos(t))", 1, gamma=0.2, mu=0.4)
    constants = SystemConstants(K=1.0, alpha=1.0, M=1.0, gamma=0.2, mu=0.4)
    oracles: dict[str, Oracle] = {"Phi": lambda t, s: _scalar(math.exp(-(t - s)))}
    return GallerySystem("G2", "scalar-softplus", lin, pert, constants, oracles)


def _g3(horizon: float, options: IntegratorOptions | None) -> GallerySystem:
    lin = LinearSystem.from_expressions(
        [["-1", "0.5*cos(t)"], ["-0.5*cos(t)", "-1"]], 2, horizon, options
    )
    pert = Perturbation.from_expressions(
        ["0.15*x1 + 0.1*sin(x2)", "0.15*x2 + 0.1*sin(x1)"], 2, gamma=0.25, mu=0.0
    )
    # ‖A(t)‖₂ = sqrt(1 + cos²(t)/4)
    constants = SystemConstants(K=1.0, alpha=1.0, M=math.sqrt(1.25), gamma=0.25, mu=0.0)
    oracles: dict[str, Oracle] = {
        "Phi": _rotating_phi,
        "x": lambda s, t, xi: _rotating_phi(s, t) @ _vec(xi),
    }
    return GallerySystem("G3", "planar-rotating", lin, pert, constants, oracles)


_BUILDERS: dict[str, Callable[[float, IntegratorOptions | None], GallerySystem]] = {
    "G1": _g1,
    "G2": _g2,
    "G3": _g3,
    "X1": _x1,
}

GALLERY_IDS = tuple(_BUILDERS)


def load_gallery(
    system_id: str,
    horizon: float = DEFAULT_HORIZON,
    options: IntegratorOptions | None = None,
) -> GallerySystem:
    """Load a built-in system by id.

    Raises:
        UnknownGalleryId: The id is not one of ``GALLERY_IDS``

    Example:
        >>> gs = load_gallery("G1")
        >>> gs.constants.smallness_margin
        0.75
    """
    builder = _BUILDERS.get(system_id)
    if builder is None:
        raise UnknownGalleryId(
            f"Unknown gallery system {system_id!r}",
            context={"id": system_id, "known": list(GALLERY_IDS)},
        )
    return builder(horizon, options)


def oracle_eval(gs: GallerySystem, which: str, *args: Any) -> Any:
    """Evaluate a closed-form oracle of a gallery system.

    Example:
        >>> round(float(oracle_eval(load_gallery("G1"), "H", 1.0, [2.0])[0]), 7)
        2.5680508
    """
    return gs.oracle(which, *args)
