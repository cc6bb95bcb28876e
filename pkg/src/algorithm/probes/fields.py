from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from src.algorithm.frechet.problem import FrechetProblem, frechet_values
from src.algorithm.geometry.manifold import ManifoldModel
from src.algorithm.measures.atom_measure import dirac
from src.utils.errors import invalid

DEFAULT_RESIDUAL_TOLERANCE: float = 1e-6
MONOTONE_TOLERANCE: float = 1e-9


class Extrapolation(str, Enum):
    NONE = "none"
    RICHARDSON = "richardson"


class Confidence(str, Enum):
    CONVERGED = "Converged"
    NOISY = "Noisy"


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    Deterministic function on a manifold, evaluated on (n, ambient_dim) point arrays.

    ``semiconcavity`` is a known constant b (f - b/2 t^2 concave along unit-speed geodesics), used by
    the monotonicity diagnostic. ``problem`` is set when the field is a Fréchet function; closed-form
    differentials then apply.
    """
    manifold: ManifoldModel
    evaluator: Callable[[np.ndarray], np.ndarray]
    label: str
    known_lipschitz: float | None = None
    semiconcavity: float | None = None
    problem: FrechetProblem | None = None

    def values(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(np.atleast_2d(points)), dtype=np.float64)

    def __call__(self, q) -> float:
        return float(self.values(self.manifold.point(q)[None, :])[0])

    def __add__(self, other: "ScalarField") -> "ScalarField":
        if other.manifold != self.manifold:
            raise invalid("Cannot add fields on different manifolds.", "Build both fields on one manifold.")

        def evaluator(points: np.ndarray) -> np.ndarray:
            return self.values(points) + other.values(points)

        lipschitz = None
        if self.known_lipschitz is not None and other.known_lipschitz is not None:
            lipschitz = self.known_lipschitz + other.known_lipschitz
        semiconcavity = None
        if self.semiconcavity is not None and other.semiconcavity is not None:
            semiconcavity = self.semiconcavity + other.semiconcavity
        return ScalarField(self.manifold, evaluator, f"{self.label} + {other.label}",
                           lipschitz, semiconcavity)


def frechet_field(prob: FrechetProblem, threads: int = 1) -> ScalarField:
    """F^(p) as a field. On these nonnegatively curved models F^(2) is 2-semiconcave."""
    diameter = prob.manifold.diameter
    return ScalarField(
        manifold=prob.manifold,
        evaluator=lambda points: frechet_values(prob, points, threads),
        label=f"F^({prob.p:g})",
        known_lipschitz=prob.p * diameter ** (prob.p - 1),
        semiconcavity=2.0 if prob.p == 2 else None,
        problem=prob,
    )


def distance_field(manifold: ManifoldModel, x, power: float = 1.0) -> ScalarField:
    """d_x^power, the Fréchet function of the point mass at x."""
    x = manifold.point(x)
    prob = FrechetProblem(manifold, dirac(manifold, x), power)
    base = frechet_field(prob)
    label = "d_x" if power == 1 else f"d_x^{power:g}"
    return ScalarField(manifold, base.evaluator, label, base.known_lipschitz, base.semiconcavity, prob)


def atom_fields(prob: FrechetProblem) -> list[ScalarField]:
    """w_i d_(x_i)^p for every atom, so that their sum is F^(p)."""
    fields = []
    for atom, weight in zip(prob.atoms, prob.weights):
        base = distance_field(prob.manifold, atom, prob.p)
        fields.append(ScalarField(
            prob.manifold,
            (lambda points, evaluate=base.evaluator, w=weight: w * evaluate(points)),
            f"{weight:.3g} {base.label}",
        ))
    return fields


@dataclass(frozen=True)
class StepSchedule:
    steps: tuple[float, ...]
    extrapolation: Extrapolation = Extrapolation.RICHARDSON

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.float64)
        if len(steps) < 1 or np.any(steps <= 0) or np.any(np.diff(steps) >= 0):
            raise invalid(f"Probe steps must be positive and strictly decreasing, got {steps.tolist()}.",
                          "Use StepSchedule.geometric(initial_step, count).")
        object.__setattr__(self, "extrapolation", Extrapolation(self.extrapolation))

    @classmethod
    def geometric(cls, initial_step: float = 1e-2, count: int = 9,
                  extrapolation: Extrapolation = Extrapolation.RICHARDSON) -> "StepSchedule":
        """Steps t_k = 2^-k * initial_step for k = 0..count-1."""
        return cls(tuple(initial_step * 0.5 ** k for k in range(count)), extrapolation)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.steps)

    def check_radius(self, manifold: ManifoldModel):
        if self.steps[0] >= manifold.injectivity_radius:
            raise invalid(
                f"Largest probe step {self.steps[0]} reaches the injectivity radius "
                f"{manifold.injectivity_radius:.6g} of {manifold.tag}.",
                "Lower probe INITIAL_STEP."
            )


def richardson(values: Sequence[float], order: int = 1, ratio: float = 2.0) -> float:
    """
    Richardson extrapolation of approximations taken at steps shrinking by ``ratio``,
    with leading error term of power ``order``.
    """
    table = [float(value) for value in values]
    if len(table) < 2:
        return table[-1]
    for level in range(1, len(table)):
        factor = ratio ** (order * level)
        for k in range(len(table) - 1, level - 1, -1):
            table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0)
    return table[-1]


@dataclass(eq=False)
class ProbeReport:
    """Difference-quotient probe with its per-step table and extrapolation diagnostics."""
    value: float
    steps: list[float]
    quotients: list[float]
    confidence: Confidence
    label: str = ""
    extrapolated: float | None = None
    residual: float | None = None
    monotone: bool | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "value": self.value,
            "confidence": self.confidence.value,
            "extrapolated": self.extrapolated,
            "residual": self.residual,
            "monotone": self.monotone,
            "table": [{"step": step, "quotient": quotient}
                      for step, quotient in zip(self.steps, self.quotients)],
            **self.details,
        }


def summarize_quotients(quotients: np.ndarray, schedule: StepSchedule, label: str,
                        semiconcavity: float | None = None,
                        residual_tolerance: float = DEFAULT_RESIDUAL_TOLERANCE,
                        tolerance_scale: float = 1.0) -> ProbeReport:
    """
    Turn a quotient table into a report.

    With Richardson extrapolation the residual is the change caused by the last table entry.
    When ``semiconcavity`` b is known the corrected quotients Q_k - b t_k / 2 must not decrease as
    t_k shrinks; a violation or a residual above tolerance gives Noisy confidence.
    """
    steps = schedule.as_array()
    tolerance = residual_tolerance * tolerance_scale

    extrapolated = residual = None
    value = float(quotients[-1])
    if schedule.extrapolation is Extrapolation.RICHARDSON and len(quotients) >= 2:
        extrapolated = richardson(quotients)
        previous = richardson(quotients[:-1]) if len(quotients) > 2 else float(quotients[0])
        residual = abs(extrapolated - previous)
        value = extrapolated
    else:
        residual = abs(float(quotients[-1] - quotients[-2])) if len(quotients) >= 2 else None

    monotone = None
    if semiconcavity is not None:
        corrected = quotients - 0.5 * semiconcavity * steps
        slack = MONOTONE_TOLERANCE * tolerance_scale * max(1.0, float(np.max(np.abs(quotients))))
        monotone = bool(np.all(np.diff(corrected) >= -slack))

    noisy = (residual is not None and residual > tolerance * max(1.0, abs(value))) or monotone is False
    return ProbeReport(
        value=float(value),
        steps=steps.tolist(),
        quotients=[float(q) for q in quotients],
        confidence=Confidence.NOISY if noisy else Confidence.CONVERGED,
        label=label,
        extrapolated=extrapolated,
        residual=residual,
        monotone=monotone,
    )
