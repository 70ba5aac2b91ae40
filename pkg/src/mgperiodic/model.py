"""Model types for the multi-delay periodic hematopoiesis equation.

A model collects M production terms

    lam_k * r_k(t) * x(t - tau_k(t))**m_k / (1 + x(t - mu_k(t))**n_k)

and a proportional decay ``b(t) * x(t)``, with all coefficient functions
T-periodic.  Terms are classified into five disjoint index sets by where the
production exponent m_k falls relative to 1 and n_k + 1; the resulting
case label (superlinear / sublinear / asymptotically linear) decides which
existence and multiplicity results apply.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from .periodic import PeriodicFn

__all__ = [
    "ModelError",
    "Term",
    "Model",
    "TermClassification",
    "classify",
    "load_model",
    "dump_model",
    "section4_model_path",
]


class ModelError(ValueError):
    """Invalid model data (construction or file parsing)."""


@dataclass(frozen=True)
class Term:
    """One production term: constants lam, m, n and coefficients r, tau, mu.

    ``lam == 0`` is tolerated here so degenerate (switched-off) terms can be
    built programmatically; the file parser enforces the strict ``lam > 0``.
    """

    lam: float
    m: float
    n: float
    r: PeriodicFn
    tau: PeriodicFn
    mu: PeriodicFn

    def __post_init__(self):
        if self.lam < 0.0 or not math.isfinite(self.lam):
            raise ModelError(f"lambda must be nonnegative and finite, got {self.lam}")
        if not (self.m > 0.0 and math.isfinite(self.m)):
            raise ModelError(f"m must be positive, got {self.m}")
        if not (self.n > 0.0 and math.isfinite(self.n)):
            raise ModelError(f"n must be positive, got {self.n}")
        if not self.r.is_positive():
            raise ModelError("r must be positive on [0, T)")
        if not self.tau.is_nonnegative():
            raise ModelError("tau must be nonnegative on [0, T)")
        if not self.mu.is_nonnegative():
            raise ModelError("mu must be nonnegative on [0, T)")


@dataclass(frozen=True)
class Model:
    """Full parameterization: terms, decay b, and the shared period T."""

    terms: tuple[Term, ...]
    b: PeriodicFn

    def __post_init__(self):
        if len(self.terms) < 1:
            raise ModelError("a model needs at least one term")
        if not self.b.is_positive():
            raise ModelError("b must be positive on [0, T)")
        T = self.b.period
        for k, term in enumerate(self.terms, start=1):
            for name in ("r", "tau", "mu"):
                fn = getattr(term, name)
                if fn.period != T:
                    raise ModelError(
                        f"term {k}: {name} has period {fn.period}, expected {T}")

    @property
    def T(self) -> float:
        return self.b.period

    @cached_property
    def C(self) -> float:
        """Integral of the decay rate over one period (T * mean of b)."""
        return self.T * self.b.mean()

    @cached_property
    def classification(self) -> "TermClassification":
        return classify(self)

    @cached_property
    def r_means(self) -> tuple[float, ...]:
        return tuple(t.r.mean() for t in self.terms)

    @cached_property
    def b_mean(self) -> float:
        return self.b.mean()

    def max_delay(self) -> float:
        return max(max(t.tau.maximum(), t.mu.maximum()) for t in self.terms)


CASE_SUPERLINEAR = "superlinear"
CASE_SUBLINEAR = "sublinear"
CASE_ASYMPTOTICALLY_LINEAR = "asymptotically_linear"


@dataclass(frozen=True)
class TermClassification:
    """Partition of the term indices (1-based) into the sets M1..M5.

    M1: 0 < m < 1; M2: m = 1; M3: 1 < m < n+1; M4: m = n+1; M5: m > n+1.
    Equality is tested exactly on the stored floats: the boundary sets are
    structurally different cases, not numeric neighborhoods.
    """

    M1: frozenset[int]
    M2: frozenset[int]
    M3: frozenset[int]
    M4: frozenset[int]
    M5: frozenset[int]
    case: str

    def set_for(self, i: int) -> frozenset[int]:
        return (self.M1, self.M2, self.M3, self.M4, self.M5)[i - 1]

    def class_of(self, k: int) -> int:
        """Class index (1..5) of term k (1-based)."""
        for i in range(1, 6):
            if k in self.set_for(i):
                return i
        raise KeyError(k)

    def __str__(self) -> str:
        parts = []
        for i in range(1, 6):
            s = self.set_for(i)
            if s:
                parts.append(f"M{i}={{{', '.join(str(k) for k in sorted(s))}}}")
        parts.append(f"case={self.case}")
        return "  ".join(parts)


def classify(model: Model) -> TermClassification:
    """Exact partition of term indices by the m-versus-n+1 comparisons."""
    sets: list[set[int]] = [set(), set(), set(), set(), set()]
    for k, term in enumerate(model.terms, start=1):
        m, n = term.m, term.n
        if m < 1.0:
            sets[0].add(k)
        elif m == 1.0:
            sets[1].add(k)
        elif m < n + 1.0:
            sets[2].add(k)
        elif m == n + 1.0:
            sets[3].add(k)
        else:
            sets[4].add(k)
    if sets[4]:
        case = CASE_SUPERLINEAR
    elif sets[3]:
        case = CASE_ASYMPTOTICALLY_LINEAR
    else:
        case = CASE_SUBLINEAR
    return TermClassification(*(frozenset(s) for s in sets), case=case)


# -- model files -----------------------------------------------------------
#
# A model file is a JSON document:
#
#   {"period": T,
#    "b": {"mean": ..., "harmonics": [[j, cos, sin], ...]}   (or {"samples": [...]})
#    "terms": [{"lambda": ..., "m": ..., "n": ...,
#               "r": {...}, "tau": {...}, "mu": {...}}, ...]}
#
# Coefficient blocks take either the trig form (mean + harmonics) or the
# sampled form (uniform samples over one period).

def _fn_from_dict(d: dict, period: float, where: str) -> PeriodicFn:
    if not isinstance(d, dict):
        raise ModelError(f"{where}: expected an object, got {type(d).__name__}")
    if "samples" in d:
        try:
            return PeriodicFn.sampled(period, [float(v) for v in d["samples"]])
        except (TypeError, ValueError) as exc:
            raise ModelError(f"{where}.samples: {exc}") from exc
    if "mean" not in d:
        raise ModelError(f"{where}: needs either 'mean' or 'samples'")
    try:
        mean = float(d["mean"])
        harmonics = [(int(j), float(c), float(s))
                     for j, c, s in d.get("harmonics", [])]
        return PeriodicFn.trig(period, mean, harmonics)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{where}: {exc}") from exc


def _fn_to_dict(fn: PeriodicFn) -> dict:
    if fn.is_trig:
        d: dict = {"mean": fn.a0}
        if fn.harmonics:
            d["harmonics"] = [[j, c, s] for j, c, s in fn.harmonics]
        return d
    return {"samples": list(fn.samples)}


def load_model(path: str | Path) -> Model:
    """Parse a model file, enforcing the strict positivity constraints."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ModelError(f"cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelError("model file must contain a JSON object")
    if "period" not in doc:
        raise ModelError("missing field: period")
    try:
        period = float(doc["period"])
    except (TypeError, ValueError) as exc:
        raise ModelError(f"period: {exc}") from exc
    if not period > 0.0:
        raise ModelError(f"period must be positive, got {period}")
    if "b" not in doc:
        raise ModelError("missing field: b")
    if "terms" not in doc or not isinstance(doc["terms"], list) or not doc["terms"]:
        raise ModelError("missing or empty field: terms")

    b = _fn_from_dict(doc["b"], period, "b")
    terms = []
    for idx, td in enumerate(doc["terms"], start=1):
        where = f"terms[{idx}]"
        if not isinstance(td, dict):
            raise ModelError(f"{where}: expected an object")
        for key in ("lambda", "m", "n", "r", "tau", "mu"):
            if key not in td:
                raise ModelError(f"{where}: missing field: {key}")
        try:
            lam = float(td["lambda"])
            m = float(td["m"])
            n = float(td["n"])
        except (TypeError, ValueError) as exc:
            raise ModelError(f"{where}: {exc}") from exc
        if not lam > 0.0:
            raise ModelError(f"{where}.lambda: must be > 0, got {lam}")
        terms.append(Term(
            lam=lam, m=m, n=n,
            r=_fn_from_dict(td["r"], period, f"{where}.r"),
            tau=_fn_from_dict(td["tau"], period, f"{where}.tau"),
            mu=_fn_from_dict(td["mu"], period, f"{where}.mu"),
        ))
    return Model(terms=tuple(terms), b=b)


def dump_model(model: Model, path: str | Path) -> None:
    doc = {
        "period": model.T,
        "b": _fn_to_dict(model.b),
        "terms": [
            {"lambda": t.lam, "m": t.m, "n": t.n,
             "r": _fn_to_dict(t.r), "tau": _fn_to_dict(t.tau),
             "mu": _fn_to_dict(t.mu)}
            for t in model.terms
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def section4_model_path() -> Path:
    """Path of the bundled four-term example model."""
    return Path(__file__).parent / "data" / "section4.model"
