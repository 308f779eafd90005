import math
from enum import Enum
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from lmspectra import settings


class MatrixKind(str, Enum):
    """Matrix kinds over (d-1)-cells"""
    UNSIGNED = "unsigned"
    SIGNED = "signed"
    CENTRED_UNSIGNED = "centred-unsigned"
    CENTRED_SIGNED = "centred-signed"
    COMPLETE_UNSIGNED = "complete-unsigned"
    COMPLETE_SIGNED = "complete-signed"
    GENERIC = "generic"

    @property
    def is_signed(self) -> bool:
        return self in (MatrixKind.SIGNED, MatrixKind.CENTRED_SIGNED, MatrixKind.COMPLETE_SIGNED)

    @property
    def is_centred(self) -> bool:
        return self in (MatrixKind.CENTRED_UNSIGNED, MatrixKind.CENTRED_SIGNED)


class SampleMode(str, Enum):
    """How a complex answers presence queries"""
    MATERIALIZED = "materialized"
    LAZY = "lazy"
    EXPLICIT = "explicit"  # hand-built or loaded, not tied to the hash rule


class MomentMethod(str, Enum):
    DENSE_EXACT = "dense-exact"
    ROOT_SAMPLED = "root-walk-sampled"


class HistogramMode(str, Enum):
    DENSITY = "density"
    PROBABILITY = "probability"


class OffspringLaw(str, Enum):
    """Block count law of the d-block Galton-Watson graph"""
    POISSON = "poisson"
    FIXED = "fixed"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    DOT = "dot"
    TABLE = "table"


class EigenPair(BaseModel):
    """一个特征值及其重数"""
    model_config = ConfigDict(frozen=True)

    value: float
    multiplicity: int = Field(gt=0)


class EigenSystem(BaseModel):
    """Distinct eigenvalues with multiplicities, largest first"""
    model_config = ConfigDict(frozen=True)

    pairs: List[EigenPair]

    @property
    def dim(self) -> int:
        return sum(pair.multiplicity for pair in self.pairs)

    def values(self) -> np.ndarray:
        """Full sorted (ascending) eigenvalue multiset."""
        out = np.repeat([pair.value for pair in self.pairs], [pair.multiplicity for pair in self.pairs])
        return np.sort(out.astype(float))

    def as_tuples(self) -> list[tuple[float, int]]:
        return [(pair.value, pair.multiplicity) for pair in self.pairs]


class SpectrumMeta(BaseModel):
    """Provenance of a spectrum"""
    model_config = ConfigDict(frozen=True)

    n: Optional[int] = None
    d: Optional[int] = None
    p: Optional[float] = None
    seed: Optional[int] = None
    kind: MatrixKind = MatrixKind.GENERIC
    reflected: bool = False


class ESD(BaseModel):
    """Empirical spectral distribution: eigenvalues sorted ascending, uniform weight 1/dim"""
    model_config = ConfigDict(frozen=True)

    eigenvalues: List[float]
    meta: SpectrumMeta = SpectrumMeta()

    @field_validator("eigenvalues")
    @classmethod
    def _sorted(cls, values: List[float]) -> List[float]:
        if any(b < a for a, b in zip(values, values[1:])):
            raise ValueError("eigenvalues must be sorted ascending")
        return values

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.eigenvalues, dtype=float)


class MomentEstimate(BaseModel):
    """m_k of a spectrum, exact or root-sampled"""
    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=0)
    value: float
    stderr: float = Field(ge=0.0)
    method: MomentMethod
    samples: Optional[int] = None

    @model_validator(mode="after")
    def _exact_has_no_error(self):
        if self.method == MomentMethod.DENSE_EXACT and self.stderr != 0.0:
            raise ValueError("dense-exact moments carry zero stderr")
        return self


class Histogram(BaseModel):
    """Uniformly binned eigenvalue histogram"""
    model_config = ConfigDict(frozen=True)

    edges: List[float]
    counts: List[int]
    mode: HistogramMode
    values: List[float]  # normalized heights, per mode
    meta: SpectrumMeta = SpectrumMeta()

    @model_validator(mode="after")
    def _shape(self):
        if len(self.edges) != len(self.counts) + 1 or len(self.values) != len(self.counts):
            raise ValueError("histogram needs len(edges) == len(counts) + 1")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("histogram edges must be strictly increasing")
        return self


class Atom(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    mass: float


class MomentPolynomial(BaseModel):
    """β_k(λ) = Σ_s coefficients[s]·λ^(s-d)"""
    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=1)
    k: int = Field(ge=0)
    coefficients: Dict[int, int]

    @field_validator("coefficients")
    @classmethod
    def _non_negative(cls, coefficients: Dict[int, int]) -> Dict[int, int]:
        if any(c < 0 for c in coefficients.values()):
            raise ValueError("coefficients are class counts and cannot be negative")
        return dict(sorted(coefficients.items()))

    def value(self, lam):
        """Evaluate at λ; int/Fraction inputs give exact results."""
        return sum((c * lam ** (s - self.d) for s, c in self.coefficients.items() if c), 0)

    def nonzero(self) -> Dict[int, int]:
        return {s: c for s, c in self.coefficients.items() if c}


class WordSupports(BaseModel):
    """Vertex support, d-cell support and crossing counts of a word"""
    model_config = ConfigDict(frozen=True)

    supp0: frozenset[int]
    suppd: frozenset[tuple[int, ...]]
    multiplicities: Dict[tuple[int, ...], int]


class GWConfig(BaseModel):
    """d-block Galton-Watson sampler configuration"""
    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=1)
    lam: float = Field(ge=0.0)
    depth: int = Field(ge=0)
    vertex_cap: int = Field(default=settings.VERTEX_CAP, gt=0)
    seed: int = settings.DEFAULT_SEED
    offspring: OffspringLaw = OffspringLaw.POISSON
    fixed_blocks: int = Field(default=2, ge=0)

    @field_validator("lam")
    @classmethod
    def _finite(cls, lam: float) -> float:
        if not math.isfinite(lam):
            raise ValueError("lambda must be finite")
        return lam


class BallSource(BaseModel):
    """Where rooted balls come from"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["line-graph", "dgw"]
    d: int = Field(ge=1)
    lam: float = Field(ge=0.0)
    n: Optional[int] = None

    @model_validator(mode="after")
    def _needs_n(self):
        if self.kind == "line-graph" and (self.n is None or self.n < self.d + 1):
            raise ValueError("line-graph sources need n >= d+1")
        return self


class BallSignature(BaseModel):
    """Canonical key of a rooted-isomorphism class; exact=False marks the hashed fallback"""
    model_config = ConfigDict(frozen=True)

    key: bytes
    exact: bool = True

    @property
    def hex(self) -> str:
        return self.key.hex()


class MassTransportResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    f_id: str
    lhs: float
    rhs: float
    stderr: float
    samples: int

    def holds(self, z: float = 3.0) -> bool:
        return abs(self.lhs - self.rhs) <= z * self.stderr


class SignatureShare(BaseModel):
    sig: str
    exact: bool
    p_line: float
    p_dgw: float


class LwcReport(BaseModel):
    t: int
    samples: int
    tv: float
    root_isolated_line: float
    top_signatures: List[SignatureShare]


class ComplexRecord(BaseModel):
    """JSON form of a materialized complex"""
    n: int
    d: int
    p: float
    seed: int
    present_ranks: List[int]
