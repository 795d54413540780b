"""Scenario config schema and conversion into model objects.

Configs are TOML. Unknown keys are rejected everywhere; validation errors carry
the dotted path of the offending field.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .calc import Poly
from .config import DEFAULT, Tolerances
from .errors import SchemaError
from .family import OperatorFamily, combine_families
from .op_model import (
    FiniteRankPart,
    OperatorSpec,
    diagonal,
    toeplitz,
)
from .param_space import ParamSpace
from .weyl import ComplexGrid

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

KINDS = ("index", "index-poly", "spectral-map", "weyl", "homotopy", "semicontinuity", "limits", "ideal-check")

Pair = tuple[float, float]
Sparse = list[tuple[int, float, float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class SpaceCfg(_Strict):
    vertices: list[int]
    edges: list[tuple[int, int]] = []


class TermCfg(_Strict):
    u: Sparse
    v: Sparse


class SpecCfg(_Strict):
    kind: Literal["toeplitz", "diagonal"]
    coeffs: Optional[Sparse] = None
    head: Optional[list[Pair]] = None
    tails: Optional[list[Pair]] = None
    compact: list[TermCfg] = []

    @model_validator(mode="after")
    def _fields_match_kind(self):
        if self.kind == "toeplitz":
            if self.coeffs is None:
                raise ValueError("toeplitz spec requires 'coeffs'")
            if self.head is not None or self.tails is not None:
                raise ValueError("toeplitz spec takes no 'head'/'tails'")
        else:
            if not self.tails:
                raise ValueError("diagonal spec requires a nonempty 'tails'")
            if self.coeffs is not None:
                raise ValueError("diagonal spec takes no 'coeffs'")
        return self


class FamilyCfg(_Strict):
    space: SpaceCfg
    assignment: dict[str, SpecCfg]
    edge_samples: int = Field(8, ge=1)


class GridCfg(_Strict):
    re: Pair
    im: Pair
    h: float = Field(gt=0)


class PolyCfg(_Strict):
    coeffs: list[Pair]


class SequenceCfg(_Strict):
    """Either an explicit list of families or ``base + w_n * perturbation``."""

    families: Optional[list[FamilyCfg]] = None
    base: Optional[FamilyCfg] = None
    perturbation: Optional[FamilyCfg] = None
    count: int = Field(32, ge=1)
    decay: Literal["harmonic", "geometric"] = "harmonic"

    @model_validator(mode="after")
    def _one_form(self):
        explicit = self.families is not None
        generated = self.base is not None or self.perturbation is not None
        if explicit == generated:
            raise ValueError("give either 'families' or both 'base' and 'perturbation'")
        if generated and (self.base is None or self.perturbation is None):
            raise ValueError("generated sequence needs both 'base' and 'perturbation'")
        return self


class TolCfg(_Strict):
    fredholm_margin: Optional[float] = Field(None, gt=0)
    rank_rel_tol: Optional[float] = Field(None, gt=0)
    theta_samples: Optional[int] = Field(None, ge=8)
    norm_samples: Optional[int] = Field(None, ge=8)
    oracle_n: Optional[int] = Field(None, ge=1)
    cluster_tol: Optional[float] = Field(None, gt=0)
    epsilon: Optional[float] = Field(None, gt=0)


_REQUIRED = {
    "index": ("family",),
    "index-poly": ("family", "poly"),
    "spectral-map": ("family", "poly"),
    "weyl": ("family", "grid"),
    "homotopy": ("t",),
    "semicontinuity": ("sequence", "grid"),
    "limits": ("sequence", "grid", "scenario"),
    "ideal-check": ("sequence",),
}


class ScenarioCfg(_Strict):
    name: str
    kind: Literal["index", "index-poly", "spectral-map", "weyl", "homotopy", "semicontinuity", "limits", "ideal-check"]
    lam: Pair = Field((0.0, 0.0), alias="lambda")
    family: Optional[FamilyCfg] = None
    poly: Optional[PolyCfg] = None
    grid: Optional[GridCfg] = None
    t: Optional[list[float]] = None
    path: Optional[list[FamilyCfg]] = None
    start: Optional[FamilyCfg] = None
    end: Optional[FamilyCfg] = None
    sequence: Optional[SequenceCfg] = None
    limit: Optional[FamilyCfg] = None
    scenario: Optional[Literal["commuting", "totally_disconnected", "normal", "essential_convergence"]] = None
    probes: Optional[list[FamilyCfg]] = None
    expect: Optional[dict[str, int]] = None
    expect_failure: bool = False
    tolerances: TolCfg = TolCfg()

    @model_validator(mode="after")
    def _blocks_present(self):
        missing = [k for k in _REQUIRED[self.kind] if getattr(self, k) is None]
        if missing:
            raise ValueError(f"scenario kind {self.kind!r} requires {missing}")
        if self.kind == "homotopy":
            if self.path is None and (self.start is None or self.end is None):
                raise ValueError("homotopy needs 'path' or both 'start' and 'end'")
            if self.path is not None and len(self.path) != len(self.t):
                raise ValueError("'path' and 't' must have equal length")
        if self.kind in ("semicontinuity", "limits", "ideal-check"):
            seq = self.sequence
            if seq.families is not None and self.limit is None:
                raise ValueError("explicit sequence needs a 'limit' family")
        return self


def _format_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def parse_scenario(data: dict) -> ScenarioCfg:
    try:
        return ScenarioCfg.model_validate(data)
    except ValidationError as err:
        raise SchemaError(_format_error(err)) from None


def read_config(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_scenario(path) -> ScenarioCfg:
    return parse_scenario(read_config(path))


def _sparse_vec(entries: Sparse):
    if not entries:
        return []
    n = max(i for i, _, _ in entries) + 1
    out = [0j] * n
    for i, re, im in entries:
        out[i] += complex(re, im)
    return out


def build_spec(cfg: SpecCfg) -> OperatorSpec:
    compact = FiniteRankPart((_sparse_vec(t.u), _sparse_vec(t.v)) for t in cfg.compact)
    if cfg.kind == "toeplitz":
        coeffs: dict[int, complex] = {}
        for k, re, im in cfg.coeffs:
            coeffs[k] = coeffs.get(k, 0j) + complex(re, im)
        return toeplitz(coeffs, compact)
    head = [complex(*p) for p in (cfg.head or [])]
    return diagonal(head, [complex(*p) for p in cfg.tails], compact)


def build_family(cfg: FamilyCfg) -> OperatorFamily:
    space = ParamSpace(cfg.space.vertices, cfg.space.edges)
    assignment = {int(k): build_spec(v) for k, v in cfg.assignment.items()}
    return OperatorFamily(space, assignment, cfg.edge_samples)


def build_grid(cfg: GridCfg) -> ComplexGrid:
    return ComplexGrid(cfg.re[0], cfg.re[1], cfg.im[0], cfg.im[1], cfg.h)


def build_poly(cfg: PolyCfg) -> Poly:
    return Poly([complex(*c) for c in cfg.coeffs])


def build_sequence(cfg: SequenceCfg) -> list[OperatorFamily]:
    if cfg.families is not None:
        return [build_family(f) for f in cfg.families]
    base, pert = build_family(cfg.base), build_family(cfg.perturbation)
    weights = [1.0 / n if cfg.decay == "harmonic" else 2.0**-n for n in range(1, cfg.count + 1)]
    return [combine_families(1.0, base, w, pert) for w in weights]


def build_tolerances(cfg: TolCfg, base: Tolerances = DEFAULT) -> Tolerances:
    kw = cfg.model_dump(exclude={"epsilon"})
    return base.with_overrides(**kw)


def spec_to_config(spec: OperatorSpec) -> dict:
    """Inverse of ``build_spec``; zero entries are omitted."""

    def sparse(vec):
        return [[i, float(z.real), float(z.imag)] for i, z in enumerate(vec) if z != 0]

    compact = [{"u": sparse(u), "v": sparse(v)} for u, v in spec.compact.terms]
    if spec.symbol is not None:
        out = {"kind": "toeplitz", "coeffs": [[k, c.real, c.imag] for k, c in spec.symbol.coeffs]}
    else:
        out = {
            "kind": "diagonal",
            "head": [[z.real, z.imag] for z in spec.core.head],
            "tails": [[z.real, z.imag] for z in spec.core.tails],
        }
    if compact:
        out["compact"] = compact
    return out


def family_to_config(fam: OperatorFamily) -> dict:
    return {
        "space": {"vertices": list(fam.space.vertices), "edges": [list(e) for e in fam.space.edges]},
        "assignment": {str(v): spec_to_config(s) for v, s in sorted(fam.assignment.items())},
        "edge_samples": fam.edge_samples,
    }
