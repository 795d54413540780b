"""Numerical tolerances with their defaults."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    fredholm_margin: float = 1e-6
    rank_rel_tol: float = 1e-8
    theta_samples: int = 4096
    norm_samples: int = 2048
    oracle_n: int = 64
    cluster_tol: float = 1e-7

    def with_overrides(self, **kw) -> "Tolerances":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = Tolerances()
