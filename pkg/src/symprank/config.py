"""Numerical tolerances shared across the package.

Every tolerance is an engineering choice. They live in one mutable-free
dataclass so reports can echo the exact values that produced them.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    symp: float = 1e-8       # symplectic / orthogonality validation
    recon: float = 1e-7      # decomposition reconstruction
    pair: float = 1e-6       # pairing of +/- i d eigenvalues
    rank: float = 1e-6       # d_i > 1 + rank counts toward the symplectic rank
    comp: float = 1e-6       # compression residual
    norm: float = 1e-9       # state normalization
    leak: float = 1e-8       # per-gate truncation leak budget
    ent: float = 1e-6        # log-negativity threshold
    bound: float = 1e-9      # slack when comparing a bound to an oracle

    def with_(self, **kw) -> "Tolerances":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = Tolerances()

CONFIG_ENV = "SYMPRANK_CONFIG"


def load_tolerances(path: str | None = None) -> Tolerances:
    """Defaults, overridden by a JSON file given explicitly or via SYMPRANK_CONFIG."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return DEFAULT
    with open(path) as fh:
        data = json.load(fh)
    unknown = set(data) - set(asdict(DEFAULT))
    if unknown:
        raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
    return DEFAULT.with_(**data)
