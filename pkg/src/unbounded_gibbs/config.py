"""Run configuration: TOML round-trip and field-level validation."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

TASK_KINDS = ("one_point", "volume", "tail", "lipschitz", "uniform_moment", "corollary", "dlr",
              "engines", "gks", "superadditivity", "pressure", "state_independence", "metastate")


class ConfigError(ValueError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


@dataclass
class ModelConfig:
    d: int = 1
    q: float = 2.0
    alpha: float = 1.0
    potential: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])

    def __post_init__(self):
        # TOML integers and floats must hash the same way
        self.q, self.alpha = float(self.q), float(self.alpha)
        self.potential = [float(c) for c in self.potential]


@dataclass
class DisorderConfig:
    scale: float = 0.5
    n_realizations: int = 100
    master_seed: int = 20240601

    def __post_init__(self):
        self.scale = float(self.scale)


@dataclass
class EngineConfig:
    quadrature_tol: float = 1e-12
    quadrature_order: int = 8
    max_panels: int = 256
    mcmc_sweeps: int = 100_000
    mcmc_burn_in: int = 10_000
    ti_points: int = 9
    ti_sweeps: int = 20_000

    def __post_init__(self):
        self.quadrature_tol = float(self.quadrature_tol)


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    disorder: DisorderConfig = field(default_factory=DisorderConfig)
    engines: EngineConfig = field(default_factory=EngineConfig)
    tasks: list[dict[str, Any]] = field(default_factory=list)
    output_dir: str = "results"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        diags = validate_dict(raw)
        if diags:
            raise ConfigError(diags)
        return cls(model=ModelConfig(**raw.get("model", {})),
                   disorder=DisorderConfig(**raw.get("disorder", {})),
                   engines=EngineConfig(**raw.get("engines", {})),
                   tasks=[dict(t) for t in raw.get("tasks", [])],
                   output_dir=str(raw.get("output_dir", "results")))

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        return cls.from_dict(tomllib.loads(text))

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_raw(path: str | Path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_config(path: str | Path) -> RunConfig:
    return RunConfig.from_dict(load_raw(path))


def save_config(config: RunConfig, path: str | Path) -> None:
    Path(path).write_text(config.dumps())


def _known(section: str, raw: dict, cls) -> list[str]:
    allowed = set(cls.__dataclass_fields__)
    return [f"{section}.{k}: unknown field" for k in raw if k not in allowed]


def _positive_int(where: str, v) -> list[str]:
    if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
        return [f"{where}: must be a positive integer (got {v!r})"]
    return []


def validate_dict(raw: dict) -> list[str]:
    """Every invariant violation in a parsed configuration, one message each."""
    diags: list[str] = []
    unknown_top = set(raw) - {"model", "disorder", "engines", "tasks", "output_dir"}
    diags += [f"{k}: unknown section" for k in sorted(unknown_top)]

    model = raw.get("model", {})
    diags += _known("model", model, ModelConfig)
    d = model.get("d", 1)
    diags += _positive_int("model.d", d)
    q = model.get("q", 2.0)
    p = None
    if not isinstance(q, (int, float)) or not q > 1:
        diags.append("model.q: q must exceed 1")
    else:
        p = 2 * q / (q - 1)
    alpha = model.get("alpha", 1.0)
    if not isinstance(alpha, (int, float)) or not alpha > 0:
        diags.append("model.alpha: must be positive")
    coeffs = list(model.get("potential", ModelConfig().potential))
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    degree = len(coeffs) - 1
    if degree < 2 or coeffs[-1] <= 0:
        diags.append("model.potential: needs degree >= 2 and a positive leading coefficient")
    if any(c != 0 for c in coeffs[1::2]):
        diags.append("model.potential: odd coefficients must vanish (V even)")
    if p is not None and not degree > p:
        diags.append(f"model.potential: deg V = {degree} not > p = {p:g}")

    dis = raw.get("disorder", {})
    diags += _known("disorder", dis, DisorderConfig)
    if dis.get("scale", 0.5) < 0:
        diags.append("disorder.scale: must be >= 0")
    diags += _positive_int("disorder.n_realizations", dis.get("n_realizations", 1))
    seed = dis.get("master_seed", 0)
    if not isinstance(seed, int) or seed < 0:
        diags.append("disorder.master_seed: must be a non-negative integer")

    eng = raw.get("engines", {})
    diags += _known("engines", eng, EngineConfig)
    for k in ("quadrature_order", "max_panels", "mcmc_sweeps", "mcmc_burn_in", "ti_sweeps"):
        if k in eng:
            diags += _positive_int(f"engines.{k}", eng[k])
    if "ti_points" in eng and (_positive_int("engines.ti_points", eng["ti_points"])
                               or eng["ti_points"] < 3 or eng["ti_points"] % 2 == 0):
        diags.append("engines.ti_points: must be an odd integer >= 3")
    if eng.get("quadrature_tol", 1e-12) <= 0:
        diags.append("engines.quadrature_tol: must be positive")

    for i, task in enumerate(raw.get("tasks", [])):
        kind = task.get("kind")
        if kind not in TASK_KINDS:
            diags.append(f"tasks[{i}].kind: unknown task kind {kind!r}")
        for k, v in task.items():
            if k.startswith("n_") and not k.endswith("range"):
                diags += _positive_int(f"tasks[{i}].{k}", v)
    return diags


def validate_file(path: str | Path) -> list[str]:
    """Diagnostics for a config file; raises OSError / TOMLDecodeError if unreadable."""
    return validate_dict(load_raw(path))
