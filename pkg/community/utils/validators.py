"""
Input Validation Utilities
Validates experiment configuration files and API payloads
"""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from community.utils.errors import ConfigError

SCENARIOS = ("pilot_sweep", "signal_sweep", "unbalance_sweep", "sc_compare", "file_run")
MAX_SEED = (1 << 64) - 1


class ExperimentConfig(BaseModel):
    """Scenario configuration; every list field is a grid axis"""

    model_config = ConfigDict(extra="forbid")

    scenario: Literal["pilot_sweep", "signal_sweep", "unbalance_sweep", "sc_compare", "file_run"]
    num_nodes: List[int] = Field(default=[2000], min_length=1, description="N grid")
    num_blocks: List[int] = Field(default=[3], min_length=1, description="K grid")
    nu: List[float] = Field(default=[0.2], min_length=1, description="Connection intensity grid")
    lam: List[float] = Field(default=[0.5], min_length=1, description="Divergence grid")
    pilot_ratio: List[float] = Field(default=[0.2], min_length=1, description="r = l/N grid")
    num_pilots: Optional[List[int]] = Field(default=None, description="Absolute l grid (overrides pilot_ratio)")
    num_workers: List[int] = Field(default=[5], min_length=1, description="M grid")
    alpha: List[float] = Field(default=[0.0], min_length=1, description="Unbalanced-assignment grid")
    repetitions: int = Field(default=20, ge=1, description="Repetitions R per grid point")
    seed: int = Field(default=0, ge=0, le=MAX_SEED, description="Master seed")
    engine: Literal["sequential", "parallel"] = "sequential"
    pilot_policy: Literal["stratified", "uniform"] = "stratified"
    compute_lee: bool = Field(default=False, description="Retain worker embeddings and report LEE")
    shuffle_nodes: bool = Field(default=False, description="Shuffle node order after sampling")
    compare_sc: bool = Field(default=False, description="Also run whole-graph spectral clustering in file_run")
    n_jobs: int = Field(default=1, description="Concurrent repetitions (joblib convention)")
    output_dir: str = "results"
    edge_list: Optional[str] = None
    labels: Optional[str] = None
    index_base: int = Field(default=0, ge=0, le=1, description="Smallest node id in edge_list")
    verbose: bool = True

    @field_validator("num_nodes", "num_blocks", "num_workers")
    @classmethod
    def validate_positive(cls, v):
        if any(x < 1 for x in v):
            raise ValueError("values must be positive integers")
        return v

    @field_validator("nu", "lam")
    @classmethod
    def validate_unit_interval(cls, v):
        if any(not 0.0 <= x <= 1.0 for x in v):
            raise ValueError("values must lie in [0, 1]")
        return v

    @field_validator("pilot_ratio")
    @classmethod
    def validate_ratio(cls, v):
        if any(not 0.0 < x <= 1.0 for x in v):
            raise ValueError("pilot ratios must lie in (0, 1]")
        return v

    @field_validator("num_pilots")
    @classmethod
    def validate_pilot_counts(cls, v):
        if v is not None and (len(v) == 0 or any(x < 1 for x in v)):
            raise ValueError("pilot counts must be a non-empty list of positive integers")
        return v

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v):
        if any(not 0.0 <= x < 1.0 for x in v):
            raise ValueError("alpha values must lie in [0, 1)")
        return v

    @model_validator(mode="after")
    def validate_scenario_inputs(self):
        if self.scenario == "file_run" and not self.edge_list:
            raise ValueError("file_run needs edge_list")
        if self.scenario != "file_run" and self.labels:
            raise ValueError("labels is only used by file_run")
        if self.compare_sc and self.scenario != "file_run":
            raise ValueError("compare_sc is only used by file_run; sc_compare always runs the baseline")
        return self

    def pilot_axis(self) -> List[Any]:
        """Pilot grid as ('count', l) or ('ratio', r) points"""
        if self.num_pilots is not None:
            return [("count", l) for l in self.num_pilots]
        return [("ratio", r) for r in self.pilot_ratio]


LIST_FIELDS = {
    name for name, info in ExperimentConfig.model_fields.items()
    if "List" in str(info.annotation)
}


def parse_key_values(text: str, source: str = "<config>") -> Dict[str, Any]:
    """
    Parse flat key-value text: 'key = value' per line, '#' comments, list
    values comma-separated.
    """
    entries: Dict[str, Any] = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{line_number}: expected key = value, got {raw!r}")
        if key in entries:
            raise ConfigError(f"{source}:{line_number}: duplicate key {key!r}")
        if key in LIST_FIELDS:
            entries[key] = [item.strip() for item in value.split(",") if item.strip()]
        else:
            entries[key] = value
    return entries


def validate_experiment_config(data: Dict[str, Any], source: str = "<config>") -> ExperimentConfig:
    """Validate raw config entries, re-raising pydantic errors as ConfigError"""
    try:
        return ExperimentConfig(**data)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"{source}: {problems}") from exc


def load_experiment_config(path: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Load and validate an experiment configuration file.

    Args:
        path: Flat key-value config file
        overrides: Entries replacing file values (CLI flags)

    Returns:
        ExperimentConfig
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data = parse_key_values(text, source=path)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return validate_experiment_config(data, source=path)


# ============= API SCHEMAS =============

class GenerateRequest(BaseModel):
    """Input schema for SBM generation"""

    num_nodes: int = Field(..., ge=2, le=20000, description="Number of nodes N")
    num_blocks: int = Field(..., ge=1, le=50, description="Number of blocks K")
    nu: float = Field(..., ge=0, le=1, description="Connection intensity")
    lam: float = Field(..., ge=0, le=1, description="Divergence between within and between blocks")
    seed: int = Field(0, ge=0, le=MAX_SEED, description="Sampling seed")

    model_config = ConfigDict(json_schema_extra={
        "example": {"num_nodes": 600, "num_blocks": 3, "nu": 0.2, "lam": 0.5, "seed": 7}
    })


class GenerateResponse(BaseModel):
    """Generated graph as an edge list plus ground truth"""

    num_nodes: int
    num_edges: int
    edges: List[List[int]]
    labels: List[int]


class DetectRequest(BaseModel):
    """Input schema for distributed detection on a posted edge list"""

    edges: List[List[int]] = Field(..., min_length=1, description="Undirected edges as [u, v] pairs")
    num_blocks: int = Field(..., ge=1, le=50, description="Number of communities K")
    pilot_ratio: float = Field(0.2, gt=0, le=1, description="Pilot ratio r = l/N")
    num_workers: int = Field(2, ge=1, le=64, description="Number of workers M")
    seed: int = Field(0, ge=0, le=MAX_SEED, description="Master seed")
    labels: Optional[List[int]] = Field(None, description="Ground truth indexed by compacted node id")

    @field_validator("edges")
    @classmethod
    def validate_edges(cls, v):
        for edge in v:
            if len(edge) != 2 or min(edge) < 0:
                raise ValueError("each edge must be a pair of non-negative node ids")
        return v

    model_config = ConfigDict(json_schema_extra={
        "example": {
            "edges": [[0, 1], [0, 2], [1, 2], [3, 4], [3, 5], [4, 5], [2, 3]],
            "num_blocks": 2,
            "pilot_ratio": 1.0,
            "num_workers": 1,
            "seed": 0,
            "labels": [0, 0, 0, 1, 1, 1],
        }
    })


class DetectResponse(BaseModel):
    """Response schema for detection"""

    labels: List[int] = Field(..., description="Estimated label per compacted node id")
    node_ids: List[int] = Field(..., description="Original id of each compacted node")
    pseudo_center_nodes: List[int]
    broadcast_bytes: int
    degenerate_nodes: List[int]
    timings: Dict[str, float]
    misclustering_rate: Optional[float] = None
    relative_density: Optional[float] = None
