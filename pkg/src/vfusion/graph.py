"""Declarative modality graph: sources, fusion nodes, and loss membership.

The graph says which nodes feed the contrastive loss, which get classifier
heads, and which are evaluated at inference time. Connection rules are
checked here, before any model is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from vfusion.errors import GraphError

EARLY = "early"
LATE = "late"


@dataclass(frozen=True)
class SourceNode:
    """One input modality with its expected window layout."""

    name: str
    channels: int
    rate_hz: float
    window_len: int


@dataclass(frozen=True)
class FusedNode:
    """A node combining source nodes at data level (early) or feature level (late)."""

    name: str
    kind: str  # early | late
    inputs: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if self.kind not in (EARLY, LATE):
            raise GraphError(f"fused node {self.name}: unknown kind {self.kind!r}")
        if self.kind == LATE and len(self.inputs) < 2:
            raise GraphError(f"late-fusion node {self.name} needs at least 2 inputs")
        if len(self.inputs) < 1:
            raise GraphError(f"fused node {self.name} needs at least 1 input")


@dataclass
class ModalityGraph:
    sources: list[SourceNode]
    fused: list[FusedNode] = field(default_factory=list)
    contrastive_set: list[str] = field(default_factory=list)
    classification_set: list[str] = field(default_factory=list)
    inference_set: list[str] = field(default_factory=list)
    feature_dim: int = 256

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        names = [s.name for s in self.sources] + [f.name for f in self.fused]
        if len(set(names)) != len(names):
            raise GraphError(f"duplicate node names in {names}")
        source_by_name = {s.name: s for s in self.sources}
        all_nodes = set(names)
        for f in self.fused:
            for inp in f.inputs:
                if inp not in source_by_name:
                    raise GraphError(
                        f"fused node {f.name}: input {inp!r} is not a source node"
                    )
            if f.kind == EARLY:
                rates = {source_by_name[i].rate_hz for i in f.inputs}
                lens = {source_by_name[i].window_len for i in f.inputs}
                if len(rates) > 1 or len(lens) > 1:
                    raise GraphError(
                        f"early-fusion node {f.name}: inputs must share rate and "
                        f"window length, got rates {sorted(rates)}, lengths {sorted(lens)}"
                    )
        for label, subset in (
            ("contrastive_set", self.contrastive_set),
            ("classification_set", self.classification_set),
            ("inference_set", self.inference_set),
        ):
            unknown = set(subset) - all_nodes
            if unknown:
                raise GraphError(f"{label} references unknown nodes {sorted(unknown)}")
            if len(set(subset)) != len(subset):
                raise GraphError(f"{label} has duplicates")
        if len(self.contrastive_set) == 1:
            raise GraphError("contrastive_set needs at least 2 nodes (or none)")
        if not set(self.inference_set) <= set(self.classification_set):
            raise GraphError("inference_set must be a subset of classification_set")
        if self.feature_dim < 1:
            raise GraphError(f"feature_dim must be positive, got {self.feature_dim}")

    @property
    def node_names(self) -> list[str]:
        return [s.name for s in self.sources] + [f.name for f in self.fused]

    @property
    def source_by_name(self) -> dict[str, SourceNode]:
        return {s.name: s for s in self.sources}

    @property
    def fused_by_name(self) -> dict[str, FusedNode]:
        return {f.name: f for f in self.fused}

    def is_source(self, name: str) -> bool:
        return name in self.source_by_name

    def required_modalities(self, nodes: list[str]) -> set[str]:
        """Source modalities whose windows are needed to evaluate ``nodes``."""
        fused = self.fused_by_name
        needed: set[str] = set()
        for node in nodes:
            if self.is_source(node):
                needed.add(node)
            elif node in fused:
                needed.update(fused[node].inputs)
            else:
                raise GraphError(f"unknown node {node!r}")
        return needed

    def extractor_sources(self) -> list[str]:
        """Sources that need their own feature extractor.

        A source gets an extractor when it participates in a loss directly
        or feeds a late-fusion node; early-fusion inputs are consumed at the
        data level by the fused node's extractor.
        """
        used = set(self.contrastive_set) | set(self.classification_set)
        for f in self.fused:
            if f.kind == LATE:
                used.update(f.inputs)
        return [s.name for s in self.sources if s.name in used]

    def to_dict(self) -> dict:
        return {
            "sources": [
                {
                    "name": s.name,
                    "channels": s.channels,
                    "rate_hz": s.rate_hz,
                    "window_len": s.window_len,
                }
                for s in self.sources
            ],
            "fused": [
                {"name": f.name, "kind": f.kind, "inputs": list(f.inputs)}
                for f in self.fused
            ],
            "contrastive_set": list(self.contrastive_set),
            "classification_set": list(self.classification_set),
            "inference_set": list(self.inference_set),
            "feature_dim": self.feature_dim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModalityGraph":
        return cls(
            sources=[SourceNode(**s) for s in d["sources"]],
            fused=[FusedNode(f["name"], f["kind"], tuple(f["inputs"])) for f in d["fused"]],
            contrastive_set=list(d["contrastive_set"]),
            classification_set=list(d["classification_set"]),
            inference_set=list(d["inference_set"]),
            feature_dim=d["feature_dim"],
        )
