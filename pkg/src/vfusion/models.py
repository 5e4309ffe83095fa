"""Model construction from a modality graph.

One 1-D residual conv extractor per source node that feeds a loss, one
extractor per early-fusion node (over concatenated channels), one linear
projector per late-fusion node. Every path feeding the contrastive loss
ends in ReLU, so features are non-negative and the classifier consumes the
exact same vector the contrastive loss sees.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from vfusion.errors import ShapeError
from vfusion.graph import EARLY, LATE, ModalityGraph


@dataclass(frozen=True)
class ModelHyperparams:
    widths: tuple[int, ...] = (64, 128, 256)
    blocks_per_stage: int = 2
    stem_kernel: int = 9
    block_kernel: int = 5


class ResidualBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, kernel: int, stride: int = 1):
        super().__init__()
        pad = kernel // 2
        self.conv1 = nn.Conv1d(in_ch, out_ch, kernel, stride=stride, padding=pad)
        self.bn1 = nn.BatchNorm1d(out_ch)
        self.conv2 = nn.Conv1d(out_ch, out_ch, kernel, padding=pad)
        self.bn2 = nn.BatchNorm1d(out_ch)
        self.relu = nn.ReLU()
        if in_ch != out_ch or stride != 1:
            self.shortcut = nn.Sequential(
                nn.Conv1d(in_ch, out_ch, 1, stride=stride), nn.BatchNorm1d(out_ch)
            )
        else:
            self.shortcut = nn.Identity()

    def forward(self, x):
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.relu(out + self.shortcut(x))


class ResNet1DExtractor(nn.Module):
    """Stem conv + residual stages + global average pooling + linear + ReLU."""

    def __init__(self, in_channels: int, feature_dim: int, hp: ModelHyperparams):
        super().__init__()
        self.in_channels = in_channels
        w0 = hp.widths[0]
        self.stem = nn.Sequential(
            nn.Conv1d(in_channels, w0, hp.stem_kernel, padding=hp.stem_kernel // 2),
            nn.BatchNorm1d(w0),
            nn.ReLU(),
        )
        blocks = []
        prev = w0
        for stage, width in enumerate(hp.widths):
            for b in range(hp.blocks_per_stage):
                stride = 2 if (b == 0 and stage > 0) else 1
                blocks.append(ResidualBlock(prev, width, hp.block_kernel, stride))
                prev = width
        self.stages = nn.Sequential(*blocks)
        self.pool = nn.AdaptiveAvgPool1d(1)
        self.fc = nn.Linear(prev, feature_dim)
        self.relu = nn.ReLU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: [B, window_len, channels]
        if x.ndim != 3 or x.shape[2] != self.in_channels:
            raise ShapeError(
                f"expected [B, T, {self.in_channels}], got {tuple(x.shape)}"
            )
        x = x.transpose(1, 2)  # [B, C, T]
        x = self.stem(x)
        x = self.stages(x)
        x = self.pool(x).squeeze(-1)
        return self.relu(self.fc(x))


def fuse_early(windows: list[torch.Tensor]) -> torch.Tensor:
    """Channel-wise concatenation of equally shaped windows, in input order."""
    if len(windows) == 1:
        return windows[0]
    lens = {w.shape[1] for w in windows}
    if len(lens) > 1:
        raise ShapeError(f"early fusion over mismatched window lengths {sorted(lens)}")
    return torch.cat(windows, dim=2)


class VirtualFusionModel(nn.Module):
    """All extractors, projectors, and classifier heads of one graph."""

    def __init__(
        self,
        graph: ModalityGraph,
        n_classes: int,
        hp: ModelHyperparams | None = None,
    ):
        super().__init__()
        hp = hp or ModelHyperparams()
        self.graph = graph
        self.n_classes = n_classes
        self.hp = hp
        d = graph.feature_dim
        sources = graph.source_by_name

        self.extractors = nn.ModuleDict()
        for name in graph.extractor_sources():
            self.extractors[name] = ResNet1DExtractor(sources[name].channels, d, hp)

        self.projectors = nn.ModuleDict()
        for f in graph.fused:
            if f.kind == EARLY:
                in_ch = sum(sources[i].channels for i in f.inputs)
                self.extractors[f.name] = ResNet1DExtractor(in_ch, d, hp)
            else:
                self.projectors[f.name] = nn.Linear(len(f.inputs) * d, d)
        self.relu = nn.ReLU()

        self.heads = nn.ModuleDict()
        for name in graph.classification_set:
            self.heads[name] = nn.Linear(d, n_classes)

    def fuse_late(
        self, node: str, input_features: list[torch.Tensor]
    ) -> torch.Tensor:
        """Concatenate input features and project back to the common dim."""
        d = self.graph.feature_dim
        for z in input_features:
            if z.shape[-1] != d:
                raise ShapeError(f"late fusion input dim {z.shape[-1]}, expected {d}")
        cat = torch.cat(input_features, dim=-1)
        return self.relu(self.projectors[node](cat))

    def node_features(
        self, windows: dict[str, torch.Tensor], nodes: list[str]
    ) -> dict[str, torch.Tensor]:
        """Feature vectors [B, D] for the requested nodes.

        ``windows`` maps source modality name to a [B, window_len, channels]
        tensor; only modalities required by ``nodes`` are read.
        """
        fused = self.graph.fused_by_name
        cache: dict[str, torch.Tensor] = {}

        def compute(name: str) -> torch.Tensor:
            if name in cache:
                return cache[name]
            if self.graph.is_source(name):
                z = self.extractors[name](windows[name])
            else:
                f = fused[name]
                if f.kind == EARLY:
                    data = fuse_early([windows[i] for i in f.inputs])
                    z = self.extractors[name](data)
                else:
                    z = self.fuse_late(name, [compute(i) for i in f.inputs])
            cache[name] = z
            return z

        return {name: compute(name) for name in nodes}

    def classify(self, node: str, feature: torch.Tensor) -> torch.Tensor:
        """Raw class scores; softmax is applied at loss/metric time."""
        return self.heads[node](feature)

    def summary(self) -> dict[str, int]:
        return {
            "extractors": len(self.extractors),
            "projectors": len(self.projectors),
            "heads": len(self.heads),
        }


def build(
    graph: ModalityGraph, n_classes: int, hp: ModelHyperparams | None = None
) -> VirtualFusionModel:
    """Construct the model for a validated graph."""
    graph.validate()
    return VirtualFusionModel(graph, n_classes, hp)
