"""Contrastive and classification objectives.

The contrastive loss between two views is a temperature-scaled softmax
cross entropy over cosine similarities: positives are co-temporal windows
(same batch index), negatives are the other windows in the batch. The
multi-view loss averages the pairwise loss over every unordered pair of
views; the total training loss is the unweighted sum of the contrastive
and classification terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import torch

from vfusion.errors import ConfigError, ShapeError


@dataclass(frozen=True)
class LossConfig:
    temperature: float = 0.1
    two_view: bool = False
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")


def cosine_similarity_matrix(
    z1: torch.Tensor, z2: torch.Tensor, epsilon: float = 1e-8
) -> torch.Tensor:
    """[B, B] matrix of cosine similarities between rows of z1 and z2."""
    n1 = z1 / (z1.norm(dim=1, keepdim=True) + epsilon)
    n2 = z2 / (z2.norm(dim=1, keepdim=True) + epsilon)
    return n1 @ n2.T


def ntxent_pair(
    z1: torch.Tensor,
    z2: torch.Tensor,
    temperature: float,
    epsilon: float = 1e-8,
) -> torch.Tensor:
    """Directional contrastive loss with z1 as the anchor view.

    Mean over the batch of -log softmax of the positive similarity among
    all similarities of the anchor against the second view.
    """
    if temperature <= 0:
        raise ConfigError(f"temperature must be positive, got {temperature}")
    if z1.shape != z2.shape or z1.ndim != 2:
        raise ShapeError(f"expected equal [B, D] shapes, got {tuple(z1.shape)} and {tuple(z2.shape)}")
    logits = cosine_similarity_matrix(z1, z2, epsilon) / temperature
    positive = logits.diagonal()
    return (torch.logsumexp(logits, dim=1) - positive).mean()


def multiview_contrastive(
    features: dict[str, torch.Tensor],
    temperature: float,
    two_view: bool = False,
    epsilon: float = 1e-8,
) -> torch.Tensor:
    """Average pairwise loss over all unordered view pairs.

    Pair order follows the declaration order of ``features``; in 1-view
    mode the earlier view of each pair is the anchor.
    """
    names = list(features)
    if len(names) < 2:
        raise ConfigError(f"need at least 2 views, got {len(names)}")
    shapes = {tuple(features[n].shape) for n in names}
    if len(shapes) > 1:
        raise ShapeError(f"views must share [B, D] shape, got {sorted(shapes)}")
    total = None
    n_pairs = 0
    for a, b in combinations(names, 2):
        term = ntxent_pair(features[a], features[b], temperature, epsilon)
        if two_view:
            term = term + ntxent_pair(features[b], features[a], temperature, epsilon)
        total = term if total is None else total + term
        n_pairs += 1
    return total / n_pairs


def classification_loss(
    scores: dict[str, torch.Tensor], labels: torch.Tensor
) -> torch.Tensor:
    """Mean over classification nodes of the batch cross entropy."""
    if not scores:
        raise ConfigError("need at least one classification node")
    total = None
    for node, s in scores.items():
        if s.ndim != 2 or len(s) != len(labels):
            raise ShapeError(f"node {node}: scores [B, K] must match labels [B]")
        k = s.shape[1]
        if labels.min() < 0 or labels.max() >= k:
            raise ConfigError(f"labels out of range [0, {k})")
        term = torch.nn.functional.cross_entropy(s, labels)
        total = term if total is None else total + term
    return total / len(scores)


def total_loss(cls: torch.Tensor, ctr: torch.Tensor) -> torch.Tensor:
    """Unweighted joint objective."""
    return cls + ctr
