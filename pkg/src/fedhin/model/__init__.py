from .hgnn import Batch, ForwardCache, backward, bpr_loss, forward, score
from .params import Gradients, ModelParams, apply_sgd

__all__ = [
    "Batch", "ForwardCache", "Gradients", "ModelParams",
    "apply_sgd", "backward", "bpr_loss", "forward", "score",
]
