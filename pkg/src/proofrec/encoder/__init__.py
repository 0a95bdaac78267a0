from proofrec.encoder.model import (
    EncoderConfig,
    EncoderParameters,
    classify_command,
    classifier_loss,
    embed_mean,
    encoder_forward,
    forward,
    mean_pool,
    mlm_loss,
    pad_batch,
    siamese_loss,
    siamese_score,
)
from proofrec.encoder.gradcheck import grad_check
from proofrec.encoder.training import (
    Adam,
    TrainConfig,
    mask_tokens,
    mlm_step,
    pretrain_mlm,
    sample_negatives,
    siamese_train,
    train_classifier,
)
from proofrec.encoder.checkpoint import (
    load_checkpoint,
    params_fingerprint,
    save_checkpoint,
)

__all__ = [
    "Adam",
    "EncoderConfig",
    "EncoderParameters",
    "TrainConfig",
    "classifier_loss",
    "classify_command",
    "embed_mean",
    "encoder_forward",
    "forward",
    "grad_check",
    "load_checkpoint",
    "mask_tokens",
    "mean_pool",
    "mlm_loss",
    "mlm_step",
    "pad_batch",
    "params_fingerprint",
    "pretrain_mlm",
    "sample_negatives",
    "save_checkpoint",
    "siamese_loss",
    "siamese_score",
    "siamese_train",
    "train_classifier",
]
