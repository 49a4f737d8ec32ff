"""distillab: a desk-scale lab for distillation with projected augmentation.

Embedding-space augmentation (MixUp interpolation, FGSM perturbation) is
projected back onto the vocabulary so augmented batches are always real
token sequences, then a small student is distilled against a frozen teacher
on the original plus augmented data. The package also ships exact and Monte
Carlo verifiers for the approach's coverage and boundary-shift properties.
"""

from .augment import FgsmConfig, MixupConfig, augpro_fgsm, augpro_mix, fgsm_perturb, knn_replace, mixup_embed, mixup_label
from .datagen import Dataset, batch_iter, draw_batch, gen_keyword_task, load_jsonl, save_jsonl
from .distillation import (
    AugSpec,
    DistillConfig,
    TrainConfig,
    aug_loss_augpro,
    aug_loss_fgsm,
    aug_loss_mixup,
    distill,
    evaluate,
    kd_loss,
    train_teacher,
)
from .diversity import (
    HypercubeConfig,
    construct_fgsm_aug,
    construct_mix_aug,
    distinct_count,
    estimate_error_gap,
    estimate_ratio,
    exact_expected_distinct,
    sample_training_set,
)
from .embeddings import (
    EmbeddingTable,
    Vocabulary,
    cosine_similarity,
    embed,
    init_embedding_table,
    knn_neighbors,
    project_blocked,
    project_to_tokens,
)
from .errors import InseparableDataError, ValidationError
from .model import TokenModel, init_token_model, load_model, save_model
from .nn import ClassifierNet, Layer, backward, cross_entropy, forward, grad_check, init_net, mse, sgd_step
from .svmdemo import SeparatorLine, classify, hard_margin_svm_2d, run_boundary_demo

__version__ = "0.1.0"
