"""Numerics for word-level EEG representation learning, at desk scale.

A word-level EEG sample is a channels x frequency-bands band-power matrix
(defaults: 105 channels, 8 bands). This module implements the stage-one
training arithmetic around such samples:

* per-subject standardization of a batch;
* splitting a sample into per-band tokens and random token masking;
* a contrastive loss aligning encoded samples with fixed word vectors
  (softmax over dot-product similarities scaled by a temperature), its
  analytic gradient, and a stable log-sum-exp evaluation;
* a supervised cross-entropy loss over word logits with gradient;
* a deliberately tiny encoder (one linear map, mean pooling over visible
  tokens) so the combined objective can be gradient-checked end to end
  and shown to be trainable on separable synthetic data.

Word vectors come from an embedding-table file (JSON Lines
``{"word": ..., "vec": [...]}``), standing in for a frozen text model.

Everything is plain numpy and pure; the only randomness is an explicit
``numpy.random.Generator``.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

N_CHANNELS_DEFAULT = 105
N_BANDS_DEFAULT = 8
VARIANCE_EPSILON = 1e-8


@dataclass(frozen=True)
class BandPowerEmbedding:
    """One word-level EEG sample: channels x frequency-bands, plus subject."""

    values: np.ndarray
    subject_id: str = "s0"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("band-power values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_bands(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BandToken:
    """One frequency band's channel vector, tagged with its band index."""

    values: np.ndarray
    band_index: int


@dataclass(frozen=True)
class MaskPattern:
    """Which band tokens stayed visible in one masking draw."""

    visible: np.ndarray  # bool, length n_bands
    ratio: float

    def __post_init__(self):
        if not self.visible.any():
            raise ValueError("a mask must leave at least one token visible")


@dataclass(frozen=True)
class LossHyperparams:
    """Temperature, mask ratio and loss-combination weights."""

    tau: float = 0.3
    eta: float = 0.1
    alpha: float = 0.5
    beta: float = 0.5

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"temperature must be positive, got {self.tau}")
        if not (0.0 <= self.eta < 1.0):
            raise ValueError(f"mask ratio must lie in [0, 1), got {self.eta}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be non-negative")


def subject_normalize(batch: Sequence[BandPowerEmbedding]) -> list[BandPowerEmbedding]:
    """Standardize each entry to mean 0 / std 1 within each subject.

    Mean and (population) standard deviation are computed per subject and
    per matrix entry across that subject's samples; zero-variance entries
    are clamped to ``VARIANCE_EPSILON`` and therefore normalize to 0.
    Requires at least two samples per subject.
    """
    by_subject: dict[str, list[int]] = {}
    for i, emb in enumerate(batch):
        by_subject.setdefault(emb.subject_id, []).append(i)
    out: list[BandPowerEmbedding | None] = [None] * len(batch)
    for subject, indices in by_subject.items():
        if len(indices) < 2:
            raise ValueError(
                f"subject {subject!r} has {len(indices)} sample(s); "
                "need at least 2 to standardize"
            )
        stack = np.stack([batch[i].values for i in indices])
        mean = stack.mean(axis=0)
        std = np.maximum(stack.std(axis=0), VARIANCE_EPSILON)
        for i in indices:
            out[i] = BandPowerEmbedding(
                values=(batch[i].values - mean) / std, subject_id=subject
            )
    return out


def band_split(embedding: BandPowerEmbedding) -> list[BandToken]:
    """Split a sample into its per-band channel vectors (lossless)."""
    return [
        BandToken(values=embedding.values[:, band].copy(), band_index=band)
        for band in range(embedding.n_bands)
    ]


def reassemble(tokens: Sequence[BandToken]) -> np.ndarray:
    """Inverse of :func:`band_split`: stack tokens back into a matrix."""
    ordered = sorted(tokens, key=lambda t: t.band_index)
    if [t.band_index for t in ordered] != list(range(len(ordered))):
        raise ValueError("tokens must cover bands 0..D-1 exactly once")
    return np.stack([t.values for t in ordered], axis=1)


def apply_mask(
    tokens: Sequence[BandToken], eta: float, rng: np.random.Generator
) -> tuple[list[BandToken], MaskPattern]:
    """Hide each token independently with probability ``eta``.

    Redraws if every token would be hidden, so at least one token is
    always visible. The word side of the contrastive pair is never
    masked; this operates on the EEG side only.
    """
    if not (0.0 <= eta < 1.0):
        raise ValueError(f"mask ratio must lie in [0, 1), got {eta}")
    n = len(tokens)
    while True:
        visible = rng.random(n) >= eta
        if visible.any():
            break
    kept = [tok for tok, keep in zip(tokens, visible) if keep]
    return kept, MaskPattern(visible=visible, ratio=eta)


# ---------------------------------------------------------------------------
# losses


def _check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _log_softmax_rows(scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise (log-softmax, softmax) with max-subtraction for stability."""
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    return shifted - np.log(total), exp / total


def _contrastive_from_similarities(sim: np.ndarray) -> tuple[float, np.ndarray]:
    """Loss and d(loss)/d(sim) for a precomputed similarity matrix."""
    m = sim.shape[0]
    log_p, p = _log_softmax_rows(sim)
    loss = -float(np.trace(log_p)) / m
    grad = p.copy()
    grad[np.arange(m), np.arange(m)] -= 1.0
    return loss, grad / m


def masked_contrastive_loss(
    h: np.ndarray, w: np.ndarray, tau: float = 0.3
) -> tuple[float, np.ndarray]:
    """Contrastive loss over dot-product similarities, with dLoss/dH.

    loss = -(1/M) sum_i log( exp(h_i.w_i / tau) / sum_j exp(h_i.w_j / tau) )

    Rows of ``h`` are encodings of the (masked) EEG samples, rows of ``w``
    the matching word vectors; the softmax runs over the word index j for
    each row i (no symmetric term). Representations are used raw — the
    similarity is a plain dot product, not a cosine. Row-wise
    max-subtraction keeps the log-sum-exp stable.
    """
    h = _check_finite("h", h)
    w = _check_finite("w", w)
    if h.shape != w.shape or h.ndim != 2:
        raise ValueError(f"h and w must be equal-shape 2-D arrays, got {h.shape} vs {w.shape}")
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    sim = h @ w.T / tau
    loss, dsim = _contrastive_from_similarities(sim)
    return loss, dsim @ w / tau


def supervised_loss(
    logits: np.ndarray, targets: Sequence[int]
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of softmax(logits) against integer targets.

    Returns the loss and d(loss)/d(logits); log-softmax uses
    max-subtraction.
    """
    logits = _check_finite("logits", logits)
    if logits.ndim != 2:
        raise ValueError(f"logits must be 2-D, got shape {logits.shape}")
    targets = np.asarray(targets, dtype=np.int64)
    m, v = logits.shape
    if targets.shape != (m,):
        raise ValueError(f"expected {m} targets, got shape {targets.shape}")
    if (targets < 0).any() or (targets >= v).any():
        raise ValueError(f"targets must lie in [0, {v})")
    log_p, p = _log_softmax_rows(logits)
    loss = -float(log_p[np.arange(m), targets].mean())
    grad = p
    grad[np.arange(m), targets] -= 1.0
    return loss, grad / m


def combined_loss(
    contrastive: float, supervised: float, alpha: float = 0.5, beta: float = 0.5
) -> float:
    """Weighted sum alpha * contrastive + beta * supervised."""
    return alpha * contrastive + beta * supervised


# ---------------------------------------------------------------------------
# toy encoder

N_LATENT_DEFAULT = 16  # stand-in width; any d works, checks are shape-generic


class ToyEncoder:
    """Single linear map (channels -> d) with mean pooling over visible tokens.

    h = weights @ mean(visible token vectors). Small enough to
    finite-difference through, yet shaped like a real encoder: tokens in,
    fixed-width representation out.
    """

    def __init__(self, weights: np.ndarray):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 2:
            raise ValueError(f"weights must be 2-D (d x channels), got {weights.shape}")
        self.weights = weights

    @property
    def n_channels(self) -> int:
        return self.weights.shape[1]

    def encode(self, visible_tokens: Sequence[BandToken]) -> np.ndarray:
        pooled = self.pool(visible_tokens)
        return self.weights @ pooled

    def pool(self, visible_tokens: Sequence[BandToken]) -> np.ndarray:
        if not visible_tokens:
            raise ValueError("cannot encode zero visible tokens")
        stack = np.stack([t.values for t in visible_tokens])
        if stack.shape[1] != self.n_channels:
            raise ValueError(
                f"token has {stack.shape[1]} channels, encoder expects {self.n_channels}"
            )
        return stack.mean(axis=0)

    def encode_pooled(self, pooled: np.ndarray) -> np.ndarray:
        """Encode already-pooled channel vectors (rows)."""
        return pooled @ self.weights.T

    def weight_gradient(self, d_h: np.ndarray, pooled: np.ndarray) -> np.ndarray:
        """d(loss)/d(weights) given d(loss)/d(h) for a batch.

        ``d_h`` and ``pooled`` are (M, d) and (M, channels); the encoder is
        linear, so the gradient is just the accumulated outer product.
        """
        return d_h.T @ pooled


def load_embedding_table(path: str | Path) -> dict[str, np.ndarray]:
    """Read a word-vector table: JSON Lines ``{"word": str, "vec": [...]}``.

    All vectors must share one dimension; words must be unique.
    """
    table: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                word = record["word"]
                vec = np.asarray(record["vec"], dtype=np.float64)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: malformed embedding line: {exc}")
            if vec.ndim != 1 or not np.isfinite(vec).all():
                raise DataError(f"{path}:{lineno}: 'vec' must be a finite 1-D vector")
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise DataError(
                    f"{path}:{lineno}: vector dimension {vec.shape[0]} != {dim}"
                )
            if word in table:
                raise DataError(f"{path}:{lineno}: duplicate word {word!r}")
            table[word] = vec
    return table


def write_embedding_table(table: dict[str, np.ndarray], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for word, vec in table.items():
            fh.write(json.dumps({"word": word, "vec": [float(x) for x in vec]}))
            fh.write("\n")


# ---------------------------------------------------------------------------
# training-dynamics smoke problem
#
# A linearly separable toy task: each of n_classes words has a distinct
# band-power prototype; samples are prototypes plus small noise. If the
# combined objective is minimizable at all, a linear encoder plus linear
# classification head must reach high accuracy here quickly.


@dataclass
class ToyProblem:
    samples: np.ndarray  # (M, channels, bands)
    targets: np.ndarray  # (M,) int
    word_vectors: np.ndarray  # (n_classes, d) frozen
    n_classes: int


def make_toy_problem(
    n_classes: int = 10,
    n_samples: int = 200,
    n_channels: int = 12,
    n_bands: int = N_BANDS_DEFAULT,
    latent_dim: int = N_LATENT_DEFAULT,
    noise: float = 0.1,
    seed: int = 0,
) -> ToyProblem:
    rng = np.random.default_rng(seed)
    prototypes = rng.normal(size=(n_classes, n_channels, n_bands))
    targets = rng.integers(0, n_classes, size=n_samples)
    samples = prototypes[targets] + noise * rng.normal(
        size=(n_samples, n_channels, n_bands)
    )
    word_vectors = rng.normal(size=(n_classes, latent_dim))
    return ToyProblem(
        samples=samples,
        targets=targets,
        word_vectors=word_vectors,
        n_classes=n_classes,
    )


def _masked_means(
    samples: np.ndarray, eta: float, rng: np.random.Generator
) -> np.ndarray:
    """Mean over visible bands per sample (each band kept w.p. 1 - eta)."""
    m, _, n_bands = samples.shape
    visible = rng.random((m, n_bands)) >= eta
    dead = ~visible.any(axis=1)
    while dead.any():
        visible[dead] = rng.random((int(dead.sum()), n_bands)) >= eta
        dead = ~visible.any(axis=1)
    weights = visible / visible.sum(axis=1, keepdims=True)
    return np.einsum("mcb,mb->mc", samples, weights)


def train_toy_classifier(
    problem: ToyProblem,
    hyper: LossHyperparams = LossHyperparams(),
    steps: int = 500,
    learning_rate: float = 0.5,
    seed: int = 0,
) -> dict:
    """Full-batch gradient descent on encoder + classification head.

    Minimizes alpha * contrastive + beta * cross-entropy; returns the
    final top-1 training accuracy and the loss trace. Deterministic and
    single-threaded.
    """
    rng = np.random.default_rng(seed)
    m, n_channels, _ = problem.samples.shape
    latent_dim = problem.word_vectors.shape[1]
    encoder = ToyEncoder(0.1 * rng.normal(size=(latent_dim, n_channels)))
    head = 0.1 * rng.normal(size=(problem.n_classes, latent_dim))
    w_batch = problem.word_vectors[problem.targets]

    losses = []
    for _ in range(steps):
        pooled = _masked_means(problem.samples, hyper.eta, rng)
        h = encoder.encode_pooled(pooled)

        ct, d_h_ct = masked_contrastive_loss(h, w_batch, hyper.tau)
        logits = h @ head.T
        sup, d_logits = supervised_loss(logits, problem.targets)
        losses.append(combined_loss(ct, sup, hyper.alpha, hyper.beta))

        d_h = hyper.alpha * d_h_ct + hyper.beta * (d_logits @ head)
        d_head = hyper.beta * (d_logits.T @ h)
        d_weights = encoder.weight_gradient(d_h, pooled)
        encoder.weights -= learning_rate * d_weights
        head -= learning_rate * d_head

    pooled = problem.samples.mean(axis=2)  # no masking at evaluation time
    h = encoder.encode_pooled(pooled)
    predictions = (h @ head.T).argmax(axis=1)
    accuracy = float((predictions == problem.targets).mean())
    return {
        "accuracy": accuracy,
        "losses": losses,
        "steps": steps,
        "encoder": encoder,
        "head": head,
    }


# ---------------------------------------------------------------------------
# gradient checking


def central_difference_gradient(func, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function at ``x``."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.ravel()
    base = x.copy()
    for i in range(x.size):
        orig = base.ravel()[i]
        base.ravel()[i] = orig + step
        f_plus = func(base)
        base.ravel()[i] = orig - step
        f_minus = func(base)
        base.ravel()[i] = orig
        flat[i] = (f_plus - f_minus) / (2.0 * step)
    return grad


def relative_gradient_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Norm-relative disagreement between two gradients."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def run_gradient_checks(seed: int = 0, n_points: int = 20) -> dict[str, float]:
    """Compare analytic and central-difference gradients at random points.

    Checks the contrastive loss (gradient in h), the supervised loss
    (gradient in logits) and the end-to-end toy pipeline (gradient in the
    encoder weights through the combined objective). Returns the maximum
    relative error per check.
    """
    rng = np.random.default_rng(seed)
    report = {"contrastive": 0.0, "supervised": 0.0, "encoder_end_to_end": 0.0}

    for _ in range(n_points):
        m, d = int(rng.integers(2, 6)), int(rng.integers(2, 5))
        h = rng.normal(size=(m, d))
        w = rng.normal(size=(m, d))
        tau = float(rng.uniform(0.2, 1.5))
        _, analytic = masked_contrastive_loss(h, w, tau)
        numeric = central_difference_gradient(
            lambda x: masked_contrastive_loss(x, w, tau)[0], h
        )
        report["contrastive"] = max(
            report["contrastive"], relative_gradient_error(analytic, numeric)
        )

    for _ in range(n_points):
        m, v = int(rng.integers(2, 6)), int(rng.integers(2, 7))
        logits = rng.normal(size=(m, v))
        targets = rng.integers(0, v, size=m)
        _, analytic = supervised_loss(logits, targets)
        numeric = central_difference_gradient(
            lambda x: supervised_loss(x, targets)[0], logits
        )
        report["supervised"] = max(
            report["supervised"], relative_gradient_error(analytic, numeric)
        )

    for _ in range(n_points):
        m, channels, d, v = 4, 3, 3, 5
        pooled = rng.normal(size=(m, channels))
        w_batch = rng.normal(size=(m, d))
        head = rng.normal(size=(v, d))
        targets = rng.integers(0, v, size=m)
        weights = rng.normal(size=(d, channels))

        def end_to_end(flat_weights):
            enc = ToyEncoder(flat_weights.reshape(d, channels))
            h = enc.encode_pooled(pooled)
            ct, _ = masked_contrastive_loss(h, w_batch, 0.3)
            sup, _ = supervised_loss(h @ head.T, targets)
            return combined_loss(ct, sup)

        encoder = ToyEncoder(weights)
        h = encoder.encode_pooled(pooled)
        _, d_h_ct = masked_contrastive_loss(h, w_batch, 0.3)
        _, d_logits = supervised_loss(h @ head.T, targets)
        d_h = 0.5 * d_h_ct + 0.5 * (d_logits @ head)
        analytic = encoder.weight_gradient(d_h, pooled)
        numeric = central_difference_gradient(
            end_to_end, weights.ravel(), step=1e-6
        ).reshape(d, channels)
        report["encoder_end_to_end"] = max(
            report["encoder_end_to_end"], relative_gradient_error(analytic, numeric)
        )

    return report
