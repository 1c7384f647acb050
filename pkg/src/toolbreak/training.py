"""Training protocol, sequential evaluation, and the CNN-vs-MLP benchmark.

Defaults follow the reference protocol: 2400 iterations of mini-batch 20
drawn uniformly with replacement, learning rate 1e-4, batch-1 evaluation
in tool-processing order, normalization fit on training samples only.
"""

from __future__ import annotations

import hashlib
import json
import statistics
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .checkpoint import Checkpoint
from .dataset import (
    LabeledSample,
    SAMPLE_MODES,
    assemble_samples,
    default_split_plan,
    features_matrix,
    labels_vector,
    split,
)
from .features import NormalizationStats, extract_features
from .models import ModelSpec, build_bp_scaled, build_cnn_scaled, instantiate
from .nn.layers import SoftmaxCrossEntropy
from .nn.network import Network
from .nn.optim import make_optimizer, optimizer_step
from .rng import named_stream
from .signal_io import Span, trim_non_machining
from .synth import DatasetManifest, benchmark_profile, generate_dataset, regenerate_trace


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 2400
    batch_size: int = 20
    eval_batch_size: int = 1
    learning_rate: float = 1e-4
    seed: int = 0
    validation_fraction: float = 0.1
    balanced_sampling: bool = False
    sample_mode: str = "prefix"

    def __post_init__(self) -> None:
        if self.iterations <= 0:
            raise ValueError(f"iterations must be positive, got {self.iterations}")
        if self.batch_size < 1 or self.eval_batch_size < 1:
            raise ValueError("batch sizes must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError(f"validation_fraction must be in [0, 1), got {self.validation_fraction}")
        if self.sample_mode not in SAMPLE_MODES:
            raise ValueError(f"sample_mode must be one of {SAMPLE_MODES}, got {self.sample_mode!r}")


_CONFIG_TYPES = {
    "iterations": int, "batch_size": int, "eval_batch_size": int,
    "learning_rate": float, "seed": int, "validation_fraction": float,
    "balanced_sampling": lambda v: v.lower() in ("1", "true", "yes"),
    "sample_mode": str,
}


def parse_config_file(path: str | Path) -> TrainConfig:
    """key=value lines naming TrainConfig fields; blank lines and # comments ok."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{Path(path).name} line {lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_TYPES:
                raise ValueError(f"{Path(path).name} line {lineno}: unknown config key {key!r}")
            values[key] = _CONFIG_TYPES[key](value)
    return TrainConfig(**values)


def fit_sample_normalization(samples: list[LabeledSample]) -> NormalizationStats:
    """Stats over the real (non-pad) regions of the given samples only."""
    from .features import fit_normalization
    chunks = [s.features[:s.n_real] for s in samples]
    if not chunks:
        raise ValueError("no samples to fit normalization on")
    return fit_normalization(np.concatenate(chunks))


def normalized_matrix(samples: list[LabeledSample], stats: NormalizationStats,
                      divisor: str = "std") -> np.ndarray:
    """Sample matrix with real regions standardized and padding left at zero."""
    from .features import normalize
    out = np.zeros((len(samples), samples[0].features.size)) if samples else np.empty((0, 0))
    for i, s in enumerate(samples):
        out[i, :s.n_real] = normalize(s.features[:s.n_real], stats, divisor)
    return out


def data_fingerprint(samples: list[LabeledSample]) -> str:
    digest = hashlib.sha256()
    for s in samples:
        digest.update(s.tool_id.encode())
        digest.update(np.int64(s.window_minute).tobytes())
        digest.update(np.int64(s.label).tobytes())
        digest.update(np.ascontiguousarray(s.features).tobytes())
    return digest.hexdigest()[:16]


def _model_input(x: np.ndarray, spec: ModelSpec) -> np.ndarray:
    return x[:, :, np.newaxis] if spec.arch == "cnn" else x


def train(spec: ModelSpec, train_samples: list[LabeledSample],
          config: TrainConfig) -> tuple[Checkpoint, np.ndarray]:
    """Run the training loop; returns the checkpoint and per-step loss curve."""
    labels = labels_vector(train_samples)
    classes = set(labels.tolist())
    if classes != {0, 1}:
        raise ValueError(f"train set must contain both classes, got labels {sorted(classes)}")
    for s in train_samples:
        if s.features.size != spec.input_length:
            raise ValueError(f"sample length {s.features.size} mismatches spec input {spec.input_length}")

    stats = fit_sample_normalization(train_samples)
    x_all = normalized_matrix(train_samples, stats, spec.normalize_divisor)

    net = instantiate(spec, config.seed)
    net.set_dropout_rng(named_stream(config.seed, "dropout"))
    batch_rng = named_stream(config.seed, "batch")
    optimizer = make_optimizer(spec.optimizer, config.learning_rate, net.parameters())

    positives = np.flatnonzero(labels == 1)
    negatives = np.flatnonzero(labels == 0)
    losses = np.empty(config.iterations)
    for step in range(config.iterations):
        if config.balanced_sampling:
            half = config.batch_size // 2
            idx = np.concatenate([
                batch_rng.choice(negatives, size=config.batch_size - half, replace=True),
                batch_rng.choice(positives, size=half, replace=True),
            ])
        else:
            idx = batch_rng.integers(0, len(train_samples), size=config.batch_size)
        xb = _model_input(x_all[idx], spec)
        logits = net.forward(xb, train=True)
        loss, dlogits = SoftmaxCrossEntropy.loss_and_grad(logits, labels[idx])
        net.backward(dlogits)
        optimizer_step(net.parameters(), net.gradients(), optimizer)
        losses[step] = loss

    meta = {
        "iterations": str(config.iterations),
        "batch_size": str(config.batch_size),
        "seed": str(config.seed),
        "sample_mode": config.sample_mode,
        "data_fingerprint": data_fingerprint(train_samples),
        "norm_mu": repr(stats.mu),
        "norm_sigma": repr(stats.sigma),
    }
    ckpt = Checkpoint(
        spec=spec,
        params={k: v.copy() for k, v in net.parameters().items()},
        buffers={k: v.copy() for k, v in net.buffers().items()},
        optimizer=optimizer,
        meta=meta,
    )
    return ckpt, losses


def restore_network(ckpt: Checkpoint) -> Network:
    net = ckpt.spec.build_network()
    net.load_parameters(ckpt.params)
    net.load_buffers(ckpt.buffers)
    return net


def checkpoint_stats(ckpt: Checkpoint) -> NormalizationStats:
    try:
        return NormalizationStats(float(ckpt.meta["norm_mu"]), float(ckpt.meta["norm_sigma"]))
    except KeyError as exc:
        raise ValueError("checkpoint carries no normalization statistics") from exc


@dataclass(frozen=True)
class EvalReport:
    """Metrics of one sample partition under one checkpoint."""

    accuracy: float
    class_accuracy: tuple[float | None, float | None]
    confusion: tuple[int, int, int, int]        # tn, fp, fn, tp
    detection_latency: int | None               # windows; None if either side missing
    predictions: tuple[int, ...]
    scores: tuple[float, ...]                   # probability of the breakage class

    def counts_total(self) -> int:
        return sum(self.confusion)


def predict_scores(ckpt: Checkpoint, samples: list[LabeledSample]) -> np.ndarray:
    """Probability of the breakage class per sample, batch-1 in order."""
    net = restore_network(ckpt)
    stats = checkpoint_stats(ckpt)
    x_all = normalized_matrix(samples, stats, ckpt.spec.normalize_divisor)
    scores = np.empty(len(samples))
    for i in range(len(samples)):
        probs = net.predict_proba(_model_input(x_all[i:i + 1], ckpt.spec))[0]
        scores[i] = float(probs[1])
    return scores


def evaluate(ckpt: Checkpoint, samples: list[LabeledSample]) -> EvalReport:
    """Batch-1 evaluation in sample order with frozen statistics."""
    if not samples:
        raise ValueError("no samples to evaluate")
    labels = labels_vector(samples)
    scores = predict_scores(ckpt, samples)
    predictions = (scores > 0.5).astype(np.intp)

    accuracy = float((predictions == labels).mean())
    class_acc: list[float | None] = []
    for cls in (0, 1):
        mask = labels == cls
        class_acc.append(float((predictions[mask] == cls).mean()) if mask.any() else None)
    tn = int(((predictions == 0) & (labels == 0)).sum())
    fp = int(((predictions == 1) & (labels == 0)).sum())
    fn = int(((predictions == 0) & (labels == 1)).sum())
    tp = int(((predictions == 1) & (labels == 1)).sum())

    latency: int | None = None
    true_pos = np.flatnonzero(labels == 1)
    pred_pos = np.flatnonzero(predictions == 1)
    if true_pos.size and pred_pos.size:
        latency = int(pred_pos[0] - true_pos[0])

    return EvalReport(accuracy, (class_acc[0], class_acc[1]), (tn, fp, fn, tp),
                      latency, tuple(int(p) for p in predictions), tuple(scores))


@dataclass(frozen=True)
class ExperimentResult:
    checkpoint: Checkpoint
    loss_curve: np.ndarray
    train: EvalReport
    validation: EvalReport | None
    test: EvalReport
    config: TrainConfig

    def summary_table(self) -> str:
        rows = [
            ("iterations", self.config.iterations),
            ("mini_batch_train", self.config.batch_size),
            ("mini_batch_test", self.config.eval_batch_size),
            ("train_accuracy", f"{self.train.accuracy:.4f}"),
            ("validation_accuracy",
             f"{self.validation.accuracy:.4f}" if self.validation else "n/a"),
            ("test_accuracy", f"{self.test.accuracy:.4f}"),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def run_experiment(spec: ModelSpec, samples: list[LabeledSample], plan,
                   config: TrainConfig) -> ExperimentResult:
    train_set, val_set, test_set = split(samples, plan, config.validation_fraction)
    ckpt, losses = train(spec, train_set, config)
    return ExperimentResult(
        checkpoint=ckpt,
        loss_curve=losses,
        train=evaluate(ckpt, train_set),
        validation=evaluate(ckpt, val_set) if val_set else None,
        test=evaluate(ckpt, test_set),
        config=config,
    )


def write_loss_curve(losses: np.ndarray, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for step, value in enumerate(losses):
            fh.write(json.dumps({"step": step, "loss": float(value)}) + "\n")


def rolling_std(values: np.ndarray, window: int = 50) -> float:
    """Mean of windowed standard deviations; a smoothness score for loss tails."""
    tail = values[-500:]
    if tail.size < window:
        return float(np.std(tail))
    stds = [float(np.std(tail[i:i + window])) for i in range(0, tail.size - window + 1, window)]
    return float(np.mean(stds))


# --- seeded CNN-vs-MLP comparison -------------------------------------------


@dataclass(frozen=True)
class BenchmarkRun:
    model: str
    seed: int
    train_accuracy: float
    test_accuracy: float
    loss_smoothness: float


@dataclass(frozen=True)
class BenchmarkReport:
    master_seed: int
    runs: tuple[BenchmarkRun, ...]

    def model_accuracies(self, model: str) -> list[float]:
        return [r.test_accuracy for r in self.runs if r.model == model]

    def mean_accuracy(self, model: str) -> float:
        return statistics.fmean(self.model_accuracies(model))

    def accuracy_std(self, model: str) -> float:
        return statistics.pstdev(self.model_accuracies(model))

    def as_text(self) -> str:
        lines = [f"benchmark master_seed={self.master_seed}"]
        for run in self.runs:
            lines.append(f"  {run.model:<4} seed={run.seed:<6} train={run.train_accuracy:.4f} "
                         f"test={run.test_accuracy:.4f} loss_smoothness={run.loss_smoothness:.5f}")
        for model in ("cnn", "mlp"):
            accs = self.model_accuracies(model)
            lines.append(f"{model}: mean={self.mean_accuracy(model):.4f} "
                         f"min={min(accs):.4f} max={max(accs):.4f} std={self.accuracy_std(model):.4f}")
        return "\n".join(lines)


def benchmark_samples(master_seed: int, input_length: int,
                      n_tools: int = 5) -> tuple[list[LabeledSample], DatasetManifest]:
    """In-memory benchmark dataset sized for the scaled networks."""
    manifest = generate_dataset(n_tools, master_seed, out_dir=None,
                                base_profile=benchmark_profile())
    series = {}
    for record in manifest.tools:
        trace = trim_non_machining(regenerate_trace(record))
        series[record.tool_id] = extract_features(trace, Span.ONE_SECOND)
    return assemble_samples(series, manifest, input_length), manifest


def benchmark_compare(master_seed: int = 42, n_seeds: int = 5,
                      cnn_spec: ModelSpec | None = None,
                      mlp_spec: ModelSpec | None = None,
                      config: TrainConfig | None = None) -> BenchmarkReport:
    """Train the scaled CNN and the dense baseline over several seeds on one
    shared synthetic dataset; report per-run and aggregate test accuracy."""
    cnn = cnn_spec if cnn_spec is not None else build_cnn_scaled()
    mlp = mlp_spec if mlp_spec is not None else build_bp_scaled(cnn.input_length)
    base_config = config if config is not None else TrainConfig()
    samples, manifest = benchmark_samples(master_seed, cnn.input_length)
    plan = default_split_plan(manifest)

    runs: list[BenchmarkRun] = []
    for i in range(n_seeds):
        seed = master_seed * 1000 + i
        run_config = replace(base_config, seed=seed)
        for name, spec in (("cnn", cnn), ("mlp", mlp)):
            result = run_experiment(spec, samples, plan, run_config)
            runs.append(BenchmarkRun(name, seed, result.train.accuracy,
                                     result.test.accuracy, rolling_std(result.loss_curve)))
    return BenchmarkReport(master_seed, tuple(runs))
