"""Stratified split, binary metrics and the model x pipeline experiment grid"""
import hashlib
import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from sklearn.metrics import average_precision_score, roc_auc_score

from processors import FeatureProcessor, pipeline_label
from processors.asr_processor import AsrProvider
from processors.audio_processor import LABELS, AudioClip, TestPartition, TrainPartition, to_mono
from processors.augmenter import AugmentConfig, add_noise, augment_dataset
from processors.denoiser import DenoiseConfig
from processors.spectral_processor import SpectralConfig
from utils.errors import (
    DataError,
    InsufficientClassExamples,
    InvalidRange,
    LengthMismatch,
    NoPositives,
    SingleClassTruth,
)
from utils.seeding import make_rng
from .classifier import ModelHyperparameters, train_model

logger = logging.getLogger(__name__)

POSITIVE_CLASS = 'takeoff'
METRIC_NAMES = ('accuracy', 'precision', 'recall', 'f1', 'mcc', 'auroc', 'aupr')
REPORT_COLUMNS = [
    'model', 'pipeline', 'augmented',
    'acc', 'prec', 'rec', 'f1', 'mcc', 'auroc', 'aupr',
    'tp', 'fp', 'tn', 'fn', 'seed',
]
_CSV_NAMES = {'accuracy': 'acc', 'precision': 'prec', 'recall': 'rec'}


def train_test_split(
    clips: Sequence[AudioClip],
    train_frac: float = 0.8,
    seed: int = 42,
) -> Tuple[TrainPartition, TestPartition]:
    """
    Stratified, seeded split

    Each class contributes floor(train_frac * n_c + 0.5) clips to training,
    kept within [1, n_c - 1] so both sides see both classes. Membership is
    drawn from make_rng(seed, "split", label) over the class's clips sorted
    by id, so input order does not matter. Partitions keep corpus order.

    Args:
        clips: Labeled clips
        train_frac: Fraction of each class used for training
        seed: Run seed

    Returns:
        (TrainPartition, TestPartition)
    """
    if not 0.0 < train_frac < 1.0:
        raise InvalidRange(f"train_frac must be in (0, 1), got {train_frac}")
    train_ids = set()
    for label in LABELS:
        members = sorted(c.id for c in clips if c.label == label)
        if len(members) < 2:
            raise InsufficientClassExamples(
                f"Class '{label}' has {len(members)} clips; at least 2 are needed to split"
            )
        n_train = min(max(int(math.floor(train_frac * len(members) + 0.5)), 1), len(members) - 1)
        chosen = make_rng(seed, 'split', label).permutation(len(members))[:n_train]
        train_ids.update(members[i] for i in chosen)

    train = TrainPartition(clips=tuple(c for c in clips if c.id in train_ids))
    test = TestPartition(clips=tuple(c for c in clips if c.id not in train_ids))
    logger.info("Split %d clips into %d train / %d test (seed %d)", len(clips), len(train), len(test), seed)
    return train, test


def partition_fingerprint(partition: Iterable[AudioClip]) -> str:
    """SHA-256 over ids, labels and sample bytes"""
    digest = hashlib.sha256()
    for clip in partition:
        digest.update(clip.id.encode('utf-8'))
        digest.update(str(clip.label).encode('utf-8'))
        digest.update(np.ascontiguousarray(clip.samples, dtype='<f8').tobytes())
    return digest.hexdigest()


class Confusion(BaseModel):
    """Counts with takeoff as the positive class"""

    tp: int = Field(0, ge=0)
    fp: int = Field(0, ge=0)
    tn: int = Field(0, ge=0)
    fn: int = Field(0, ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1 or not np.all(np.isin(arr, (0, 1))):
        raise InvalidRange(f"{name} must be a 1-D array of 0/1 labels")
    return arr.astype(np.int64)


def confusion(y_true, y_pred) -> Confusion:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{len(y_true)} truths vs {len(y_pred)} predictions")
    t = _binary(y_true, 'y_true')
    p = _binary(y_pred, 'y_pred')
    return Confusion(
        tp=int(np.sum((t == 1) & (p == 1))),
        fp=int(np.sum((t == 0) & (p == 1))),
        tn=int(np.sum((t == 0) & (p == 0))),
        fn=int(np.sum((t == 1) & (p == 0))),
    )


def basic_metrics(conf: Confusion) -> Dict[str, float]:
    """
    Accuracy, precision, recall, F1 and MCC

    Precision, recall and F1 are 0 when their denominator is 0; MCC is 0
    when any factor under its square root is 0.
    """
    tp, fp, tn, fn = conf.tp, conf.fp, conf.tn, conf.fn
    total = conf.total
    if total == 0:
        raise InvalidRange("Cannot compute metrics on an empty confusion matrix")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    factors = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(factors) if factors else 0.0
    return {
        'accuracy': (tp + tn) / total,
        'precision': precision,
        'recall': recall,
        'f1': f1,
        'mcc': mcc,
    }


def _ranking_inputs(y_true, scores) -> Tuple[np.ndarray, np.ndarray]:
    y = _binary(y_true, 'y_true')
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != y.shape:
        raise LengthMismatch(f"{len(y)} labels vs {len(s)} scores")
    return y, s


def auroc(y_true, scores) -> float:
    """
    Probability that a random positive outscores a random negative

    Ties count one half, which is the trapezoidal ROC area.
    """
    y, s = _ranking_inputs(y_true, scores)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == len(y):
        raise SingleClassTruth("AUROC needs both classes in y_true")
    return float(roc_auc_score(y, s))


def aupr(y_true, scores) -> float:
    """
    Step-wise area under the precision-recall curve

    Thresholds are the distinct scores in descending order; tied scores
    enter together. Area = sum over thresholds of (recall gain) * precision.
    """
    y, s = _ranking_inputs(y_true, scores)
    if int(y.sum()) == 0:
        raise NoPositives("AUPR needs at least one positive in y_true")
    return float(average_precision_score(y, s))


class MetricsReport(BaseModel):
    """Evaluation of one (model, pipeline, augmented) cell"""

    model: str
    pipeline: str
    augmented: bool
    accuracy: float
    precision: float
    recall: float
    f1: float
    mcc: float
    auroc: Optional[float] = None
    aupr: Optional[float] = None
    tp: int
    fp: int
    tn: int
    fn: int
    seed: int
    positive_class: str = POSITIVE_CLASS
    n_train: int = 0
    n_test: int = 0

    def to_row(self) -> Dict[str, object]:
        """Values keyed by REPORT_COLUMNS"""
        data = self.model_dump()
        row = {}
        for column in REPORT_COLUMNS:
            source = next((k for k, v in _CSV_NAMES.items() if v == column), column)
            row[column] = data[source]
        return row


def evaluate_predictions(
    y_true,
    proba: np.ndarray,
    model: str,
    pipeline: str,
    augmented: bool,
    seed: int,
    n_train: int = 0,
) -> MetricsReport:
    """Turn (p_landing, p_takeoff) rows into a MetricsReport"""
    y = _binary(y_true, 'y_true')
    proba = np.asarray(proba, dtype=np.float64)
    if len(proba) != len(y):
        raise LengthMismatch(f"{len(y)} labels vs {len(proba)} predictions")
    predicted = np.argmax(proba, axis=1)
    scores = proba[:, 1]
    conf = confusion(y, predicted)
    metrics = basic_metrics(conf)
    both = 0 < y.sum() < len(y)
    return MetricsReport(
        model=model,
        pipeline=pipeline,
        augmented=augmented,
        auroc=auroc(y, scores) if both else None,
        aupr=aupr(y, scores) if y.sum() > 0 else None,
        seed=seed,
        n_train=n_train,
        n_test=len(y),
        **metrics,
        **conf.model_dump(),
    )


class ExperimentRunner:
    """Runs split -> augment -> featurize -> train -> evaluate over a grid of cells"""

    def __init__(
        self,
        clips: Sequence[AudioClip],
        spectral_config: Optional[SpectralConfig] = None,
        denoise_config: Optional[DenoiseConfig] = None,
        augment_config: Optional[AugmentConfig] = None,
        hyper: Optional[ModelHyperparameters] = None,
        asr_provider: Optional[AsrProvider] = None,
        strict: bool = False,
        test_noise: float = 0.0,
        train_frac: float = 0.8,
    ):
        """
        Initialize runner

        Args:
            clips: Labeled corpus
            spectral_config: Spectral variant and feature reduction
            denoise_config: Denoising applied before both pipelines
            augment_config: Techniques used for augmented cells
            hyper: Model hyperparameters
            asr_provider: Transcript source for the textual pipeline
            strict: Fail on missing transcripts
            test_noise: Gaussian noise factor applied to test clips (0 disables)
            train_frac: Training fraction per class
        """
        if test_noise < 0:
            raise InvalidRange(f"test_noise must be >= 0, got {test_noise}")
        self.clips = list(clips)
        self.spectral_config = spectral_config or SpectralConfig()
        self.denoise_config = denoise_config or DenoiseConfig()
        self.augment_config = augment_config or AugmentConfig()
        self.hyper = hyper or ModelHyperparameters()
        self.asr_provider = asr_provider
        self.strict = strict
        self.test_noise = test_noise
        self.train_frac = train_frac
        self.test_fingerprints: Dict[int, str] = {}
        self.models: Dict[Tuple[str, str, bool, int], object] = {}

    def _processor(self) -> FeatureProcessor:
        return FeatureProcessor(
            spectral_config=self.spectral_config,
            denoise_config=self.denoise_config,
            asr_provider=self.asr_provider,
            strict=self.strict,
        )

    def _perturb_test(self, test: TestPartition, seed: int) -> TestPartition:
        if self.test_noise == 0:
            return test
        noisy = tuple(
            add_noise(to_mono(c), self.test_noise, make_rng(seed, 'test-noise', c.id)) for c in test
        )
        return TestPartition(clips=noisy)

    def _spectral_space(self) -> str:
        if self.spectral_config.traditional_features == 'flattened':
            return 'flattened_spectral'
        return 'pooled_spectral'

    def _features(self, processor, pipeline: str, train, test, tensor: bool):
        """(X_train, X_test, feature_space, extra_meta) for one pipeline"""
        if pipeline == 'textual':
            vocabulary = processor.fit_textual(train)
            return (
                processor.textual_matrix(train, vocabulary),
                processor.textual_matrix(test, vocabulary),
                'tfidf',
                {'tfidf': vocabulary.to_dict()},
            )
        meta = {'variant': self.spectral_config.variant}
        if tensor:
            return processor.spectrogram_tensor(train), processor.spectrogram_tensor(test), 'spectrogram_2d', meta
        return processor.spectral_matrix(train), processor.spectral_matrix(test), self._spectral_space(), meta

    def run_grid(
        self,
        models: Sequence[str],
        pipelines: Sequence[str],
        augment_modes: Sequence[bool] = (False,),
        seed: int = 42,
    ) -> List[MetricsReport]:
        """
        Evaluate every (model, pipeline, augmented) cell on one shared split

        Args:
            models: Model kinds; cnn only runs on the spectral pipeline
            pipelines: 'textual' and/or 'spectral'
            augment_modes: False for raw training clips, True for augmented
            seed: Run seed for split, augmentation and training

        Returns:
            Reports ordered by model, pipeline, then augmented flag
        """
        train, test = train_test_split(self.clips, self.train_frac, seed)
        test = self._perturb_test(test, seed)
        self.test_fingerprints[seed] = partition_fingerprint(test)
        augment_config = self.augment_config.model_copy(update={'seed': seed})
        processor = self._processor()

        train_sets = {}
        for augmented in augment_modes:
            train_sets[augmented] = augment_dataset(train, augment_config) if augmented else train

        cache = {}
        reports = []
        for kind in models:
            for pipeline in pipelines:
                if kind == 'cnn' and pipeline != 'spectral':
                    logger.warning("Skipping cnn on the %s pipeline (spectrograms only)", pipeline)
                    continue
                label = pipeline_label(pipeline, self.spectral_config.variant)
                for augmented in augment_modes:
                    train_set = train_sets[augmented]
                    key = (pipeline, augmented, kind == 'cnn')
                    if key not in cache:
                        cache[key] = self._features(processor, pipeline, train_set, test, kind == 'cnn')
                    X_train, X_test, space, meta = cache[key]

                    model = train_model(
                        kind, X_train, train_set.labels, space, self.hyper, seed,
                        extra_meta={'pipeline': label, 'augmented': augmented, **meta},
                    )
                    self.models[(kind, label, augmented, seed)] = model
                    report = evaluate_predictions(
                        test.labels, model.predict_proba(X_test), kind, label, augmented, seed,
                        n_train=len(train_set),
                    )
                    logger.info(
                        "%s / %s / aug=%s: acc %.3f f1 %.3f", kind, label, augmented, report.accuracy, report.f1
                    )
                    reports.append(report)
        return reports

    def run_repeats(
        self,
        models: Sequence[str],
        pipelines: Sequence[str],
        augment_modes: Sequence[bool] = (False,),
        seed: int = 42,
        repeats: int = 1,
    ) -> List[MetricsReport]:
        """run_grid over seeds seed, seed + 1, ..., seed + repeats - 1"""
        if repeats < 1:
            raise InvalidRange(f"repeats must be >= 1, got {repeats}")
        reports = []
        for offset in range(repeats):
            reports.extend(self.run_grid(models, pipelines, augment_modes, seed + offset))
        return reports


def reports_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    """Reports as a DataFrame with REPORT_COLUMNS"""
    return pd.DataFrame([r.to_row() for r in reports], columns=REPORT_COLUMNS)


def summarize_reports(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    """
    Mean and population standard deviation of every metric per cell

    Returns:
        One row per (model, pipeline, augmented) with <metric>_mean,
        <metric>_std and the repeat count
    """
    frame = pd.DataFrame([r.model_dump() for r in reports])
    frame[list(METRIC_NAMES)] = frame[list(METRIC_NAMES)].astype(np.float64)
    keys = ['model', 'pipeline', 'augmented']
    grouped = frame.groupby(keys, sort=False)[list(METRIC_NAMES)]
    means = grouped.mean().add_suffix('_mean')
    stds = grouped.std(ddof=0).add_suffix('_std')
    counts = grouped.size().rename('repeats')
    summary = pd.concat([means, stds, counts], axis=1).reset_index()
    ordered = keys + [f"{m}_{s}" for m in METRIC_NAMES for s in ('mean', 'std')] + ['repeats']
    return summary[ordered]


def ablation_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    """Mean accuracy without and with augmentation per (model, pipeline), plus the difference"""
    frame = pd.DataFrame([r.model_dump() for r in reports])
    table = frame.pivot_table(index=['model', 'pipeline'], columns='augmented', values='accuracy',
                              aggfunc='mean', sort=False)
    table = table.rename(columns={False: 'acc_aug_off', True: 'acc_aug_on'}).reset_index()
    table.columns.name = None
    if {'acc_aug_off', 'acc_aug_on'} <= set(table.columns):
        table['delta'] = table['acc_aug_on'] - table['acc_aug_off']
    return table


def reports_from_frame(frame: pd.DataFrame) -> List[MetricsReport]:
    """Rebuild MetricsReport rows from a report CSV (REPORT_COLUMNS)"""
    missing = [c for c in REPORT_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"Report is missing columns: {missing}")
    renames = {v: k for k, v in _CSV_NAMES.items()}
    reports = []
    for row in frame[REPORT_COLUMNS].to_dict(orient='records'):
        values = {renames.get(k, k): _native(v) for k, v in row.items()}
        values['augmented'] = str(values['augmented']).strip().lower() in ('true', '1')
        reports.append(MetricsReport(**values))
    return reports


def _native(value):
    if hasattr(value, 'item'):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    return value
