"""
Pilot Radio Call Classifier
Command-line entry point: datagen, featurize, augment, train, predict, evaluate, ablate, report
"""
import argparse
import logging
import os
import sys
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from core import (
    MODEL_KINDS,
    CorpusGenerator,
    ExperimentRunner,
    SynthSpec,
    TrainedModel,
    ablation_frame,
    reports_frame,
    summarize_reports,
    train_model,
    train_test_split,
)
from core.evaluator import evaluate_predictions, reports_from_frame
from processors import FeatureProcessor, pipeline_label
from processors.asr_processor import build_asr_provider
from processors.audio_processor import LABELS, TrainPartition, load_corpus, write_labels, write_wav
from processors.augmenter import TECHNIQUES, augment_dataset
from processors.spectral_processor import write_spectrogram
from processors.text_processor import TfIdfModel, fit_tfidf, transform_corpus
from utils import CorpusValidator, InputValidator, RadioClassError, ReportFormatter, setup_logging
from utils.config import RunConfig, env_seed, load_run_config
from utils.errors import ConfigError, CorpusIoError, MissingTranscript
from utils.validators import require

logger = logging.getLogger('radioclass')


def _split_list(values: Optional[List[str]]) -> Optional[List[str]]:
    if not values:
        return None
    out = []
    for value in values:
        out.extend(v.strip() for v in value.split(',') if v.strip())
    return out


def _overrides(args: argparse.Namespace) -> Dict:
    """Nested override dictionary holding only flags the user actually gave"""
    get = lambda name: getattr(args, name, None)
    models = _split_list(get('model'))
    if models:
        require(InputValidator.validate_models(models, list(MODEL_KINDS)))
    pipelines = _split_list(get('pipeline'))
    if pipelines:
        require(InputValidator.validate_pipelines(pipelines))
    if get('variant'):
        require(InputValidator.validate_variant(get('variant')))
    if get('asr'):
        require(InputValidator.validate_asr_provider(get('asr')))
    if get('features'):
        require(InputValidator.validate_traditional_features(get('features')))

    techniques = _split_list(get('techniques'))
    augment = {
        'seed': get('seed'),
        'enabled': {t: t in techniques for t in TECHNIQUES} if techniques else None,
        'stretch_factor': get('stretch'),
        'noise_factor': get('noise'),
        'max_shift_frac': get('shift'),
    }
    denoise = {
        'enabled': False if get('no_denoise') else None,
        'noise_frames': get('noise_frames'),
        'smooth_width': get('smooth_width'),
    }
    return {
        'corpus_dir': get('corpus'),
        'out_dir': get('out'),
        'models': models,
        'pipelines': pipelines,
        'variant': get('variant'),
        'traditional_features': get('features').lower() if get('features') else None,
        'seed': get('seed'),
        'repeats': get('repeats'),
        'test_noise': get('test_noise'),
        'strict': True if get('strict') else None,
        'asr_provider': get('asr'),
        'asr_endpoint': get('asr_endpoint'),
        'asr_timeout_ms': get('asr_timeout_ms'),
        'augment': augment,
        'denoise': denoise,
        'hyper': {
            'cnn_epochs': get('cnn_epochs'),
            'n_trees': get('n_trees'),
            'n_rounds': get('n_rounds'),
            'k': get('k'),
            'ensemble_members': _split_list(get('members')),
        },
    }


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = load_run_config(getattr(args, 'config', None), _overrides(args))
    cfg.augment = cfg.augment.model_copy(update={'seed': cfg.seed})
    return cfg


def _corpus(cfg: RunConfig, require_labels: bool = True):
    check = CorpusValidator.validate_corpus(cfg.corpus_dir, require_labels=require_labels)
    if not check['valid']:
        raise CorpusIoError(check['error'])
    return load_corpus(cfg.corpus_dir, require_labels=require_labels)


def _processor(cfg: RunConfig) -> FeatureProcessor:
    provider = build_asr_provider(cfg.asr_provider, cfg.corpus_dir, cfg.asr_endpoint, cfg.asr_timeout_ms)
    return FeatureProcessor(cfg.spectral, cfg.denoise, provider, strict=cfg.strict)


def _runner(cfg: RunConfig, clips) -> ExperimentRunner:
    provider = build_asr_provider(cfg.asr_provider, cfg.corpus_dir, cfg.asr_endpoint, cfg.asr_timeout_ms)
    return ExperimentRunner(
        clips,
        spectral_config=cfg.spectral,
        denoise_config=cfg.denoise,
        augment_config=cfg.augment,
        hyper=cfg.hyper,
        asr_provider=provider,
        strict=cfg.strict,
        test_noise=cfg.test_noise,
        train_frac=cfg.train_frac,
    )


def _ensure_dir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise CorpusIoError(f"Cannot create {path}: {e}") from e
    return path


def _banner(title: str, lines: Dict[str, object]):
    print(ReportFormatter.create_summary_box(title, ReportFormatter.format_counts(lines)))


def cmd_datagen(args: argparse.Namespace) -> int:
    spec = SynthSpec(
        n_clips=args.n,
        class_balance=args.balance,
        seed=args.seed if args.seed is not None else env_seed(),
        noise_level=args.noise_level,
    )
    result = CorpusGenerator(spec).generate_corpus(args.out)
    _banner('Synthetic corpus', {
        'directory': result['out_dir'],
        'clips': result['n_clips'],
        **result['counts'],
        'seed': result['seed'],
    })
    return 0


def cmd_featurize(args: argparse.Namespace) -> int:
    cfg = _config(args)
    clips = _corpus(cfg, require_labels=False)
    processor = _processor(cfg)
    counts: Dict[str, object] = {'clips': len(clips), 'seed': cfg.seed}

    if 'spectral' in cfg.pipelines:
        directory = _ensure_dir(os.path.join(cfg.out_dir, 'spectral'))
        for clip in clips:
            write_spectrogram(processor.spectrogram(clip), os.path.join(directory, f"{clip.id}.mels"))
        counts['spectrograms'] = len(clips)

    if 'textual' in cfg.pipelines:
        outcomes = [processor.process_clip(clip, 'textual') for clip in clips]
        docs = [o['features'] for o in outcomes if o['success']]
        missing = [o['clip_id'] for o in outcomes if not o['success']]
        for clip_id in missing:
            logger.warning("No transcript for clip '%s'", clip_id)
        if missing and cfg.strict:
            raise MissingTranscript(missing[0])

        directory = _ensure_dir(os.path.join(cfg.out_dir, 'textual'))
        vocabulary = fit_tfidf(docs)
        path = os.path.join(directory, 'tfidf.json')
        try:
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                f.write(vocabulary.to_json() + '\n')
        except OSError as e:
            raise CorpusIoError(f"Cannot write {path}: {e}") from e
        matrix = transform_corpus(docs, vocabulary)
        frame = pd.DataFrame(matrix, columns=vocabulary.terms)
        frame.insert(0, 'id', [d.clip_id for d in docs])
        ReportFormatter.write_csv(frame, os.path.join(directory, 'vectors.csv'))
        counts['tfidf vectors'] = len(docs)
        counts['vocabulary'] = vocabulary.dim
        counts['missing transcripts'] = len(missing)
        if missing:
            print(f"Missing transcripts: {ReportFormatter.format_list(missing)}")

    _banner('Features', counts)
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    cfg = _config(args)
    clips = _corpus(cfg)
    train, _ = train_test_split(clips, cfg.train_frac, cfg.seed)
    augmented = augment_dataset(train, cfg.augment)

    _ensure_dir(cfg.out_dir)
    labels = {}
    for clip in augmented:
        write_wav(clip, os.path.join(cfg.out_dir, f"{clip.id}.wav"))
        labels[clip.id] = clip.label
        source = os.path.join(cfg.corpus_dir, f"{clip.transcript_id}.txt")
        if not os.path.exists(source):
            continue
        target = os.path.join(cfg.out_dir, f"{clip.id}.txt")
        try:
            with open(source, 'r', encoding='utf-8') as f:
                text = f.read()
            with open(target, 'w', encoding='utf-8', newline='\n') as f:
                f.write(text)
        except OSError as e:
            raise CorpusIoError(f"Cannot copy transcript to {target}: {e}") from e
    write_labels(labels, cfg.out_dir)
    _banner('Augmented training set', {
        'training clips': len(train),
        'written clips': len(augmented),
        'techniques': ', '.join(cfg.augment.active) or 'none',
        'seed': cfg.seed,
    })
    return 0


def _featurize_for(model_kind: str, pipeline: str, processor: FeatureProcessor, clips, vocabulary=None):
    if pipeline == 'textual':
        return processor.textual_matrix(clips, vocabulary)
    if model_kind == 'cnn':
        return processor.spectrogram_tensor(clips)
    return processor.spectral_matrix(clips)


def _feature_space(model_kind: str, pipeline: str, cfg: RunConfig) -> str:
    if pipeline == 'textual':
        return 'tfidf'
    if model_kind == 'cnn':
        return 'spectrogram_2d'
    return 'flattened_spectral' if cfg.traditional_features == 'flattened' else 'pooled_spectral'


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if len(cfg.models) != 1 or len(cfg.pipelines) != 1:
        raise ConfigError("train needs exactly one --model and one --pipeline")
    kind, pipeline = cfg.models[0], cfg.pipelines[0]
    if kind == 'cnn' and pipeline != 'spectral':
        raise ConfigError("cnn trains on the spectral pipeline only")

    clips = _corpus(cfg)
    if args.all:
        train = TrainPartition(clips=tuple(clips))
    else:
        train, _ = train_test_split(clips, cfg.train_frac, cfg.seed)
    if args.augment:
        train = augment_dataset(train, cfg.augment)
    train = list(train)
    processor = _processor(cfg)

    meta = {'pipeline': pipeline_label(pipeline, cfg.variant), 'augmented': bool(args.augment)}
    vocabulary = None
    if pipeline == 'textual':
        vocabulary = processor.fit_textual(train)
        meta['tfidf'] = vocabulary.to_dict()
    else:
        meta['variant'] = cfg.variant
        meta['denoise'] = cfg.denoise.enabled

    X = _featurize_for(kind, pipeline, processor, train, vocabulary)
    y = np.array([c.label_index for c in train])
    model = train_model(kind, X, y, _feature_space(kind, pipeline, cfg), cfg.hyper, cfg.seed, meta)

    path = args.model_file or os.path.join(cfg.out_dir, f"{kind}_{pipeline}.json")
    model.save(path)
    _banner('Trained model', {
        'kind': kind,
        'pipeline': meta['pipeline'],
        'training clips': len(train),
        'file': path,
        'seed': cfg.seed,
    })
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    model = TrainedModel.load(args.model_file)
    meta = model.train_meta
    cfg = _config(args)
    update = {}
    if meta.get('variant'):
        update['variant'] = meta['variant']
    if model.feature_space == 'flattened_spectral':
        update['traditional_features'] = 'flattened'
    elif model.feature_space == 'pooled_spectral':
        update['traditional_features'] = 'pooled'
    if 'denoise' in meta:
        update['denoise'] = cfg.denoise.model_copy(update={'enabled': bool(meta['denoise'])})
    cfg = cfg.model_copy(update=update)

    clips = _corpus(cfg, require_labels=False)
    processor = _processor(cfg)
    if model.feature_space == 'tfidf':
        if 'tfidf' not in meta:
            raise ConfigError("Textual model file has no stored TF-IDF vocabulary")
        X = processor.textual_matrix(clips, TfIdfModel.from_dict(meta['tfidf']))
    elif model.feature_space == 'spectrogram_2d':
        X = processor.spectrogram_tensor(clips)
    else:
        X = processor.spectral_matrix(clips)

    proba = model.predict_proba(X)
    predicted = np.argmax(proba, axis=1)
    frame = pd.DataFrame({
        'id': [c.id for c in clips],
        'p_landing': proba[:, 0],
        'p_takeoff': proba[:, 1],
        'predicted': [LABELS[i] for i in predicted],
        'label': [c.label or '' for c in clips],
    })
    path = args.predictions or os.path.join(cfg.out_dir, 'predictions.csv')
    ReportFormatter.write_csv(frame, path)

    lines = {'clips': len(clips), 'kind': model.kind, 'predictions': path}
    if all(c.label is not None for c in clips):
        report = evaluate_predictions(
            np.array([c.label_index for c in clips]), proba, model.kind,
            meta.get('pipeline', model.feature_space), bool(meta.get('augmented', False)),
            int(meta.get('seed', cfg.seed)),
        )
        lines['accuracy'] = f"{report.accuracy:.4f}"
        lines['f1'] = f"{report.f1:.4f}"
    _banner('Predictions', lines)
    return 0


def _emit_reports(reports, out_dir: str, name: str, repeats: int):
    frame = reports_frame(reports)
    path = ReportFormatter.write_csv(frame, os.path.join(out_dir, f"{name}.csv"))
    print(ReportFormatter.format_table(frame.drop(columns=['tp', 'fp', 'tn', 'fn'])))
    if repeats > 1:
        summary = summarize_reports(reports)
        ReportFormatter.write_csv(summary, os.path.join(out_dir, 'summary.csv'))
        print(ReportFormatter.format_table(summary[['model', 'pipeline', 'augmented', 'accuracy_mean', 'accuracy_std', 'f1_mean', 'mcc_mean']]))
    return path


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    clips = _corpus(cfg)
    runner = _runner(cfg, clips)
    modes = (True,) if args.augment else (False,)
    reports = runner.run_repeats(cfg.models, cfg.pipelines, modes, cfg.seed, cfg.repeats)
    path = _emit_reports(reports, cfg.out_dir, 'report', cfg.repeats)
    _banner('Evaluation', {'cells': len(reports), 'report': path, 'seed': cfg.seed})
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    clips = _corpus(cfg)
    runner = _runner(cfg, clips)
    reports = runner.run_repeats(cfg.models, cfg.pipelines, (False, True), cfg.seed, cfg.repeats)
    path = _emit_reports(reports, cfg.out_dir, 'ablation', cfg.repeats)
    comparison = ablation_frame(reports)
    ReportFormatter.write_csv(comparison, os.path.join(cfg.out_dir, 'ablation_summary.csv'))
    print(ReportFormatter.format_table(comparison))
    _banner('Augmentation ablation', {
        'cells': len(reports),
        'report': path,
        'test noise': cfg.test_noise,
        'repeats': cfg.repeats,
        'seed': cfg.seed,
    })
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    try:
        frame = pd.read_csv(args.reports)
    except (OSError, ValueError) as e:
        raise CorpusIoError(f"Cannot read report {args.reports}: {e}") from e
    reports = reports_from_frame(frame)
    print(ReportFormatter.format_table(reports_frame(reports).drop(columns=['tp', 'fp', 'tn', 'fn'])))
    out_dir = args.out or os.path.dirname(args.reports) or '.'
    written = {}
    summary = summarize_reports(reports)
    written['summary'] = ReportFormatter.write_csv(summary, os.path.join(out_dir, 'summary.csv'))
    if args.plot_data:
        for name, table in ReportFormatter.plot_data(reports_frame(reports)).items():
            written[name] = ReportFormatter.write_csv(table, os.path.join(out_dir, f"{name}.csv"))
    _banner('Report', {'rows': len(reports), **written})
    return 0


def _common(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help='JSON run configuration; flags override it')
    parser.add_argument('--seed', type=int, help='Run seed (default 42 or RADIOCLASS_SEED)')
    parser.add_argument('--out', help='Output directory')


def _corpus_args(parser: argparse.ArgumentParser):
    parser.add_argument('--corpus', help='Corpus directory (<id>.wav, <id>.txt, labels.csv)')
    parser.add_argument('--pipeline', action='append', help='textual and/or spectral (repeatable or comma list)')
    parser.add_argument('--variant', help='Spectral variant: mel or log-mel')
    parser.add_argument('--features', '--spectral-traditional-features', dest='features',
                        help='Spectral input for traditional models: pooled or flattened')
    parser.add_argument('--no-denoise', action='store_true', help='Skip spectral subtraction')
    parser.add_argument('--noise-frames', type=int, help='Leading frames used for the noise profile')
    parser.add_argument('--smooth-width', type=int, help='Odd magnitude smoothing width in frames')
    parser.add_argument('--asr', help='Transcript provider: sidecar, http or fixture')
    parser.add_argument('--asr-endpoint', help='HTTP ASR URL (default RADIOCLASS_ASR_ENDPOINT)')
    parser.add_argument('--asr-timeout-ms', type=int, help='HTTP ASR timeout in milliseconds')
    parser.add_argument('--strict', action='store_true', help='Fail on missing transcripts')


def _model_args(parser: argparse.ArgumentParser):
    parser.add_argument('--model', action='append', help=f"Model kind(s): {', '.join(MODEL_KINDS)}")
    parser.add_argument('--members', action='append', help='Ensemble members (comma list)')
    parser.add_argument('--cnn-epochs', type=int, help='CNN training epochs')
    parser.add_argument('--n-trees', type=int, help='Random forest size')
    parser.add_argument('--n-rounds', type=int, help='Gradient boosting rounds')
    parser.add_argument('--k', type=int, help='Neighbours for k-NN')
    _augment_args(parser)


def _augment_args(parser: argparse.ArgumentParser):
    parser.add_argument('--techniques', action='append', help=f"Augmentations: {', '.join(TECHNIQUES)}")
    parser.add_argument('--stretch', type=float, help='Time-stretch speed factor (default 1.1)')
    parser.add_argument('--noise', type=float, help='Additive noise factor (default 0.005)')
    parser.add_argument('--shift', type=float, help='Maximum shift as a fraction of the clip (default 0.10)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='radioclass', description='Classify pilot radio calls as landing or takeoff')
    parser.add_argument('--log-level', help='DEBUG, INFO, WARNING (default RADIOCLASS_LOG_LEVEL or INFO)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('datagen', help='Generate a synthetic labeled corpus')
    p.add_argument('--n', type=int, default=200, help='Number of clips')
    p.add_argument('--balance', type=float, default=0.5, help='Fraction of landing clips')
    p.add_argument('--noise-level', type=float, default=0.01, help='Pink noise RMS')
    p.add_argument('--seed', type=int, help="Generator seed (default 42 or RADIOCLASS_SEED)")
    p.add_argument('--out', required=True, help='Output corpus directory')
    p.set_defaults(handler=cmd_datagen)

    p = sub.add_parser('featurize', help='Write spectrogram and TF-IDF feature caches')
    _common(p)
    _corpus_args(p)
    p.set_defaults(handler=cmd_featurize)

    p = sub.add_parser('augment', help='Write the augmented training split as WAV files')
    _common(p)
    _corpus_args(p)
    _augment_args(p)
    p.set_defaults(handler=cmd_augment)

    p = sub.add_parser('train', help='Train one model and save it as JSON')
    _common(p)
    _corpus_args(p)
    _model_args(p)
    p.add_argument('--augment', action='store_true', help='Train on the augmented training split')
    p.add_argument('--all', action='store_true', help='Train on the whole corpus instead of the 80%% split')
    p.add_argument('--model-file', help='Output model path')
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser('predict', help='Score a corpus with a saved model')
    _common(p)
    _corpus_args(p)
    p.add_argument('--model-file', required=True, help='Saved model JSON')
    p.add_argument('--predictions', help='Output CSV path')
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser('evaluate', help='Evaluate a model x pipeline grid on a held-out split')
    _common(p)
    _corpus_args(p)
    _model_args(p)
    p.add_argument('--augment', action='store_true', help='Augment the training split')
    p.add_argument('--repeats', type=int, help='Consecutive seeds to average over')
    p.add_argument('--test-noise', type=float, help='Gaussian noise factor added to test clips')
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser('ablate', help='Paired runs without and with augmentation')
    _common(p)
    _corpus_args(p)
    _model_args(p)
    p.add_argument('--repeats', type=int, help='Consecutive seeds to average over')
    p.add_argument('--test-noise', type=float, help='Gaussian noise factor added to test clips')
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser('report', help='Summarize a report CSV and export plot data')
    p.add_argument('--reports', required=True, help='report.csv or ablation.csv')
    p.add_argument('--out', help='Output directory (default: next to the report)')
    p.add_argument('--plot-data', action='store_true', help='Write f1_mcc.csv and auroc_aupr.csv')
    p.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except RadioClassError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
