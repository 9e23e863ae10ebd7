"""codegloss command line: ingest, build-vocab, train, predict, evaluate, stats."""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from ai.models.decoder import BeamConfig
from ai.models.summarizer import CodeSummarizer
from ai.training.checkpoint import load_checkpoint
from ai.training.trainer import TrainConfig, TrainSplit, ValidationSplit, train
from core.corpus.pipeline import (CorpusFilterConfig, DatasetRecord, ingest, language_from_path,
                                  leakage_report, read_records, write_records)
from core.corpus.stats import length_histograms, plot_length_histograms
from core.text.codec import tokenize_comment
from core.text.dictionary import EnglishDictionary
from core.text.vocab import Vocabulary, build_vocabulary, build_word_counts
from utils.config_manager import ConfigManager
from utils.errors import CodeGlossError, ConfigError
from utils.logger import DEFAULT_FORMAT, setup_logging
from utils.metrics import comment_entropy, evaluate_predictions

logger = logging.getLogger(__name__)

SPLIT_FILES = {'train': 'train.jsonl', 'val': 'val.jsonl', 'test': 'test.jsonl'}
FILTER_REPORT_FILE = 'filter_report.json'


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog='codegloss', description='Summarize source code into one-sentence comments')
    parser.add_argument('--config', help='YAML or JSON file merged over the default settings')
    parser.add_argument('--preset', choices=['hu', 'muse'], help='experimental regime to apply')
    parser.add_argument('--log-level', help='DEBUG, INFO, WARNING, ERROR or CRITICAL')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND', parser_class=_ArgumentParser)
    sub.required = True

    p = sub.add_parser('ingest', help='filter, deduplicate and split code/comment records')
    p.add_argument('--in', dest='input', required=True, help='JSON-lines records')
    p.add_argument('--out', required=True, help='output directory')
    p.add_argument('--scheme', default='ratio', help="'ratio' or 'fixed-test:N'")
    p.add_argument('--seed', type=int, default=0)

    p = sub.add_parser('build-vocab', help='build the open output vocabulary from training comments')
    p.add_argument('--in', dest='input', required=True, help='records file or ingest output directory')
    p.add_argument('--out', required=True, help='vocabulary file to write')
    p.add_argument('--threshold', type=int)
    p.add_argument('--max-size', type=int)
    p.add_argument('--dictionary', help='English word list, one word per line')

    p = sub.add_parser('train', help='train a model and keep the best validated checkpoint')
    p.add_argument('--in', dest='input', required=True, help='ingest output directory')
    p.add_argument('--vocab', required=True)
    p.add_argument('--out', required=True, help='checkpoint directory')
    p.add_argument('--epochs', type=int)
    p.add_argument('--seed', type=int)

    p = sub.add_parser('predict', help='print the predicted comment for a code fragment')
    p.add_argument('--model', required=True, help='checkpoint directory')
    p.add_argument('--vocab')
    p.add_argument('--code', default='-', help="code file, or '-' for standard input")
    p.add_argument('--beam', type=int)
    p.add_argument('--max-len', type=int)

    p = sub.add_parser('evaluate', help='BLEU-4 and comment entropy of predictions')
    p.add_argument('--pred', help='predicted comments, one per line')
    p.add_argument('--ref', help='reference comments, one per line')
    p.add_argument('--model', help='checkpoint directory to predict with')
    p.add_argument('--vocab')
    p.add_argument('--in', dest='input', help='JSON-lines records to predict and score')
    p.add_argument('--mode', choices=['sentence', 'corpus'])
    p.add_argument('--beam', type=int)
    p.add_argument('--max-len', type=int)

    p = sub.add_parser('stats', help='corpus statistics')
    p.add_argument('--in', dest='input', required=True, help='records file or ingest output directory')
    p.add_argument('--leakage', action='store_true', help='report test records also present in training')
    p.add_argument('--plot-dir', help='write length histograms as PNG files here')
    return parser


def _print_json(data) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def _tag_language(record: DatasetRecord) -> DatasetRecord:
    if record.language != 'unknown' or not record.origin:
        return record
    return DatasetRecord(record.code, record.comment, language_from_path(record.origin), record.origin)


def _records_from(path: Path, split: str = 'train') -> List[DatasetRecord]:
    if path.is_dir():
        path = path / SPLIT_FILES[split]
    return read_records(path)


def _beam_config(config: ConfigManager, args) -> BeamConfig:
    section = config.get_section('beam')
    if args.beam is not None:
        section['width'] = args.beam
    if args.max_len is not None:
        section['max_length'] = args.max_len
    return BeamConfig.from_settings(section)


def _load_summarizer(args) -> CodeSummarizer:
    vocab = Vocabulary.load(args.vocab) if args.vocab else None
    checkpoint = load_checkpoint(args.model, vocab)
    if checkpoint.vocab is None:
        raise ConfigError(f"checkpoint {args.model} has no bundled vocabulary; pass --vocab")
    return CodeSummarizer(checkpoint.params, checkpoint.vocab)


def cmd_ingest(args, config: ConfigManager) -> int:
    records = [_tag_language(r) for r in read_records(args.input)]
    filter_cfg = CorpusFilterConfig.from_settings(config.get_section('corpus'))
    result = ingest(records, args.scheme, args.seed, filter_cfg)
    out = Path(args.out)
    for split, filename in SPLIT_FILES.items():
        write_records(out / filename, getattr(result.splits, split))
    report = result.report.to_dict()
    (out / FILTER_REPORT_FILE).write_text(json.dumps(report, indent=2, sort_keys=True), encoding='utf-8')
    _print_json({'filter_report': report,
                 'splits': {split: len(getattr(result.splits, split)) for split in SPLIT_FILES}})
    return 0


def cmd_build_vocab(args, config: ConfigManager) -> int:
    records = _records_from(Path(args.input))
    threshold = args.threshold if args.threshold is not None else config.get('vocab', 'threshold', 10)
    max_size = args.max_size if args.max_size is not None else config.get('vocab', 'max_size')
    dictionary = EnglishDictionary.load(args.dictionary or config.get('vocab', 'dictionary'))
    counts = build_word_counts(r.comment for r in records)
    vocab = build_vocabulary(counts, dictionary, threshold, max_size)
    vocab.save(args.out)
    _print_json({'elements': len(vocab), 'threshold': threshold, 'fingerprint': vocab.fingerprint})
    return 0


def cmd_train(args, config: ConfigManager) -> int:
    if args.epochs is not None:
        config.set('training', 'schedule', 'epochs')
        config.set('training', 'epochs', args.epochs)
    if args.seed is not None:
        config.set('training', 'seed', args.seed)
    cfg = TrainConfig.from_settings(config.get_section('training'), config.get_section('model'),
                                    config.get_section('vocab'))
    source = Path(args.input)
    vocab = Vocabulary.load(args.vocab)
    result = train(TrainSplit(_records_from(source, 'train')), ValidationSplit(_records_from(source, 'val')),
                   vocab, cfg, checkpoint_dir=args.out)
    best = result.best.manifest
    _print_json({'best_val_loss': best.val_loss, 'best_step': best.schedule['index'],
                 'steps': len(result.history), 'skipped': result.skipped, 'checkpoint': str(args.out)})
    return 0


def cmd_predict(args, config: ConfigManager) -> int:
    summarizer = _load_summarizer(args)
    if args.code == '-':
        code = sys.stdin.read()
    else:
        code = Path(args.code).read_text(encoding='utf-8')
    print(summarizer.predict(code, _beam_config(config, args)))
    return 0


def _read_lines(path: str) -> List[str]:
    return Path(path).read_text(encoding='utf-8').splitlines()


def cmd_evaluate(args, config: ConfigManager) -> int:
    mode = args.mode or config.get('evaluation', 'bleu_mode', 'sentence')
    workers = int(config.get('evaluation', 'workers', 1))
    languages: Optional[List[str]] = None
    if args.pred and args.ref:
        predictions = _read_lines(args.pred)
        references = _read_lines(args.ref)
    elif args.model and args.input:
        summarizer = _load_summarizer(args)
        beam = _beam_config(config, args)
        records = read_records(args.input)
        predictions = [summarizer.predict(r.code, beam) for r in records]
        references = [r.comment for r in records]
        languages = [r.language for r in records]
    else:
        raise ConfigError("evaluate needs either --pred and --ref, or --model and --in")
    report = evaluate_predictions([tokenize_comment(p) for p in predictions],
                                  [tokenize_comment(r) for r in references],
                                  languages, mode, workers)
    _print_json(report)
    return 0


def _entropies(records: Sequence[DatasetRecord]) -> Dict[str, float]:
    by_language: Dict[str, List[List[str]]] = {}
    for record in records:
        by_language.setdefault(record.language, []).append(tokenize_comment(record.comment))
    entropies = {}
    for language, comments in sorted(by_language.items()):
        if any(comments):
            entropies[language] = comment_entropy(comments).E
    return entropies


def cmd_stats(args, config: ConfigManager) -> int:
    source = Path(args.input)
    report: Dict = {}
    if source.is_dir():
        splits = {split: read_records(source / filename)
                  for split, filename in SPLIT_FILES.items() if (source / filename).exists()}
        records = [r for split in splits.values() for r in split]
        if (source / FILTER_REPORT_FILE).exists():
            report['filter_report'] = json.loads((source / FILTER_REPORT_FILE).read_text(encoding='utf-8'))
        report['splits'] = {split: len(rs) for split, rs in splits.items()}
    else:
        splits = {}
        records = read_records(source)
    records = [_tag_language(r) for r in records]

    report['records'] = len(records)
    report['lengths'] = length_histograms(records)
    report['entropy'] = _entropies(records)
    if args.leakage:
        if 'train' not in splits or 'test' not in splits:
            raise ConfigError("--leakage needs a directory holding train.jsonl and test.jsonl")
        report['leakage'] = leakage_report(splits['train'], splits['test']).to_dict()
    if args.plot_dir:
        report['plots'] = [str(p) for p in plot_length_histograms(records, args.plot_dir)]
    _print_json(report)
    return 0


COMMANDS = {
    'ingest': cmd_ingest,
    'build-vocab': cmd_build_vocab,
    'train': cmd_train,
    'predict': cmd_predict,
    'evaluate': cmd_evaluate,
    'stats': cmd_stats,
}


def _configure(args) -> ConfigManager:
    config = ConfigManager()
    config.reload()
    if args.config:
        config.load_file(args.config)
    if args.preset:
        config.apply_preset(args.preset)
    if not config.validate():
        raise ConfigError("invalid configuration")
    return config


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        config = _configure(args)
        logging_cfg = config.get_section('logging')
        setup_logging(level=args.log_level or logging_cfg.get('level') or 'INFO',
                      log_file=logging_cfg.get('file'),
                      fmt=logging_cfg.get('format') or DEFAULT_FORMAT,
                      max_size=int(logging_cfg.get('max_size') or 10 * 1024 * 1024),
                      backup_count=int(logging_cfg.get('backup_count') or 5))
    except (ConfigError, ValueError) as e:
        print(f"codegloss: configuration error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"codegloss: {e}", file=sys.stderr)
        return 1

    try:
        return COMMANDS[args.command](args, config)
    except ConfigError as e:
        logger.error(f"{args.command}: {e}")
        return 2
    except (OSError, CodeGlossError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly: {e}")
        return 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
