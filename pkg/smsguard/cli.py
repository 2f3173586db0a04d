"""
Command-line interface for smsguard.

Usage:
    smsguard gen-corpus -o data/                      # synthetic corpus, domains, streams
    smsguard train-message data/corpus.jsonl -o m.bin # MELA message model
    smsguard classify new.jsonl --model m.bin         # label + score per message
    smsguard train-sender data/streams.jsonl -o s.bin # MPA sender model
    cat live.jsonl | smsguard score-senders --model s.bin
    smsguard evaluate data/corpus.jsonl --features ngram --normalize on
    smsguard replay data/replay.jsonl --model m.bin --bucket 1w -o series.csv

Exit codes: 0 success, 1 usage or configuration, 2 data error,
3 model or schema mismatch.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from ._version import __version__, get_display_version
from .errors import SmsGuardError

log = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; 2 is the data-error code here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class _ShortNameFormatter(logging.Formatter):
    def format(self, record):
        record.short = record.name.rsplit(".", 1)[-1]
        return super().format(record)


def _setup_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_ShortNameFormatter("smsguard: %(short)s: %(message)s"))
    root = logging.getLogger("smsguard")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def _on_off(value):
    v = value.lower()
    if v not in ("on", "off"):
        raise argparse.ArgumentTypeError(f"expected on or off, got '{value}'")
    return v == "on"


def _positive_int(value):
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{value}'")
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _sizes(value):
    try:
        sizes = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{value}'")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("tree counts must be >= 1")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser."""
    p = _Parser(
        prog="smsguard",
        description="Short-text spam and abusive-sender detection.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "examples:\n"
            "  smsguard gen-corpus -o data/\n"
            "  smsguard evaluate data/corpus.jsonl --features mela --k 10\n"
            "  smsguard train-message data/corpus.jsonl -o models/message.bin\n"
            "  smsguard classify inbox.jsonl --model models/message.bin --costs 5,1\n"
            "  smsguard score-senders --model models/sender.bin < live.jsonl\n"
            "\n"
            "exit codes: 0 ok, 1 usage/config, 2 data error, 3 model/schema mismatch\n"
        ),
    )
    p.add_argument("--config", type=Path, metavar="PATH",
                   help="config file (default: $SMSGUARD_HOME/config.toml)")
    p.add_argument("--seed", type=int, metavar="N", help="override [general] seed")
    p.add_argument("-v", "--verbose", action="count", default=0,
                   help="more log output (-v progress, -vv detail)")
    p.add_argument("-q", "--quiet", action="store_true", help="errors only")
    p.add_argument("--strict", action="store_true",
                   help="treat skipped records and late messages as errors")
    p.add_argument("--print-config-fingerprint", action="store_true",
                   help="print the effective config fingerprint and exit")
    p.add_argument("--version", "-V", action="version",
                   version=f"smsguard {get_display_version()} ({__version__})")

    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    def labels_arg(sp):
        sp.add_argument("--labels", type=Path, metavar="TSV",
                        help="label sidecar (default: <corpus>.labels.tsv)")

    def out_arg(sp, help_text="output file (default: stdout)"):
        sp.add_argument("-o", "--output", type=Path, metavar="PATH", help=help_text)

    # corpus preparation
    sp = sub.add_parser("gen-corpus", help="write a synthetic labeled corpus")
    sp.add_argument("genconfig", nargs="?", type=Path, help="generator TOML (default: bundled)")
    sp.add_argument("-o", "--out-dir", type=Path, default=Path("."), metavar="DIR")
    sp.add_argument("--n-spam", type=int, metavar="N")
    sp.add_argument("--n-ham", type=int, metavar="N")
    sp.add_argument("--replay", action="store_true", help="also write the multi-week replay stream")
    sp.add_argument("--weeks", type=_positive_int, default=22)
    sp.add_argument("--novel-week", type=int, default=12, metavar="N",
                    help="week of the novel campaign; negative disables it")

    sp = sub.add_parser("import-corpus", help="convert external text to corpus JSONL")
    sp.add_argument("source", type=Path)
    sp.add_argument("--format", choices=("sms-collection", "lines", "csv"), default="sms-collection")
    sp.add_argument("--label", choices=("ham", "spam"),
                    help="label for --format lines, or csv without --label-column")
    sp.add_argument("--clean-social", action="store_true",
                    help="strip hashtags, mentions and RT markers")
    sp.add_argument("--prefix", default="line", help="id prefix when the input has no ids")
    sp.add_argument("--text-column", default="text", metavar="COL",
                    help="csv: column name or 0-based index of the text (default: text)")
    sp.add_argument("--label-column", metavar="COL", help="csv: column holding the label")
    sp.add_argument("--spam-values", metavar="V1,V2",
                    help="csv: label values meaning spam, all others ham (default: ham/spam or 0/1)")
    sp.add_argument("--id-column", metavar="COL", help="csv: column holding message ids")
    sp.add_argument("--time-column", metavar="COL",
                    help="csv: column holding epoch seconds or ISO 8601 times")
    sp.add_argument("--sender-column", metavar="COL", help="csv: column holding the author")
    sp.add_argument("--delimiter", default=",", metavar="CHAR", help="csv: field delimiter")
    sp.add_argument("--no-header", action="store_true", help="csv: no header row; columns are indices")
    sp.add_argument("-o", "--output", type=Path, required=True, metavar="CORPUS")

    # clusters
    sp = sub.add_parser("mine-clusters", help="propose substring clusters for review")
    sp.add_argument("corpus", type=Path)
    labels_arg(sp)
    sp.add_argument("--top-k", type=_positive_int)
    sp.add_argument("--min-len", type=int)
    sp.add_argument("--k", type=_positive_int, help="number of clusters (default: [cluster] count)")
    sp.add_argument("--alpha", type=float, help="n-gram vs co-occurrence weight")
    out_arg(sp, "proposal file (default: stdout)")

    sp = sub.add_parser("validate-clusters", help="check a cluster set, optionally after pruning")
    sp.add_argument("clusters", type=Path)
    sp.add_argument("--pruning", type=Path, metavar="PATH", help="reviewer's pruning file")
    sp.add_argument("--count", type=_positive_int, help="expected clusters (default: [cluster] count)")
    out_arg(sp, "write the resulting cluster set here")

    # training
    sp = sub.add_parser("train-domain", help="train the domain classifier")
    sp.add_argument("domains", type=Path, help="domain,label CSV")
    out_arg(sp, "model file (default: $SMSGUARD_HOME/models/domain.bin)")

    sp = sub.add_parser("train-message", help="train a message model")
    sp.add_argument("corpus", type=Path)
    labels_arg(sp)
    sp.add_argument("--features", choices=("mela", "ngram", "sgram"), default="mela")
    sp.add_argument("--normalize", type=_on_off, metavar="on|off")
    sp.add_argument("--domain-model", type=Path, metavar="PATH",
                    help="pre-trained domain classifier (default: fit from the corpus URLs)")
    out_arg(sp, "model file (default: $SMSGUARD_HOME/models/message.bin)")

    sp = sub.add_parser("train-sender", help="train an MPA sender model")
    sp.add_argument("stream", type=Path)
    labels_arg(sp)
    sp.add_argument("--domain-model", type=Path, metavar="PATH")
    out_arg(sp, "model file (default: $SMSGUARD_HOME/models/sender.bin)")

    sp = sub.add_parser("tree-sweep", help="out-of-bag accuracy for increasing tree counts")
    sp.add_argument("corpus", type=Path)
    labels_arg(sp)
    sp.add_argument("--features", choices=("mela", "ngram", "sgram"), default="mela")
    sp.add_argument("--normalize", type=_on_off, metavar="on|off")
    sp.add_argument("--sizes", type=_sizes, default=[10, 100, 500], metavar="N,N,...")

    # scoring
    sp = sub.add_parser("classify", help="label messages with a message model")
    sp.add_argument("corpus", type=Path, help="corpus JSONL, or - for stdin")
    sp.add_argument("--model", type=Path, required=True)
    sp.add_argument("--costs", metavar="FP,FN", help="misclassification costs (default: [costs])")
    out_arg(sp)

    sp = sub.add_parser("score-senders", help="stream sender verdicts as windows fill")
    sp.add_argument("stream", nargs="?", type=Path, default=Path("-"),
                    help="stream JSONL (default: stdin)")
    sp.add_argument("--model", type=Path, required=True)
    sp.add_argument("--costs", metavar="FP,FN")
    sp.add_argument("--shards", type=_positive_int, default=1, help="sender-hash shards")
    out_arg(sp)

    # evaluation
    sp = sub.add_parser("evaluate", help="k-fold cross-validation")
    sp.add_argument("corpus", type=Path,
                    help="corpus JSONL; a domain,label CSV for --features domain; a stream for mpa")
    labels_arg(sp)
    sp.add_argument("--features", choices=("mela", "ngram", "sgram", "domain", "mpa"), default="mela")
    sp.add_argument("--normalize", type=_on_off, metavar="on|off")
    sp.add_argument("--k", type=int, help="folds (default: [eval] k)")
    sp.add_argument("--n-jobs", type=_positive_int, help="parallel folds (default: [eval] n_jobs)")
    sp.add_argument("--costs", metavar="FP,FN")
    sp.add_argument("--records", action="store_true", help="one metric per line instead of a table")
    out_arg(sp)

    sp = sub.add_parser("replay", help="bucketed evaluation of a frozen model over time")
    sp.add_argument("stream", type=Path)
    labels_arg(sp)
    sp.add_argument("--model", type=Path, required=True)
    sp.add_argument("--bucket", default=None, help="bucket length, e.g. 1w, 3d (default: [eval] bucket_days)")
    sp.add_argument("--drift-delta", type=float, help="default: [eval] drift_delta")
    sp.add_argument("--start", type=float, metavar="TS", help="first bucket start (default: first message)")
    sp.add_argument("--costs", metavar="FP,FN")
    sp.add_argument("--records", action="store_true", help="metric records instead of CSV")
    out_arg(sp, "series CSV (default: stdout)")

    # features
    sp = sub.add_parser("extract", help="feature matrix as CSV")
    sp.add_argument("input", type=Path, help="corpus JSONL, domain CSV (domain) or stream (mpa)")
    sp.add_argument("--what", choices=("mela", "domain", "mpa"), default="mela")
    sp.add_argument("--domain-model", type=Path, metavar="PATH")
    out_arg(sp)

    sp = sub.add_parser("schema", help="feature schema (index<TAB>name)")
    sp.add_argument("--what", choices=("mela", "domain", "mpa"), default="mela")
    out_arg(sp)

    sp = sub.add_parser("dump-model", help="lossless text dump of a model file")
    sp.add_argument("model", type=Path)
    out_arg(sp)

    sub.add_parser("config", help="show the effective configuration")

    return p


def main(argv=None):
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose, args.quiet)

    try:
        config = _load_config(args)
        if args.print_config_fingerprint:
            print(config.fingerprint())
            return
        if not args.command:
            parser.print_usage(sys.stderr)
            sys.exit(1)
        handler = _COMMANDS[args.command]
        handler(args, config)
    except SmsGuardError as e:
        print(f"smsguard: {e}", file=sys.stderr)
        sys.exit(e.exit_code)
    except BrokenPipeError:
        sys.stderr.close()


# ── Helpers ──────────────────────────────────────────────────────────


def _load_config(args):
    from .config import load_config
    config = load_config(args.config)
    return config.with_overrides(general_seed=args.seed)


def _emit(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(path).write_text(text, encoding="utf-8")


def _say(args, message: str) -> None:
    if not args.quiet:
        print(f"smsguard: {message}", file=sys.stderr)


def _model_path(args, name: str) -> Path:
    if args.output is not None:
        return args.output
    from ._paths import get_model_dir
    model_dir = get_model_dir()
    model_dir.mkdir(parents=True, exist_ok=True)
    return model_dir / name


def _costs(args, config):
    from .model import CostMatrix
    return CostMatrix.parse(args.costs) if args.costs else config.costs()


def _load_domain_forest(path):
    if path is None:
        return None
    from .mela import DOMAIN_SCHEMA
    from .model import load_forest
    return load_forest(path, DOMAIN_SCHEMA)


def _window_params(config, featurize) -> dict:
    from .mpa import DAY
    return dict(
        min_messages=config.mpa_min_messages,
        span_seconds=config.mpa_window_days * DAY,
        emit_stride=config.mpa_emit_stride,
        skew_seconds=config.mpa_skew_seconds,
        featurize=featurize,
    )


def _labeled_windows(path, args, config, resources, domain_forest=None):
    """Read a labeled stream and return its windows with sender labels."""
    from .messages import read_labeled, sender_labels
    from .mpa import windows_from_stream
    from .pipeline import MelaFeaturizer

    items = read_labeled(path, args.labels, strict=args.strict, routing=True)
    by_sender = sender_labels(items)
    featurize = MelaFeaturizer(resources, domain_forest, normalize=config.normalize_mela)
    windows = windows_from_stream((lm.message for lm in items), **_window_params(config, featurize))
    log.info("%d messages from %d senders gave %d windows", len(items), len(by_sender), len(windows))
    return windows, [by_sender[w.sender] for w in windows]


# ── Commands ─────────────────────────────────────────────────────────


def _cmd_config(args, config):
    """Show effective configuration."""
    from .config import format_config
    print(format_config(config, args.config))


def _cmd_gen_corpus(args, config):
    from .messages import write_domains, write_labeled
    from .resources import resources_for
    from .simgen import gen_domains, gen_messages, gen_replay_stream, gen_sender_streams, load_genconfig

    gen = load_genconfig(args.genconfig).with_counts(args.n_spam, args.n_ham, args.seed)
    resources = resources_for(config)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    corpus = gen_messages(gen, resources)
    write_labeled(corpus, out / "corpus.jsonl")
    with open(out / "corpus.transforms.tsv", "w", encoding="utf-8", newline="\n") as f:
        for lm in corpus:
            f.write(f"{lm.message.id}\t{lm.campaign or '-'}\t{','.join(lm.transforms) or '-'}\n")
    _say(args, f"wrote {len(corpus)} messages to {out / 'corpus.jsonl'}")

    domains = gen_domains(gen, resources)
    write_domains(domains, out / "domains.csv")
    _say(args, f"wrote {len(domains)} domains to {out / 'domains.csv'}")

    stream = gen_sender_streams(gen, resources)
    write_labeled(stream, out / "streams.jsonl")
    _say(args, f"wrote {len(stream)} stream messages to {out / 'streams.jsonl'}")

    if args.replay:
        novel_week = args.novel_week if args.novel_week >= 0 else None
        replay = gen_replay_stream(gen, args.weeks, novel_week, resources)
        write_labeled(replay, out / "replay.jsonl")
        _say(args, f"wrote {len(replay)} replay messages to {out / 'replay.jsonl'}")


def _cmd_import_corpus(args, config):
    from .errors import ConfigError
    from .messages import (
        parse_label, read_csv_corpus, read_sms_collection, read_text_lines, write_labeled,
    )

    if args.format == "sms-collection":
        items = read_sms_collection(args.source)
        if args.clean_social:
            from dataclasses import replace
            from .messages import clean_social_text
            items = [replace(lm, message=replace(lm.message, text=clean_social_text(lm.message.text)))
                     for lm in items]
    elif args.format == "csv":
        if (args.label_column is None) == (args.label is None):
            raise ConfigError("--format csv needs exactly one of --label-column or --label")
        if len(args.delimiter) != 1:
            raise ConfigError(f"--delimiter must be one character, got {args.delimiter!r}")
        spam_values = args.spam_values.split(",") if args.spam_values else None
        items = read_csv_corpus(
            args.source,
            text_column=args.text_column,
            label_column=args.label_column,
            label=parse_label(args.label) if args.label else None,
            id_column=args.id_column,
            time_column=args.time_column,
            sender_column=args.sender_column,
            spam_values=spam_values,
            clean_social=args.clean_social,
            prefix=args.prefix,
            header=not args.no_header,
            delimiter=args.delimiter,
        )
    else:
        if args.label is None:
            raise ConfigError("--format lines needs --label ham|spam")
        items = read_text_lines(args.source, parse_label(args.label), args.clean_social, args.prefix)
    sidecar = write_labeled(items, args.output)
    _say(args, f"wrote {len(items)} messages to {args.output} (labels in {sidecar})")


def _cmd_mine_clusters(args, config):
    from .cluster import cluster_candidates, cooccurrence_matrix, format_proposals, mine_substrings
    from .messages import default_labels_path, read_labeled, read_messages
    from .model import Label
    from .resources import resources_for

    if args.labels is not None or default_labels_path(args.corpus).is_file():
        texts = [lm.message.text for lm in read_labeled(args.corpus, args.labels, strict=args.strict)
                 if lm.label is Label.SPAM]
        source = "spam messages"
    else:
        texts = [m.text for m in read_messages(args.corpus, strict=args.strict)]
        source = "all messages (no labels found)"
    log.info("mining %s: %d texts", source, len(texts))

    resources = resources_for(config)
    top_k = args.top_k or config.cluster_top_k
    min_len = args.min_len if args.min_len is not None else config.cluster_min_len
    k = args.k or config.cluster_count
    alpha = args.alpha if args.alpha is not None else config.cluster_alpha

    mined = mine_substrings(texts, resources.stopwords, top_k, min_len)
    cooc = cooccurrence_matrix(texts, [s for s, _ in mined])
    proposals = cluster_candidates(mined, cooc, k, alpha)
    meta = {"source": f"{args.corpus} ({source})", "top_k": str(top_k),
            "min_len": str(min_len), "alpha": str(alpha)}
    _emit(format_proposals(proposals, meta), args.output)
    _say(args, f"{len(mined)} substrings grouped into {len(proposals)} proposals")


def _cmd_validate_clusters(args, config):
    from .cluster import apply_pruning, load_cluster_set, write_cluster_set

    cs = load_cluster_set(args.clusters)
    if args.pruning is not None:
        cs = apply_pruning(cs, args.pruning)
    cs.validate(args.count or config.cluster_count)
    if args.output is not None:
        write_cluster_set(cs, args.output)
    n_subs = sum(len(m) for _, m in cs.clusters)
    print(f"{len(cs)} clusters, {n_subs} substrings: ok (version {cs.version})")


def _cmd_train_domain(args, config):
    from .messages import read_domains
    from .pipeline import build_pipeline
    from .resources import resources_for

    resources = resources_for(config)
    rows = read_domains(args.domains)
    pipeline = build_pipeline("domain", config, resources)
    pipeline.fit([d for d, _ in rows], [label for _, label in rows])
    path = _model_path(args, "domain.bin")
    pipeline.save(path)
    _say(args, f"trained domain model on {len(rows)} domains -> {path}")


def _read_corpus(args):
    from .messages import read_labeled
    items = read_labeled(args.corpus, args.labels, strict=args.strict)
    return [lm.message for lm in items], [lm.label for lm in items]


def _cmd_train_message(args, config):
    from .pipeline import build_pipeline
    from .resources import resources_for

    resources = resources_for(config)
    messages, labels = _read_corpus(args)
    pipeline = build_pipeline(args.features, config, resources, normalize=args.normalize,
                              domain_forest=_load_domain_forest(args.domain_model))
    pipeline.fit(messages, labels)
    path = _model_path(args, "message.bin")
    pipeline.save(path)
    oob = pipeline.forest.oob_accuracy
    _say(args, f"trained {args.features} model on {len(messages)} messages"
               f"{f' (oob accuracy {oob:.4f})' if oob is not None else ''} -> {path}")


def _cmd_train_sender(args, config):
    from .pipeline import build_pipeline
    from .resources import resources_for

    resources = resources_for(config)
    domain_forest = _load_domain_forest(args.domain_model)
    windows, labels = _labeled_windows(args.stream, args, config, resources, domain_forest)
    pipeline = build_pipeline("mpa", config, resources, domain_forest=domain_forest)
    pipeline.fit(windows, labels)
    path = _model_path(args, "sender.bin")
    pipeline.save(path)
    _say(args, f"trained sender model on {len(windows)} windows -> {path}")


def _cmd_tree_sweep(args, config):
    from .model import oob_curve
    from .pipeline import build_pipeline
    from .resources import resources_for

    resources = resources_for(config)
    messages, labels = _read_corpus(args)
    pipeline = build_pipeline(args.features, config, resources, normalize=args.normalize)
    X, y = pipeline.design_matrix(messages, labels)
    lines = ["n_trees\toob_accuracy"]
    for n, acc in oob_curve(X, y, config.forest_params(), sorted(args.sizes)):
        lines.append(f"{n}\t{'nan' if acc is None else f'{acc:.6f}'}")
    print("\n".join(lines))


def _load_message_model(path, resources):
    from .errors import SchemaMismatchError
    from .pipeline import MESSAGE_FEATURE_SETS, load_pipeline

    pipeline = load_pipeline(path, resources)
    if pipeline.kind not in MESSAGE_FEATURE_SETS:
        raise SchemaMismatchError(f"{path} is a {pipeline.kind} model; a message model is required")
    return pipeline


def _cmd_classify(args, config):
    from .messages import read_messages
    from .model import Label
    from .resources import resources_for

    resources = resources_for(config)
    pipeline = _load_message_model(args.model, resources)
    messages = read_messages(args.corpus, strict=args.strict)
    scores, labels = pipeline.classify(messages, _costs(args, config))
    out = "".join(
        json.dumps({"id": m.id, "label": str(Label(int(lab))), "score": round(float(s), 6)}) + "\n"
        for m, s, lab in zip(messages, scores, labels)
    )
    _emit(out, args.output)
    log.info("classified %d messages, %d as spam", len(messages), int(sum(labels)))


def _cmd_score_senders(args, config):
    from .errors import SchemaMismatchError, StreamOrderError
    from .messages import iter_messages
    from .model import Label
    from .mpa import ShardedAggregator
    from .pipeline import FeatureSet, load_pipeline
    from .resources import resources_for

    resources = resources_for(config)
    pipeline = load_pipeline(args.model, resources)
    if pipeline.kind is not FeatureSet.MPA:
        raise SchemaMismatchError(f"{args.model} is a {pipeline.kind} model; a sender model is required")
    costs = _costs(args, config)
    featurize = pipeline.featurizer(config.normalize_mela)
    aggregator = ShardedAggregator(args.shards, **_window_params(config, featurize))

    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    n_msgs = n_windows = 0
    try:
        for msg in iter_messages(args.stream, strict=args.strict, routing=True):
            n_msgs += 1
            try:
                window = aggregator.ingest(msg)
            except StreamOrderError as e:
                if args.strict:
                    raise
                log.warning("skipped: %s", e)
                continue
            if window is None:
                continue
            scores, labels = pipeline.classify([window], costs)
            out.write(json.dumps({
                "sender": window.sender,
                "window_start": window.window_start,
                "window_end": window.window_end,
                "n_messages": len(window),
                "score": round(float(scores[0]), 6),
                "label": str(Label(int(labels[0]))),
            }) + "\n")
            out.flush()
            n_windows += 1
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("%d messages, %d windows scored", n_msgs, n_windows)


def _cmd_evaluate(args, config):
    from .evaluation import PipelineSpec, kfold_cv
    from .messages import read_domains
    from .pipeline import FeatureSet
    from .resources import resources_for

    config = config.with_overrides(eval_n_jobs=args.n_jobs)
    k = args.k if args.k is not None else config.eval_k
    kind = FeatureSet(args.features)
    if kind is FeatureSet.DOMAIN:
        rows = read_domains(args.corpus)
        items, labels = [d for d, _ in rows], [label for _, label in rows]
    elif kind is FeatureSet.MPA:
        items, labels = _labeled_windows(args.corpus, args, config, resources_for(config))
    else:
        items, labels = _read_corpus(args)

    groups = [w.sender for w in items] if kind is FeatureSet.MPA else None
    spec = PipelineSpec(str(kind), config, args.normalize)
    report = kfold_cv(items, labels, spec, k=k, seed=config.general_seed,
                      costs=_costs(args, config), n_jobs=config.eval_n_jobs,
                      groups=groups)
    _emit(report.format_records() if args.records else report.format() + "\n", args.output)


def _cmd_replay(args, config):
    from .evaluation import parse_duration, temporal_replay
    from .messages import read_labeled
    from .mpa import DAY
    from .pipeline import FeatureSet, load_pipeline
    from .resources import resources_for

    resources = resources_for(config)
    pipeline = load_pipeline(args.model, resources)
    if pipeline.kind is FeatureSet.DOMAIN:
        from .errors import SchemaMismatchError
        raise SchemaMismatchError(f"{args.model} is a domain model; replay needs a message or sender model")

    if pipeline.kind is FeatureSet.MPA:
        windows, labels = _labeled_windows(args.stream, args, config, resources, pipeline.domain_forest)
        stream = [(w.window_end, w, lab) for w, lab in zip(windows, labels)]
    else:
        items = read_labeled(args.stream, args.labels, strict=args.strict)
        stream = [(lm.message.timestamp, lm.message, lm.label) for lm in items]

    bucket = parse_duration(args.bucket) if args.bucket else config.eval_bucket_days * DAY
    delta = args.drift_delta if args.drift_delta is not None else config.eval_drift_delta
    result = temporal_replay(pipeline, stream, bucket, delta, _costs(args, config),
                             start=args.start, fingerprint=pipeline.meta.get("config_fingerprint", ""))
    _emit(result.format_records() if args.records else result.to_csv(), args.output)
    if result.drift_buckets:
        _say(args, "drift flagged in bucket(s) " + ", ".join(map(str, result.drift_buckets)))


def _cmd_extract(args, config):
    import csv
    import io

    from .mela import DOMAIN_FEATURES, MESSAGE_FEATURES
    from .mpa import MPA_FEATURES
    from .resources import resources_for

    resources = resources_for(config)
    domain_forest = _load_domain_forest(args.domain_model)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")

    if args.what == "mela":
        from .messages import read_messages
        from .pipeline import MelaFeaturizer
        featurize = MelaFeaturizer(resources, domain_forest, normalize=config.normalize_mela)
        writer.writerow(["id", *MESSAGE_FEATURES])
        for m in read_messages(args.input, strict=args.strict):
            writer.writerow([m.id, *(repr(float(v)) for v in featurize(m).values)])
    elif args.what == "domain":
        from .messages import read_domains
        from .pipeline import DomainPipeline
        rows = read_domains(args.input)
        X = DomainPipeline(resources).features([d for d, _ in rows])
        writer.writerow(["domain", *DOMAIN_FEATURES])
        for (d, _), row in zip(rows, X):
            writer.writerow([d, *(repr(float(v)) for v in row)])
    else:
        from .messages import read_messages
        from .mpa import NetworkEncoder, mpa_features, windows_from_stream
        from .pipeline import MelaFeaturizer
        messages = read_messages(args.input, strict=args.strict, routing=True)
        featurize = MelaFeaturizer(resources, domain_forest, normalize=config.normalize_mela)
        windows = windows_from_stream(messages, **_window_params(config, featurize))
        encoder = NetworkEncoder.fit(n for m in messages for n in (m.orig_network, m.dest_network))
        writer.writerow(["sender", "window_end", *MPA_FEATURES])
        for w in windows:
            v = mpa_features(w, encoder, resources.us_networks)
            writer.writerow([w.sender, repr(float(w.window_end)), *(repr(float(x)) for x in v.values)])
    _emit(buf.getvalue(), args.output)


def _cmd_schema(args, config):
    from .mela import DOMAIN_FEATURES, MESSAGE_FEATURES, schema_text
    from .mpa import MPA_FEATURES

    names = {"mela": MESSAGE_FEATURES, "domain": DOMAIN_FEATURES, "mpa": MPA_FEATURES}[args.what]
    _emit(schema_text(names), args.output)


def _cmd_dump_model(args, config):
    from .model import dump_text, load_forest
    _emit(dump_text(load_forest(args.model)), args.output)


_COMMANDS = {
    "config": _cmd_config,
    "gen-corpus": _cmd_gen_corpus,
    "import-corpus": _cmd_import_corpus,
    "mine-clusters": _cmd_mine_clusters,
    "validate-clusters": _cmd_validate_clusters,
    "train-domain": _cmd_train_domain,
    "train-message": _cmd_train_message,
    "train-sender": _cmd_train_sender,
    "tree-sweep": _cmd_tree_sweep,
    "classify": _cmd_classify,
    "score-senders": _cmd_score_senders,
    "evaluate": _cmd_evaluate,
    "replay": _cmd_replay,
    "extract": _cmd_extract,
    "schema": _cmd_schema,
    "dump-model": _cmd_dump_model,
}


if __name__ == "__main__":
    main()
