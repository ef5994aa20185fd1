# -*- coding: utf-8 -*-

"""
propclass.cli
~~~~~~~~~~~~~

Console utilities for the proposal classification pipeline: generate data, build the interdisciplinary graph,
train, predict, evaluate and check gradients.
"""

import functools
import logging
import os
import sys
from dataclasses import replace

import click

import propclass
from propclass import runs
from propclass.corpus import CorpusConfig, check_labels, generate_corpus, interdisciplinarity, read_corpus
from propclass.corpus import select_subset, write_corpus, SUBSETS
from propclass.exceptions import EXIT_IO, ConfigError, LengthMismatch, PropclassException, SchemaError
from propclass.idgraph import DEFAULT_ALPHA, DEFAULT_BETA, build_graph, collect_topic_stats, read_graph, write_graph
from propclass.metrics import evaluate as evaluate_report
from propclass.metrics import sample_table
from propclass.model import ABLATIONS, COMPONENTS, ModelConfig, ProposalClassifier, gradient_check, parse_given
from propclass.model import truth_path
from propclass.serializers import atomic_write_text, read_json, read_jsonl, write_json, write_jsonl
from propclass.taxonomy import TopicPath, read_taxonomy, synthetic_taxonomy_document, load_taxonomy
from propclass.trainer import TrainConfig, train as run_training

log = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"


def handle_errors(command):
    """Turns library exceptions into a message on stderr and the matching exit code."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PropclassException as exception:
            click.echo("Error: {0}".format(exception.message), err=True)
            sys.exit(exception.exit_code)
        except OSError as exception:
            click.echo("Error: {0}".format(exception), err=True)
            sys.exit(EXIT_IO)

    return wrapper


def load_config(cls, path, **overrides):
    """Loads a configuration dataclass from an optional JSON file, then applies the non-None overrides.

    :raise ConfigError: Raises on unknown keys or invalid values.
    """
    data = read_json(path) if path else {}
    data.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return cls.from_dict(data)
    except TypeError as exception:
        raise ConfigError(cls.__name__, str(exception))


@click.command("gen-taxonomy", help="Write a regular synthetic taxonomy")
@click.option("--letters", default=2, show_default=True, help="Number of level-1 disciplines")
@click.option("--branching", default=3, show_default=True, help="Children per discipline")
@click.option("--depth", default=4, show_default=True, help="Number of levels")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Taxonomy JSON to write")
@handle_errors
def gen_taxonomy(letters, branching, depth, out):
    """Writes a taxonomy with `letters` top-level disciplines and `branching` children per node."""
    if not 1 <= letters <= 26 or not 1 <= branching <= 99 or depth < 1:
        raise ConfigError("taxonomy", "letters must be 1..26, branching 1..99 and depth at least 1")
    document = synthetic_taxonomy_document(letters, branching, depth)
    taxonomy = load_taxonomy(document)
    manifest = runs.RunManifest("gen-taxonomy", dict(letters=letters, branching=branching, depth=depth),
                                outputs=dict(taxonomy=out))
    write_json(out, document)
    manifest.write(out)
    click.echo("Wrote {0} disciplines over {1} levels".format(len(taxonomy), taxonomy.depth))


@click.command("gen-corpus", help="Generate a synthetic proposal corpus")
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Corpus JSONL to write")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="CorpusConfig JSON")
@click.option("--seed", type=int, help="Random seed")
@click.option("--size", type=int, help="Number of proposals")
@click.option("--interdisciplinary-rate", type=float, help="Share of proposals under two major disciplines")
@click.option("--shared-topic-rate", type=float, help="Share of each vocabulary borrowed from siblings")
@click.option("--vocab-per-discipline", type=int, help="Planted words per discipline")
@handle_errors
def gen_corpus(taxonomy_path, out, config_path, seed, size, interdisciplinary_rate, shared_topic_rate,
               vocab_per_discipline):
    """Generates proposals whose words come from the planted vocabularies of their disciplines."""
    cfg = load_config(
        CorpusConfig,
        config_path,
        seed=seed,
        size=size,
        interdisciplinary_rate=interdisciplinary_rate,
        shared_topic_rate=shared_topic_rate,
        vocab_per_discipline=vocab_per_discipline,
    )
    manifest = runs.RunManifest("gen-corpus", cfg.to_dict(), dict(taxonomy=taxonomy_path), dict(corpus=out),
                                cfg.seed)
    proposals = generate_corpus(read_taxonomy(taxonomy_path), cfg)
    write_corpus(out, proposals)
    manifest.write(out)
    kinds = [interdisciplinarity(p) for p in proposals]
    click.echo("proposals: {0}".format(len(proposals)))
    click.echo("interdisciplinary: {0}".format(kinds.count("differ")))
    for name in SUBSETS:
        click.echo("subset {0}: {1}".format(name, len(select_subset(proposals, name))))


@click.command("build-graph", help="Build the interdisciplinary graph from a corpus")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(dir_okay=False))
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(dir_okay=False))
@click.option("--alpha", default=DEFAULT_ALPHA, show_default=True, help="Exponent on the co-selection proportion")
@click.option("--beta", default=DEFAULT_BETA, show_default=True, help="Exponent on the topic disparity")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Graph JSON to write")
@handle_errors
def build_graph_command(corpus_path, taxonomy_path, alpha, beta, out):
    """Weights every ordered pair of disciplines that share a topic."""
    taxonomy = read_taxonomy(taxonomy_path)
    proposals = read_corpus(corpus_path)
    check_labels(proposals, taxonomy)
    manifest = runs.RunManifest("build-graph", dict(alpha=alpha, beta=beta),
                                dict(corpus=corpus_path, taxonomy=taxonomy_path), dict(graph=out))
    graph = build_graph(collect_topic_stats(proposals, taxonomy), alpha, beta)
    write_graph(out, graph)
    manifest.write(out)
    click.echo("nodes: {0}, edges: {1}".format(len(graph.nodes), len(graph.edges())))


@click.command("train", help="Train a classifier")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(dir_okay=False))
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(dir_okay=False))
@click.option("--graph", "graph_path", required=True, type=click.Path(dir_okay=False))
@click.option("--model-config", "model_config_path", type=click.Path(dir_okay=False))
@click.option("--train-config", "train_config_path", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, help="Overrides the training seed")
@click.option("--epochs", type=int, help="Overrides the number of epochs")
@click.option("--ablation", type=click.Choice(list(ABLATIONS)), default="full", show_default=True,
              help="Components to switch off: the graph, the hierarchical extractor, or both")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False), help="Run directory")
@handle_errors
def train(corpus_path, taxonomy_path, graph_path, model_config_path, train_config_path, seed, epochs, ablation,
          out_dir):
    """Trains on the corpus, keeping the best checkpoint by validation Micro-F1."""
    model_config = load_config(ModelConfig, model_config_path, **ABLATIONS[ablation])
    train_config = load_config(TrainConfig, train_config_path, seed=seed, epochs=epochs)
    taxonomy = read_taxonomy(taxonomy_path)
    proposals = read_corpus(corpus_path)
    check_labels(proposals, taxonomy)
    graph = read_graph(graph_path)
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    log_path = os.path.join(out_dir, "train_log.jsonl")
    config = dict(model=model_config.to_dict(), train=train_config.to_dict(), ablation=ablation)
    manifest = runs.RunManifest("train", config, dict(corpus=corpus_path, taxonomy=taxonomy_path, graph=graph_path),
                                dict(out_dir=out_dir, log=log_path), train_config.seed)
    write_json(os.path.join(out_dir, "config.json"), config)
    model, train_log = run_training(proposals, taxonomy, graph, model_config, train_config, out_dir)
    train_log.write(log_path)
    manifest.write(log_path)
    best = max([e["micro_f1"] for e in train_log.evals], default=None)
    click.echo("steps: {0}, evaluations: {1}, best val micro-F1: {2}".format(len(train_log.steps),
                                                                            len(train_log.evals), best))


@click.command("predict", help="Predict topic paths for proposals")
@click.option("--ckpt", "checkpoint_path", required=True, type=click.Path(dir_okay=False))
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--given", help="Comma-separated labels to start from, ie. 'F,C,F06'; ancestors are implied")
@click.option("--threshold", type=float, help="Overrides the selection threshold")
@click.option("--no-coherence-filter", is_flag=True, help="Keep labels whose parent was not predicted")
@click.option("--dump-attention", is_flag=True, help="Include attention weights in the output")
@click.option("--workers", default=1, show_default=True, help="Prediction threads")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Predictions JSONL to write")
@handle_errors
def predict(checkpoint_path, input_path, given, threshold, no_coherence_filter, dump_attention, workers, out):
    """Predicts each proposal level by level, optionally from a given prefix."""
    model, _ = ProposalClassifier.load(checkpoint_path)
    if threshold is not None:
        model.config = replace(model.config, threshold=threshold)
    prefix = parse_given(given, model.taxonomy) if given else None
    proposals = read_corpus(input_path)
    manifest = runs.RunManifest(
        "predict",
        dict(given=given, threshold=model.config.threshold, coherence_filter=not no_coherence_filter,
             dump_attention=dump_attention, workers=workers),
        dict(checkpoint=checkpoint_path, input=input_path),
        dict(predictions=out),
    )
    predictions = model.predict_many(
        [model.tokenize(p) for p in proposals],
        givens=[prefix] * len(proposals),
        workers=workers,
        coherence_filter=False if no_coherence_filter else None,
        trace=dump_attention,
    )
    write_jsonl(out, [p.to_dict(dump_attention) for p in predictions])
    manifest.write(out)
    click.echo("predicted: {0}".format(len(predictions)))


def read_predictions(path):
    """Reads prediction JSONL into paths by proposal id.

    :raise SchemaError: Raises if a line has no id or path.
    :rtype: dict(str, TopicPath)
    """
    paths = {}
    for line_no, data in read_jsonl(path):
        for field in ("id", "path"):
            if field not in data:
                raise SchemaError(line_no, field)
        paths[data["id"]] = TopicPath.from_list(data["path"])
    return paths


@click.command("evaluate", help="Score predictions against a labeled corpus")
@click.option("--preds", "preds_path", required=True, type=click.Path(dir_okay=False))
@click.option("--truth", "truth_path_", required=True, type=click.Path(dir_okay=False),
              help="The labeled corpus JSONL")
@click.option("--taxonomy", "taxonomy_path", required=True, type=click.Path(dir_okay=False))
@click.option("--subset", type=click.Choice(SUBSETS), default="all", show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Report JSON to write")
@handle_errors
def evaluate(preds_path, truth_path_, taxonomy_path, subset, out):
    """Writes F1, interdisciplinary distance and wrong cases, plus a per-sample CSV next to the report."""
    taxonomy = read_taxonomy(taxonomy_path)
    proposals = select_subset(read_corpus(truth_path_), subset)
    check_labels(proposals, taxonomy)
    predicted = read_predictions(preds_path)
    missing = [p.id for p in proposals if p.id not in predicted]
    if missing:
        raise LengthMismatch(len(proposals), len(proposals) - len(missing))
    truths = [truth_path(p, taxonomy) for p in proposals]
    preds = [predicted[p.id] for p in proposals]
    csv_path = "{0}.samples.csv".format(os.path.splitext(out)[0])
    manifest = runs.RunManifest("evaluate", dict(subset=subset),
                                dict(preds=preds_path, truth=truth_path_, taxonomy=taxonomy_path),
                                dict(report=out, samples=csv_path))
    report = evaluate_report(preds, truths, taxonomy, proposals)
    write_json(out, report)
    atomic_write_text(csv_path, sample_table([p.id for p in proposals], preds, truths, taxonomy).to_csv(index=False))
    manifest.write(out)
    click.echo("micro_f1: {0:.4f}".format(report["f1"]["micro_f1"]))
    click.echo("macro_f1: {0:.4f}".format(report["f1"]["macro_f1"]))


@click.command("grad-check", help="Compare analytic and finite-difference gradients")
@click.option("--model-config", "model_config_path", type=click.Path(dir_okay=False))
@click.option("--seed", default=1, show_default=True)
@click.option("--samples", default=200, show_default=True, help="Parameter elements to check")
@click.option("--tolerance", default=1e-4, show_default=True, help="Largest acceptable relative error")
@handle_errors
def grad_check(model_config_path, seed, samples, tolerance):
    """Checks the full truth-conditioned loss on a small synthetic taxonomy, with dropout off."""
    config = load_config(ModelConfig, model_config_path)
    results = gradient_check(config, seed, samples, tolerance)
    worst = results[0]
    checked = {s.name.split(".", 1)[0] for s in results}
    groups = [group for group in COMPONENTS if group in checked]
    click.echo("checked: {0} elements across {1}".format(len(results), ", ".join(groups)))
    click.echo("worst relative error: {0:.3e} at {1}{2}".format(worst.error, worst.name, list(worst.index)))
    click.echo("PASS")


@click.group()
@click.version_option(version=propclass.__version__)
@click.option("--verbose", "-v", is_flag=True, help="Log debug messages")
@click.pass_context
def main(ctx, verbose):
    """Proposal classification command line tools."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT)
    ctx.obj = dict(verbose=verbose)


main.add_command(gen_taxonomy)
main.add_command(gen_corpus)
main.add_command(build_graph_command)
main.add_command(train)
main.add_command(predict)
main.add_command(evaluate)
main.add_command(grad_check)

if __name__ == "__main__":
    main()
