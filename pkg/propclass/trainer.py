# -*- coding: utf-8 -*-

"""
propclass.trainer
~~~~~~~~~~~~~~~~~

The training loop: a deterministic stratified split, truth-conditioned mini-batches with Adam and linear warm-up,
periodic validation, best-model checkpoints and early stopping.
"""

import collections
import logging
import math
import os
from dataclasses import asdict, dataclass, fields
from typing import Optional

import pandas

from . import dates, runs
from .corpus import Vocabulary
from .exceptions import ConfigError, EmptyEvalSet, NonFiniteLoss
from .metrics import f1_report
from .model import ProposalClassifier, truth_path
from .serializers import write_jsonl
from .tensorcore import Adam, Tape, backward, clip_grad_norm, scale, warmup_lr

log = logging.getLogger(__name__)

BEST_CHECKPOINT = "best.ckpt"
LAST_CHECKPOINT = "last.ckpt"


@dataclass
class TrainConfig(object):
    """Optimization and schedule settings."""

    lr: float = 1e-3
    weight_decay: float = 1e-7
    batch_size: int = 16
    epochs: int = 200
    warmup_steps: int = 100
    eval_every: int = 1
    patience: int = 10
    seed: int = 1
    eps: float = 1e-12
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: Optional[float] = None
    val_fraction: float = 0.2
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.lr < 0:
            raise ConfigError("lr", "must not be negative")
        for name in ("batch_size", "eval_every", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be at least 1")
        for name in ("epochs", "warmup_steps", "patience", "weight_decay"):
            if getattr(self, name) < 0:
                raise ConfigError(name, "must not be negative")
        if not 0.0 < self.eps < 0.5:
            raise ConfigError("eps", "must be in (0, 0.5)")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigError("val_fraction", "must be in [0, 1)")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError("clip_norm", "must be positive when set")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown setting")
        return cls(**data)

    def to_dict(self):
        return asdict(self)


class TrainLog(object):
    """Step losses and learning rates, validation snapshots and checkpoint paths, in the order they happened."""

    def __init__(self):
        self.steps = []
        self.evals = []
        self.checkpoints = []
        self._records = []

    def __len__(self):
        return len(self._records)

    def __repr__(self):
        return "TrainLog(steps={0}, evals={1})".format(len(self.steps), len(self.evals))

    def _add(self, kind, entries, record):
        entries.append(record)
        self._records.append(collections.OrderedDict([("kind", kind)] + list(record.items())))

    def add_step(self, step, epoch, loss, lr):
        self._add("step", self.steps, collections.OrderedDict(step=step, epoch=epoch, loss=loss, lr=lr))

    def add_eval(self, step, epoch, report, val_loss, wall_time):
        record = collections.OrderedDict(
            step=step,
            epoch=epoch,
            val_loss=val_loss,
            micro_f1=report.micro_f1,
            macro_f1=report.macro_f1,
            level_micro=report.level_micro,
            level_macro=report.level_macro,
            wall_time=wall_time,
        )
        self._add("eval", self.evals, record)

    def add_checkpoint(self, step, path, micro_f1):
        self._add("checkpoint", self.checkpoints, collections.OrderedDict(step=step, path=path, micro_f1=micro_f1))

    def records(self):
        return list(self._records)

    def write(self, path):
        """Writes every record as JSON Lines, each tagged with its kind."""
        write_jsonl(path, self._records)

    def to_dataframe(self, kind="step"):
        """The records of one kind ("step", "eval" or "checkpoint") as a pandas DataFrame.

        :rtype: pandas.DataFrame
        """
        entries = dict(step=self.steps, eval=self.evals, checkpoint=self.checkpoints)
        if kind not in entries:
            raise ConfigError("kind", "expected step, eval or checkpoint")
        return pandas.DataFrame.from_dict(entries[kind])


def _stratum(proposal):
    return "".join(sorted({code[0] for code in proposal.labels}))


def split_corpus(proposals, seed, val_fraction=0.2):
    """Splits proposals into training and validation sets, stratified by their set of level-1 letters.

    Every stratum sends round(len * val_fraction) of its proposals to validation; both sets keep input order.

    :rtype: tuple(list(Proposal), list(Proposal))
    """
    rng = runs.rng(seed, "split")
    strata = collections.defaultdict(list)
    for index, proposal in enumerate(proposals):
        strata[_stratum(proposal)].append(index)
    held_out = set()
    for key in sorted(strata):
        members = strata[key]
        count = int(round(len(members) * val_fraction))
        held_out.update(members[i] for i in rng.permutation(len(members))[:count])
    train_set = [p for i, p in enumerate(proposals) if i not in held_out]
    val_set = [p for i, p in enumerate(proposals) if i in held_out]
    return train_set, val_set


def evaluate_during_training(model, samples, workers=1):
    """Predicts every validation sample on a parameter snapshot and scores it. Parameters are not touched.

    :param model: The classifier.
    :type model: ProposalClassifier
    :param samples: (tokenized proposal, true path) pairs.
    :raise EmptyEvalSet: Raises if there are no samples.
    :rtype: F1Report
    """
    if not samples:
        raise EmptyEvalSet()
    predictions = model.predict_many([tokenized for tokenized, _ in samples], workers=workers)
    return f1_report([p.path for p in predictions], [truth for _, truth in samples], model.taxonomy.depth)


def validation_loss(model, samples, eps=1e-12):
    """The mean truth-conditioned loss over (tokenized proposal, true path) pairs, with dropout off.

    :raise EmptyEvalSet: Raises if there are no samples.
    :rtype: float
    """
    if not samples:
        raise EmptyEvalSet()
    return sum(model.forward_train(t, truth, train=False, eps=eps).item() for t, truth in samples) / len(samples)


def train(corpus, taxonomy, graph, model_config=None, train_config=None, out_dir=None):
    """Trains a classifier.

    Each step averages the truth-conditioned losses of one mini-batch, then takes an Adam step at the warm-up
    learning rate. Every `eval_every` epochs the validation split is scored; the best Micro-F1 so far is kept
    (and checkpointed under `out_dir`), and training stops once `patience` evaluations in a row improve neither
    the best Micro-F1 nor the lowest validation loss; a tie on Micro-F1 keeps the state with the lower loss.
    Evaluations made before warm-up has finished never count against the patience. The returned classifier
    carries the best parameters.

    :param corpus: The proposals. The vocabulary is built from the training split.
    :type corpus: list(Proposal)
    :param taxonomy: The taxonomy.
    :param graph: The interdisciplinary graph.
    :param model_config: The model configuration.
    :type model_config: ModelConfig or None
    :param train_config: The training configuration.
    :type train_config: TrainConfig or None
    :param out_dir: Where checkpoints go. Nothing is written when None.
    :raise NonFiniteLoss: Raises when a batch loss is NaN or infinite.
    :rtype: tuple(ProposalClassifier, TrainLog)
    """
    cfg = train_config or TrainConfig()
    train_set, val_set = split_corpus(corpus, cfg.seed, cfg.val_fraction)
    model = ProposalClassifier(taxonomy, graph, Vocabulary.build(train_set), model_config, cfg.seed)
    train_log = TrainLog()
    log.info("Training on %d proposals, validating on %d; %d parameters", len(train_set), len(val_set),
             model.params.num_values())
    if cfg.epochs == 0 or not train_set:
        return model, train_log

    samples = [(model.tokenize(p), truth_path(p, taxonomy)) for p in train_set]
    val_samples = [(model.tokenize(p), truth_path(p, taxonomy)) for p in val_set]
    optimizer = Adam(model.params, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay)
    shuffle_rng = runs.rng(cfg.seed, "shuffle")
    dropout_rng = runs.rng(cfg.seed, "dropout")
    started = dates.utc_now()
    best_f1, best_loss, best_state, stale, step = None, None, None, 0, 0

    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(len(samples))
        for start in range(0, len(order), cfg.batch_size):
            batch = [samples[i] for i in order[start : start + cfg.batch_size]]
            model.params.zero_grad()
            total = 0.0
            for tokenized, truth in batch:
                with Tape():
                    loss = model.forward_train(tokenized, truth, train=True, rng=dropout_rng, eps=cfg.eps)
                    backward(scale(loss, 1.0 / len(batch)))
                total += loss.item()
            step += 1
            mean_loss = total / len(batch)
            if not math.isfinite(mean_loss):
                raise NonFiniteLoss(step, mean_loss)
            lr = warmup_lr(cfg.lr, step, cfg.warmup_steps)
            if cfg.clip_norm is not None:
                clip_grad_norm(model.params, cfg.clip_norm)
            optimizer.step(lr)
            train_log.add_step(step, epoch, mean_loss, lr)
            log.debug("Step %d: loss %.6f, lr %.3e", step, mean_loss, lr)

        if epoch % cfg.eval_every or not val_samples:
            continue
        report = evaluate_during_training(model, val_samples, cfg.workers)
        val_loss = validation_loss(model, val_samples, cfg.eps)
        train_log.add_eval(step, epoch, report, val_loss, dates.elapsed_seconds(started))
        log.info("Epoch %d: val loss %.4f, micro-F1 %.4f, macro-F1 %.4f", epoch, val_loss, report.micro_f1,
                 report.macro_f1)
        loss_fell = best_loss is None or val_loss < best_loss
        best_loss = val_loss if loss_fell else best_loss
        if best_f1 is None or report.micro_f1 > best_f1 or (report.micro_f1 == best_f1 and loss_fell):
            best_f1, best_state, stale = report.micro_f1, model.params.state_dict(), 0
            if out_dir is not None:
                path = os.path.join(out_dir, BEST_CHECKPOINT)
                model.save(path, dict(step=step, epoch=epoch, micro_f1=best_f1))
                train_log.add_checkpoint(step, path, best_f1)
        elif loss_fell:
            stale = 0
        elif step >= cfg.warmup_steps:
            stale += 1
            if stale >= cfg.patience:
                log.info("No improvement for %d evaluations; stopping at epoch %d", stale, epoch)
                break

    if out_dir is not None:
        path = os.path.join(out_dir, LAST_CHECKPOINT)
        model.save(path, dict(step=step, epoch=epoch))
        train_log.add_checkpoint(step, path, None)
    if best_state is not None:
        model.params.load_state_dict(best_state)
    return model, train_log
