import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.metrics import accuracy_score, confusion_matrix, precision_recall_fscore_support

from components.lexicon_system import SentimentLabel

logger = logging.getLogger(__name__)

NUM_CLASSES = len(SentimentLabel)
METRICS = ('precision', 'recall', 'f1')
LABELS = [int(label) for label in SentimentLabel]


@dataclass(frozen=True)
class ConfusionMatrix:
    """
    Rows are true classes, columns predicted classes, both in label-code order.
    """
    counts: np.ndarray

    @property
    def total(self):
        return int(self.counts.sum())

    def to_frame(self):
        names = [label.display_name for label in SentimentLabel]
        frame = pd.DataFrame(self.counts, index=[f"true_{name}" for name in names],
                             columns=[f"pred_{name}" for name in names])
        frame.index.name = 'true_class'
        return frame


@dataclass
class ClassReport:
    precision: list
    recall: list
    f1: list
    accuracy: float
    loss: float
    support: list
    confusion: ConfusionMatrix
    # (class code, metric) pairs whose denominator was zero and were reported as 0.0
    undefined: list = field(default_factory=list)

    def to_record(self, model_name):
        return {
            'model': model_name,
            'accuracy': self.accuracy,
            'loss': self.loss,
            'classes': [label.display_name for label in SentimentLabel],
            'precision': self.precision,
            'recall': self.recall,
            'f1': self.f1,
            'support': self.support,
            'confusion_matrix': self.confusion.counts.tolist(),
            'undefined_metrics': [[code, metric] for code, metric in self.undefined],
        }


def confusion(true, pred):
    """
    counts[i][j] = number of rows with true class i predicted as j.
    """
    true = np.asarray(true, dtype=np.int64).reshape(-1)
    pred = np.asarray(pred, dtype=np.int64).reshape(-1)
    if true.shape != pred.shape:
        raise ValueError(f"Length mismatch: {true.size} true labels, {pred.size} predictions")
    for name, values in (('true', true), ('pred', pred)):
        if values.size and (values.min() < 0 or values.max() >= NUM_CLASSES):
            raise ValueError(f"{name} labels must be in [0, {NUM_CLASSES})")

    if not true.size:
        return ConfusionMatrix(np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64))
    return ConfusionMatrix(confusion_matrix(true, pred, labels=LABELS).astype(np.int64))


def _label_vectors(cm):
    # one (true, pred) pair per counted row
    true, pred = np.indices(cm.counts.shape)
    repeats = cm.counts.reshape(-1)
    return np.repeat(true.reshape(-1), repeats), np.repeat(pred.reshape(-1), repeats)


def class_report(cm, losses=()):
    """
    Per-class precision, recall and F1 from a confusion matrix, plus accuracy and mean loss.
    A zero denominator gives 0.0 and is listed in `undefined`.
    :param cm: ConfusionMatrix
    :param losses: per-row loss values; empty gives loss 0.0
    :return: ClassReport
    """
    counts = cm.counts
    if cm.total == 0:
        raise ValueError("Cannot report on an empty confusion matrix")

    true, pred = _label_vectors(cm)
    precision, recall, f1, support = precision_recall_fscore_support(true, pred, labels=LABELS, zero_division=0.0)

    column_sums = counts.sum(axis=0)
    row_sums = counts.sum(axis=1)
    undefined = []
    for code in LABELS:
        flags = {'precision': column_sums[code] == 0, 'recall': row_sums[code] == 0}
        flags['f1'] = flags['precision'] or flags['recall'] or counts[code, code] == 0
        undefined.extend((code, metric) for metric in METRICS if flags[metric])

    for code, metric in undefined:
        logger.warning(f"{metric} undefined for class {SentimentLabel(code).display_name}, reported as 0.0")

    losses = np.asarray(losses, dtype=np.float64)
    return ClassReport(precision=[float(value) for value in precision],
                       recall=[float(value) for value in recall],
                       f1=[float(value) for value in f1],
                       accuracy=float(accuracy_score(true, pred)),
                       loss=float(losses.mean()) if losses.size else 0.0,
                       support=[int(value) for value in support],
                       confusion=cm,
                       undefined=undefined)


def render_report(reports):
    """
    Fixed-column text table: accuracy as a percentage and loss, then precision, recall and F1 per class,
    all to 2 decimals. Classes appear in label-code order with explicit headers.
    :param reports: dict model name -> ClassReport, rendered in insertion order
    :return: table text
    """
    if not reports:
        raise ValueError("Nothing to render")

    names = [label.display_name for label in SentimentLabel]
    name_width = max(len('Model'), *(len(name) for name in reports))
    header = [f"{'Model':<{name_width}}", f"{'Accuracy%':>9}", f"{'Loss':>7}"]
    for metric in ('Precision', 'Recall', 'F1'):
        header.extend(f"{f'{metric}-{name}':>17}" for name in names)

    lines = ['  '.join(header)]
    for model_name, report in reports.items():
        cells = [f"{model_name:<{name_width}}", f"{report.accuracy * 100:>9.2f}", f"{report.loss:>7.4f}"]
        for values in (report.precision, report.recall, report.f1):
            cells.extend(f"{value:>17.2f}" for value in values)
        lines.append('  '.join(cells))

    lines.append('')
    for model_name, report in reports.items():
        support = ', '.join(f"{name}={count}" for name, count in zip(names, report.support))
        lines.append(f"{model_name} evaluated rows: {report.confusion.total} ({support})")
    return '\n'.join(lines) + '\n'


def render_records(reports):
    """
    Machine-readable variant of render_report: a JSON list, one record per model.
    """
    records = [report.to_record(model_name) for model_name, report in reports.items()]
    return json.dumps(records, indent=2, sort_keys=True) + '\n'


def write_reports(reports, directory):
    """
    Write report.txt, report.json and one confusion_<model>.csv per model.
    :return: list of written paths
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = [directory / 'report.txt', directory / 'report.json']
    written[0].write_text(render_report(reports), encoding='utf-8')
    written[1].write_text(render_records(reports), encoding='utf-8')
    for model_name, report in reports.items():
        path = directory / f"confusion_{model_name}.csv"
        report.confusion.to_frame().to_csv(path, lineterminator='\n')
        written.append(path)
    logger.info(f"Wrote evaluation reports for {', '.join(reports)} to {directory}")
    return written
