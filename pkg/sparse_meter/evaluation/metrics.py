"""Balanced accuracy and normalized reconstruction error."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """Fractions of all samples by true class i and predicted class j.

    Class 1 is occupied and class 2 is vacant, so ``c11`` is the fraction of
    occupied samples predicted occupied.
    """
    c11: float
    c12: float
    c21: float
    c22: float

    @classmethod
    def from_predictions(cls, predictions, labels) -> 'ConfusionMatrix':
        predictions = np.asarray(predictions).reshape(-1)
        labels = np.asarray(labels).reshape(-1)
        if predictions.shape != labels.shape:
            raise ValueError(
                f'predictions {predictions.shape} and labels {labels.shape} differ.'
            )
        for name, values in (('predictions', predictions), ('labels', labels)):
            if not np.isin(values, (0, 1)).all():
                raise ValueError(f'{name} must be binary.')
        if labels.size == 0:
            raise ValueError('No samples.')
        n = float(labels.size)
        occupied, vacant = labels == 1, labels == 0
        return cls(
            c11=np.count_nonzero(occupied & (predictions == 1)) / n,
            c12=np.count_nonzero(occupied & (predictions == 0)) / n,
            c21=np.count_nonzero(vacant & (predictions == 1)) / n,
            c22=np.count_nonzero(vacant & (predictions == 0)) / n
        )

    def balanced_accuracy(self) -> float:
        if self.c11 + self.c12 == 0 or self.c21 + self.c22 == 0:
            raise ValueError('Balanced accuracy is undefined when a class is absent '
                             'from the labels.')
        return 0.5 * (self.c11 / (self.c11 + self.c12) + self.c22 / (self.c22 + self.c21))


def balanced_accuracy(predictions, labels) -> float:
    """Mean of the per-class recalls, pooled over every sequence and step."""
    return ConfusionMatrix.from_predictions(predictions, labels).balanced_accuracy()


def ne2(y, y_hat) -> float:
    """Sum of per-sequence error norms over the sum of per-sequence signal norms."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ValueError(f'y {y.shape} and y_hat {y_hat.shape} must have equal shape.')
    if y.ndim == 1:
        y, y_hat = y[np.newaxis], y_hat[np.newaxis]
    denominator = np.linalg.norm(y, axis=1).sum()
    if denominator == 0:
        raise ValueError('ne2 is undefined for all-zero consumption.')
    return float(np.linalg.norm(y - y_hat, axis=1).sum() / denominator)


def mse(y, y_hat) -> float:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ValueError(f'y {y.shape} and y_hat {y_hat.shape} must have equal shape.')
    return float(np.mean((y - y_hat) ** 2))
