"""Privacy and utility metrics, the KSG leakage estimate and the trade-off sweep.

The sweep lives in ``sparse_meter.evaluation.sweep`` and is imported from there.
"""
from .metrics import ConfusionMatrix, balanced_accuracy, ne2, mse
from .ksg import ksg_mi, leakage_estimate, normal_scores, DEFAULT_K
