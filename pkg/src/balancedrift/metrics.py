import numpy as np


def midranks(values) -> np.ndarray:
    """1-based ranks with ties replaced by the mean of the ranks they span."""
    a = np.asarray(values, dtype=np.float64)
    order = np.argsort(a, kind="stable")
    sorted_a = a[order]
    # boundaries of runs of equal values
    starts = np.flatnonzero(np.concatenate([[True], sorted_a[1:] != sorted_a[:-1]]))
    ends = np.concatenate([starts[1:], [a.size]])
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(a.size)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def roc_auc(y_true, scores) -> float:
    """Area under the ROC curve via the Mann-Whitney statistic (ties count 1/2)."""
    y = np.asarray(y_true)
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined when only one class is present")
    r = midranks(scores)
    return float((r[y == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
