"""Small shared helpers for the statistical tests."""

import numpy as np
from scipy import stats


def two_sample_chi2_pvalue(a, b, min_pooled=10):
    """Two-sample chi-square on count vectors, pooling sparse cells.

    Cells whose pooled count falls below ``min_pooled`` are merged into one
    tail cell; all-zero cells are dropped.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    tot = a + b
    keep = tot >= min_pooled
    a_keep = a[keep]
    b_keep = b[keep]
    if (~keep).any():
        a_keep = np.append(a_keep, a[~keep].sum())
        b_keep = np.append(b_keep, b[~keep].sum())
    nz = (a_keep + b_keep) > 0
    table = np.vstack([a_keep[nz], b_keep[nz]])
    if table.shape[1] < 2:
        return 1.0
    return stats.chi2_contingency(table).pvalue


def one_sample_chi2_pvalue(observed, expected, min_expected=5):
    """Goodness-of-fit chi-square with pooling of low-expectation cells."""
    observed = np.asarray(observed, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    keep = expected >= min_expected
    obs = np.append(observed[keep], observed[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    return stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue
