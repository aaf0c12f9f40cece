"""numpy fallback for the training-mean kernels."""
import numpy as np


def train_means_without(values, inst, counts, keys):
    M, _, R = values.shape
    # rank of each replicate's key inside its cell, ties broken by index
    order = np.argsort(keys, axis=2, kind="stable")
    ranks = np.argsort(order, axis=2, kind="stable")
    mask = ranks < counts[None, :, None]
    picked = np.where(mask, values[:, inst, :], 0.0)
    return picked.sum(axis=2).sum(axis=1) / counts.sum()


def train_means_with(values, inst, counts, picks):
    M = values.shape[0]
    run_inst = np.repeat(inst, counts)
    vals = values[np.arange(M)[:, None], run_inst[None, :], picks]
    return vals.sum(axis=1) / picks.shape[1]
